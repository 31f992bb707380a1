use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::LedgerError;
use crate::precog::{Direction, Signal, Strength};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaClass {
    Strengthened,
    Stable,
    Weakened,
    New,
    Dead,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalDelta {
    pub signal_key: String,
    pub classification: DeltaClass,
    pub prev_strength: Option<Strength>,
    pub curr_strength: Option<Strength>,
    /// New and Dead signals are the strongest evidence of structural change.
    pub priority: bool,
}

fn index(snapshot: &[Signal]) -> Result<BTreeMap<&str, &Signal>, LedgerError> {
    let mut map = BTreeMap::new();
    for s in snapshot {
        if map.insert(s.key.as_str(), s).is_some() {
            return Err(LedgerError::DuplicateKeyWithinSnapshot(s.key.clone()));
        }
    }
    Ok(map)
}

fn classify(prev: &Signal, curr: &Signal) -> DeltaClass {
    use std::cmp::Ordering::*;
    let by_direction = |p: Direction, c: Direction| match c.cmp(&p) {
        Greater => DeltaClass::Strengthened,
        Less => DeltaClass::Weakened,
        Equal => DeltaClass::Stable,
    };
    match curr.strength.cmp(&prev.strength) {
        Greater => DeltaClass::Strengthened,
        Less => DeltaClass::Weakened,
        Equal => by_direction(prev.direction, curr.direction),
    }
}

/// Classifies every signal key across two snapshots of one theme.
///
/// Strength rank decides first (Weak < Emerging < Strong); on a tie the
/// direction rank (Decelerating < Stable < Accelerating) decides. Output is
/// ordered by key.
pub fn diff_signals(prev: &[Signal], curr: &[Signal]) -> Result<Vec<SignalDelta>, LedgerError> {
    let p = index(prev)?;
    let c = index(curr)?;
    let mut keys: Vec<&str> = p.keys().chain(c.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    Ok(keys
        .into_iter()
        .map(|key| {
            let (ps, cs) = (p.get(key), c.get(key));
            let classification = match (ps, cs) {
                (Some(a), Some(b)) => classify(a, b),
                (None, Some(_)) => DeltaClass::New,
                (Some(_), None) => DeltaClass::Dead,
                (None, None) => unreachable!("key came from one of the maps"),
            };
            SignalDelta {
                signal_key: key.to_string(),
                classification,
                prev_strength: ps.map(|s| s.strength),
                curr_strength: cs.map(|s| s.strength),
                priority: matches!(classification, DeltaClass::New | DeltaClass::Dead),
            }
        })
        .collect())
}
