use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ValidationError;

pub const RUBRIC_DIMENSIONS: usize = 8;
pub const RUBRIC_MAX_PER_DIMENSION: u8 = 10;

/// Eight dimensions scored 0..=10; total out of 80.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RubricScore {
    #[serde(default)]
    pub id: String,
    pub target_ref: String,
    pub dimension_scores: Vec<u8>,
    pub dimension_labels: Vec<String>,
    pub total: u32,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RubricError {
    #[error("expected {RUBRIC_DIMENSIONS} scores, got {0}")]
    WrongCount(usize),
    #[error("expected {RUBRIC_DIMENSIONS} labels, got {0}")]
    WrongLabelCount(usize),
    #[error("dimension {index} score {value} outside 0..=10")]
    ScoreOutOfRange { index: usize, value: i64 },
    #[error("target_ref must not be empty")]
    MissingTarget,
}

impl ValidationError for RubricError {
    fn code(&self) -> &'static str {
        match self {
            Self::WrongCount(_) => "wrong_score_count",
            Self::WrongLabelCount(_) => "wrong_label_count",
            Self::ScoreOutOfRange { .. } => "score_out_of_range",
            Self::MissingTarget => "missing_target",
        }
    }

    fn field_path(&self) -> Option<String> {
        Some(match self {
            Self::WrongCount(_) => "dimension_scores".into(),
            Self::WrongLabelCount(_) => "dimension_labels".into(),
            Self::ScoreOutOfRange { index, .. } => format!("dimension_scores[{index}]"),
            Self::MissingTarget => "target_ref".into(),
        })
    }
}

/// Placeholder dimension names used when no labels are configured.
pub fn default_labels() -> Vec<String> {
    (1..=RUBRIC_DIMENSIONS).map(|i| format!("dimension_{i}")).collect()
}

pub fn score_rubric(
    target_ref: &str,
    scores: &[i64],
    labels: Option<&[String]>,
) -> Result<RubricScore, RubricError> {
    if target_ref.trim().is_empty() {
        return Err(RubricError::MissingTarget);
    }
    if scores.len() != RUBRIC_DIMENSIONS {
        return Err(RubricError::WrongCount(scores.len()));
    }
    let labels = match labels {
        Some(l) if l.len() != RUBRIC_DIMENSIONS => return Err(RubricError::WrongLabelCount(l.len())),
        Some(l) => l.to_vec(),
        None => default_labels(),
    };
    let mut dims = Vec::with_capacity(RUBRIC_DIMENSIONS);
    for (index, &value) in scores.iter().enumerate() {
        if !(0..=i64::from(RUBRIC_MAX_PER_DIMENSION)).contains(&value) {
            return Err(RubricError::ScoreOutOfRange { index, value });
        }
        dims.push(value as u8);
    }
    let total = dims.iter().map(|&d| u32::from(d)).sum();
    Ok(RubricScore {
        id: String::new(),
        target_ref: target_ref.to_string(),
        dimension_scores: dims,
        dimension_labels: labels,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extremes() {
        assert_eq!(score_rubric("t", &[0; 8], None).unwrap().total, 0);
        assert_eq!(score_rubric("t", &[10; 8], None).unwrap().total, 80);
    }

    #[test]
    fn errors_name_the_field() {
        let e = score_rubric("t", &[1; 7], None).unwrap_err();
        assert_eq!(e.field_path().as_deref(), Some("dimension_scores"));
        let e = score_rubric("t", &[1, 2, 3, 11, 0, 0, 0, 0], None).unwrap_err();
        assert_eq!(e, RubricError::ScoreOutOfRange { index: 3, value: 11 });
        assert_eq!(e.field_path().as_deref(), Some("dimension_scores[3]"));
        assert!(score_rubric("t", &[-1, 0, 0, 0, 0, 0, 0, 0], None).is_err());
        let labels = vec!["a".to_string(); 3];
        assert_eq!(
            score_rubric("t", &[1; 8], Some(&labels)),
            Err(RubricError::WrongLabelCount(3))
        );
    }
}
