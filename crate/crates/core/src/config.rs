//! Tunable thresholds. Defaults reproduce the documented protocol behaviour;
//! every knob can be overridden from a config file by the interface layer.

use serde::{Deserialize, Serialize};

use crate::precog::{Competitive, ExternalWindow, MarketPhase, Readiness};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    pub collider: ColliderRules,
    pub timing: TimingRules,
    pub readiness: ReadinessRules,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColliderRules {
    /// Ghost/label token overlap above which a shallow-ghost warning is raised.
    pub shallow_ghost_overlap: f64,
    /// Electric share of the matrix above which an advisory (non-blocking)
    /// inflation warning is raised. The hard flag fires only at 100%.
    pub inflation_advisory_ratio: f64,
    /// Minimum pair count for the hard inflation flag.
    pub inflation_min_pairs: usize,
}

impl Default for ColliderRules {
    fn default() -> Self {
        Self {
            shallow_ghost_overlap: 0.6,
            inflation_advisory_ratio: 0.7,
            inflation_min_pairs: 3,
        }
    }
}

/// Per-axis polarity table and the sum thresholds for the overall judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TimingRules {
    pub market: MarketPolarity,
    pub competitive: CompetitivePolarity,
    pub readiness: ReadinessPolarity,
    pub external: ExternalPolarity,
    /// `sum >= go_min` → Go.
    pub go_min: i32,
    /// `soon_min <= sum < go_min` → Soon; anything lower → Watch.
    pub soon_min: i32,
}

impl Default for TimingRules {
    fn default() -> Self {
        Self {
            market: MarketPolarity::default(),
            competitive: CompetitivePolarity::default(),
            readiness: ReadinessPolarity::default(),
            external: ExternalPolarity::default(),
            go_min: 3,
            soon_min: 1,
        }
    }
}

impl TimingRules {
    pub fn market_polarity(&self, v: MarketPhase) -> i32 {
        let t = &self.market;
        match v {
            MarketPhase::PreEmergence => t.pre_emergence,
            MarketPhase::Emergence => t.emergence,
            MarketPhase::Acceleration => t.acceleration,
            MarketPhase::Peak => t.peak,
            MarketPhase::Correction => t.correction,
            MarketPhase::Plateau => t.plateau,
        }
    }

    pub fn competitive_polarity(&self, v: Competitive) -> i32 {
        let t = &self.competitive;
        match v {
            Competitive::FirstMover => t.first_mover,
            Competitive::FastFollower => t.fast_follower,
            Competitive::Fortifier => t.fortifier,
            Competitive::TooLate => t.too_late,
            Competitive::Undefined => t.undefined,
        }
    }

    pub fn readiness_polarity(&self, v: Readiness) -> i32 {
        let t = &self.readiness;
        match v {
            Readiness::NotReady => t.not_ready,
            Readiness::PartiallyReady => t.partially_ready,
            Readiness::Ready => t.ready,
        }
    }

    pub fn external_polarity(&self, v: ExternalWindow) -> i32 {
        let t = &self.external;
        match v {
            ExternalWindow::Open => t.open,
            ExternalWindow::Opening => t.opening,
            ExternalWindow::Closed => t.closed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarketPolarity {
    pub pre_emergence: i32,
    pub emergence: i32,
    pub acceleration: i32,
    pub peak: i32,
    pub correction: i32,
    pub plateau: i32,
}

impl Default for MarketPolarity {
    fn default() -> Self {
        Self {
            pre_emergence: -1,
            emergence: 1,
            acceleration: 1,
            peak: 0,
            correction: -1,
            plateau: -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompetitivePolarity {
    pub first_mover: i32,
    pub fast_follower: i32,
    pub fortifier: i32,
    pub too_late: i32,
    pub undefined: i32,
}

impl Default for CompetitivePolarity {
    fn default() -> Self {
        Self {
            first_mover: 1,
            fast_follower: 1,
            fortifier: 0,
            too_late: -1,
            undefined: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadinessPolarity {
    pub ready: i32,
    pub partially_ready: i32,
    pub not_ready: i32,
}

impl Default for ReadinessPolarity {
    fn default() -> Self {
        Self {
            ready: 1,
            partially_ready: 0,
            not_ready: -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExternalPolarity {
    pub open: i32,
    pub opening: i32,
    pub closed: i32,
}

impl Default for ExternalPolarity {
    fn default() -> Self {
        Self {
            open: 1,
            opening: 0,
            closed: -1,
        }
    }
}

/// Vision feasibility → organizational readiness buckets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReadinessRules {
    pub ready_min_feasibility: u8,
    pub partial_min_feasibility: u8,
}

impl Default for ReadinessRules {
    fn default() -> Self {
        Self {
            ready_min_feasibility: 4,
            partial_min_feasibility: 3,
        }
    }
}
