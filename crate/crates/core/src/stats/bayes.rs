use serde::{Deserialize, Serialize};

use super::anova::EffectResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    Anecdotal,
    Moderate,
    Strong,
    VeryStrong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Alternative,
    Null,
    /// BF₁₀ = 1.
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evidence {
    pub strength: Strength,
    pub direction: Direction,
}

impl std::fmt::Display for Evidence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let strength = match self.strength {
            Strength::Anecdotal => "anecdotal",
            Strength::Moderate => "moderate",
            Strength::Strong => "strong",
            Strength::VeryStrong => "very strong",
        };
        match self.direction {
            Direction::Alternative => write!(f, "{strength} evidence for the alternative"),
            Direction::Null => write!(f, "{strength} evidence for the null"),
            Direction::Neither => f.write_str("no evidence either way"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesFactor {
    pub bf10: f64,
    pub method: String,
}

// Boundaries sit exactly on 3, 10 and 30; allow for rounding in exp/ln.
const BOUNDARY_TOLERANCE: f64 = 1e-9;

impl BayesFactor {
    pub fn bf01(&self) -> f64 {
        1.0 / self.bf10
    }

    pub fn evidence(&self) -> Evidence {
        let direction = if (self.bf10 - 1.0).abs() <= BOUNDARY_TOLERANCE {
            Direction::Neither
        } else if self.bf10 > 1.0 {
            Direction::Alternative
        } else {
            Direction::Null
        };
        let ratio = if self.bf10 >= 1.0 { self.bf10 } else { 1.0 / self.bf10 };
        let at_least = |bound: f64| ratio >= bound * (1.0 - BOUNDARY_TOLERANCE);
        let strength = if at_least(30.0) {
            Strength::VeryStrong
        } else if at_least(10.0) {
            Strength::Strong
        } else if at_least(3.0) {
            Strength::Moderate
        } else {
            Strength::Anecdotal
        };
        Evidence { strength, direction }
    }
}

/// BF₁₀ = exp((BIC₀ − BIC₁) / 2).
pub fn bic_bayes_factor(bic_null: f64, bic_alt: f64) -> BayesFactor {
    BayesFactor { bf10: ((bic_null - bic_alt) / 2.0).exp(), method: "bic".into() }
}

/// BIC approximation for one repeated-measures effect, comparing the model
/// with the effect against the model without it. The number of independent
/// observations is subjects × effect df.
pub fn effect_bayes_factor(effect: &EffectResult, subjects: usize) -> BayesFactor {
    let n = (subjects as f64) * effect.df_effect;
    let delta_bic = n * (1.0 - effect.partial_eta_sq).max(f64::MIN_POSITIVE).ln() + effect.df_effect * n.ln();
    bic_bayes_factor(0.0, delta_bic)
}
