use serde::{Deserialize, Serialize};

use crate::error::{Result, StatsError};

/// Conventional bands at 0.01 / 0.06 / 0.14.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffectBand {
    None,
    Small,
    Medium,
    Large,
}

impl EffectBand {
    pub fn classify(eta_p_squared: f64) -> Self {
        if eta_p_squared >= 0.14 {
            EffectBand::Large
        } else if eta_p_squared >= 0.06 {
            EffectBand::Medium
        } else if eta_p_squared >= 0.01 {
            EffectBand::Small
        } else {
            EffectBand::None
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            EffectBand::None => "none",
            EffectBand::Small => "small",
            EffectBand::Medium => "medium",
            EffectBand::Large => "large",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSize {
    pub eta_p_squared: f64,
    pub band: EffectBand,
}

/// `SS_effect / (SS_effect + SS_error)`.
pub fn partial_eta_squared(ss_effect: f64, ss_error: f64) -> Result<EffectSize> {
    if !ss_effect.is_finite() || !ss_error.is_finite() {
        return Err(StatsError::NonFinite("sum of squares"));
    }
    if ss_effect < 0.0 {
        return Err(StatsError::InvalidParameter {
            name: "ss_effect",
            value: ss_effect,
            reason: "sum of squares must be non-negative",
        });
    }
    if ss_error <= 0.0 {
        return Err(StatsError::InvalidParameter {
            name: "ss_error",
            value: ss_error,
            reason: "error sum of squares must be positive",
        });
    }
    let eta = ss_effect / (ss_effect + ss_error);
    Ok(EffectSize { eta_p_squared: eta, band: EffectBand::classify(eta) })
}
