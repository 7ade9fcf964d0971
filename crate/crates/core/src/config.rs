use serde::{Deserialize, Serialize};

use crate::error::{LlipError, Result};

/// Numerical knobs shared by every module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Two values closer than this count as equal when forming ratios.
    pub zero_tol: f64,
    /// Largest output spread tolerated between coincident sample inputs.
    pub consistency_tol: f64,
    /// Discontinuity threshold, as a multiple of the median difference quotient.
    pub continuity_threshold_factor: f64,
    /// Adjacency radius, as a multiple of the median nearest-neighbour spacing.
    pub adjacency_radius_factor: f64,
    pub max_breakpoints: usize,
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            zero_tol: 1e-12,
            consistency_tol: 1e-9,
            continuity_threshold_factor: 50.0,
            adjacency_radius_factor: 2.5,
            max_breakpoints: 10_000,
            seed: 0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("zero_tol", self.zero_tol),
            ("consistency_tol", self.consistency_tol),
            (
                "continuity_threshold_factor",
                self.continuity_threshold_factor,
            ),
            ("adjacency_radius_factor", self.adjacency_radius_factor),
        ];
        for (name, value) in checks {
            if !(value.is_finite() && value > 0.0) {
                return Err(LlipError::InvalidRange(format!(
                    "{name} must be a positive finite number, got {value}"
                )));
            }
        }
        if self.max_breakpoints < 2 {
            return Err(LlipError::InvalidRange(
                "max_breakpoints must be at least 2".into(),
            ));
        }
        Ok(())
    }
}
