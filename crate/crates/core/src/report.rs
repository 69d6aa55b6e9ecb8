//! Residual checks shared by every verification routine.

use serde::Serialize;

/// One named residual compared against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `residual <= tolerance`. A NaN residual fails.
    pub fn at_most(name: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

pub fn max_residual(checks: &[Check]) -> f64 {
    checks.iter().fold(0.0, |m, c| m.max(c.residual))
}
