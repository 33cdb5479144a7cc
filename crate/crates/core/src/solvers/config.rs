use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::schedule::StepSchedule;

/// Source of the `σ̄²` scaling applied to the orthonormal factors' steps.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode", content = "value")]
pub enum SigmaBarMode {
    /// Largest singular value over the unfoldings of the ground truth.
    TrueValue,
    /// Same quantity evaluated at the initial iterate.
    #[default]
    FromInit,
    /// A fixed `σ̄` supplied by the caller.
    UserOverride(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub schedule: StepSchedule,
    pub max_iters: usize,
    /// Stop once the relative error falls to this value; 0 disables it.
    #[serde(default)]
    pub target_rel_error: f64,
    #[serde(default)]
    pub sigma_bar_mode: SigmaBarMode,
    #[serde(default = "default_trace_every")]
    pub trace_every: usize,
    /// Record the factor distance in the trace (needs the ground truth).
    #[serde(default)]
    pub track_factor_distance: bool,
}

fn default_trace_every() -> usize {
    1
}

impl SolverConfig {
    pub fn new(schedule: StepSchedule, max_iters: usize) -> Self {
        Self {
            schedule,
            max_iters,
            target_rel_error: 0.0,
            sigma_bar_mode: SigmaBarMode::default(),
            trace_every: 1,
            track_factor_distance: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        if !(self.target_rel_error >= 0.0 && self.target_rel_error.is_finite()) {
            return Err(Error::config(format!(
                "target relative error {} must be finite and nonnegative",
                self.target_rel_error
            )));
        }
        if self.trace_every == 0 {
            return Err(Error::config("trace stride must be at least 1"));
        }
        if let SigmaBarMode::UserOverride(v) = self.sigma_bar_mode {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("sigma_bar override {v} must be positive")));
            }
        }
        Ok(())
    }
}
