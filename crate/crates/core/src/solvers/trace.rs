use serde::{Deserialize, Serialize};

use crate::tt::TtTensor;

/// Header of the trace CSV.
pub const TRACE_COLUMNS: [&str; 5] = ["t", "objective", "rel_error", "mu_t", "factor_dist2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: usize,
    pub objective: f64,
    pub rel_error: Option<f64>,
    pub mu_t: f64,
    pub factor_dist2: Option<f64>,
}

impl TraceRecord {
    /// Fields in [`TRACE_COLUMNS`] order; missing values are empty.
    pub fn csv_fields(&self) -> [String; 5] {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        [
            self.t.to_string(),
            format!("{:e}", self.objective),
            opt(self.rel_error),
            format!("{:e}", self.mu_t),
            opt(self.factor_dist2),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct SolverOutput {
    pub tt: TtTensor,
    pub trace: Vec<TraceRecord>,
    /// Number of updates performed.
    pub iterations: usize,
    pub reached_target: bool,
}
