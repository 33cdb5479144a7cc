//! The ℓ1 objective, its subgradients, the projected and factorized
//! Riemannian subgradient methods, initialization and step schedules.

mod config;
mod factor_grad;
mod frsubgm;
mod init;
mod loss;
mod monitor;
mod psubgm;
mod schedule;
mod stiefel;
mod trace;

pub use config::{SigmaBarMode, SolverConfig};
pub use factor_grad::{contract_factors, factor_subgradients};
pub use frsubgm::{frsubgm_run, resolve_sigma_bar};
pub use init::{truncated_spectral_init, truncation_threshold};
pub use loss::{evaluate, full_subgradient, loss_l1, residual_signs, residuals, sign, Evaluation};
pub use psubgm::psubgm_run;
pub use schedule::{theoretical_schedule_frsubgm, theoretical_schedule_psubgm, StepSchedule};
pub use stiefel::{polar_retract, stiefel_project, tangency_residual, RETRACTION_SIGMA_MIN, STIEFEL_TOL};
pub use trace::{SolverOutput, TraceRecord, TRACE_COLUMNS};
