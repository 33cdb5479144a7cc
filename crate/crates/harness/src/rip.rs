//! Empirical ℓ1/ℓ2 RIP and sharpness report.

use anyhow::{ensure, Result};
use serde::{Deserialize, Serialize};
use ttr_core::rng::derive_seed;
use ttr_core::sensing::{rip_probe, sharpness_probe, ProbeStats, StorageMode, SQRT_2_OVER_PI};

use crate::problem::{generate, ProblemConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RipConfig {
    pub dims: Vec<usize>,
    pub ranks: Vec<usize>,
    pub m: usize,
    /// Random TT samples for the RIP probe.
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub p_s: f64,
    /// Samples for the sharpness probe; `trials` when absent.
    #[serde(default)]
    pub sharpness_trials: Option<usize>,
    #[serde(default = "default_storage")]
    pub storage: StorageMode,
}

fn default_storage() -> StorageMode {
    StorageMode::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RipReport {
    pub config: RipConfig,
    pub rip: ProbeStats,
    /// `|mean − sqrt(2/π)| / sqrt(2/π)`.
    pub rip_mean_rel_deviation: f64,
    pub sharpness: ProbeStats,
    pub sharpness_min: f64,
    pub notes: Vec<String>,
}

impl RipConfig {
    pub fn new(dims: Vec<usize>, ranks: Vec<usize>, m: usize, trials: usize, seed: u64) -> Self {
        Self {
            dims,
            ranks,
            m,
            trials,
            seed,
            p_s: 0.0,
            sharpness_trials: None,
            storage: StorageMode::Auto,
        }
    }
}

pub fn rip_check(cfg: &RipConfig) -> Result<RipReport> {
    ensure!(cfg.trials > 0, "rip-check needs at least one trial");
    let sharp_trials = cfg.sharpness_trials.unwrap_or(cfg.trials);
    ensure!(sharp_trials > 0, "rip-check needs at least one sharpness trial");
    let mut pcfg = ProblemConfig::new(cfg.dims.clone(), cfg.ranks.clone(), cfg.m, cfg.p_s, cfg.seed);
    pcfg.storage = cfg.storage;
    let problem = generate(&pcfg)?;
    let a = &problem.ensemble;
    let rip = rip_probe(a, &cfg.ranks, cfg.trials, derive_seed(cfg.seed, &[10]))?;
    let sharpness = sharpness_probe(
        a,
        &problem.y,
        &problem.x_star,
        &cfg.ranks,
        cfg.p_s,
        sharp_trials,
        derive_seed(cfg.seed, &[11]),
    )?;
    let mut notes = Vec::new();
    if sharpness.reference <= 0.0 {
        notes.push(format!(
            "p_s = {}: the sharpness lower bound (1 - 2 p_s) sqrt(2/pi) is nonpositive, so the ratios carry no positivity guarantee",
            cfg.p_s
        ));
    }
    if sharpness.skipped > 0 {
        notes.push(format!("{} sharpness samples coincided with X* and were skipped", sharpness.skipped));
    }
    Ok(RipReport {
        config: cfg.clone(),
        rip_mean_rel_deviation: (rip.mean - SQRT_2_OVER_PI).abs() / SQRT_2_OVER_PI,
        sharpness_min: sharpness.min,
        rip,
        sharpness,
        notes,
    })
}

impl RipReport {
    /// Human-readable lines for the terminal.
    pub fn lines(&self) -> Vec<String> {
        let mut out = vec![
            format!(
                "rip: mean {:.6} min {:.6} max {:.6} (reference {:.6}, mean deviation {:.3}%, max |dev| {:.4})",
                self.rip.mean,
                self.rip.min,
                self.rip.max,
                SQRT_2_OVER_PI,
                100.0 * self.rip_mean_rel_deviation,
                self.rip.max_deviation
            ),
            format!(
                "sharpness: min {:.6} mean {:.6} (reference {:.6})",
                self.sharpness.min, self.sharpness.mean, self.sharpness.reference
            ),
        ];
        out.extend(self.notes.iter().map(|n| format!("note: {n}")));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_trials_is_an_error() {
        let cfg = RipConfig::new(vec![3, 3, 3], vec![2, 2], 50, 0, 1);
        assert!(rip_check(&cfg).is_err());
    }

    #[test]
    fn half_outliers_are_noted() {
        let mut cfg = RipConfig::new(vec![3, 3, 3], vec![2, 2], 200, 5, 1);
        cfg.p_s = 0.5;
        let report = rip_check(&cfg).unwrap();
        assert_eq!(report.sharpness.reference, 0.0);
        assert!(report.notes.iter().any(|n| n.contains("nonpositive")));
    }

    #[test]
    fn clean_sharpness_is_positive() {
        let cfg = RipConfig::new(vec![3, 3, 3], vec![2, 2], 400, 10, 2);
        let report = rip_check(&cfg).unwrap();
        assert!(report.sharpness_min > 0.0);
        assert!(report.notes.is_empty());
    }
}
