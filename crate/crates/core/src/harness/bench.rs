//! Query-count sweeps over the accuracy parameter.

use super::config::{ExperimentConfig, Pipeline, Setting};
use super::run::run_experiment;
use crate::error::{Error, Result};
use crate::stats::{loglog_slope, mean, quantile};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub eps: f64,
    pub trials: usize,
    pub mean_queries: f64,
    pub median_queries: f64,
    pub mean_cor: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub points: Vec<SweepPoint>,
    /// Slope of `ln(mean queries)` against `ln(1/ε)`.
    pub slope: f64,
}

impl Sweep {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,trials,mean_queries,median_queries,mean_cor,violations\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{},{},{:.6e},{:.6e},{:.9},{}",
                p.eps, p.trials, p.mean_queries, p.median_queries, p.mean_cor, p.violations
            );
        }
        out
    }
}

/// The config used at one sweep point. For the agnostic weak learner and the
/// prefix search the learner accuracy `κ` follows `ε`.
pub fn point_config(base: &ExperimentConfig, eps: f64) -> ExperimentConfig {
    let mut c = base.clone();
    c.eps = eps;
    if base.setting == Setting::Agnostic && matches!(base.pipeline, Pipeline::Weak | Pipeline::Qgl) {
        c.kappa = eps;
    }
    c
}

pub fn sweep(base: &ExperimentConfig, eps_values: &[f64]) -> Result<Sweep> {
    if eps_values.len() < 2 {
        return Err(Error::Config("a sweep needs at least two eps values".into()));
    }
    let mut points = Vec::with_capacity(eps_values.len());
    for &eps in eps_values {
        let c = point_config(base, eps);
        let recs = run_experiment(&c)?;
        let q: Vec<f64> = recs.iter().map(|r| r.queries as f64).collect();
        let cors: Vec<f64> = recs.iter().map(|r| r.achieved_cor).collect();
        points.push(SweepPoint {
            eps,
            trials: recs.len(),
            mean_queries: mean(&q),
            median_queries: quantile(&q, 0.5),
            mean_cor: mean(&cors),
            violations: recs.iter().filter(|r| !r.contract_ok).count(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| 1.0 / p.eps).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_queries).collect();
    Ok(Sweep {
        slope: loglog_slope(&xs, &ys),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn realizable_sweep_is_quadratic() {
        let c = ExperimentConfig::parse("trials = 4").unwrap();
        let s = sweep(&c, &[0.4, 0.2, 0.1]).unwrap();
        // 2⌈1/ε²⌉ queries: 14, 50, 200.
        assert_eq!(s.points.iter().map(|p| p.mean_queries).collect::<Vec<_>>(), vec![14.0, 50.0, 200.0]);
        assert!((s.slope - 2.0).abs() < 0.1);
        assert_eq!(s.to_csv(), sweep(&c, &[0.4, 0.2, 0.1]).unwrap().to_csv());
        assert!(sweep(&c, &[0.2]).is_err());
    }

    #[test]
    fn kappa_follows_eps_for_agnostic_weak() {
        let c = ExperimentConfig::parse("setting = agnostic").unwrap();
        assert_eq!(point_config(&c, 0.3).kappa, 0.3);
        let c = ExperimentConfig::parse("setting = agnostic\npipeline = boost").unwrap();
        assert_eq!(point_config(&c, 0.3).kappa, c.kappa);
    }
}
