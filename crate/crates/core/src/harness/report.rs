//! Per-configuration aggregates of run records.

use super::run::RunRecord;
use crate::stats::{mean, quantile};
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            mean: mean(xs),
            median: quantile(xs, 0.5),
            p95: quantile(xs, 0.95),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigReport {
    pub config_hash: String,
    pub label: String,
    pub trials: usize,
    pub violations: usize,
    pub error: Summary,
    pub cor: Summary,
    pub queries: Summary,
}

/// Groups by config hash in order of first appearance.
pub fn aggregate(records: &[RunRecord]) -> Vec<ConfigReport> {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.config_hash.as_str()) {
            order.push(&r.config_hash);
        }
    }
    order
        .into_iter()
        .map(|hash| {
            let group: Vec<&RunRecord> = records.iter().filter(|r| r.config_hash == hash).collect();
            let first = group[0];
            let pick = |f: fn(&RunRecord) -> f64| group.iter().map(|r| f(r)).collect::<Vec<_>>();
            ConfigReport {
                config_hash: hash.to_string(),
                label: format!(
                    "{}/{} n={} t={} eps={} kappa={}",
                    first.setting, first.pipeline, first.n, first.t, first.eps, first.kappa
                ),
                trials: group.len(),
                violations: group.iter().filter(|r| !r.contract_ok).count(),
                error: Summary::of(&pick(|r| r.achieved_error)),
                cor: Summary::of(&pick(|r| r.achieved_cor)),
                queries: Summary::of(&pick(|r| r.queries as f64)),
            }
        })
        .collect()
}

const COLUMNS: [&str; 14] = [
    "config_hash",
    "label",
    "trials",
    "violations",
    "error_mean",
    "error_median",
    "error_p95",
    "cor_mean",
    "cor_median",
    "cor_p95",
    "queries_mean",
    "queries_median",
    "queries_p95",
    "violation_rate",
];

fn cells(r: &ConfigReport) -> Vec<String> {
    vec![
        r.config_hash.clone(),
        r.label.clone(),
        r.trials.to_string(),
        r.violations.to_string(),
        format!("{:.6}", r.error.mean),
        format!("{:.6}", r.error.median),
        format!("{:.6}", r.error.p95),
        format!("{:.6}", r.cor.mean),
        format!("{:.6}", r.cor.median),
        format!("{:.6}", r.cor.p95),
        format!("{:.6e}", r.queries.mean),
        format!("{:.6e}", r.queries.median),
        format!("{:.6e}", r.queries.p95),
        format!("{:.4}", r.violations as f64 / r.trials as f64),
    ]
}

pub fn report_csv(reports: &[ConfigReport]) -> String {
    let mut out = COLUMNS.join(",");
    out.push('\n');
    for r in reports {
        out.push_str(&cells(r).join(","));
        out.push('\n');
    }
    out
}

/// Fixed-width table with the same columns as [`report_csv`].
pub fn report_table(reports: &[ConfigReport]) -> String {
    let rows: Vec<Vec<String>> = reports.iter().map(cells).collect();
    let widths: Vec<usize> = (0..COLUMNS.len())
        .map(|i| rows.iter().map(|r| r[i].len()).chain([COLUMNS[i].len()]).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    let line = |out: &mut String, row: &[&str]| {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    };
    line(&mut out, &COLUMNS);
    for r in &rows {
        line(&mut out, &r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentConfig;
    use crate::harness::run::run_experiment;

    #[test]
    fn empty_input() {
        assert!(aggregate(&[]).is_empty());
        assert_eq!(report_csv(&[]).lines().count(), 1);
        assert_eq!(report_table(&[]).lines().count(), 1);
    }

    #[test]
    fn single_record_is_identity() {
        let c = ExperimentConfig::parse("trials = 1\nsetting = agnostic").unwrap();
        let recs = run_experiment(&c).unwrap();
        let rep = aggregate(&recs);
        assert_eq!(rep.len(), 1);
        let r = &recs[0];
        for s in [rep[0].error, rep[0].cor, rep[0].queries] {
            assert_eq!(s.mean, s.median);
            assert_eq!(s.mean, s.p95);
        }
        assert_eq!(rep[0].error.mean, r.achieved_error);
        assert_eq!(rep[0].cor.mean, r.achieved_cor);
        assert_eq!(rep[0].queries.mean, r.queries as f64);
    }

    #[test]
    fn groups_in_first_seen_order() {
        let a = run_experiment(&ExperimentConfig::parse("trials = 3\nseed = 1").unwrap()).unwrap();
        let b = run_experiment(&ExperimentConfig::parse("trials = 2\nseed = 2").unwrap()).unwrap();
        let mixed: Vec<RunRecord> = vec![b[0].clone(), a[0].clone(), a[1].clone(), b[1].clone(), a[2].clone()];
        let rep = aggregate(&mixed);
        assert_eq!(rep.iter().map(|r| r.trials).collect::<Vec<_>>(), vec![2, 3]);
        assert_eq!(rep[0].config_hash, b[0].config_hash);
    }
}
