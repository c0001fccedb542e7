//! Seeded trials and their CSV records.

use super::config::{ExperimentConfig, Flips, Pipeline, Setting};
use crate::boolean::{parity_eval, random_tree, wht, BooleanFunction, DecisionTree};
use crate::boosting::{default_sample_size, KkBoost, QuantumBoost, TrainingSet};
use crate::channel::{adversarial_flips, make_agnostic, make_rcn, make_realizable, random_flips, LabelChannel};
use crate::error::{Error, Result};
use crate::gl::Qgl;
use crate::quantum::{FailureMode, QueryLedger};
use crate::rng::{trial_seed, Streams};
use crate::weak::{build_oh, rcn_weak_parity, realizable_weak_parity, AgnosticParity, ExactParityLearner, RcnMajorityOracle};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

/// The generated target and its label channel.
#[derive(Debug, Clone)]
pub struct Problem {
    pub tree: DecisionTree,
    pub target: BooleanFunction,
    pub channel: LabelChannel,
}

/// Draws the tree from the problem stream and the label noise from the
/// oracle-noise stream.
pub fn generate_problem(config: &ExperimentConfig, streams: &mut Streams) -> Result<Problem> {
    let tree = random_tree(config.n, config.t, &mut streams.problem)?;
    let target = tree.to_function();
    let channel = match config.setting {
        Setting::Realizable => make_realizable(&target),
        Setting::Rcn => make_rcn(&target, config.noise)?,
        Setting::Agnostic => {
            let eta = match config.flips {
                Flips::Adversarial => adversarial_flips(&target, config.noise, &mut streams.oracle_noise)?,
                Flips::Random => random_flips(config.n, config.noise, &mut streams.oracle_noise)?,
            };
            make_agnostic(&target, &eta)?
        }
    };
    Ok(Problem {
        tree,
        target,
        channel,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub config_hash: String,
    pub trial: usize,
    pub trial_seed: u64,
    pub setting: Setting,
    pub pipeline: Pipeline,
    pub n: usize,
    pub t: usize,
    pub eps: f64,
    pub kappa: f64,
    pub achieved_error: f64,
    pub achieved_cor: f64,
    /// Correlation of the generating tree with the channel.
    pub optcor_proxy: f64,
    /// The correlation the pipeline's guarantee promises.
    pub bound: f64,
    pub contract_ok: bool,
    pub iterations: usize,
    pub queries: u64,
    pub queries_by_tag: Vec<(String, u64)>,
    pub wall_ms: Option<f64>,
}

pub const RECORD_HEADER: &str = "config_hash,trial,trial_seed,setting,pipeline,n,t,eps,kappa,achieved_error,\
achieved_cor,optcor_proxy,bound,contract_ok,iterations,queries,queries_by_tag";

impl RunRecord {
    fn tags_field(&self) -> String {
        self.queries_by_tag
            .iter()
            .map(|(t, c)| format!("{t}={c}"))
            .collect::<Vec<_>>()
            .join(";")
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{},{},{},{},{},{},{:.9},{:.9},{:.9},{:.9},{},{},{},{}",
            self.config_hash,
            self.trial,
            self.trial_seed,
            self.setting,
            self.pipeline,
            self.n,
            self.t,
            self.eps,
            self.kappa,
            self.achieved_error,
            self.achieved_cor,
            self.optcor_proxy,
            self.bound,
            self.contract_ok,
            self.iterations,
            self.queries,
            self.tags_field()
        );
        if let Some(ms) = self.wall_ms {
            let _ = write!(row, ",{ms:.3}");
        }
        row
    }

    fn parse_row(line_no: usize, line: &str, with_wall: bool) -> Result<Self> {
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let cols: Vec<&str> = line.split(',').collect();
        let want = 17 + with_wall as usize;
        if cols.len() != want {
            return Err(err(format!("expected {want} columns, got {}", cols.len())));
        }
        fn p<T: std::str::FromStr>(s: &str, name: &str, line: usize) -> Result<T> {
            s.trim().parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad {name} `{s}`"),
            })
        }
        let mut tags = Vec::new();
        for part in cols[16].split(';').filter(|s| !s.is_empty()) {
            let (t, c) = part.split_once('=').ok_or_else(|| err(format!("bad tag entry `{part}`")))?;
            tags.push((t.to_string(), p(c, "tag count", line_no)?));
        }
        Ok(Self {
            config_hash: cols[0].to_string(),
            trial: p(cols[1], "trial", line_no)?,
            trial_seed: p(cols[2], "trial_seed", line_no)?,
            setting: cols[3].parse()?,
            pipeline: cols[4].parse()?,
            n: p(cols[5], "n", line_no)?,
            t: p(cols[6], "t", line_no)?,
            eps: p(cols[7], "eps", line_no)?,
            kappa: p(cols[8], "kappa", line_no)?,
            achieved_error: p(cols[9], "achieved_error", line_no)?,
            achieved_cor: p(cols[10], "achieved_cor", line_no)?,
            optcor_proxy: p(cols[11], "optcor_proxy", line_no)?,
            bound: p(cols[12], "bound", line_no)?,
            contract_ok: p(cols[13], "contract_ok", line_no)?,
            iterations: p(cols[14], "iterations", line_no)?,
            queries: p(cols[15], "queries", line_no)?,
            queries_by_tag: tags,
            wall_ms: if with_wall { Some(p(cols[17], "wall_ms", line_no)?) } else { None },
        })
    }
}

/// Headered CSV. The `wall_ms` column appears only if every record has one.
pub fn records_to_csv(records: &[RunRecord]) -> String {
    let with_wall = !records.is_empty() && records.iter().all(|r| r.wall_ms.is_some());
    let mut out = String::from(RECORD_HEADER);
    if with_wall {
        out.push_str(",wall_ms");
    }
    out.push('\n');
    for r in records {
        let mut r = r.clone();
        if !with_wall {
            r.wall_ms = None;
        }
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<RunRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let with_wall = match header.trim() {
        h if h == RECORD_HEADER => false,
        h if h.strip_suffix(",wall_ms") == Some(RECORD_HEADER) => true,
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "unrecognised header".into(),
            })
        }
    };
    lines.map(|(i, l)| RunRecord::parse_row(i + 1, l.trim(), with_wall)).collect()
}

fn failure_mode(config: &ExperimentConfig) -> FailureMode {
    if config.adversarial_failures {
        FailureMode::Adversarial
    } else {
        FailureMode::Uniform
    }
}

/// What a pipeline produced, before it is turned into a record.
struct Outcome {
    hypothesis: BooleanFunction,
    bound: f64,
    contract_ok: bool,
    iterations: usize,
}

fn signed_parity(n: usize, mask: usize, sign: i8) -> Result<BooleanFunction> {
    BooleanFunction::from_fn(n, |x| sign * parity_eval(mask, x))
}

fn run_pipeline(
    config: &ExperimentConfig,
    problem: &Problem,
    streams: &mut Streams,
    ledger: &mut QueryLedger,
) -> Result<Outcome> {
    let ch = &problem.channel;
    let n = config.n;
    let proxy = ch.correlation(&problem.target);
    let failure = failure_mode(config);
    let agnostic = AgnosticParity::new(config.t, config.kappa, config.delta)?.with_failure(failure);
    match config.pipeline {
        Pipeline::Weak => {
            let (r, slack) = match config.setting {
                Setting::Realizable => (
                    realizable_weak_parity(&problem.target, config.eps, &mut streams.algorithm, ledger)?,
                    config.eps,
                ),
                Setting::Rcn => {
                    let oracle = RcnMajorityOracle::new(problem.target.clone(), config.noise, config.delta)?;
                    (rcn_weak_parity(&oracle, config.eps, &mut streams.algorithm, ledger)?, config.eps)
                }
                Setting::Agnostic => (agnostic.run(ch, &mut streams.algorithm, ledger)?, config.kappa),
            };
            // Correlations are against the noiseless target except in the agnostic setting.
            let reference = match config.setting {
                Setting::Agnostic => proxy,
                _ => 1.0,
            };
            let hypothesis = signed_parity(n, r.mask, r.sign)?;
            let achieved = match config.setting {
                Setting::Agnostic => ch.correlation(&hypothesis),
                _ => make_realizable(&problem.target).correlation(&hypothesis),
            };
            let bound = reference / config.t as f64 - slack;
            Ok(Outcome {
                hypothesis,
                bound,
                contract_ok: achieved >= bound - 1e-12,
                iterations: 1,
            })
        }
        Pipeline::Qgl => {
            let oh = build_oh(ch, agnostic.gamma(n), config.kappa, ledger)?;
            let qgl = Qgl::new(config.tau, config.eps, config.delta)?.with_failure(failure);
            let mut sub = QueryLedger::new();
            let out = qgl.run(&oh.oracle, &mut streams.algorithm, &mut sub)?;
            ledger.merge_scaled(&sub, oh.invocation_cost);
            // τ and ε live on the squared-coefficient scale.
            let spec = wht(oh.oracle.h());
            let max_sq = spec.coeffs().iter().fold(0.0f64, |m, c| m.max(c * c));
            let (mask, ok) = match out.mask {
                Some(s) => (s, spec.coeff(s).powi(2) >= config.tau - config.eps - 1e-12),
                None => (0, max_sq < config.tau),
            };
            let sign = if ch.correlation_with(|x| parity_eval(mask, x) as f64) < 0.0 { -1 } else { 1 };
            Ok(Outcome {
                hypothesis: signed_parity(n, mask, sign)?,
                bound: config.tau - config.eps,
                contract_ok: ok,
                iterations: out.trace.len().max(1),
            })
        }
        Pipeline::Boost | Pipeline::Classical => {
            let out = if config.pipeline == Pipeline::Boost {
                let m = config.m.unwrap_or_else(|| default_sample_size(config.eta, config.eps, config.delta));
                let q = QuantumBoost::new(config.rounds, config.eta, config.eps, config.delta, m)?.with_failure(failure);
                q.run(&agnostic, ch, &mut streams.algorithm, &mut streams.estimation_noise, ledger)?
            } else {
                KkBoost::new(config.rounds, config.eta, config.eps)?.run(
                    &ExactParityLearner,
                    ch,
                    TrainingSet::Channel(ch),
                    &mut streams.algorithm,
                    ledger,
                )?
            };
            let hypothesis = out.hypothesis.to_function();
            let bound = proxy - config.kappa / config.eta - config.eps;
            Ok(Outcome {
                contract_ok: ch.correlation(&hypothesis) >= bound - 1e-12,
                hypothesis,
                bound,
                iterations: out.trace.len(),
            })
        }
    }
}

/// One seeded trial.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<RunRecord> {
    let start = Instant::now();
    let seed = trial_seed(config.seed, trial as u64);
    let mut streams = Streams::new(seed);
    let problem = generate_problem(config, &mut streams)?;
    let mut ledger = QueryLedger::new();
    let out = run_pipeline(config, &problem, &mut streams, &mut ledger)?;
    let ch = &problem.channel;
    Ok(RunRecord {
        config_hash: config.hash_hex(),
        trial,
        trial_seed: seed,
        setting: config.setting,
        pipeline: config.pipeline,
        n: config.n,
        t: config.t,
        eps: config.eps,
        kappa: config.kappa,
        achieved_error: ch.error(&out.hypothesis),
        achieved_cor: ch.correlation(&out.hypothesis),
        optcor_proxy: ch.correlation(&problem.target),
        bound: out.bound,
        contract_ok: out.contract_ok,
        iterations: out.iterations,
        queries: ledger.total(),
        queries_by_tag: ledger.iter().map(|(t, c)| (t.to_string(), c)).collect(),
        wall_ms: config.wall_time.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Runs every trial; trials execute concurrently but come back in order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(config.trials);
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<RunRecord>>>> = Mutex::new((0..config.trials).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= config.trials {
                    break;
                }
                let r = run_trial(config, i);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every trial ran"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn deterministic_and_ordered() {
        let c = cfg("trials = 6\nseed = 9");
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(records_to_csv(&a), records_to_csv(&b));
        assert_eq!(a.iter().map(|r| r.trial).collect::<Vec<_>>(), (0..6).collect::<Vec<_>>());
        let single = run_trial(&c, 3).unwrap();
        assert_eq!(single, a[3]);
    }

    #[test]
    fn csv_round_trip() {
        let mut c = cfg("setting = agnostic\ntrials = 3\nn = 6");
        let recs = run_experiment(&c).unwrap();
        let text = records_to_csv(&recs);
        let back = records_from_csv(&text).unwrap();
        assert_eq!(records_to_csv(&back), text);
        c.wall_time = true;
        let timed = run_experiment(&c).unwrap();
        let text = records_to_csv(&timed);
        assert!(text.lines().next().unwrap().ends_with(",wall_ms"));
        assert_eq!(records_from_csv(&text).unwrap().len(), 3);
        assert!(records_from_csv("").unwrap().is_empty());
        assert!(records_from_csv("bogus\n").is_err());
    }

    #[test]
    fn every_pipeline_runs() {
        for text in [
            "setting = realizable\npipeline = weak",
            "setting = rcn\npipeline = weak\nnoise = 0.2",
            "setting = agnostic\npipeline = weak",
            "setting = agnostic\npipeline = qgl\ntau = 0.3",
            "setting = agnostic\npipeline = classical\nrounds = 50",
            "setting = agnostic\npipeline = boost\nrounds = 20\nm = 20000\nadversarial_failures = true",
        ] {
            let c = cfg(&format!("{text}\ntrials = 2\nn = 6"));
            for r in run_experiment(&c).unwrap() {
                assert!((0.0..=1.0).contains(&r.achieved_error));
                assert!((r.achieved_error - (1.0 - (1.0 + r.achieved_cor) / 2.0)).abs() < 1e-12);
                assert_eq!(r.queries, r.queries_by_tag.iter().map(|(_, c)| c).sum::<u64>());
            }
        }
    }
}
