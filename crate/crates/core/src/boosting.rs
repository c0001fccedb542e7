//! Agnostic boosting by conservative relabeling, in a classical form over an
//! exact channel or a fixed sample, and a quantum form whose margins pass
//! through relative-error amplitude estimation.

use crate::boolean::{parity_eval, BooleanFunction};
use crate::channel::{LabelChannel, SampleCounts, WeightFunction};
use crate::error::{ensure, Error, Result};
use crate::quantum::{FailureMode, QueryLedger, RelativeEstimate};
use crate::rng::Rng as StdRng;
use crate::weak::{ExampleSource, Hypothesis, WeakLearner};
use std::fmt::Write as _;

/// `φ(z) = 1 − z` for `z ≤ 0`, `e^{−z}` otherwise.
#[inline]
pub fn potential(z: f64) -> f64 {
    if z <= 0.0 {
        1.0 - z
    } else {
        (-z).exp()
    }
}

/// Right derivative of [`potential`].
#[inline]
pub fn potential_slope(z: f64) -> f64 {
    if z < 0.0 {
        -1.0
    } else {
        -(-z).exp()
    }
}

/// `min{1, e^{−score·y}}`.
#[inline]
pub fn conservative_weight(score: f64, y: i8) -> f64 {
    (-score * y as f64).exp().min(1.0)
}

/// `H = global_scale · Σ cᵢ χ_{Sᵢ}` with cached scores on every input.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedHypothesis {
    n: usize,
    terms: Vec<(f64, usize)>,
    global_scale: f64,
    scores: Vec<f64>,
}

impl CombinedHypothesis {
    pub fn zero(n: usize) -> Result<Self> {
        crate::boolean::check_bits(n)?;
        Ok(Self {
            n,
            terms: Vec::new(),
            global_scale: 1.0,
            scores: vec![0.0; 1 << n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(f64, usize)] {
        &self.terms
    }

    pub fn global_scale(&self) -> f64 {
        self.global_scale
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    #[inline]
    pub fn score(&self, x: usize) -> f64 {
        self.scores[x]
    }

    /// `sign(score)`, with `sign(0) = +1`.
    #[inline]
    pub fn predict(&self, x: usize) -> i8 {
        if self.scores[x] >= 0.0 {
            1
        } else {
            -1
        }
    }

    pub fn to_function(&self) -> BooleanFunction {
        BooleanFunction::from_fn(self.n, |x| self.predict(x)).expect("width checked")
    }

    /// `H ← H + coeff · h`.
    pub fn add(&mut self, coeff: f64, h: Hypothesis) {
        let c = coeff * h.sign as f64;
        self.terms.push((c / self.global_scale, h.mask));
        for (x, s) in self.scores.iter_mut().enumerate() {
            *s += c * parity_eval(h.mask, x) as f64;
        }
    }

    /// `H ← factor · H`; a zero factor resets to the empty sum.
    pub fn scale(&mut self, factor: f64) {
        if factor == 0.0 {
            self.terms.clear();
            self.global_scale = 1.0;
            self.scores.iter_mut().for_each(|s| *s = 0.0);
        } else {
            self.global_scale *= factor;
            self.scores.iter_mut().for_each(|s| *s *= factor);
        }
    }

    pub fn weights(&self) -> WeightFunction {
        WeightFunction::from_fn(self.n, |x, y| conservative_weight(self.scores[x], y)).expect("weights lie in [0,1]")
    }

    /// Exact `E_D[φ(y · H(x))]`.
    pub fn potential_on(&self, channel: &LabelChannel) -> f64 {
        expect_over(channel, |x, y| potential(y as f64 * self.scores[x]))
    }

    /// `# global_scale=<s>` followed by `coefficient,mask` rows.
    pub fn to_text(&self) -> String {
        let mut out = format!("# global_scale={}\ncoefficient,mask\n", self.global_scale);
        for (c, m) in &self.terms {
            let _ = writeln!(out, "{c},{m}");
        }
        out
    }

    pub fn from_text(n: usize, text: &str) -> Result<Self> {
        let mut h = Self::zero(n)?;
        let mut scale = 1.0;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            let parse_err = |msg: &str| Error::Parse {
                line: i + 1,
                msg: msg.to_string(),
            };
            if let Some(rest) = line.strip_prefix("# global_scale=") {
                scale = rest.parse().map_err(|_| parse_err("bad global scale"))?;
                continue;
            }
            if line.is_empty() || line.starts_with('#') || line == "coefficient,mask" {
                continue;
            }
            let (c, m) = line.split_once(',').ok_or_else(|| parse_err("expected coefficient,mask"))?;
            let c: f64 = c.trim().parse().map_err(|_| parse_err("bad coefficient"))?;
            let m: usize = m.trim().parse().map_err(|_| parse_err("bad mask"))?;
            if m >> n != 0 {
                return Err(parse_err("mask wider than n"));
            }
            h.add(c, Hypothesis { mask: m, sign: 1 });
        }
        if scale != 1.0 {
            h.scale(scale);
        }
        Ok(h)
    }
}

/// Exact `E_D[f(x, y)]`.
fn expect_over(channel: &LabelChannel, f: impl Fn(usize, i8) -> f64) -> f64 {
    let sum: f64 = channel
        .p1()
        .iter()
        .enumerate()
        .map(|(x, &p)| p * f(x, 1) + (1.0 - p) * f(x, -1))
        .sum();
    sum / channel.len() as f64
}

/// Exact `(α, β) = (E_D[w y h], E_D[w y (−sign H)])` with `w` the conservative weights of `H`.
pub fn exact_margins(channel: &LabelChannel, big_h: &CombinedHypothesis, h: Hypothesis) -> (f64, f64) {
    let alpha = expect_over(channel, |x, y| {
        conservative_weight(big_h.score(x), y) * (y * h.eval(x)) as f64
    });
    let beta = expect_over(channel, |x, y| {
        -conservative_weight(big_h.score(x), y) * (y * big_h.predict(x)) as f64
    });
    (alpha, beta)
}

fn sample_margins(samples: &SampleCounts, big_h: &CombinedHypothesis, h: Hypothesis) -> (f64, f64) {
    let w = big_h.weights();
    let alpha = samples.weighted_correlation(&w, |x| h.eval(x) as f64);
    let beta = samples.weighted_correlation(&w, |x| -big_h.predict(x) as f64);
    (alpha, beta)
}

/// `(E_D[φ(yH)] − E_D[φ(y(H + γh))], γ·cor(h, D′_w) − γ²/2)`.
pub fn potential_drop_check(
    channel: &LabelChannel,
    big_h: &CombinedHypothesis,
    h: impl Fn(usize) -> f64,
    gamma: f64,
) -> (f64, f64) {
    let lhs = expect_over(channel, |x, y| {
        let z = y as f64 * big_h.score(x);
        potential(z) - potential(z + gamma * y as f64 * h(x))
    });
    let cor_w = expect_over(channel, |x, y| {
        conservative_weight(big_h.score(x), y) * y as f64 * h(x)
    });
    (lhs, gamma * cor_w - gamma * gamma / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `H ← H + α̃ h`.
    Add,
    /// `H ← (1 − β̃) H`.
    Scale,
    /// The weak learner failed; `H` is unchanged.
    Skip,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Add => "add",
            Branch::Scale => "scale",
            Branch::Skip => "skip",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoostStep {
    pub t: usize,
    pub mask: usize,
    pub sign: i8,
    /// Margins used for the branch decision (estimated in the quantum path).
    pub alpha_est: f64,
    pub beta_est: f64,
    /// Exact margins against the channel.
    pub alpha: f64,
    pub beta: f64,
    pub branch: Branch,
    /// Exact potential after the update.
    pub potential: f64,
    /// Exact correlation of `sign(H^t)`.
    pub cor: f64,
    pub train_error: f64,
    pub queries: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoostTrace {
    pub steps: Vec<BoostStep>,
}

impl BoostTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,mask,sign,alpha_est,beta_est,alpha,beta,branch,potential,cor,train_error,queries\n");
        for s in &self.steps {
            let _ = writeln!(
                out,
                "{},{},{},{:.9},{:.9},{:.9},{:.9},{},{:.9},{:.9},{:.9},{}",
                s.t,
                s.mask,
                s.sign,
                s.alpha_est,
                s.beta_est,
                s.alpha,
                s.beta,
                s.branch.name(),
                s.potential,
                s.cor,
                s.train_error,
                s.queries
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BoostOutcome {
    /// The iterate with the least training error (earliest on ties).
    pub hypothesis: CombinedHypothesis,
    pub best_t: usize,
    pub trace: BoostTrace,
}

impl BoostOutcome {
    pub fn correlation(&self, channel: &LabelChannel) -> f64 {
        channel.correlation(&self.hypothesis.to_function())
    }

    pub fn error(&self, channel: &LabelChannel) -> f64 {
        channel.error(&self.hypothesis.to_function())
    }
}

/// Default iteration budget `⌈9/(η²ε²)⌉`.
pub fn default_rounds(eta: f64, eps: f64) -> usize {
    (9.0 / (eta * eta * eps * eps)).ceil() as usize
}

/// `m = ⌈200 ln(1/δ)/(η²ε²)⌉`.
pub fn default_sample_size(eta: f64, eps: f64, delta: f64) -> u64 {
    (200.0 * (1.0 / delta).ln() / (eta * eta * eps * eps)).ceil() as u64
}

fn check_common(rounds: usize, eta: f64, eps: f64) -> Result<()> {
    ensure(rounds >= 1, "T", rounds as f64, "T >= 1")?;
    ensure(eta > 0.0 && eta <= 1.0, "eta", eta, "0 < eta <= 1")?;
    ensure(eps > 0.0 && eps < 1.0, "eps", eps, "0 < eps < 1")
}

/// Ties go to the additive branch: with `H = 0` and a constant weak hypothesis
/// equal to `−sign H` the two margins coincide and scaling would stall.
fn apply(big_h: &mut CombinedHypothesis, h: Hypothesis, alpha: f64, beta: f64) -> Branch {
    if alpha >= beta {
        big_h.add(alpha, h);
        Branch::Add
    } else {
        big_h.scale(1.0 - beta.clamp(0.0, 1.0));
        Branch::Scale
    }
}

/// Keeps the iterate of least training error.
struct Best {
    h: CombinedHypothesis,
    t: usize,
    err: f64,
}

impl Best {
    fn offer(&mut self, h: &CombinedHypothesis, t: usize, err: f64) {
        if err < self.err {
            self.h = h.clone();
            self.t = t;
            self.err = err;
        }
    }
}

/// Training data for the classical booster.
#[derive(Debug, Clone, Copy)]
pub enum TrainingSet<'a> {
    /// Exact expectations; relabeling is the exact relabeled channel.
    Channel(&'a LabelChannel),
    /// A fixed sample, relabeled stochastically each round.
    Samples(&'a SampleCounts),
}

/// The classical booster.
///
/// `channel` is only used for the exact diagnostics recorded in the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KkBoost {
    pub rounds: usize,
    pub eta: f64,
    pub eps: f64,
}

impl KkBoost {
    pub fn new(rounds: usize, eta: f64, eps: f64) -> Result<Self> {
        check_common(rounds, eta, eps)?;
        Ok(Self { rounds, eta, eps })
    }

    pub fn run(
        &self,
        learner: &dyn WeakLearner,
        channel: &LabelChannel,
        train: TrainingSet<'_>,
        rng: &mut StdRng,
        ledger: &mut QueryLedger,
    ) -> Result<BoostOutcome> {
        let n = channel.n();
        let mut big_h = CombinedHypothesis::zero(n)?;
        let train_error = |h: &CombinedHypothesis| match train {
            TrainingSet::Channel(c) => c.error(&h.to_function()),
            TrainingSet::Samples(s) => s.error_of(|x| h.predict(x)),
        };
        let mut best = Best {
            h: big_h.clone(),
            t: 0,
            err: f64::INFINITY,
        };
        let mut trace = BoostTrace::default();
        for t in 1..=self.rounds {
            let before = ledger.total();
            let w = big_h.weights();
            let learned = match train {
                TrainingSet::Channel(c) => {
                    let relabeled = c.relabel(&w)?;
                    learner.learn(ExampleSource::Channel(&relabeled), rng, ledger)
                }
                TrainingSet::Samples(s) => {
                    let relabeled = s.relabel(&w, rng);
                    learner.learn(ExampleSource::Samples(&relabeled), rng, ledger)
                }
            };
            let Ok(h) = learned else {
                trace.steps.push(skip_step(t, &big_h, channel, train_error(&big_h), ledger.total() - before));
                continue;
            };
            let (alpha_est, beta_est) = match train {
                TrainingSet::Channel(c) => exact_margins(c, &big_h, h),
                TrainingSet::Samples(s) => sample_margins(s, &big_h, h),
            };
            let (alpha, beta) = exact_margins(channel, &big_h, h);
            let branch = apply(&mut big_h, h, alpha_est, beta_est);
            let err = train_error(&big_h);
            best.offer(&big_h, t, err);
            trace.steps.push(BoostStep {
                t,
                mask: h.mask,
                sign: h.sign,
                alpha_est,
                beta_est,
                alpha,
                beta,
                branch,
                potential: big_h.potential_on(channel),
                cor: channel.correlation(&big_h.to_function()),
                train_error: err,
                queries: ledger.total() - before,
            });
            if err == 0.0 {
                break;
            }
        }
        Ok(BoostOutcome {
            hypothesis: best.h,
            best_t: best.t,
            trace,
        })
    }
}

fn skip_step(t: usize, big_h: &CombinedHypothesis, channel: &LabelChannel, err: f64, queries: u64) -> BoostStep {
    BoostStep {
        t,
        mask: 0,
        sign: 1,
        alpha_est: f64::NAN,
        beta_est: f64::NAN,
        alpha: f64::NAN,
        beta: f64::NAN,
        branch: Branch::Skip,
        potential: big_h.potential_on(channel),
        cor: channel.correlation(&big_h.to_function()),
        train_error: err,
        queries,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn kk_boost_classical(
    learner: &dyn WeakLearner,
    channel: &LabelChannel,
    train: TrainingSet<'_>,
    rounds: usize,
    eta: f64,
    eps: f64,
    rng: &mut StdRng,
    ledger: &mut QueryLedger,
) -> Result<BoostOutcome> {
    KkBoost::new(rounds, eta, eps)?.run(learner, channel, train, rng, ledger)
}

/// One estimated margin together with its exact and empirical values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginEstimate {
    pub exact: f64,
    pub empirical: f64,
    pub estimate: f64,
}

/// The quantum booster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumBoost {
    pub rounds: usize,
    pub eta: f64,
    pub eps: f64,
    pub delta: f64,
    /// Examples per margin estimate.
    pub m: u64,
    /// When false, margins are the exact channel values and nothing is charged.
    pub estimation_noise: bool,
    pub failure: FailureMode,
}

impl QuantumBoost {
    pub fn new(rounds: usize, eta: f64, eps: f64, delta: f64, m: u64) -> Result<Self> {
        check_common(rounds, eta, eps)?;
        ensure(delta > 0.0 && delta < 0.5, "delta", delta, "0 < delta < 1/2")?;
        ensure(m >= 1, "m", m as f64, "m >= 1")?;
        Ok(Self {
            rounds,
            eta,
            eps,
            delta,
            m,
            estimation_noise: true,
            failure: FailureMode::Uniform,
        })
    }

    pub fn without_estimation_noise(mut self) -> Self {
        self.estimation_noise = false;
        self
    }

    pub fn with_failure(mut self, failure: FailureMode) -> Self {
        self.failure = failure;
        self
    }

    /// Relative accuracy `ηε/20`, confidence `1 − 2^{−k}` with `k = ⌈log₂(1/δ)⌉`, floor `1/m`.
    pub fn estimator(&self) -> Result<RelativeEstimate> {
        let k = (1.0 / self.delta).log2().ceil().max(1.0) as u32;
        Ok(RelativeEstimate::new(self.eta * self.eps / 20.0, k, 1.0 / self.m as f64)?.with_failure(self.failure))
    }

    /// Estimates a signed margin `a ∈ [−1, 1]` by estimating `|a|` and restoring the sign.
    fn estimate_signed(
        est: &RelativeEstimate,
        a: f64,
        rng: &mut StdRng,
        ledger: &mut QueryLedger,
    ) -> Result<f64> {
        let r = est.run(a.abs().min(1.0), rng, ledger, "boost.margin")?;
        Ok(r.value.copysign(a))
    }

    /// Margins of `h` and `−sign H` from a fresh `m`-sample draw, passed through estimation.
    pub fn estimate_margins(
        &self,
        channel: &LabelChannel,
        big_h: &CombinedHypothesis,
        h: Hypothesis,
        rng: &mut StdRng,
        ledger: &mut QueryLedger,
    ) -> Result<(MarginEstimate, MarginEstimate)> {
        let (alpha, beta) = exact_margins(channel, big_h, h);
        if !self.estimation_noise {
            let a = MarginEstimate {
                exact: alpha,
                empirical: alpha,
                estimate: alpha,
            };
            let b = MarginEstimate {
                exact: beta,
                empirical: beta,
                estimate: beta,
            };
            return Ok((a, b));
        }
        let draw = SampleCounts::draw(channel, self.m, rng);
        let (alpha_s, beta_s) = sample_margins(&draw, big_h, h);
        let est = self.estimator()?;
        let a = MarginEstimate {
            exact: alpha,
            empirical: alpha_s,
            estimate: Self::estimate_signed(&est, alpha_s, rng, ledger)?,
        };
        let b = MarginEstimate {
            exact: beta,
            empirical: beta_s,
            estimate: Self::estimate_signed(&est, beta_s, rng, ledger)?,
        };
        Ok((a, b))
    }

    /// `learn_rng` feeds the weak learner, `est_rng` the sampling and estimation noise.
    pub fn run(
        &self,
        learner: &dyn WeakLearner,
        channel: &LabelChannel,
        learn_rng: &mut StdRng,
        est_rng: &mut StdRng,
        ledger: &mut QueryLedger,
    ) -> Result<BoostOutcome> {
        let n = channel.n();
        let train = SampleCounts::draw(channel, self.m, est_rng);
        ledger.charge("aex", self.m);
        let mut big_h = CombinedHypothesis::zero(n)?;
        let mut best = Best {
            h: big_h.clone(),
            t: 0,
            err: f64::INFINITY,
        };
        let mut trace = BoostTrace::default();
        for t in 1..=self.rounds {
            let before = ledger.total();
            let relabeled = channel.relabel(&big_h.weights())?;
            let Ok(h) = learner.learn(ExampleSource::Channel(&relabeled), learn_rng, ledger) else {
                let err = train.error_of(|x| big_h.predict(x));
                trace.steps.push(skip_step(t, &big_h, channel, err, ledger.total() - before));
                continue;
            };
            let (a, b) = self.estimate_margins(channel, &big_h, h, est_rng, ledger)?;
            let branch = apply(&mut big_h, h, a.estimate, b.estimate);
            let err = train.error_of(|x| big_h.predict(x));
            best.offer(&big_h, t, err);
            trace.steps.push(BoostStep {
                t,
                mask: h.mask,
                sign: h.sign,
                alpha_est: a.estimate,
                beta_est: b.estimate,
                alpha: a.exact,
                beta: b.exact,
                branch,
                potential: big_h.potential_on(channel),
                cor: channel.correlation(&big_h.to_function()),
                train_error: err,
                queries: ledger.total() - before,
            });
            if err == 0.0 {
                break;
            }
        }
        Ok(BoostOutcome {
            hypothesis: best.h,
            best_t: best.t,
            trace,
        })
    }
}

#[allow(clippy::too_many_arguments)]
pub fn quantum_agnostic_boost(
    learner: &dyn WeakLearner,
    channel: &LabelChannel,
    m: u64,
    rounds: usize,
    eta: f64,
    eps: f64,
    delta: f64,
    rng: &mut StdRng,
    ledger: &mut QueryLedger,
) -> Result<BoostOutcome> {
    let mut est_rng = rng.clone();
    est_rng.set_stream(rng.get_stream().wrapping_add(1 << 32));
    QuantumBoost::new(rounds, eta, eps, delta, m)?.run(learner, channel, rng, &mut est_rng, ledger)
}
