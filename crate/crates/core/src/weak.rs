//! Parity weak learners: the agnostic learner built on a biased oracle and
//! interval search, Fourier sampling for the noiseless case, and a
//! majority-vote wrapper for random classification noise.

use crate::boolean::{parity_eval, wht, wht_real, BooleanFunction};
use crate::channel::{make_realizable, LabelChannel, SampleCounts};
use crate::error::{ensure, Error, Result};
use crate::gl::{igl, StronglyBiasedOracle};
use crate::quantum::{FailureMode, Mae, QueryLedger, MAE_SUCCESS};
use crate::rng::Rng as StdRng;
use crate::stats::{majority_success, odd_ceil};
use rand::Rng;
use std::collections::HashMap;

/// A signed parity `sign · χ_mask`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Hypothesis {
    pub mask: usize,
    pub sign: i8,
}

impl Hypothesis {
    #[inline]
    pub fn eval(&self, x: usize) -> i8 {
        self.sign * parity_eval(self.mask, x)
    }

    pub fn to_function(&self, n: usize) -> BooleanFunction {
        BooleanFunction::from_fn(n, |x| self.eval(x)).expect("n validated by caller")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakLearnerResult {
    pub mask: usize,
    pub sign: i8,
    /// Exact correlation of `sign · χ_mask` with the channel.
    pub achieved_cor: f64,
    pub queries: u64,
}

impl WeakLearnerResult {
    pub fn hypothesis(&self) -> Hypothesis {
        Hypothesis {
            mask: self.mask,
            sign: self.sign,
        }
    }
}

/// The biased oracle `O_h` together with what one invocation costs.
#[derive(Debug, Clone)]
pub struct OhOracle {
    pub oracle: StronglyBiasedOracle,
    /// Majority copies per invocation.
    pub ell: usize,
    /// Example-oracle queries per invocation.
    pub invocation_cost: u64,
}

/// Builds `O_h` for the Bayes predictor of `channel`.
///
/// Each of `ℓ = odd⌈6 ln(1/γ)⌉` copies estimates `Pr[y=+1|x]` to `±eps_mae`
/// and votes `+1` when the estimate is at least ½. The per-input bias is the
/// exact probability that the majority vote disagrees with the Bayes label.
pub fn build_oh(
    channel: &LabelChannel,
    gamma_target: f64,
    eps_mae: f64,
    ledger: &mut QueryLedger,
) -> Result<OhOracle> {
    ensure(
        gamma_target > 0.0 && gamma_target <= eps_mae * eps_mae / 8.0,
        "gamma",
        gamma_target,
        "0 < gamma <= eps^2/8",
    )?;
    let mae = Mae::new(eps_mae)?;
    let ell = odd_ceil(6.0 * (1.0 / gamma_target).ln());
    let h = channel.bayes_predictor();
    let bias = channel
        .p1()
        .iter()
        .enumerate()
        .map(|(x, &p)| {
            let lo = (p - eps_mae).max(0.0);
            let hi = (p + eps_mae).min(1.0);
            let above = if hi <= lo {
                (p >= 0.5) as u8 as f64
            } else {
                ((hi - lo.max(0.5)) / (hi - lo)).clamp(0.0, 1.0)
            };
            let q = MAE_SUCCESS * above + (1.0 - MAE_SUCCESS) * 0.5;
            let plus_wins = majority_success(ell as u64, q);
            if h.value(x) > 0 {
                1.0 - plus_wins
            } else {
                plus_wins
            }
        })
        .collect();
    let invocation_cost = ell as u64 * mae.cost();
    ledger.charge("oh.mae", invocation_cost);
    Ok(OhOracle {
        oracle: StronglyBiasedOracle::new(h, bias)?,
        ell,
        invocation_cost,
    })
}

/// Settings of the agnostic parity learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgnosticParity {
    pub t: usize,
    pub kappa: f64,
    pub delta: f64,
    pub failure: FailureMode,
}

impl AgnosticParity {
    pub fn new(t: usize, kappa: f64, delta: f64) -> Result<Self> {
        ensure(t >= 1, "t", t as f64, "t >= 1")?;
        ensure(kappa > 0.0 && kappa < 0.5, "kappa", kappa, "0 < kappa < 1/2")?;
        ensure(delta > 0.0 && delta < 0.5, "delta", delta, "0 < delta < 1/2")?;
        Ok(Self {
            t,
            kappa,
            delta,
            failure: FailureMode::Uniform,
        })
    }

    pub fn with_failure(mut self, failure: FailureMode) -> Self {
        self.failure = failure;
        self
    }

    /// `γ = min{δ/(4nt²), κ²/8}`.
    pub fn gamma(&self, n: usize) -> f64 {
        let t2 = (self.t * self.t) as f64;
        (self.delta / (4.0 * n as f64 * t2)).min(self.kappa * self.kappa / 8.0)
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        channel: &LabelChannel,
        rng: &mut R,
        ledger: &mut QueryLedger,
    ) -> Result<WeakLearnerResult> {
        let start = ledger.total();
        let n = channel.n();
        let oh = build_oh(channel, self.gamma(n), self.kappa, ledger)?;
        let floor = 1.0 / (self.t * self.t) as f64;
        let mut sub = QueryLedger::new();
        let found = igl(&oh.oracle, self.kappa, self.delta, floor, self.failure, rng, &mut sub)?;
        ledger.merge_scaled(&sub, oh.invocation_cost);
        let mask = found.mask.unwrap_or(0);

        // Orientation: Pr[y χ_S(x) = +1] = (1 + cor)/2, estimated to ±κ/4.
        let cor = channel.correlation_with(|x| parity_eval(mask, x) as f64);
        let agree = ((1.0 + cor) / 2.0).clamp(0.0, 1.0);
        let ell = odd_ceil(6.0 * (1.0 / self.delta).ln());
        let mae = Mae::new(self.kappa / 4.0)?.with_failure(self.failure);
        ledger.charge("weak.sign", ell as u64 * mae.cost());
        let sign = if mae.median_sample(agree, ell, rng) >= 0.5 { 1 } else { -1 };

        Ok(WeakLearnerResult {
            mask,
            sign,
            achieved_cor: sign as f64 * cor,
            queries: ledger.total() - start,
        })
    }
}

pub fn weak_agnostic_parity<R: Rng + ?Sized>(
    channel: &LabelChannel,
    t: usize,
    kappa: f64,
    delta: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<WeakLearnerResult> {
    AgnosticParity::new(t, kappa, delta)?.run(channel, rng, ledger)
}

/// Draws masks with probability `ĥ(S)²`.
#[derive(Debug, Clone)]
pub struct FourierSampler {
    cumulative: Vec<f64>,
}

impl FourierSampler {
    pub fn new(f: &BooleanFunction) -> Self {
        Self::from_coeffs(wht(f).coeffs())
    }

    fn from_coeffs(coeffs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cumulative = coeffs
            .iter()
            .map(|c| {
                acc += c * c;
                acc
            })
            .collect();
        Self { cumulative }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, ledger: &mut QueryLedger) -> usize {
        ledger.charge("qex", 1);
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.cumulative.len() - 1)
    }
}

pub fn fourier_sample<R: Rng + ?Sized>(f: &BooleanFunction, rng: &mut R, ledger: &mut QueryLedger) -> usize {
    FourierSampler::new(f).sample(rng, ledger)
}

/// Most frequent value, ties to the smallest.
fn mode(samples: &[usize]) -> usize {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &s in samples {
        *counts.entry(s).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(s, _)| s)
        .unwrap_or(0)
}

fn sign_from_examples<R: Rng + ?Sized>(
    channel: &LabelChannel,
    mask: usize,
    count: usize,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> i8 {
    let mut sum = 0i64;
    for _ in 0..count {
        let (x, y) = channel.sample_aex(rng, Some(ledger));
        sum += (y * parity_eval(mask, x)) as i64;
    }
    if sum >= 0 {
        1
    } else {
        -1
    }
}

/// Mode of `⌈1/ε²⌉` Fourier samples, oriented with `⌈1/ε²⌉` examples.
pub fn realizable_weak_parity<R: Rng + ?Sized>(
    f: &BooleanFunction,
    eps: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<WeakLearnerResult> {
    ensure(eps > 0.0 && eps < 1.0, "eps", eps, "0 < eps < 1")?;
    let start = ledger.total();
    let count = (1.0 / (eps * eps)).ceil() as usize;
    let sampler = FourierSampler::new(f);
    let samples: Vec<usize> = (0..count).map(|_| sampler.sample(rng, ledger)).collect();
    let mask = mode(&samples);
    let channel = make_realizable(f);
    let sign = sign_from_examples(&channel, mask, count, rng, ledger);
    let cor = channel.correlation_with(|x| parity_eval(mask, x) as f64);
    Ok(WeakLearnerResult {
        mask,
        sign,
        achieved_cor: sign as f64 * cor,
        queries: ledger.total() - start,
    })
}

/// A label oracle under random classification noise, cleaned by a
/// `k`-way majority of independent queries.
#[derive(Debug, Clone)]
pub struct RcnMajorityOracle {
    f: BooleanFunction,
    p: f64,
    k: usize,
}

impl RcnMajorityOracle {
    /// `k = ⌈ln(1/δ) / (2(½ − p)²)⌉`, rounded up to odd.
    pub fn new(f: BooleanFunction, p: f64, delta: f64) -> Result<Self> {
        ensure((0.0..0.5).contains(&p), "p", p, "0 <= p < 1/2")?;
        ensure(delta > 0.0 && delta < 1.0, "delta", delta, "0 < delta < 1")?;
        let k = odd_ceil((1.0 / delta).ln() / (2.0 * (0.5 - p).powi(2)));
        Ok(Self { f, p, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.f.n()
    }

    /// Exact probability that a dereferenced label is wrong.
    pub fn label_error(&self) -> f64 {
        1.0 - majority_success(self.k as u64, 1.0 - self.p)
    }

    /// Majority of `k` noisy labels for `x`.
    pub fn query<R: Rng + ?Sized>(&self, x: usize, rng: &mut R, ledger: &mut QueryLedger) -> i8 {
        ledger.charge("rcn.query", self.k as u64);
        let right = crate::channel::binomial(self.k as u64, 1.0 - self.p, rng);
        if right as usize > self.k / 2 {
            self.f.value(x)
        } else {
            -self.f.value(x)
        }
    }

    /// One Fourier sample of a fresh realization of the cleaned labels.
    pub fn fourier_sample<R: Rng + ?Sized>(&self, rng: &mut R, ledger: &mut QueryLedger) -> usize {
        ledger.charge("rcn.query", self.k as u64);
        let err = self.label_error();
        let g: Vec<f64> = self
            .f
            .values()
            .iter()
            .map(|&v| if rng.random::<f64>() < err { -v as f64 } else { v as f64 })
            .collect();
        let sampler = FourierSampler::from_coeffs(&wht_real(&g));
        let mut scratch = QueryLedger::new();
        sampler.sample(rng, &mut scratch)
    }
}

/// Fourier-sampling weak learner run through the RCN majority wrapper.
pub fn rcn_weak_parity<R: Rng + ?Sized>(
    oracle: &RcnMajorityOracle,
    eps: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<WeakLearnerResult> {
    ensure(eps > 0.0 && eps < 1.0, "eps", eps, "0 < eps < 1")?;
    let start = ledger.total();
    let count = (1.0 / (eps * eps)).ceil() as usize;
    let samples: Vec<usize> = (0..count).map(|_| oracle.fourier_sample(rng, ledger)).collect();
    let mask = mode(&samples);
    let len = oracle.f.len();
    let mut sum = 0i64;
    for _ in 0..count {
        let x = rng.random_range(0..len);
        sum += (oracle.query(x, rng, ledger) * parity_eval(mask, x)) as i64;
    }
    let sign = if sum >= 0 { 1 } else { -1 };
    let cor = make_realizable(&oracle.f).correlation_with(|x| parity_eval(mask, x) as f64);
    Ok(WeakLearnerResult {
        mask,
        sign,
        achieved_cor: sign as f64 * cor,
        queries: ledger.total() - start,
    })
}

/// Where a weak learner draws its examples from.
#[derive(Debug, Clone, Copy)]
pub enum ExampleSource<'a> {
    Channel(&'a LabelChannel),
    Samples(&'a SampleCounts),
}

impl ExampleSource<'_> {
    pub fn n(&self) -> usize {
        match self {
            ExampleSource::Channel(c) => c.n(),
            ExampleSource::Samples(s) => s.n(),
        }
    }
}

pub trait WeakLearner {
    fn learn(
        &self,
        source: ExampleSource<'_>,
        rng: &mut StdRng,
        ledger: &mut QueryLedger,
    ) -> Result<Hypothesis>;
}

/// Returns the signed parity of largest exact (or empirical) correlation.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactParityLearner;

impl WeakLearner for ExactParityLearner {
    fn learn(
        &self,
        source: ExampleSource<'_>,
        _rng: &mut StdRng,
        _ledger: &mut QueryLedger,
    ) -> Result<Hypothesis> {
        let cors = match source {
            ExampleSource::Channel(c) => c.parity_correlations(),
            // Σ_x χ_S(x) (pos − neg)/m is the transform of the label sums.
            ExampleSource::Samples(s) => {
                let mut v = wht_real(&s.label_sums());
                let len = v.len() as f64;
                v.iter_mut().for_each(|c| *c *= len);
                v
            }
        };
        let mut best = (0, cors[0]);
        for (s, &c) in cors.iter().enumerate().skip(1) {
            if c.abs() > best.1.abs() {
                best = (s, c);
            }
        }
        Ok(Hypothesis {
            mask: best.0,
            sign: if best.1 >= 0.0 { 1 } else { -1 },
        })
    }
}

impl WeakLearner for AgnosticParity {
    fn learn(
        &self,
        source: ExampleSource<'_>,
        rng: &mut StdRng,
        ledger: &mut QueryLedger,
    ) -> Result<Hypothesis> {
        match source {
            ExampleSource::Channel(c) => Ok(self.run(c, rng, ledger)?.hypothesis()),
            ExampleSource::Samples(_) => Err(Error::Unsupported(
                "the agnostic parity learner needs a quantum example oracle".into(),
            )),
        }
    }
}
