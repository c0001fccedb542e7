//! Contract-level stand-ins for amplitude amplification, relative-error
//! amplitude estimation and multidistribution amplitude estimation.
//!
//! Each emulator knows the true quantity, returns a value distributed as the
//! corresponding guarantee permits, and charges its stated cost (constant 1,
//! ceilings) to a [`QueryLedger`].

use crate::error::{ensure, Error, Result};
use rand::Rng;
use rand_distr::{Beta, Distribution};
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

/// Per-copy success probability of multidistribution amplitude estimation.
pub const MAE_SUCCESS: f64 = 8.0 / (PI * PI);

/// Default residual failure probability of amplitude amplification.
pub const AMPLIFY_RESIDUAL: f64 = 1.0 / 128.0;

/// Oracle invocations, partitioned by subroutine tag.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct QueryLedger {
    counters: BTreeMap<String, u64>,
    total: u64,
}

impl QueryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn charge(&mut self, tag: &str, count: u64) {
        *self.counters.entry(tag.to_owned()).or_insert(0) += count;
        self.total += count;
    }

    pub fn get(&self, tag: &str) -> u64 {
        self.counters.get(tag).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn snapshot(&self) -> BTreeMap<String, u64> {
        self.counters.clone()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counters.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// Adds every counter of `other`, multiplied by `factor`.
    ///
    /// Used when each query of a subroutine costs `factor` queries of the
    /// underlying oracle.
    pub fn merge_scaled(&mut self, other: &QueryLedger, factor: u64) {
        for (tag, count) in other.iter() {
            self.charge(tag, count.saturating_mul(factor));
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("tag,count\n");
        for (tag, count) in self.iter() {
            let _ = writeln!(out, "{tag},{count}");
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Relative,
    Additive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub value: f64,
    pub error_kind: ErrorKind,
    pub error_bound: f64,
    pub confidence: f64,
    pub queries_charged: u64,
    /// Whether the emulated run landed in its guaranteed band.
    pub in_band: bool,
}

/// What an estimator returns when it fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailureMode {
    /// Uniform on [0, 1].
    #[default]
    Uniform,
    /// The endpoint of [0, 1] farthest from the true value.
    Adversarial,
}

impl FailureMode {
    fn draw<R: Rng + ?Sized>(self, truth: f64, rng: &mut R) -> f64 {
        match self {
            FailureMode::Uniform => rng.random::<f64>(),
            FailureMode::Adversarial => adversarial_endpoint(truth),
        }
    }
}

fn adversarial_endpoint(truth: f64) -> f64 {
    if truth < 0.5 {
        1.0
    } else {
        0.0
    }
}

fn uniform_in<R: Rng + ?Sized>(lo: f64, hi: f64, rng: &mut R) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        lo
    }
}

/// Relative-error amplitude estimation with confidence `1 − 2^{-k}` above a floor `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeEstimate {
    pub eps: f64,
    pub k: u32,
    pub floor: f64,
    pub failure: FailureMode,
}

impl RelativeEstimate {
    pub fn new(eps: f64, k: u32, floor: f64) -> Result<Self> {
        ensure(eps > 0.0 && eps < 1.0, "eps", eps, "0 < eps < 1")?;
        ensure(k >= 1, "k", k as f64, "k >= 1")?;
        ensure(floor > 0.0 && floor <= 1.0, "p", floor, "0 < p <= 1")?;
        Ok(Self {
            eps,
            k,
            floor,
            failure: FailureMode::Uniform,
        })
    }

    pub fn with_failure(mut self, failure: FailureMode) -> Self {
        self.failure = failure;
        self
    }

    /// `⌈k/(ε√p) · max(1, 1 + ln ln(1/p))⌉`.
    pub fn cost(&self) -> u64 {
        let p = self.floor;
        let loglog = 1.0 + (1.0 / p).ln().ln();
        let factor = if loglog.is_finite() { loglog.max(1.0) } else { 1.0 };
        (self.k as f64 / (self.eps * p.sqrt()) * factor).ceil() as u64
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        a: f64,
        rng: &mut R,
        ledger: &mut QueryLedger,
        tag: &str,
    ) -> Result<EstimateReport> {
        ensure((0.0..=1.0).contains(&a), "a", a, "0 <= a <= 1")?;
        let cost = self.cost();
        ledger.charge(tag, cost);
        let confidence = 1.0 - 0.5f64.powi(self.k as i32);
        let success = rng.random::<f64>() < confidence;
        let value = if a == 0.0 {
            0.0
        } else if success {
            uniform_in(a * (1.0 - self.eps), (a * (1.0 + self.eps)).min(1.0), rng)
        } else {
            self.failure.draw(a, rng)
        };
        Ok(EstimateReport {
            value,
            error_kind: ErrorKind::Relative,
            error_bound: self.eps * a,
            confidence,
            queries_charged: cost,
            in_band: (value - a).abs() <= self.eps * a + 1e-15,
        })
    }
}

/// Relative-error estimate with uniform failures, charged under `relative_estimate`.
pub fn emulate_relative_estimate<R: Rng + ?Sized>(
    a: f64,
    eps: f64,
    k: u32,
    p: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<EstimateReport> {
    RelativeEstimate::new(eps, k, p)?.run(a, rng, ledger, "relative_estimate")
}

/// Additive-error estimates of many amplitudes at once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mae {
    pub eps: f64,
    pub failure: FailureMode,
}

impl Mae {
    pub fn new(eps: f64) -> Result<Self> {
        ensure(eps > 0.0 && eps <= 1.0, "eps", eps, "0 < eps <= 1")?;
        Ok(Self {
            eps,
            failure: FailureMode::Uniform,
        })
    }

    pub fn with_failure(mut self, failure: FailureMode) -> Self {
        self.failure = failure;
        self
    }

    /// `⌈1/ε⌉`, paid once for all inputs.
    pub fn cost(&self) -> u64 {
        (1.0 / self.eps).ceil() as u64
    }

    fn band(&self, alpha: f64) -> (f64, f64) {
        ((alpha - self.eps).max(0.0), (alpha + self.eps).min(1.0))
    }

    /// One copy's estimate of `alpha`.
    pub fn sample<R: Rng + ?Sized>(&self, alpha: f64, rng: &mut R) -> f64 {
        if rng.random::<f64>() < MAE_SUCCESS {
            let (lo, hi) = self.band(alpha);
            uniform_in(lo, hi, rng)
        } else {
            self.failure.draw(alpha, rng)
        }
    }

    /// Distribution function of one copy's estimate.
    pub fn cdf(&self, alpha: f64, v: f64) -> f64 {
        let (lo, hi) = self.band(alpha);
        let band = if v < lo {
            0.0
        } else if v >= hi {
            1.0
        } else {
            (v - lo) / (hi - lo)
        };
        let fail = match self.failure {
            FailureMode::Uniform => v.clamp(0.0, 1.0),
            FailureMode::Adversarial => {
                if v >= adversarial_endpoint(alpha) {
                    1.0
                } else {
                    0.0
                }
            }
        };
        MAE_SUCCESS * band + (1.0 - MAE_SUCCESS) * fail
    }

    /// Median of `ell` independent copies, drawn in O(1) through the order
    /// statistic `U_{((ℓ+1)/2)} ~ Beta((ℓ+1)/2, (ℓ+1)/2)` and the inverse CDF.
    pub fn median_sample<R: Rng + ?Sized>(&self, alpha: f64, ell: usize, rng: &mut R) -> f64 {
        debug_assert!(ell % 2 == 1);
        if ell == 1 {
            return self.sample(alpha, rng);
        }
        let k = (ell + 1) as f64 / 2.0;
        let u = Beta::new(k, k).expect("positive shape").sample(rng);
        self.quantile(alpha, u)
    }

    /// Smallest `v` in [0, 1] with `cdf(v) ≥ u`.
    pub fn quantile(&self, alpha: f64, u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        if self.cdf(alpha, 0.0) >= u {
            return 0.0;
        }
        for _ in 0..64 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(alpha, mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Independent per-input estimates; one charge for the whole batch.
    pub fn run<R: Rng + ?Sized>(
        &self,
        values: &[f64],
        rng: &mut R,
        ledger: &mut QueryLedger,
        tag: &str,
    ) -> Result<Vec<f64>> {
        if let Some(&bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Param {
                name: "alpha",
                value: bad,
                expected: "0 <= alpha <= 1",
            });
        }
        ledger.charge(tag, self.cost());
        Ok(values.iter().map(|&a| self.sample(a, rng)).collect())
    }
}

/// Per-input additive estimates with uniform failures, charged under `mae`.
pub fn emulate_mae<R: Rng + ?Sized>(
    values: &[f64],
    eps: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<Vec<f64>> {
    Mae::new(eps)?.run(values, rng, ledger, "mae")
}

/// Whether a majority of `ell` independent trials succeed.
pub fn majority_boost<R: Rng + ?Sized>(per_trial_success: f64, ell: usize, rng: &mut R) -> Result<bool> {
    if ell.is_multiple_of(2) {
        return Err(Error::Param {
            name: "ell",
            value: ell as f64,
            expected: "odd number of copies",
        });
    }
    ensure(
        (0.0..=1.0).contains(&per_trial_success),
        "per_trial_success",
        per_trial_success,
        "0 <= p <= 1",
    )?;
    let wins = crate::channel::binomial(ell as u64, per_trial_success, rng);
    Ok(wins as usize > ell / 2)
}

/// Amplitude amplification towards a good subspace of weight `p_good`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplification {
    /// Smallest good-state probability the schedule is tuned for.
    pub floor: f64,
    /// Success probability reached whenever `p_good ≥ floor`.
    pub target: f64,
}

impl Amplification {
    pub fn new(floor: f64) -> Result<Self> {
        ensure(floor > 0.0 && floor <= 1.0, "floor", floor, "0 < floor <= 1")?;
        Ok(Self {
            floor,
            target: 1.0 - AMPLIFY_RESIDUAL,
        })
    }

    pub fn with_target(mut self, target: f64) -> Result<Self> {
        ensure(target > 0.0 && target <= 1.0, "p_target", target, "0 < p_target <= 1")?;
        self.target = target;
        Ok(self)
    }

    /// Number of oracle rounds charged for a given `p_good`.
    pub fn rounds(&self, p_good: f64) -> u64 {
        let p = if p_good >= self.floor { p_good } else { self.floor };
        (1.0 / p).sqrt().ceil() as u64
    }

    /// Returns whether a good state was produced. Each round costs `unit_cost`.
    pub fn run<R: Rng + ?Sized>(
        &self,
        p_good: f64,
        unit_cost: u64,
        rng: &mut R,
        ledger: &mut QueryLedger,
        tag: &str,
    ) -> Result<bool> {
        ensure((0.0..=1.0).contains(&p_good), "p_good", p_good, "0 <= p_good <= 1")?;
        ledger.charge(tag, self.rounds(p_good) * unit_cost);
        if p_good == 0.0 {
            return Ok(false);
        }
        let success = if p_good >= 1.0 {
            1.0
        } else if p_good >= self.floor {
            self.target
        } else {
            self.target * p_good / self.floor
        };
        Ok(rng.random::<f64>() < success)
    }
}

/// Amplification with unit-cost rounds, charged under `amplify`.
pub fn emulate_amplification<R: Rng + ?Sized>(
    p_good: f64,
    p_target: f64,
    floor: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<bool> {
    Amplification::new(floor)?
        .with_target(p_target)?
        .run(p_good, 1, rng, ledger, "amplify")
}
