//! Goldreich–Levin prefix search over strongly biased oracles.
//!
//! The swap-test statistic of a prefix `p` is `σ² = ½ + ½ W(p)`, where `W` is
//! the pair-sample overlap with a shared suffix. Expanding the four
//! good/bad branches of each oracle call, the per-pair bracket factors as
//! `h(x) h(z) (1 − 2b_x)(1 − 2b_z)`, so `W(p)` is the prefix weight of
//! `h̃ = h · (1 − 2 bias)`. With no bias this is exactly `PW_h(p)`.

use crate::boolean::{wht_real, BooleanFunction, Prefix, PrefixWeights};
use crate::error::{ensure, Error, Result};
use crate::quantum::{Amplification, ErrorKind, EstimateReport, FailureMode, Mae, QueryLedger};
use crate::stats::odd_ceil;
use rand::Rng;
use std::fmt::Write as _;

/// An oracle for `h` that returns the wrong label on input `x` with
/// probability `bias[x]`.
#[derive(Debug, Clone)]
pub struct StronglyBiasedOracle {
    h: BooleanFunction,
    bias: Vec<f64>,
    gamma: f64,
    overlap: PrefixWeights,
}

impl StronglyBiasedOracle {
    pub fn new(h: BooleanFunction, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != h.len() {
            return Err(Error::TableLength {
                got: bias.len(),
                expected: h.len(),
            });
        }
        if let Some(&bad) = bias.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::Param {
                name: "bias",
                value: bad,
                expected: "0 <= bias <= 1",
            });
        }
        let gamma = bias.iter().copied().fold(0.0, f64::max);
        let tilted: Vec<f64> = h
            .values()
            .iter()
            .zip(&bias)
            .map(|(&v, &b)| v as f64 * (1.0 - 2.0 * b))
            .collect();
        let overlap = PrefixWeights::from_coeffs(h.n(), &wht_real(&tilted));
        Ok(Self {
            h,
            bias,
            gamma,
            overlap,
        })
    }

    pub fn clean(h: BooleanFunction) -> Self {
        let len = h.len();
        Self::new(h, vec![0.0; len]).expect("zero bias is valid")
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn h(&self) -> &BooleanFunction {
        &self.h
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Largest per-input wrong-label probability.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Exact swap-test overlap `W(p)`.
    pub fn overlap(&self, p: Prefix) -> f64 {
        self.overlap.weight(p)
    }
}

/// Exact ground truth `W(p)` of the swap-test observable.
pub fn biased_overlap(oracle: &StronglyBiasedOracle, p: Prefix) -> Result<f64> {
    if p.len() > oracle.n() {
        return Err(Error::Param {
            name: "prefix length",
            value: p.len() as f64,
            expected: "<= n",
        });
    }
    Ok(oracle.overlap(p))
}

/// Median-of-`ℓ` estimator of `σ²(p)` at additive accuracy `ε/8`, so that the
/// implied overlap `2σ̃² − 1` is within `ε/4` of `W(p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PwEstimator {
    pub eps: f64,
    pub delta_prime: f64,
    pub ell: usize,
    mae: Mae,
}

impl PwEstimator {
    pub fn new(eps: f64, delta_prime: f64) -> Result<Self> {
        ensure(eps > 0.0 && eps < 1.0, "eps", eps, "0 < eps < 1")?;
        ensure(
            delta_prime > 0.0 && delta_prime < 0.5,
            "delta'",
            delta_prime,
            "0 < delta' < 1/2",
        )?;
        Ok(Self {
            eps,
            delta_prime,
            ell: odd_ceil(6.0 * (1.0 / delta_prime).ln()),
            mae: Mae::new(eps / 8.0)?,
        })
    }

    pub fn with_failure(mut self, failure: FailureMode) -> Self {
        self.mae = self.mae.with_failure(failure);
        self
    }

    /// `ℓ · ⌈8/ε⌉`; paid once per batch of prefixes estimated together.
    pub fn cost(&self) -> u64 {
        self.ell as u64 * self.mae.cost()
    }

    /// An estimate of `σ²(p)`, not charged.
    pub fn sample<R: Rng + ?Sized>(&self, oracle: &StronglyBiasedOracle, p: Prefix, rng: &mut R) -> f64 {
        let sigma_sq = 0.5 + 0.5 * oracle.overlap(p);
        self.mae.median_sample(sigma_sq.clamp(0.0, 1.0), self.ell, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwEstimate {
    /// Estimate of `σ² = ½ + ½ W`.
    pub sigma_sq: f64,
    /// Implied estimate `2σ̃² − 1` of the prefix weight.
    pub pw: f64,
    pub report: EstimateReport,
}

/// Estimates `σ²(p)` for one prefix and charges `qgl.estimate`.
pub fn estimate_pw<R: Rng + ?Sized>(
    oracle: &StronglyBiasedOracle,
    p: Prefix,
    eps: f64,
    delta_prime: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<PwEstimate> {
    let est = PwEstimator::new(eps, delta_prime)?;
    let cost = est.cost();
    ledger.charge("qgl.estimate", cost);
    let sigma_sq = est.sample(oracle, p, rng);
    Ok(PwEstimate {
        sigma_sq,
        pw: 2.0 * sigma_sq - 1.0,
        report: EstimateReport {
            value: sigma_sq,
            error_kind: ErrorKind::Additive,
            error_bound: eps / 8.0,
            confidence: 1.0 - delta_prime,
            queries_charged: cost,
            in_band: ((0.5 + 0.5 * oracle.overlap(p)) - sigma_sq).abs() <= eps / 8.0 + 1e-12,
        },
    })
}

/// One level of the search, recorded when tracing is on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelTrace {
    pub level: usize,
    pub live: usize,
    pub marked: usize,
    pub queries: u64,
    pub amplified: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlOutcome {
    pub found: bool,
    pub mask: Option<usize>,
    pub queries: u64,
    pub trace: Vec<LevelTrace>,
}

impl GlOutcome {
    pub fn l(&self) -> u8 {
        self.found as u8
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("level,live,marked,queries,amplified\n");
        for t in &self.trace {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                t.level, t.live, t.marked, t.queries, t.amplified as u8
            );
        }
        out
    }
}

/// Level-by-level prefix search for a parity of prefix weight at least `τ`.
///
/// On success every surviving leaf has `PW ≥ τ − ε` and on failure no parity
/// has `PW ≥ τ`, each with probability at least `1 − δ` when the oracle bias
/// is at most `ε/16`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qgl {
    pub tau: f64,
    pub eps: f64,
    pub delta: f64,
    pub max_restarts: usize,
    pub amplify_target: f64,
    pub failure: FailureMode,
    pub trace: bool,
}

impl Qgl {
    pub fn new(tau: f64, eps: f64, delta: f64) -> Result<Self> {
        ensure(tau > 0.0 && tau <= 1.0, "tau", tau, "0 < tau <= 1")?;
        ensure(eps > 0.0 && eps < tau, "eps", eps, "0 < eps < tau")?;
        ensure(delta > 0.0 && delta < 1.0, "delta", delta, "0 < delta < 1")?;
        Ok(Self {
            tau,
            eps,
            delta,
            max_restarts: 3,
            amplify_target: 1.0 - crate::quantum::AMPLIFY_RESIDUAL,
            failure: FailureMode::Uniform,
            trace: false,
        })
    }

    pub fn with_trace(mut self, trace: bool) -> Self {
        self.trace = trace;
        self
    }

    pub fn with_failure(mut self, failure: FailureMode) -> Self {
        self.failure = failure;
        self
    }

    /// First level with at least `1/τ²` nodes.
    pub fn first_level(&self) -> usize {
        (1.0 / (self.tau * self.tau)).log2().ceil().max(0.0) as usize
    }

    pub fn delta_prime(&self, n: usize) -> f64 {
        (self.delta * self.tau * self.tau / (8.0 * n as f64)).min(0.49)
    }

    /// Marking threshold on the implied prefix weight.
    pub fn mark_threshold(&self) -> f64 {
        self.tau - self.eps / 2.0
    }

    pub fn run<R: Rng + ?Sized>(
        &self,
        oracle: &StronglyBiasedOracle,
        rng: &mut R,
        ledger: &mut QueryLedger,
    ) -> Result<GlOutcome> {
        let n = oracle.n();
        let estimator = PwEstimator::new(self.eps, self.delta_prime(n))?.with_failure(self.failure);
        let unit = estimator.cost();
        // σ̃² ≥ ½ + ½(τ − ε/2)  ⇔  2σ̃² − 1 ≥ τ − ε/2.
        let sigma_cut = 0.5 + 0.5 * self.mark_threshold();
        let start_total = ledger.total();
        let start = self.first_level().min(n - 1);
        let mut live: Vec<Prefix> = (0..1usize << start)
            .map(|b| Prefix::new(b, start).expect("b < 2^start"))
            .collect();
        let mut trace = Vec::new();
        let mut restarts = 0;

        let mut level = start + 1;
        while level <= n {
            let children: Vec<Prefix> = live
                .iter()
                .flat_map(|p| [p.child(false), p.child(true)])
                .collect();
            ledger.charge("qgl.estimate", unit);
            let marked: Vec<Prefix> = children
                .iter()
                .copied()
                .filter(|&c| estimator.sample(oracle, c, rng) >= sigma_cut)
                .collect();
            let p_good = marked.len() as f64 / children.len() as f64;
            let amp = Amplification::new(1.0 / children.len() as f64)?.with_target(self.amplify_target)?;
            let ok = amp.run(p_good, unit, rng, ledger, "qgl.amplify")?;
            if self.trace {
                trace.push(LevelTrace {
                    level,
                    live: live.len(),
                    marked: marked.len(),
                    queries: ledger.total() - start_total,
                    amplified: ok,
                });
            }
            if ok {
                live = marked;
                level += 1;
                continue;
            }
            if level == n || restarts >= self.max_restarts {
                return Ok(GlOutcome {
                    found: false,
                    mask: None,
                    queries: ledger.total() - start_total,
                    trace,
                });
            }
            restarts += 1;
        }

        let pick = live[rng.random_range(0..live.len())];
        Ok(GlOutcome {
            found: true,
            mask: Some(pick.bits()),
            queries: ledger.total() - start_total,
            trace,
        })
    }
}

pub fn qgl<R: Rng + ?Sized>(
    oracle: &StronglyBiasedOracle,
    tau: f64,
    eps: f64,
    delta: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<GlOutcome> {
    Qgl::new(tau, eps, delta)?.run(oracle, rng, ledger)
}

/// Number of bisection rounds `k` and gap `g` of the interval search.
pub fn igl_schedule(eps: f64) -> (usize, f64) {
    let k = (1.0 / eps).log2().ceil() as usize + 1;
    let g = (eps - 0.5f64.powi(k as i32)) / 8.0;
    (k, g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IglOutcome {
    /// Mask from the last successful search, if any succeeded.
    pub mask: Option<usize>,
    /// Threshold after the final update.
    pub tau: f64,
    pub calls: usize,
    pub queries: u64,
}

/// Bisects the prefix-weight threshold to find the heaviest parity.
///
/// `t_floor` is on the prefix-weight scale; the search stops once the
/// threshold drops strictly below it.
pub fn igl<R: Rng + ?Sized>(
    oracle: &StronglyBiasedOracle,
    eps: f64,
    delta: f64,
    t_floor: f64,
    failure: FailureMode,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> Result<IglOutcome> {
    ensure(eps > 0.0 && eps < 1.0, "eps", eps, "0 < eps < 1")?;
    ensure(delta > 0.0 && delta < 0.5, "delta", delta, "0 < delta < 1/2")?;
    let (k, g) = igl_schedule(eps);
    let start = ledger.total();
    let mut tau = 0.5;
    let mut mask = None;
    let mut calls = 0;
    for i in 1..=k {
        let out = Qgl::new(tau, g, delta / k as f64)?
            .with_failure(failure)
            .run(oracle, rng, ledger)?;
        calls += 1;
        let step = 0.5f64.powi(i as i32 + 1);
        if out.found {
            mask = out.mask;
            tau += step;
        } else {
            tau -= step;
        }
        if step < g / 2.0 || tau < t_floor {
            break;
        }
    }
    Ok(IglOutcome {
        mask,
        tau,
        calls,
        queries: ledger.total() - start,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean::{parity_eval, prefix_weight, wht, DecisionTree};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_function(n: usize, rng: &mut ChaCha8Rng) -> BooleanFunction {
        BooleanFunction::from_fn(n, |_| if rng.random::<bool>() { 1 } else { -1 }).unwrap()
    }

    fn and2() -> BooleanFunction {
        DecisionTree::parse(2, "(var 0 (leaf -1) (var 1 (leaf -1) (leaf +1)))")
            .unwrap()
            .to_function()
    }

    /// Shared-suffix pair expansion with the four oracle branches spelled out.
    fn overlap_by_expansion(h: &BooleanFunction, bias: &[f64], p: Prefix) -> f64 {
        let n = h.n();
        let s = p.len();
        let (heads, tails) = (1usize << s, 1usize << (n - s));
        let mut total = 0.0;
        for x2 in 0..tails {
            for x1 in 0..heads {
                for z1 in 0..heads {
                    let x = (x1 << (n - s)) | x2;
                    let z = (z1 << (n - s)) | x2;
                    let (hx, hz) = (h.value(x) as f64, h.value(z) as f64);
                    let (bx, bz) = (bias[x], bias[z]);
                    let (gx, gz) = (1.0 - bx, 1.0 - bz);
                    let bracket = gx * gz * hx * hz + bx * gz * (-hx) * hz + gx * bz * hx * (-hz) + bx * bz * hx * hz;
                    let chi = parity_eval(p.bits(), x1) as f64 * parity_eval(p.bits(), z1) as f64;
                    total += chi * bracket;
                }
            }
        }
        total / (heads * heads * tails) as f64
    }

    #[test]
    fn clean_overlap_examples() {
        let h = and2();
        let o = StronglyBiasedOracle::clean(h.clone());
        assert!((biased_overlap(&o, Prefix::EMPTY).unwrap() - 1.0).abs() < 1e-12);
        let spec = wht(&h);
        for len in 0..=2 {
            for bits in 0..1 << len {
                let p = Prefix::new(bits, len).unwrap();
                let want = prefix_weight(&spec, p).unwrap();
                assert!((biased_overlap(&o, p).unwrap() - want).abs() < 1e-12);
            }
        }
        assert!(biased_overlap(&o, Prefix::new(0, 3).unwrap()).is_err());
    }

    #[test]
    fn clean_overlap_is_prefix_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=10 {
            let h = random_function(n, &mut rng);
            let o = StronglyBiasedOracle::clean(h.clone());
            let spec = wht(&h);
            for len in 0..=n {
                for bits in (0..1usize << len).step_by(1 + (1 << len) / 16) {
                    let p = Prefix::new(bits, len).unwrap();
                    assert!((o.overlap(p) - prefix_weight(&spec, p).unwrap()).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn overlap_matches_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..30 {
            let n = rng.random_range(1..=6);
            let h = random_function(n, &mut rng);
            let bias: Vec<f64> = (0..1 << n).map(|_| rng.random::<f64>() * 0.3).collect();
            let o = StronglyBiasedOracle::new(h.clone(), bias.clone()).unwrap();
            let len = rng.random_range(0..=n);
            let p = Prefix::new(rng.random_range(0..1usize << len), len).unwrap();
            assert!((o.overlap(p) - overlap_by_expansion(&h, &bias, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_validation() {
        let h = and2();
        assert!(StronglyBiasedOracle::new(h.clone(), vec![0.0; 3]).is_err());
        assert!(StronglyBiasedOracle::new(h.clone(), vec![0.0, 0.0, 1.2, 0.0]).is_err());
        let o = StronglyBiasedOracle::new(h, vec![0.0, 0.1, 0.05, 0.0]).unwrap();
        assert_eq!(o.gamma(), 0.1);
    }

    #[test]
    fn estimate_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut ledger = QueryLedger::new();
        let chi = StronglyBiasedOracle::clean(BooleanFunction::parity(4, 0b1010).unwrap());
        let e = estimate_pw(&chi, Prefix::full(0b1010, 4), 0.1, 0.01, &mut rng, &mut ledger).unwrap();
        assert!(e.sigma_sq > 0.95);
        let e = estimate_pw(&chi, Prefix::full(0b0110, 4), 0.1, 0.01, &mut rng, &mut ledger).unwrap();
        assert!((e.sigma_sq - 0.5).abs() < 0.05);
        // ℓ = odd⌈6 ln 100⌉ = 29 copies, each ⌈8/0.1⌉ = 80.
        assert_eq!(ledger.get("qgl.estimate"), 2 * 29 * 80);
        assert!(estimate_pw(&chi, Prefix::EMPTY, 0.1, 0.5, &mut rng, &mut ledger).is_err());
    }

    #[test]
    fn qgl_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut ledger = QueryLedger::new();
        let chi = StronglyBiasedOracle::clean(BooleanFunction::parity(6, 0b100101).unwrap());
        for _ in 0..20 {
            let out = qgl(&chi, 0.9, 0.1, 0.1, &mut rng, &mut ledger).unwrap();
            assert_eq!(out.mask, Some(0b100101));
            assert_eq!(out.l(), 1);
        }
        let and = StronglyBiasedOracle::clean(and2());
        for _ in 0..20 {
            let out = qgl(&and, 0.2, 0.05, 0.1, &mut rng, &mut ledger).unwrap();
            assert!(out.found);
            let s = out.mask.unwrap();
            assert!(wht(&and2()).coeff(s).powi(2) >= 0.15);
        }
        assert!(qgl(&and, 0.2, 0.2, 0.1, &mut rng, &mut ledger).is_err());
        assert!(qgl(&and, 0.0, 0.0, 0.1, &mut rng, &mut ledger).is_err());
    }

    #[test]
    fn qgl_rejects_light_spectra() {
        // Four coefficients of ±½: the largest squared coefficient is ¼.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = BooleanFunction::from_fn(6, |x| {
            let a = x >> 5 & 1 == 1;
            let b = x >> 4 & 1 == 1;
            if a && b { 1 } else { -1 }
        })
        .unwrap();
        assert!((best_sq(&h) - 0.25).abs() < 1e-12);
        let o = StronglyBiasedOracle::clean(h);
        let mut ledger = QueryLedger::new();
        let trials = 200;
        let found = (0..trials)
            .filter(|_| qgl(&o, 0.5, 0.1, 0.1, &mut rng, &mut ledger).unwrap().found)
            .count();
        assert!(found as f64 / trials as f64 <= 0.1);
    }

    fn best_sq(h: &BooleanFunction) -> f64 {
        crate::boolean::best_parity(&wht(h)).1.powi(2)
    }

    #[test]
    fn qgl_trace_lines() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut ledger = QueryLedger::new();
        let o = StronglyBiasedOracle::clean(BooleanFunction::parity(5, 3).unwrap());
        let out = Qgl::new(0.5, 0.1, 0.1)
            .unwrap()
            .with_trace(true)
            .run(&o, &mut rng, &mut ledger)
            .unwrap();
        // Starts at level ⌈log₂ 4⌉ = 2 and filters levels 3..=5.
        assert_eq!(out.trace.len(), 3);
        assert_eq!(out.trace[0].live, 4);
        assert_eq!(out.trace.last().unwrap().marked, 1);
        assert_eq!(out.queries, ledger.total());
        assert!(out.trace_csv().starts_with("level,live,marked,queries,amplified\n3,4,"));
    }

    #[test]
    fn igl_schedule_example() {
        let (k, g) = igl_schedule(0.25);
        assert_eq!(k, 3);
        assert!((g - 1.0 / 64.0).abs() < 1e-15);
        assert!(0.25 / 16.0 <= g + 1e-15 && g <= 3.0 * 0.25 / 32.0);
    }

    #[test]
    fn igl_finds_parity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ledger = QueryLedger::new();
        let o = StronglyBiasedOracle::clean(BooleanFunction::parity(7, 0b1100110).unwrap());
        for _ in 0..10 {
            let out = igl(&o, 0.1, 0.1, 0.0, FailureMode::Uniform, &mut rng, &mut ledger).unwrap();
            assert_eq!(out.mask, Some(0b1100110));
        }
    }

    #[test]
    fn igl_accuracy_against_exact_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut ledger = QueryLedger::new();
        let (eps, delta) = (0.1, 0.1);
        let trials = 60;
        let mut bad = 0;
        for _ in 0..trials {
            let tree = crate::boolean::random_tree(6, 4, &mut rng).unwrap();
            let h = tree.to_function();
            let spec = wht(&h);
            let best = crate::boolean::best_parity(&spec).1.powi(2);
            let o = StronglyBiasedOracle::clean(h);
            let out = igl(&o, eps, delta, 0.0, FailureMode::Uniform, &mut rng, &mut ledger).unwrap();
            match out.mask {
                Some(s) if (spec.coeff(s).powi(2) - best).abs() <= eps => {}
                _ => bad += 1,
            }
        }
        let p = delta;
        assert!(bad as f64 / trials as f64 <= p + 3.0 * crate::stats::binomial_sigma(p, trials));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn bias_bound(n in 1usize..=8, seed in any::<u64>(), scale in 0.0f64..0.5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = random_function(n, &mut rng);
            let bias: Vec<f64> = (0..1 << n).map(|_| rng.random::<f64>() * scale).collect();
            let o = StronglyBiasedOracle::new(h.clone(), bias).unwrap();
            let spec = wht(&h);
            let len = rng.random_range(0..=n);
            let p = Prefix::new(rng.random_range(0..1usize << len), len).unwrap();
            let gap = (o.overlap(p) - prefix_weight(&spec, p).unwrap()).abs();
            prop_assert!(gap <= 4.0 * o.gamma() + 1e-12);
        }
    }
}
