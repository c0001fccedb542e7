//! Distributions over labeled examples with a uniform marginal on inputs.

use crate::boolean::{parity_eval, read_index_value_csv, wht_real, width_for_len, BooleanFunction};
use crate::error::{ensure, Error, Result};
use crate::quantum::QueryLedger;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use std::fmt::Write as _;
use std::io::BufRead;

/// `p1[x] = Pr[y = +1 | x]`, with `x` uniform over `{0,1}^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelChannel {
    n: usize,
    p1: Vec<f64>,
}

impl LabelChannel {
    pub fn new(n: usize, p1: Vec<f64>) -> Result<Self> {
        crate::boolean::check_bits(n)?;
        if p1.len() != 1 << n {
            return Err(Error::TableLength {
                got: p1.len(),
                expected: 1 << n,
            });
        }
        if let Some(&bad) = p1.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Param {
                name: "p1",
                value: bad,
                expected: "0 <= p1 <= 1",
            });
        }
        Ok(Self { n, p1 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.p1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p1.is_empty()
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    /// `E[y | x] = 2 p1[x] − 1` for every `x`.
    pub fn label_means(&self) -> Vec<f64> {
        self.p1.iter().map(|p| 2.0 * p - 1.0).collect()
    }

    pub fn sample_aex<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        ledger: Option<&mut QueryLedger>,
    ) -> (usize, i8) {
        if let Some(l) = ledger {
            l.charge("aex", 1);
        }
        let x = rng.random_range(0..self.p1.len());
        let y = if rng.random::<f64>() < self.p1[x] { 1 } else { -1 };
        (x, y)
    }

    /// Exact `E[h(x) y]`.
    pub fn correlation(&self, h: &BooleanFunction) -> f64 {
        self.correlation_with(|x| h.value(x) as f64)
    }

    /// Exact `E[g(x) y]` for a real-valued `g`.
    pub fn correlation_with(&self, g: impl Fn(usize) -> f64) -> f64 {
        let sum: f64 = self
            .p1
            .iter()
            .enumerate()
            .map(|(x, p)| g(x) * (2.0 * p - 1.0))
            .sum();
        sum / self.p1.len() as f64
    }

    pub fn error(&self, h: &BooleanFunction) -> f64 {
        (1.0 - self.correlation(h)) / 2.0
    }

    /// Correlation of every parity, indexed by mask.
    pub fn parity_correlations(&self) -> Vec<f64> {
        wht_real(&self.label_means())
    }

    /// `argmax_S cor(χ_S)`, ties to the smallest mask.
    pub fn optcor_parity(&self) -> (usize, f64) {
        let cors = self.parity_correlations();
        let mut best = (0, cors[0]);
        for (s, &c) in cors.iter().enumerate().skip(1) {
            if c > best.1 {
                best = (s, c);
            }
        }
        best
    }

    /// `f_B(x) = +1` iff `p1[x] ≥ ½`.
    pub fn bayes_predictor(&self) -> BooleanFunction {
        BooleanFunction::from_fn(self.n, |x| if self.p1[x] >= 0.5 { 1 } else { -1 })
            .expect("width already validated")
    }

    /// Keeps each label w.p. `(1+w)/2` and flips it otherwise.
    pub fn relabel(&self, w: &WeightFunction) -> Result<Self> {
        if w.n != self.n {
            return Err(Error::TableLength {
                got: w.plus.len(),
                expected: self.p1.len(),
            });
        }
        let p1 = self
            .p1
            .iter()
            .enumerate()
            .map(|(x, &p)| {
                let v = p * (1.0 + w.plus[x]) / 2.0 + (1.0 - p) * (1.0 - w.minus[x]) / 2.0;
                v.clamp(0.0, 1.0)
            })
            .collect();
        Ok(Self { n: self.n, p1 })
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,p1\n");
        for (x, p) in self.p1.iter().enumerate() {
            let _ = writeln!(out, "{x},{p}");
        }
        out
    }

    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let rows = read_index_value_csv(reader)?;
        let n = width_for_len(rows.len())?;
        let p1 = rows
            .into_iter()
            .enumerate()
            .map(|(i, (_, v))| {
                v.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 2,
                    msg: format!("bad probability {v:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, p1)
    }
}

pub fn make_realizable(f: &BooleanFunction) -> LabelChannel {
    make_agnostic(f, &vec![0.0; f.len()]).expect("zero flip rates are valid")
}

pub fn make_rcn(f: &BooleanFunction, p: f64) -> Result<LabelChannel> {
    ensure((0.0..0.5).contains(&p), "p", p, "0 <= p < 1/2")?;
    make_agnostic(f, &vec![p; f.len()])
}

/// Flips `f(x)` with probability `eta[x]`.
pub fn make_agnostic(f: &BooleanFunction, eta: &[f64]) -> Result<LabelChannel> {
    if eta.len() != f.len() {
        return Err(Error::TableLength {
            got: eta.len(),
            expected: f.len(),
        });
    }
    let p1 = f
        .values()
        .iter()
        .zip(eta)
        .map(|(&v, &e)| {
            ensure((0.0..=1.0).contains(&e), "eta", e, "0 <= eta <= 1")?;
            Ok(if v > 0 { 1.0 - e } else { e })
        })
        .collect::<Result<Vec<_>>>()?;
    LabelChannel::new(f.n(), p1)
}

/// Deterministic flips on `⌊frac · 2^n⌋` inputs chosen to hurt the best
/// parity of `f`: inputs where `f` agrees with that (signed) parity are
/// flipped first, in a seeded random order.
pub fn adversarial_flips<R: Rng + ?Sized>(
    f: &BooleanFunction,
    frac: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    ensure((0.0..=1.0).contains(&frac), "frac", frac, "0 <= frac <= 1")?;
    let spec = crate::boolean::wht(f);
    let (s_star, _) = crate::boolean::best_parity(&spec);
    let sign = if spec.coeff(s_star) < 0.0 { -1 } else { 1 };
    let mut agree: Vec<usize> = Vec::new();
    let mut disagree: Vec<usize> = Vec::new();
    for x in 0..f.len() {
        if f.value(x) == sign * parity_eval(s_star, x) {
            agree.push(x);
        } else {
            disagree.push(x);
        }
    }
    agree.shuffle(rng);
    disagree.shuffle(rng);
    let budget = (frac * f.len() as f64).floor() as usize;
    let mut eta = vec![0.0; f.len()];
    for &x in agree.iter().chain(&disagree).take(budget) {
        eta[x] = 1.0;
    }
    Ok(eta)
}

/// Deterministic flips on `⌊frac · 2^n⌋` uniformly chosen inputs.
pub fn random_flips<R: Rng + ?Sized>(n: usize, frac: f64, rng: &mut R) -> Result<Vec<f64>> {
    crate::boolean::check_bits(n)?;
    ensure((0.0..=1.0).contains(&frac), "frac", frac, "0 <= frac <= 1")?;
    let len = 1usize << n;
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(rng);
    let mut eta = vec![0.0; len];
    for &x in idx.iter().take((frac * len as f64).floor() as usize) {
        eta[x] = 1.0;
    }
    Ok(eta)
}

/// `w(x, y)` for `y ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    n: usize,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl WeightFunction {
    pub fn new(n: usize, plus: Vec<f64>, minus: Vec<f64>) -> Result<Self> {
        crate::boolean::check_bits(n)?;
        for v in [&plus, &minus] {
            if v.len() != 1 << n {
                return Err(Error::TableLength {
                    got: v.len(),
                    expected: 1 << n,
                });
            }
            if let Some(&bad) = v.iter().find(|w| !(0.0..=1.0).contains(*w)) {
                return Err(Error::Param {
                    name: "w",
                    value: bad,
                    expected: "0 <= w <= 1",
                });
            }
        }
        Ok(Self { n, plus, minus })
    }

    pub fn from_fn(n: usize, w: impl Fn(usize, i8) -> f64) -> Result<Self> {
        crate::boolean::check_bits(n)?;
        let len = 1usize << n;
        Self::new(
            n,
            (0..len).map(|x| w(x, 1)).collect(),
            (0..len).map(|x| w(x, -1)).collect(),
        )
    }

    pub fn constant(n: usize, w: f64) -> Result<Self> {
        Self::from_fn(n, |_, _| w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, x: usize, y: i8) -> f64 {
        if y > 0 {
            self.plus[x]
        } else {
            self.minus[x]
        }
    }

    /// `w(x, −h(x)) = 1` for every `x`.
    pub fn is_conservative_for(&self, h: &BooleanFunction) -> bool {
        (0..h.len()).all(|x| self.get(x, -h.value(x)) == 1.0)
    }

    /// Exact `E_D[g(x) · y · w(x, y)]`.
    pub fn weighted_correlation(&self, channel: &LabelChannel, g: impl Fn(usize) -> f64) -> f64 {
        let sum: f64 = channel
            .p1()
            .iter()
            .enumerate()
            .map(|(x, &p)| g(x) * (self.plus[x] * p - self.minus[x] * (1.0 - p)))
            .sum();
        sum / channel.len() as f64
    }
}

/// Per-input label counts of `m` i.i.d. examples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleCounts {
    n: usize,
    pos: Vec<u64>,
    neg: Vec<u64>,
    m: u64,
}

impl SampleCounts {
    /// Draws `m` examples from `channel`. Input counts come from the multinomial
    /// as a chain of conditional binomials.
    pub fn draw<R: Rng + ?Sized>(channel: &LabelChannel, m: u64, rng: &mut R) -> Self {
        let len = channel.len();
        let mut pos = vec![0; len];
        let mut neg = vec![0; len];
        let mut remaining = m;
        for x in 0..len {
            let c = if x + 1 == len {
                remaining
            } else {
                binomial(remaining, 1.0 / (len - x) as f64, rng)
            };
            remaining -= c;
            let p = binomial(c, channel.p1()[x], rng);
            pos[x] = p;
            neg[x] = c - p;
        }
        Self {
            n: channel.n(),
            pos,
            neg,
            m,
        }
    }

    pub fn from_examples(n: usize, examples: &[(usize, i8)]) -> Result<Self> {
        crate::boolean::check_bits(n)?;
        let len = 1usize << n;
        let mut pos = vec![0; len];
        let mut neg = vec![0; len];
        for &(x, y) in examples {
            if x >= len {
                return Err(Error::Param {
                    name: "x",
                    value: x as f64,
                    expected: "x < 2^n",
                });
            }
            if y > 0 {
                pos[x] += 1;
            } else {
                neg[x] += 1;
            }
        }
        Ok(Self {
            n,
            pos,
            neg,
            m: examples.len() as u64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn pos(&self) -> &[u64] {
        &self.pos
    }

    pub fn neg(&self) -> &[u64] {
        &self.neg
    }

    /// Per-input `(count(y=+1) − count(y=−1)) / m`.
    pub fn label_sums(&self) -> Vec<f64> {
        let m = self.m.max(1) as f64;
        self.pos
            .iter()
            .zip(&self.neg)
            .map(|(&p, &q)| (p as f64 - q as f64) / m)
            .collect()
    }

    /// Empirical `(1/m) Σ g(x_i) y_i`.
    pub fn correlation_with(&self, g: impl Fn(usize) -> f64) -> f64 {
        self.label_sums()
            .iter()
            .enumerate()
            .map(|(x, s)| g(x) * s)
            .sum()
    }

    /// Empirical `(1/m) Σ w(x_i, y_i) y_i g(x_i)`.
    pub fn weighted_correlation(&self, w: &WeightFunction, g: impl Fn(usize) -> f64) -> f64 {
        let sum: f64 = (0..self.pos.len())
            .map(|x| g(x) * (w.get(x, 1) * self.pos[x] as f64 - w.get(x, -1) * self.neg[x] as f64))
            .sum();
        sum / self.m.max(1) as f64
    }

    /// Fraction of examples misclassified by `h`.
    pub fn error_of(&self, h: impl Fn(usize) -> i8) -> f64 {
        let wrong: u64 = (0..self.pos.len())
            .map(|x| if h(x) > 0 { self.neg[x] } else { self.pos[x] })
            .sum();
        wrong as f64 / self.m.max(1) as f64
    }

    /// Applies the stochastic relabeling step to every stored example.
    pub fn relabel<R: Rng + ?Sized>(&self, w: &WeightFunction, rng: &mut R) -> Self {
        let len = self.pos.len();
        let mut pos = vec![0; len];
        let mut neg = vec![0; len];
        for x in 0..len {
            let keep_pos = binomial(self.pos[x], (1.0 + w.get(x, 1)) / 2.0, rng);
            let keep_neg = binomial(self.neg[x], (1.0 + w.get(x, -1)) / 2.0, rng);
            pos[x] = keep_pos + (self.neg[x] - keep_neg);
            neg[x] = keep_neg + (self.pos[x] - keep_pos);
        }
        Self {
            n: self.n,
            pos,
            neg,
            m: self.m,
        }
    }
}

pub(crate) fn binomial<R: Rng + ?Sized>(trials: u64, p: f64, rng: &mut R) -> u64 {
    if trials == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    Binomial::new(trials, p).expect("p in (0,1)").sample(rng)
}
