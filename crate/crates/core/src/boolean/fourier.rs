use super::{check_bits, read_index_value_csv, width_for_len, BooleanFunction};
use crate::error::{Error, Result};
use std::fmt;
use std::fmt::Write as _;
use std::io::BufRead;
use std::ops::Range;

/// Unnormalised in-place Walsh–Hadamard butterfly. Length must be a power of two.
pub fn wht_in_place(data: &mut [f64]) {
    let len = data.len();
    debug_assert!(len.is_power_of_two());
    let mut h = 1;
    while h < len {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

/// Normalised transform `c[S] = 2^{-n} Σ_x g(x) χ_S(x)` of a real vector.
pub fn wht_real(values: &[f64]) -> Vec<f64> {
    let mut data = values.to_vec();
    wht_in_place(&mut data);
    let scale = 1.0 / values.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    data
}

/// Fourier coefficients of a Boolean function.
pub fn wht(f: &BooleanFunction) -> FourierSpectrum {
    FourierSpectrum {
        n: f.n(),
        coeffs: wht_real(&f.to_f64()),
    }
}

/// `g(x) = Σ_S c[S] χ_S(x)`.
pub fn inverse_wht(spec: &FourierSpectrum) -> Vec<f64> {
    let mut data = spec.coeffs.clone();
    wht_in_place(&mut data);
    data
}

/// Fourier coefficients indexed by parity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSpectrum {
    n: usize,
    coeffs: Vec<f64>,
}

impl FourierSpectrum {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_bits(n)?;
        if coeffs.len() != 1 << n {
            return Err(Error::TableLength {
                got: coeffs.len(),
                expected: 1 << n,
            });
        }
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs[mask]
    }

    /// Σ_S c[S]²; equals 1 for spectra of Boolean functions.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn prefix_weights(&self) -> PrefixWeights {
        PrefixWeights::from_coeffs(self.n, &self.coeffs)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (i, c) in self.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{i},{c:e}");
        }
        out
    }

    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let rows = read_index_value_csv(reader)?;
        let n = width_for_len(rows.len())?;
        let coeffs = rows
            .into_iter()
            .enumerate()
            .map(|(line, (_, v))| {
                v.parse::<f64>().map_err(|e| Error::Parse {
                    line: line + 2,
                    msg: format!("bad coefficient {v:?}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, coeffs)
    }
}

/// A node of the Goldreich–Levin tree: the leading `len` bits of a parity mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prefix {
    bits: usize,
    len: usize,
}

impl Prefix {
    pub const EMPTY: Prefix = Prefix { bits: 0, len: 0 };

    /// `bits` holds the prefix most-significant-first in its low `len` bits.
    pub fn new(bits: usize, len: usize) -> Result<Self> {
        if len > super::MAX_BITS || bits >> len != 0 {
            return Err(Error::Param {
                name: "prefix",
                value: bits as f64,
                expected: "bits < 2^len, len <= 20",
            });
        }
        Ok(Self { bits, len })
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let mut p = Self::EMPTY;
        for &b in bits {
            if b > 1 {
                return Err(Error::Param {
                    name: "prefix bit",
                    value: b as f64,
                    expected: "0 or 1",
                });
            }
            p = p.child(b == 1);
        }
        Ok(p)
    }

    /// The full-length prefix naming a single mask.
    pub fn full(mask: usize, n: usize) -> Self {
        Self { bits: mask, len: n }
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn child(&self, one: bool) -> Self {
        Self {
            bits: (self.bits << 1) | one as usize,
            len: self.len + 1,
        }
    }

    /// Masks of width `n` extending this prefix.
    pub fn range(&self, n: usize) -> Range<usize> {
        debug_assert!(self.len <= n);
        let shift = n - self.len;
        (self.bits << shift)..((self.bits + 1) << shift)
    }

    /// `p · x_1`: parity of the prefix against the first `len` bits of `x`.
    pub fn dot(&self, n: usize, x: usize) -> i8 {
        super::parity_eval(self.bits, x >> (n - self.len))
    }
}

impl fmt::Display for Prefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("ε");
        }
        for i in (0..self.len).rev() {
            f.write_str(if (self.bits >> i) & 1 == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// PW(p) = Σ_{b} c[p b]², summed directly over the block of masks.
pub fn prefix_weight(spec: &FourierSpectrum, p: Prefix) -> Result<f64> {
    if p.len() > spec.n {
        return Err(Error::Param {
            name: "prefix length",
            value: p.len() as f64,
            expected: "<= n",
        });
    }
    Ok(spec.coeffs[p.range(spec.n)].iter().map(|c| c * c).sum())
}

/// Constant-time prefix weights from cumulative sums of squared coefficients.
#[derive(Debug, Clone)]
pub struct PrefixWeights {
    n: usize,
    cumulative: Vec<f64>,
}

impl PrefixWeights {
    pub fn from_coeffs(n: usize, coeffs: &[f64]) -> Self {
        let mut cumulative = Vec::with_capacity(coeffs.len() + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for c in coeffs {
            acc += c * c;
            cumulative.push(acc);
        }
        Self { n, cumulative }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn weight(&self, p: Prefix) -> f64 {
        let r = p.range(self.n);
        (self.cumulative[r.end] - self.cumulative[r.start]).max(0.0)
    }

    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }
}

pub fn l1_norm(spec: &FourierSpectrum) -> f64 {
    spec.coeffs.iter().map(|c| c.abs()).sum()
}

/// `(S*, max_S |c[S]|)`, ties to the smallest mask.
pub fn best_parity(spec: &FourierSpectrum) -> (usize, f64) {
    let mut best = (0, spec.coeffs[0].abs());
    for (s, c) in spec.coeffs.iter().enumerate().skip(1) {
        if c.abs() > best.1 {
            best = (s, c.abs());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boolean::{parity_eval, random_tree};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn and2() -> BooleanFunction {
        BooleanFunction::new(2, vec![-1, -1, -1, 1]).unwrap()
    }

    /// O(4^n) definition of the transform.
    fn naive_coeffs(f: &BooleanFunction) -> Vec<f64> {
        let len = f.len();
        (0..len)
            .map(|s| {
                (0..len)
                    .map(|x| f.value(x) as f64 * parity_eval(s, x) as f64)
                    .sum::<f64>()
                    / len as f64
            })
            .collect()
    }

    fn random_function(n: usize, seed: u64) -> BooleanFunction {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        BooleanFunction::from_fn(n, |_| if rng.random::<bool>() { 1 } else { -1 }).unwrap()
    }

    #[test]
    fn constant_and_parity_spectra() {
        let c = wht(&BooleanFunction::constant(2, 1).unwrap());
        assert_eq!(c.coeffs(), &[1.0, 0.0, 0.0, 0.0]);
        let p = wht(&BooleanFunction::parity(2, 0b10).unwrap());
        assert_eq!(p.coeffs(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn and_spectrum() {
        let s = wht(&and2());
        assert_eq!(s.coeffs(), &[-0.5, -0.5, -0.5, 0.5]);
        assert_eq!(l1_norm(&s), 2.0);
        assert_eq!(best_parity(&s), (0, 0.5));
    }

    #[test]
    fn prefix_weight_examples() {
        let s = wht(&and2());
        assert_eq!(prefix_weight(&s, Prefix::EMPTY).unwrap(), 1.0);
        assert_eq!(prefix_weight(&s, Prefix::from_bits(&[1]).unwrap()).unwrap(), 0.5);
        assert_eq!(prefix_weight(&s, Prefix::full(0b11, 2)).unwrap(), 0.25);
        assert!(prefix_weight(&s, Prefix::new(0, 3).unwrap()).is_err());
    }

    #[test]
    fn best_parity_single_spike() {
        let mut coeffs = vec![0.0; 8];
        coeffs[0b101] = 0.6;
        let s = FourierSpectrum::new(3, coeffs).unwrap();
        assert_eq!(best_parity(&s), (0b101, 0.6));
        let p = wht(&BooleanFunction::parity(3, 0b011).unwrap());
        assert_eq!(best_parity(&p), (0b011, 1.0));
        assert_eq!(l1_norm(&p), 1.0);
    }

    #[test]
    fn fast_transform_matches_definition() {
        for n in 1..=7 {
            let f = random_function(n, 100 + n as u64);
            let fast = wht(&f);
            for (a, b) in fast.coeffs().iter().zip(naive_coeffs(&f)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn best_parity_matches_double_loop() {
        for seed in 0..40 {
            let n = 1 + (seed as usize % 8);
            let f = random_function(n, seed);
            let naive = naive_coeffs(&f);
            let mut want = (0, f64::MIN);
            for (s, c) in naive.iter().enumerate() {
                if c.abs() > want.1 + 1e-12 {
                    want = (s, c.abs());
                }
            }
            let got = best_parity(&wht(&f));
            assert_eq!(got.0, want.0);
            assert!((got.1 - want.1).abs() < 1e-12);
        }
    }

    #[test]
    fn prefix_display() {
        assert_eq!(Prefix::from_bits(&[1, 0, 1]).unwrap().to_string(), "101");
        assert_eq!(Prefix::EMPTY.to_string(), "ε");
    }

    #[test]
    fn spectrum_csv_round_trip() {
        let s = wht(&and2());
        let back = FourierSpectrum::from_csv(s.to_csv().as_bytes()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn tree_spectra_are_l1_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let tree = random_tree(8, 6, &mut rng).unwrap();
            let s = wht(&tree.to_function());
            assert!(l1_norm(&s) <= 6.0 + 1e-9);
        }
    }

    proptest! {
        #[test]
        fn parseval_and_inversion(n in 1usize..=10, seed in any::<u64>()) {
            let f = random_function(n, seed);
            let s = wht(&f);
            prop_assert!((s.energy() - 1.0).abs() < 1e-9);
            let back = inverse_wht(&s);
            for (x, v) in back.iter().enumerate() {
                prop_assert_eq!(*v, f.value(x) as f64);
            }
        }

        #[test]
        fn prefix_weights_split(n in 1usize..=9, seed in any::<u64>(), len_frac in 0.0f64..1.0, bits in any::<usize>()) {
            let f = random_function(n, seed);
            let s = wht(&f);
            let table = s.prefix_weights();
            let len = ((n as f64) * len_frac) as usize; // < n
            let p = Prefix::new(bits & ((1 << len) - 1), len).unwrap();
            let whole = prefix_weight(&s, p).unwrap();
            let split = prefix_weight(&s, p.child(false)).unwrap() + prefix_weight(&s, p.child(true)).unwrap();
            prop_assert!((whole - split).abs() < 1e-12);
            prop_assert!((table.weight(p) - whole).abs() < 1e-12);
            prop_assert!(whole + 1e-12 >= prefix_weight(&s, p.child(bits & (1 << 25) != 0)).unwrap());
        }
    }
}
