//! Exact Boolean-function, decision-tree and Fourier machinery.
//!
//! Inputs are indexed by integers in `0..2^n`. Variable `x_0` is the most
//! significant bit of the index, so a prefix of the parity mask selects a
//! contiguous block of Fourier coefficients.

mod fourier;
mod tree;

pub use fourier::{
    best_parity, inverse_wht, l1_norm, prefix_weight, wht, wht_in_place, wht_real, FourierSpectrum,
    Prefix, PrefixWeights,
};
pub use tree::{random_tree, DecisionTree, Node};

use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::io::BufRead;

/// Largest supported bit-width; truth tables stay at or below 2^20 entries.
pub const MAX_BITS: usize = 20;

pub(crate) fn check_bits(n: usize) -> Result<()> {
    if (1..=MAX_BITS).contains(&n) {
        Ok(())
    } else {
        Err(Error::BitWidth(n))
    }
}

/// χ_S(x) = (−1)^{|S ∧ x|}.
#[inline]
pub fn parity_eval(mask: usize, x: usize) -> i8 {
    if (mask & x).count_ones() & 1 == 0 {
        1
    } else {
        -1
    }
}

/// Value of variable `var` (0 = most significant) in input `x` of width `n`.
#[inline]
pub fn bit_of(n: usize, x: usize, var: usize) -> bool {
    (x >> (n - 1 - var)) & 1 == 1
}

/// A total map `{0,1}^n → {−1,+1}` stored as its truth table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BooleanFunction {
    n: usize,
    values: Vec<i8>,
}

impl BooleanFunction {
    pub fn new(n: usize, values: Vec<i8>) -> Result<Self> {
        check_bits(n)?;
        if values.len() != 1 << n {
            return Err(Error::TableLength {
                got: values.len(),
                expected: 1 << n,
            });
        }
        if let Some((index, &v)) = values.iter().enumerate().find(|(_, &v)| v != 1 && v != -1) {
            return Err(Error::NotBoolean {
                index,
                value: v as i64,
            });
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> i8) -> Result<Self> {
        check_bits(n)?;
        Self::new(n, (0..1usize << n).map(&mut f).collect())
    }

    pub fn constant(n: usize, label: i8) -> Result<Self> {
        Self::from_fn(n, |_| label)
    }

    /// The character χ_S as a Boolean function.
    pub fn parity(n: usize, mask: usize) -> Result<Self> {
        if mask >= 1 << n.min(MAX_BITS) {
            return Err(Error::Param {
                name: "mask",
                value: mask as f64,
                expected: "mask < 2^n",
            });
        }
        Self::from_fn(n, |x| parity_eval(mask, x))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn value(&self, x: usize) -> i8 {
        self.values[x]
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }

    pub fn negated(&self) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Number of inputs on which `self` and `other` disagree.
    pub fn hamming_distance(&self, other: &Self) -> usize {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a != b)
            .count()
    }

    /// Headered `index,value` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{v}");
        }
        out
    }

    pub fn from_csv(reader: impl BufRead) -> Result<Self> {
        let rows = read_index_value_csv(reader)?;
        let n = width_for_len(rows.len())?;
        let mut values = Vec::with_capacity(rows.len());
        for (line, (_, v)) in rows.into_iter().enumerate() {
            let label = v.parse::<i8>().map_err(|e| Error::Parse {
                line: line + 2,
                msg: format!("bad label {v:?}: {e}"),
            })?;
            values.push(label);
        }
        Self::new(n, values)
    }
}

/// Reads a headered two-column CSV whose first column is `0..len` in order.
pub(crate) fn read_index_value_csv(reader: impl BufRead) -> Result<Vec<(usize, String)>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if i == 0 || line.is_empty() {
            continue;
        }
        let (idx, val) = line.split_once(',').ok_or_else(|| Error::Parse {
            line: i + 1,
            msg: "expected two comma-separated columns".into(),
        })?;
        let idx: usize = idx.trim().parse().map_err(|e| Error::Parse {
            line: i + 1,
            msg: format!("bad index: {e}"),
        })?;
        if idx != rows.len() {
            return Err(Error::Parse {
                line: i + 1,
                msg: format!("index {idx} out of order, expected {}", rows.len()),
            });
        }
        rows.push((idx, val.trim().to_string()));
    }
    Ok(rows)
}

pub(crate) fn width_for_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::TableLength {
            got: len,
            expected: len.next_power_of_two().max(2),
        });
    }
    let n = len.trailing_zeros() as usize;
    check_bits(n)?;
    Ok(n)
}
