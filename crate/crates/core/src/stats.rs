//! Small numeric helpers shared by the emulators, the harness and the tests.

use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF};

/// Pr[Binomial(trials, p) > trials / 2].
pub fn majority_success(trials: u64, p: f64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    if p <= 0.0 {
        return 0.0;
    }
    let b = Binomial::new(p, trials).expect("p in (0,1)");
    1.0 - b.cdf(trials / 2)
}

/// One binomial standard deviation of an empirical rate over `trials`.
pub fn binomial_sigma(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Linear-interpolated quantile, `q` in [0, 1].
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Upper-tail p-value of Pearson's χ² statistic for observed counts.
pub fn chi_square_p_value(observed: &[u64], expected_probs: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected_probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dof = (observed.len() - 1) as f64;
    1.0 - ChiSquared::new(dof).expect("dof > 0").cdf(stat)
}

/// Smallest odd integer ≥ `x` (and ≥ 1).
pub fn odd_ceil(x: f64) -> usize {
    let c = x.ceil().max(1.0) as usize;
    if c.is_multiple_of(2) {
        c + 1
    } else {
        c
    }
}
