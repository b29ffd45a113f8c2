//! Recovery scores and the noise-threshold formulas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::Permutation;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryScore {
    /// Differing entries between the two permutation matrices.
    pub hamming_entries: usize,
    /// `#{i : π̂(i) ≠ π*(i)}`.
    pub mismatched_vertices: usize,
    pub exact: bool,
    /// `50n / (d · ln(min(σ⁻¹d⁻³n^{−1/d}, ln n)))`, or `+∞` when the log
    /// argument is at most one.
    pub almost_exact_bound: f64,
    /// `false` when the bound was reported as `+∞` because it is undefined.
    pub bound_defined: bool,
    pub within_bound: bool,
}

/// Right-hand side of the almost-exact Hamming bound. Returns `None` when the
/// inner logarithm's argument is at most one.
pub fn almost_exact_bound(n: usize, d: usize, sigma: f64) -> Option<f64> {
    let nf = n as f64;
    let df = d as f64;
    let ln_n = libm::log(nf);
    let signal = if sigma > 0.0 {
        1.0 / (sigma * libm::pow(df, 3.0) * libm::pow(nf, 1.0 / df))
    } else {
        f64::INFINITY
    };
    let inner = signal.min(ln_n);
    if inner.is_nan() || inner <= 1.0 {
        return None;
    }
    Some(50.0 * nf / (df * libm::log(inner)))
}

pub fn score(
    pi_hat: &Permutation,
    truth: &Permutation,
    n: usize,
    d: usize,
    sigma: f64,
) -> Result<RecoveryScore> {
    if pi_hat.len() != truth.len() {
        return Err(Error::LengthMismatch {
            left: pi_hat.len(),
            right: truth.len(),
        });
    }
    if pi_hat.len() != n {
        return Err(Error::LengthMismatch {
            left: pi_hat.len(),
            right: n,
        });
    }
    let mismatched_vertices = pi_hat
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .filter(|(a, b)| a != b)
        .count();
    // Each mismatched row has a one in two different columns.
    let hamming_entries = 2 * mismatched_vertices;
    let bound = almost_exact_bound(n, d, sigma);
    let almost_exact_bound = bound.unwrap_or(f64::INFINITY);
    Ok(RecoveryScore {
        hamming_entries,
        mismatched_vertices,
        exact: mismatched_vertices == 0,
        almost_exact_bound,
        bound_defined: bound.is_some(),
        within_bound: (hamming_entries as f64) <= almost_exact_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThresholdMode {
    #[serde(alias = "almost-exact", alias = "almost_exact")]
    AlmostExact,
    #[serde(alias = "exact")]
    Exact,
}

impl core::str::FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "almost-exact" | "AlmostExact" | "almost_exact" => Ok(ThresholdMode::AlmostExact),
            "exact" | "Exact" => Ok(ThresholdMode::Exact),
            _ => Err(Error::InvalidParameter(
                "threshold mode must be `exact` or `almost-exact`",
            )),
        }
    }
}

/// Reference noise scale: `d⁻³n^{−1/d}` (almost exact) or `d⁻³n^{−2/d}` (exact).
pub fn threshold_sigma(n: usize, d: usize, mode: ThresholdMode) -> f64 {
    threshold_sigma_real(n as f64, d, mode)
}

pub(crate) fn threshold_sigma_real(n: f64, d: usize, mode: ThresholdMode) -> f64 {
    let df = d as f64;
    let exponent = match mode {
        ThresholdMode::AlmostExact => -1.0 / df,
        ThresholdMode::Exact => -2.0 / df,
    };
    libm::pow(df, -3.0) * libm::pow(n, exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn matrix_hamming(a: &Permutation, b: &Permutation) -> usize {
        let (ma, mb) = (a.to_matrix(), b.to_matrix());
        ma.iter().zip(mb.iter()).filter(|(x, y)| x != y).count()
    }

    #[test]
    fn identical_permutations() {
        let p = Permutation::new(vec![2, 0, 1, 3]).unwrap();
        let s = score(&p, &p, 4, 2, 0.1).unwrap();
        assert_eq!(s.hamming_entries, 0);
        assert_eq!(s.mismatched_vertices, 0);
        assert!(s.exact);
    }

    #[test]
    fn single_transposition() {
        let truth = Permutation::identity(5);
        let swapped = Permutation::new(vec![1, 0, 2, 3, 4]).unwrap();
        let s = score(&swapped, &truth, 5, 2, 0.0).unwrap();
        assert_eq!(s.mismatched_vertices, 2);
        assert_eq!(s.hamming_entries, 4);
        assert_eq!(s.hamming_entries, matrix_hamming(&swapped, &truth));
        assert!(!s.exact);
    }

    #[test]
    fn hamming_matches_matrix_count() {
        let a = Permutation::new(vec![3, 1, 4, 0, 2, 5]).unwrap();
        let b = Permutation::new(vec![1, 3, 4, 2, 0, 5]).unwrap();
        let s = score(&a, &b, 6, 2, 0.0).unwrap();
        assert_eq!(s.hamming_entries, matrix_hamming(&a, &b));
        assert_eq!(s, score(&b, &a, 6, 2, 0.0).unwrap());
    }

    #[test]
    fn bound_formula() {
        let (n, d) = (1000usize, 5usize);
        let e2 = libm::exp(2.0);
        let sigma = libm::pow(5.0, -3.0) * libm::pow(1000.0, -0.2) / e2;
        // min(e², ln 1000) = ln 1000, so the bound is 50n / (d ln ln n).
        let expected = 50.0 * 1000.0 / (5.0 * libm::log(libm::log(1000.0)));
        let got = almost_exact_bound(n, d, sigma).unwrap();
        assert!((got - expected).abs() < 1e-9 * expected);
        assert!((got - 5174.2567).abs() < 1e-3);

        // Once the noise term is the minimum, it is the one that enters the log.
        let sigma = libm::pow(5.0, -3.0) * libm::pow(1000.0, -0.2) / libm::exp(1.5);
        let got = almost_exact_bound(n, d, sigma).unwrap();
        assert!((got - 50.0 * 1000.0 / (5.0 * 1.5)).abs() < 1e-9);
    }

    #[test]
    fn undefined_bound_is_vacuous() {
        let p = Permutation::identity(10);
        let q = Permutation::new(vec![1, 0, 2, 3, 4, 5, 6, 7, 8, 9]).unwrap();
        let s = score(&q, &p, 10, 5, 1.0).unwrap();
        assert!(!s.bound_defined);
        assert_eq!(s.almost_exact_bound, f64::INFINITY);
        assert!(s.within_bound);
        assert!(almost_exact_bound(2, 1, 0.0).is_none());
    }

    #[test]
    fn length_mismatch() {
        let r = score(
            &Permutation::identity(3),
            &Permutation::identity(4),
            3,
            1,
            0.0,
        );
        assert!(matches!(r, Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn threshold_examples() {
        assert!((threshold_sigma(1024, 10, ThresholdMode::AlmostExact) - 5.0e-4).abs() < 1e-15);
        assert!((threshold_sigma(1024, 10, ThresholdMode::Exact) - 2.5e-4).abs() < 1e-15);
        let e = core::f64::consts::E;
        assert!((threshold_sigma_real(e, 1, ThresholdMode::AlmostExact) - 1.0 / e).abs() < 1e-15);
        for n in 2..50 {
            for d in 1..12 {
                assert!(
                    threshold_sigma(n, d, ThresholdMode::Exact)
                        < threshold_sigma(n, d, ThresholdMode::AlmostExact)
                );
            }
        }
    }
}
