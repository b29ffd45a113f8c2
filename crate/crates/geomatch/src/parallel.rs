//! Rayon-backed variants of the core loops. Results are identical to the
//! serial versions because every reduction is order-independent.

use geomatch_core::diagnostics::{
    aggregate_residuals, check_residual_sweep, residual_trial, ResidualRow,
};
use geomatch_core::matcher::{evaluate_sign, spectral_inputs, MAX_SIGN_DIM};
use geomatch_core::{
    double_center, Error, MatchOptions, MatchResult, Result, SignMatrix, SpectralBasis,
};
use nalgebra::DMatrix;
use rayon::prelude::*;

/// Sign enumeration with one task per sign matrix.
pub fn par_match_bases(
    u: SpectralBasis,
    v: SpectralBasis,
    options: MatchOptions,
) -> Result<MatchResult> {
    if u.vectors.shape() != v.vectors.shape() {
        return Err(Error::DimensionMismatch("bases must share n and d"));
    }
    let d = u.d();
    if d > MAX_SIGN_DIM {
        return Err(Error::DimensionTooLarge {
            d,
            cap: MAX_SIGN_DIM,
        });
    }
    let outcomes = (0..1u32 << d)
        .into_par_iter()
        .map(|k| evaluate_sign(&u, &v, SignMatrix::from_index(d, k)))
        .collect::<Result<Vec<_>>>()?;
    MatchResult::from_outcomes(u, v, outcomes, options.keep_trace)
}

pub fn par_umeyama_match(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    d: usize,
    options: MatchOptions,
) -> Result<MatchResult> {
    let (u, v) = spectral_inputs(a, b, d)?;
    par_match_bases(u, v, options)
}

pub fn par_match_distance(
    a_dist: &DMatrix<f64>,
    b_dist: &DMatrix<f64>,
    d: usize,
    options: MatchOptions,
) -> Result<MatchResult> {
    let a = double_center(a_dist)?.matrix;
    let b = double_center(b_dist)?.matrix;
    par_umeyama_match(&a, &b, d, options)
}

pub fn par_basis_residual_sweep(
    n: usize,
    d: usize,
    sigma_grid: &[f64],
    seeds: usize,
    base_seed: u64,
) -> Result<Vec<ResidualRow>> {
    check_residual_sweep(sigma_grid, seeds)?;
    sigma_grid
        .iter()
        .map(|&sigma| {
            let reports = (0..seeds)
                .into_par_iter()
                .map(|t| residual_trial(n, d, sigma, base_seed, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(aggregate_residuals(sigma, &reports))
        })
        .collect()
}
