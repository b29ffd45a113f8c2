//! Empirical checks of the spectral quantities behind the recovery guarantees.
//!
//! These use the latent `x`, `y` and hidden permutation of a generated
//! instance, so they check the analysis rather than the matcher's
//! observable interface. Asymptotic slack terms are replaced by explicit,
//! user-supplied multipliers.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcher::{enumerate_signs, SignMatrix, MAX_SIGN_DIM};
use crate::model::{sample_instance, ModelInstance, TruthMode};
use crate::seeding::derive_seed;
use crate::spectral::{svd_factor, DEGENERACY_TOL};

/// Default slack multiplier `√(ln n)`.
pub fn default_bound_scale(n: usize) -> f64 {
    libm::sqrt(libm::log(n as f64).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub psi0: SignMatrix,
    /// `min_Ψ ‖QΨ − R‖_F` over right singular bases of `P(truth)·x` and `y`.
    pub q_r_residual: f64,
    /// `‖UΨ₀ − V‖_F` over the left singular bases.
    pub u_v_residual: f64,
    pub bound_scale: f64,
    pub passed_qr: bool,
    pub passed_uv: bool,
    /// Two singular values of `x` or `y` coincide.
    pub spectrum_degenerate: bool,
}

fn scale_columns(m: &DMatrix<f64>, psi: &SignMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * psi.get(j))
}

fn has_tie(values: &[f64]) -> bool {
    let scale = values.first().copied().unwrap_or(0.0).abs().max(1.0);
    values
        .windows(2)
        .any(|w| (w[0] - w[1]).abs() <= DEGENERACY_TOL * scale)
}

/// Best sign alignment between the singular bases of the truth-aligned `x`
/// and of `y`. Pass flags compare against `c·d³σ` and `3c·d³σ`.
pub fn best_sign_alignment(instance: &ModelInstance, bound_scale: f64) -> Result<AlignmentReport> {
    let d = instance.d();
    if d > MAX_SIGN_DIM {
        return Err(Error::DimensionTooLarge {
            d,
            cap: MAX_SIGN_DIM,
        });
    }
    let aligned_x = instance.truth().permute_rows(instance.x());
    let fx = svd_factor(&aligned_x)?;
    let fy = svd_factor(instance.y())?;

    let mut best: Option<(SignMatrix, f64)> = None;
    for psi in enumerate_signs(d)? {
        let r = (scale_columns(&fx.right, &psi) - &fy.right).norm();
        if best.as_ref().is_none_or(|(_, b)| r < *b) {
            best = Some((psi, r));
        }
    }
    let (psi0, q_r_residual) = best.expect("at least one sign matrix");
    let u_v_residual = (scale_columns(&fx.left, &psi0) - &fy.left).norm();

    let budget = bound_scale * libm::pow(d as f64, 3.0) * instance.sigma();
    Ok(AlignmentReport {
        psi0,
        q_r_residual,
        u_v_residual,
        bound_scale,
        passed_qr: q_r_residual <= budget,
        passed_uv: u_v_residual <= 3.0 * budget,
        spectrum_degenerate: has_tie(&fx.values) || has_tie(&fy.values),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeReport {
    pub min_sv: f64,
    pub max_sv: f64,
    pub center: f64,
    pub margin: f64,
    pub slack: f64,
    pub passed: bool,
}

/// Extreme singular values of `m` against `center ± slack`.
pub fn envelope_report(m: &DMatrix<f64>, center: f64, slack: f64) -> Result<EnvelopeReport> {
    if slack.is_nan() || slack <= 0.0 {
        return Err(Error::InvalidParameter("slack must be positive"));
    }
    let f = svd_factor(m)?;
    let max_sv = f.values[0];
    let min_sv = *f.values.last().expect("d >= 1");
    let margin = (max_sv - center).abs().max((min_sv - center).abs());
    Ok(EnvelopeReport {
        min_sv,
        max_sv,
        center,
        margin,
        slack,
        passed: margin <= slack,
    })
}

/// Singular values of `x` around `√n` and of `y` around `√((1+σ²)n)`.
pub fn singular_envelope(
    instance: &ModelInstance,
    slack: f64,
) -> Result<(EnvelopeReport, EnvelopeReport)> {
    let n = instance.n() as f64;
    let s2 = instance.sigma() * instance.sigma();
    let x = envelope_report(instance.x(), libm::sqrt(n), slack)?;
    let y = envelope_report(instance.y(), libm::sqrt((1.0 + s2) * n), slack)?;
    Ok((x, y))
}

pub const GOE_MIN_DIM: usize = 10;
pub const GOE_MIN_REPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// Rescaled minimal gaps `rescale · δ(G)`.
    pub samples: Vec<f64>,
    pub rescale: f64,
    pub ks_statistic: f64,
    pub ks_threshold: f64,
    pub passed: bool,
}

/// A `d × d` GOE matrix: off-diagonal `N(0,1)`, diagonal `N(0,2)`.
pub fn sample_goe<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(d, d);
    for i in 0..d {
        let diag: f64 = StandardNormal.sample(rng);
        g[(i, i)] = core::f64::consts::SQRT_2 * diag;
        for j in (i + 1)..d {
            let v: f64 = StandardNormal.sample(rng);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// Smallest gap between adjacent eigenvalues.
pub fn min_eigen_gap(m: &DMatrix<f64>) -> f64 {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev.windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

/// Limiting CDF of the rescaled minimal gap, `1 − e^{−x²}` (density `2x e^{−x²}`).
pub fn min_gap_limit_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        1.0 - libm::exp(-x * x)
    }
}

/// One-sample Kolmogorov-Smirnov statistic `sup_x |F_n(x) − F(x)|`.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted.iter().enumerate().fold(0.0, |acc, (i, &x)| {
        let f = cdf(x);
        let above = (i + 1) as f64 / n - f;
        let below = f - i as f64 / n;
        acc.max(above).max(below)
    })
}

/// Minimal GOE gap rescaled by `d`, tested against [`min_gap_limit_cdf`].
pub fn goe_min_gap_sample(
    d: usize,
    reps: usize,
    seed: u64,
    ks_threshold: f64,
) -> Result<GapReport> {
    goe_min_gap_sample_scaled(d, reps, seed, ks_threshold, d as f64)
}

/// As [`goe_min_gap_sample`] with an explicit rescaling factor for `δ(G)`.
pub fn goe_min_gap_sample_scaled(
    d: usize,
    reps: usize,
    seed: u64,
    ks_threshold: f64,
    rescale: f64,
) -> Result<GapReport> {
    if d < GOE_MIN_DIM {
        return Err(Error::InvalidParameter("GOE gap check needs d >= 10"));
    }
    if reps < GOE_MIN_REPS {
        return Err(Error::InsufficientReps {
            min: GOE_MIN_REPS,
            got: reps,
        });
    }
    if rescale.is_nan() || rescale <= 0.0 {
        return Err(Error::InvalidParameter("rescale must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<f64> = (0..reps)
        .map(|_| rescale * min_eigen_gap(&sample_goe(d, &mut rng)))
        .collect();
    let ks = ks_statistic(&samples, min_gap_limit_cdf);
    Ok(GapReport {
        samples,
        rescale,
        ks_statistic: ks,
        ks_threshold,
        passed: ks <= ks_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub sigma: f64,
    pub mean_u_v_residual: f64,
    pub mean_q_r_residual: f64,
}

/// Seed of trial `trial` in a residual sweep. It does not depend on `σ`, so
/// every grid point sees the same `x` and `z`.
pub fn residual_trial_seed(base_seed: u64, trial: usize) -> u64 {
    derive_seed(base_seed, &[trial as u64])
}

/// One alignment trial of a residual sweep.
pub fn residual_trial(
    n: usize,
    d: usize,
    sigma: f64,
    base_seed: u64,
    trial: usize,
) -> Result<AlignmentReport> {
    let inst = sample_instance(
        n,
        d,
        sigma,
        residual_trial_seed(base_seed, trial),
        TruthMode::UniformRandom,
    )?;
    best_sign_alignment(&inst, default_bound_scale(n))
}

pub fn check_residual_sweep(sigma_grid: &[f64], seeds: usize) -> Result<()> {
    if seeds == 0 {
        return Err(Error::InvalidParameter(
            "residual sweep needs at least one seed",
        ));
    }
    if sigma_grid.is_empty() {
        return Err(Error::InvalidParameter("sigma grid is empty"));
    }
    Ok(())
}

/// Averages of both residuals per noise level.
pub fn basis_residual_sweep(
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
                .map(|t| residual_trial(n, d, sigma, base_seed, t))
                .collect::<Result<Vec<_>>>()?;
            Ok(aggregate_residuals(sigma, &reports))
        })
        .collect()
}

pub fn aggregate_residuals(sigma: f64, reports: &[AlignmentReport]) -> ResidualRow {
    let k = reports.len() as f64;
    ResidualRow {
        sigma,
        mean_u_v_residual: reports.iter().map(|r| r.u_v_residual).sum::<f64>() / k,
        mean_q_r_residual: reports.iter().map(|r| r.q_r_residual).sum::<f64>() / k,
    }
}
