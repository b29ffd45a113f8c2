//! The Umeyama estimator with sign-matrix enumeration.
//!
//! For every diagonal sign matrix `Ψ` the best permutation is a linear
//! assignment on `C(Ψ) = Σ_i ψ_i v_i u_iᵀ`; the winner over all `2^d`
//! candidates is returned. Ties between sign matrices go to the one that
//! comes first in [`enumerate_signs`] order.

use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::assignment::solve_max_lap;
use crate::error::{Error, Result};
use crate::permutation::Permutation;
use crate::spectral::{double_center, top_d_eigs, SpectralBasis};

/// Largest `d` for which all `2^d` sign matrices are enumerated.
pub const MAX_SIGN_DIM: usize = 20;

/// Diagonal of a `d × d` matrix with entries in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignMatrix {
    signs: Vec<i8>,
}

impl SignMatrix {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter("sign entries must be +1 or -1"));
        }
        Ok(Self { signs })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            signs: alloc::vec![1; d],
        }
    }

    /// The `index`-th element of [`enumerate_signs`]`(d)`: bit `d−1−i` of
    /// `index` set means `ψ_i = −1`.
    pub fn from_index(d: usize, index: u32) -> Self {
        let signs = (0..d)
            .map(|i| {
                if (index >> (d - 1 - i)) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        Self { signs }
    }

    pub fn index(&self) -> u32 {
        self.signs
            .iter()
            .fold(0, |acc, &s| (acc << 1) | u32::from(s == -1))
    }

    pub fn d(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn get(&self, i: usize) -> f64 {
        f64::from(self.signs[i])
    }
}

/// All `2^d` sign matrices in lexicographic order with `+1 < −1`.
pub fn enumerate_signs(d: usize) -> Result<impl ExactSizeIterator<Item = SignMatrix>> {
    if d > MAX_SIGN_DIM {
        return Err(Error::DimensionTooLarge {
            d,
            cap: MAX_SIGN_DIM,
        });
    }
    Ok((0..1u32 << d).map(move |k| SignMatrix::from_index(d, k)))
}

fn check_bases(u: &SpectralBasis, v: &SpectralBasis) -> Result<()> {
    if u.vectors.shape() != v.vectors.shape() {
        return Err(Error::DimensionMismatch("bases must share n and d"));
    }
    Ok(())
}

/// `C = V Ψ Uᵀ`, so that `⟨Π, C⟩ = ⟨Π U Ψ, V⟩` for every permutation matrix `Π`.
pub fn similarity_matrix(
    u: &SpectralBasis,
    v: &SpectralBasis,
    psi: &SignMatrix,
) -> Result<DMatrix<f64>> {
    check_bases(u, v)?;
    if psi.d() != u.d() {
        return Err(Error::DimensionMismatch("sign matrix length must equal d"));
    }
    let mut signed_v = v.vectors.clone();
    for (i, mut col) in signed_v.column_iter_mut().enumerate() {
        if psi.signs[i] < 0 {
            col.neg_mut();
        }
    }
    Ok(signed_v * u.vectors.transpose())
}

/// `⟨Π U Ψ, V⟩` evaluated directly from the bases.
pub fn alignment_objective(
    u: &SpectralBasis,
    v: &SpectralBasis,
    psi: &SignMatrix,
    pi: &Permutation,
) -> f64 {
    let mut total = 0.0;
    for k in 0..v.n() {
        for i in 0..v.d() {
            total += psi.get(i) * u.vectors[(pi[k], i)] * v.vectors[(k, i)];
        }
    }
    total
}

/// Result of the inner assignment for one sign matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SignOutcome {
    pub psi: SignMatrix,
    pub perm: Permutation,
    pub objective: f64,
}

pub fn evaluate_sign(u: &SpectralBasis, v: &SpectralBasis, psi: SignMatrix) -> Result<SignOutcome> {
    let c = similarity_matrix(u, v, &psi)?;
    let sol = solve_max_lap(&c)?;
    Ok(SignOutcome {
        psi,
        perm: sol.perm,
        objective: sol.value,
    })
}

/// Total order used to pick `Ψ*`: larger objective wins, then the earlier
/// enumeration index. Associative and commutative, so any reduction order
/// gives the same winner.
pub fn better_outcome(a: SignOutcome, b: SignOutcome) -> SignOutcome {
    match a.objective.total_cmp(&b.objective) {
        Ordering::Greater => a,
        Ordering::Less => b,
        Ordering::Equal => {
            if a.psi.index() <= b.psi.index() {
                a
            } else {
                b
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchOptions {
    /// Keep `(Ψ, MAX(Ψ))` for all `2^d` candidates.
    pub keep_trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub pi_hat: Permutation,
    pub psi_star: SignMatrix,
    pub objective: f64,
    pub trace: Option<Vec<(SignMatrix, f64)>>,
    pub u: SpectralBasis,
    pub v: SpectralBasis,
}

impl MatchResult {
    /// Builds the result from per-sign outcomes in any order.
    pub fn from_outcomes<I>(
        u: SpectralBasis,
        v: SpectralBasis,
        outcomes: I,
        keep_trace: bool,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = SignOutcome>,
    {
        let mut trace = keep_trace.then(Vec::new);
        let mut best: Option<SignOutcome> = None;
        for o in outcomes {
            if let Some(t) = trace.as_mut() {
                t.push((o.psi.clone(), o.objective));
            }
            best = Some(match best {
                None => o,
                Some(b) => better_outcome(b, o),
            });
        }
        let best = best.ok_or(Error::DimensionError("no sign matrices evaluated"))?;
        if let Some(t) = trace.as_mut() {
            t.sort_by_key(|(psi, _)| psi.index());
        }
        Ok(Self {
            pi_hat: best.perm,
            psi_star: best.psi,
            objective: best.objective,
            trace,
            u,
            v,
        })
    }

    /// `⟨P(pi_hat) U Ψ*, V⟩` recomputed from the stored bases.
    pub fn recomputed_objective(&self) -> f64 {
        alignment_objective(&self.u, &self.v, &self.psi_star, &self.pi_hat)
    }
}

/// Runs the sign enumeration on precomputed bases.
pub fn match_bases(
    u: SpectralBasis,
    v: SpectralBasis,
    options: MatchOptions,
) -> Result<MatchResult> {
    check_bases(&u, &v)?;
    let signs = enumerate_signs(u.d())?;
    let outcomes = signs
        .map(|psi| evaluate_sign(&u, &v, psi))
        .collect::<Result<Vec<_>>>()?;
    MatchResult::from_outcomes(u, v, outcomes, options.keep_trace)
}

/// Validates `(a, b, d)` and returns the two top-d spectral bases.
pub fn spectral_inputs(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    d: usize,
) -> Result<(SpectralBasis, SpectralBasis)> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch("a and b must have the same shape"));
    }
    if d > MAX_SIGN_DIM {
        return Err(Error::DimensionTooLarge {
            d,
            cap: MAX_SIGN_DIM,
        });
    }
    Ok((top_d_eigs(a, d)?, top_d_eigs(b, d)?))
}

/// The Umeyama estimator on two symmetric matrices.
pub fn umeyama_match(a: &DMatrix<f64>, b: &DMatrix<f64>, d: usize) -> Result<MatchResult> {
    umeyama_match_with(a, b, d, MatchOptions::default())
}

pub fn umeyama_match_with(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    d: usize,
    options: MatchOptions,
) -> Result<MatchResult> {
    let (u, v) = spectral_inputs(a, b, d)?;
    match_bases(u, v, options)
}

/// Umeyama on the double-centered Gram matrices of two distance matrices.
pub fn match_distance(
    a_dist: &DMatrix<f64>,
    b_dist: &DMatrix<f64>,
    d: usize,
) -> Result<MatchResult> {
    match_distance_with(a_dist, b_dist, d, MatchOptions::default())
}

pub fn match_distance_with(
    a_dist: &DMatrix<f64>,
    b_dist: &DMatrix<f64>,
    d: usize,
    options: MatchOptions,
) -> Result<MatchResult> {
    let a = double_center(a_dist)?.matrix;
    let b = double_center(b_dist)?.matrix;
    umeyama_match_with(&a, &b, d, options)
}
