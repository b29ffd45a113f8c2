//! Top-d spectral bases, thin SVD and the double-centering transform.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by [`top_d_eigs`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Two eigenvalues closer than this (relative to `max(1, |λ_1|)`) are treated as tied.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Orthonormal top-d eigenvectors (as columns) and their eigenvalues, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralBasis {
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
    /// `λ_d` and `λ_{d+1}` coincide, so the basis is not uniquely determined.
    pub degenerate: bool,
}

impl SpectralBasis {
    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn d(&self) -> usize {
        self.vectors.ncols()
    }

    /// `Σ values_i · col_i · col_iᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = DMatrix::from_fn(self.n(), self.d(), |i, j| {
            self.vectors[(i, j)] * self.values[j]
        });
        scaled * self.vectors.transpose()
    }
}

/// `‖m − mᵀ‖_F / ‖m‖_F` (zero for the zero matrix).
pub fn relative_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

/// Flip `col` so that its largest-magnitude entry is positive (first index wins ties).
fn fix_sign(vectors: &mut DMatrix<f64>, col: usize) -> bool {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, v) in vectors.column(col).iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    let flip = vectors[(best, col)] < 0.0;
    if flip {
        vectors.column_mut(col).neg_mut();
    }
    flip
}

/// The `d` algebraically largest eigenpairs of a symmetric matrix.
///
/// Uses a dense symmetric eigensolver on the whole matrix, then applies the
/// sign convention of [`fix_sign`] column by column.
pub fn top_d_eigs(m: &DMatrix<f64>, d: usize) -> Result<SpectralBasis> {
    if !m.is_square() {
        return Err(Error::DimensionError("matrix must be square"));
    }
    let n = m.nrows();
    if d == 0 || d > n {
        return Err(Error::DimensionError("need 1 <= d <= n"));
    }
    let asymmetry = relative_asymmetry(m);
    if asymmetry > SYMMETRY_TOL {
        return Err(Error::NotSymmetric { asymmetry });
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let values: Vec<f64> = order[..d].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::from_fn(n, d, |r, c| eig.eigenvectors[(r, order[c])]);
    for c in 0..d {
        fix_sign(&mut vectors, c);
    }
    let degenerate = d < n && {
        let scale = values[0].abs().max(1.0);
        (values[d - 1] - eig.eigenvalues[order[d]]).abs() <= DEGENERACY_TOL * scale
    };
    Ok(SpectralBasis {
        vectors,
        values,
        degenerate,
    })
}

/// Centered Gram matrix `−½ (I − F)(D ∘ D)(I − F)` with `F = 𝟙𝟙ᵀ / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredGram {
    pub matrix: DMatrix<f64>,
}

/// Classical multidimensional-scaling double centering of an unsquared
/// distance matrix. Entries are squared here.
pub fn double_center(dist: &DMatrix<f64>) -> Result<CenteredGram> {
    if !dist.is_square() {
        return Err(Error::NotDistanceMatrix("matrix must be square"));
    }
    let n = dist.nrows();
    if n == 0 {
        return Err(Error::NotDistanceMatrix("empty matrix"));
    }
    let scale = dist.amax().max(1.0);
    let tol = 1e-12 * scale;
    for i in 0..n {
        if dist[(i, i)].abs() > tol {
            return Err(Error::NotDistanceMatrix("non-zero diagonal"));
        }
    }
    if dist.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotDistanceMatrix("non-finite entry"));
    }
    if dist.iter().any(|&v| v < -tol) {
        return Err(Error::NotDistanceMatrix("negative entry"));
    }
    if relative_asymmetry(dist) > SYMMETRY_TOL {
        return Err(Error::NotDistanceMatrix("not symmetric"));
    }

    let sq = dist.map(|v| v * v);
    let nf = n as f64;
    let row_means: DVector<f64> = DVector::from_fn(n, |i, _| sq.row(i).iter().sum::<f64>() / nf);
    let grand = row_means.iter().sum::<f64>() / nf;

    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let s = 0.5 * (sq[(i, j)] + sq[(j, i)]);
            let v = -0.5 * (s - row_means[i] - row_means[j] + grand);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(CenteredGram { matrix: out })
}

/// Thin singular value decomposition `x = left · diag(values) · rightᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// `n × d`, orthonormal columns.
    pub left: DMatrix<f64>,
    /// Non-negative, non-increasing.
    pub values: Vec<f64>,
    /// `d × d` orthogonal.
    pub right: DMatrix<f64>,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD of a tall `n × d` matrix.
///
/// Right singular vectors follow the same largest-entry-positive sign
/// convention as [`top_d_eigs`]; left vectors are flipped to match.
pub fn svd_factor(x: &DMatrix<f64>) -> Result<SvdFactors> {
    let (n, d) = x.shape();
    if d == 0 || n < d {
        return Err(Error::DimensionError("svd_factor needs n >= d >= 1"));
    }
    let mut w = x.clone();
    let mut v = DMatrix::<f64>::identity(d, d);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..d {
            for q in (p + 1)..d {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_columns(&mut w, p, q, c, s);
                rotate_columns(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..d).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let mut right = DMatrix::from_fn(d, d, |r, c| v[(r, order[c])]);
    let mut left = DMatrix::zeros(n, d);
    let cutoff = values[0] * (n as f64) * f64::EPSILON;
    for (c, &j) in order.iter().enumerate() {
        if norms[j] > cutoff && norms[j] > 0.0 {
            left.set_column(c, &(w.column(j) / norms[j]));
        } else {
            let col = orthonormal_completion(&left, c);
            left.set_column(c, &col);
        }
    }
    for c in 0..d {
        if fix_sign(&mut right, c) {
            left.column_mut(c).neg_mut();
        }
    }
    Ok(SvdFactors {
        left,
        values,
        right,
    })
}

fn rotate_columns(m: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for i in 0..m.nrows() {
        let a = m[(i, p)];
        let b = m[(i, q)];
        m[(i, p)] = c * a - s * b;
        m[(i, q)] = s * a + c * b;
    }
}

/// A unit vector orthogonal to the first `filled` columns of `basis`.
fn orthonormal_completion(basis: &DMatrix<f64>, filled: usize) -> DVector<f64> {
    let n = basis.nrows();
    for k in 0..n {
        let mut e = DVector::zeros(n);
        e[k] = 1.0;
        for _ in 0..2 {
            for c in 0..filled {
                let col = basis.column(c);
                let proj = col.dot(&e);
                e -= col * proj;
            }
        }
        let norm = e.norm();
        if norm > 0.5 {
            return e / norm;
        }
    }
    unreachable!("filled < n guarantees a completion exists")
}
