//! Correlated Gaussian geometric model.
//!
//! `y = P(truth)·x + sigma·z` with `x`, `z` i.i.d. standard normal `n × d`
//! matrices. Node indices are 0-based throughout.

use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::Permutation;

/// How the hidden permutation of an instance is chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TruthMode {
    UniformRandom,
    Identity,
    Explicit(Permutation),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "dot")]
    DotProduct,
    #[serde(rename = "dist")]
    Distance,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::DotProduct => "dot",
            ModelKind::Distance => "dist",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dot" | "dot-product" | "DotProduct" => Ok(ModelKind::DotProduct),
            "dist" | "distance" | "Distance" => Ok(ModelKind::Distance),
            _ => Err(Error::InvalidParameter(
                "model kind must be `dot` or `dist`",
            )),
        }
    }
}

/// Latent data of one sampled trial.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInstance {
    sigma: f64,
    seed: u64,
    x: DMatrix<f64>,
    z: DMatrix<f64>,
    y: DMatrix<f64>,
    truth: Permutation,
}

impl ModelInstance {
    /// Assembles an instance from explicit latent matrices; `y` is derived.
    pub fn from_parts(
        x: DMatrix<f64>,
        z: DMatrix<f64>,
        sigma: f64,
        truth: Permutation,
        seed: u64,
    ) -> Result<Self> {
        let (n, d) = x.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDimension { n, d });
        }
        if z.shape() != (n, d) {
            return Err(Error::DimensionMismatch("z must have the same shape as x"));
        }
        if truth.len() != n {
            return Err(Error::PermutationLengthMismatch {
                expected: n,
                got: truth.len(),
            });
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidParameter(
                "sigma must be finite and non-negative",
            ));
        }
        let y = DMatrix::from_fn(n, d, |i, j| x[(truth[i], j)] + sigma * z[(i, j)]);
        Ok(Self {
            sigma,
            seed,
            x,
            z,
            y,
            truth,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn truth(&self) -> &Permutation {
        &self.truth
    }
}

fn standard_normal_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> DMatrix<f64> {
    // Row-major draw order so the stream layout matches the on-disk layout.
    let data: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(rng)).collect();
    DMatrix::from_row_slice(n, d, &data)
}

/// Draws `x`, then `z`, then (for `UniformRandom`) the hidden permutation from
/// a ChaCha8 stream seeded with `seed`.
pub fn sample_instance(
    n: usize,
    d: usize,
    sigma: f64,
    seed: u64,
    truth_mode: TruthMode,
) -> Result<ModelInstance> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidDimension { n, d });
    }
    if let TruthMode::Explicit(p) = &truth_mode {
        if p.len() != n {
            return Err(Error::PermutationLengthMismatch {
                expected: n,
                got: p.len(),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = standard_normal_matrix(&mut rng, n, d);
    let z = standard_normal_matrix(&mut rng, n, d);
    let truth = match truth_mode {
        TruthMode::UniformRandom => Permutation::random(n, &mut rng),
        TruthMode::Identity => Permutation::identity(n),
        TruthMode::Explicit(p) => p,
    };
    ModelInstance::from_parts(x, z, sigma, truth, seed)
}

/// The two observed `n × n` matrices handed to the matcher.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPair {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub kind: ModelKind,
    pub d_hint: usize,
}

impl ObservationPair {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Checks the structural invariants of the pair for its kind: symmetry,
    /// plus PSD with rank at most `d_hint` (dot product) or zero diagonal and
    /// non-negative entries (distance).
    pub fn validate(&self) -> Result<()> {
        if !self.a.is_square() || self.a.shape() != self.b.shape() {
            return Err(Error::DimensionMismatch(
                "observations must be square and of equal size",
            ));
        }
        for m in [&self.a, &self.b] {
            let asymmetry = crate::spectral::relative_asymmetry(m);
            if asymmetry > crate::spectral::SYMMETRY_TOL {
                return Err(Error::NotSymmetric { asymmetry });
            }
            match self.kind {
                ModelKind::DotProduct => {
                    let ev = m.clone().symmetric_eigenvalues();
                    let top = ev.max();
                    if ev.min() < -1e-8 * top.abs() {
                        return Err(Error::InvalidParameter(
                            "dot-product observation is not PSD",
                        ));
                    }
                    if ev.iter().filter(|&&v| v > 1e-8 * top).count() > self.d_hint {
                        return Err(Error::InvalidParameter(
                            "dot-product observation rank exceeds d",
                        ));
                    }
                }
                ModelKind::Distance => {
                    if m.diagonal().iter().any(|&v| v != 0.0) || m.iter().any(|&v| v < 0.0) {
                        return Err(Error::NotDistanceMatrix(
                            "distance observation invariants violated",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

// Both helpers fill the upper triangle and mirror it, so outputs are exactly
// symmetric and exactly equivariant under row permutations of the input.
fn gram(points: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = points.shape();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut s = 0.0;
            for k in 0..d {
                s += points[(i, k)] * points[(j, k)];
            }
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    g
}

fn pairwise_distances(points: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, d) = points.shape();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = 0.0;
            for k in 0..d {
                let t = points[(i, k)] - points[(j, k)];
                s += t * t;
            }
            let s = libm::sqrt(s);
            g[(i, j)] = s;
            g[(j, i)] = s;
        }
    }
    g
}

/// `a = x·xᵀ`, `b = y·yᵀ`.
pub fn observe_dot(instance: &ModelInstance) -> ObservationPair {
    ObservationPair {
        a: gram(instance.x()),
        b: gram(instance.y()),
        kind: ModelKind::DotProduct,
        d_hint: instance.d(),
    }
}

/// Unsquared Euclidean distance matrices of the rows of `x` and `y`.
pub fn observe_distance(instance: &ModelInstance) -> ObservationPair {
    ObservationPair {
        a: pairwise_distances(instance.x()),
        b: pairwise_distances(instance.y()),
        kind: ModelKind::Distance,
        d_hint: instance.d(),
    }
}

pub fn observe(instance: &ModelInstance, kind: ModelKind) -> ObservationPair {
    match kind {
        ModelKind::DotProduct => observe_dot(instance),
        ModelKind::Distance => observe_distance(instance),
    }
}
