//! Permutations of `{0, …, n-1}`.
//!
//! A permutation `p` acts on row-indexed data as `(P x)_i = x_{p(i)}`, so the
//! matrix `P(p)` has a one in entry `(i, p(i))` of every row.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// Validates that `map` is a bijection on `0..map.len()`.
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = alloc::vec![false; n];
        for &j in &map {
            if j >= n {
                return Err(Error::NotAPermutation("index out of range"));
            }
            if core::mem::replace(&mut seen[j], true) {
                return Err(Error::NotAPermutation("repeated index"));
            }
        }
        Ok(Self { map })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.shuffle(rng);
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.map
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &j)| i == j)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = alloc::vec![0; self.len()];
        for (i, &j) in self.map.iter().enumerate() {
            inv[j] = i;
        }
        Self { map: inv }
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(Self {
            map: other.map.iter().map(|&j| self.map[j]).collect(),
        })
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &j) in self.map.iter().enumerate() {
            m[(i, j)] = 1.0;
        }
        m
    }

    /// Returns `P(self) · m`, i.e. row `i` of the result is row `self(i)` of `m`.
    pub fn permute_rows(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(
            m.nrows(),
            self.len(),
            "row count must match permutation length"
        );
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(self.map[i], j)])
    }

    /// Returns `P(self) · m · P(self)ᵀ`.
    pub fn conjugate(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert!(m.is_square() && m.nrows() == self.len());
        DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(self.map[i], self.map[j])])
    }
}

impl core::ops::Index<usize> for Permutation {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.map[i]
    }
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;

    fn try_from(map: Vec<usize>) -> Result<Self> {
        Self::new(map)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.map
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn rejects_non_bijections() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        assert!(Permutation::new(vec![1, 0, 2]).is_ok());
        assert!(Permutation::new(vec![]).is_ok());
    }

    #[test]
    fn matrix_action_matches_row_permutation() {
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(p.to_matrix() * &x, p.permute_rows(&x));
        let m = &x * x.transpose();
        let pm = p.to_matrix();
        assert_eq!(&pm * &m * pm.transpose(), p.conjugate(&m));
    }

    #[test]
    fn inverse_and_compose() {
        let p = Permutation::new(vec![3, 1, 0, 2]).unwrap();
        assert!(p.compose(&p.inverse()).unwrap().is_identity());
        assert!(p.inverse().compose(&p).unwrap().is_identity());
    }
}
