//! Maximum-weight linear assignment.
//!
//! [`solve_max_lap`] is a Jonker-Volgenant style shortest augmenting path
//! solver with row/column potentials. Maximization is reduced to a
//! non-negative minimization by `cost[i][j] = max_k c[i][k] − c[i][j]`.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permutation::Permutation;

/// Largest `n` accepted by [`brute_force_lap`].
pub const BRUTE_FORCE_CAP: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignmentSolution {
    /// Row `i` is assigned to column `perm[i]`.
    pub perm: Permutation,
    /// `Σ_i c[i, perm[i]]`, summed in row order.
    pub value: f64,
}

/// `Σ_i c[i, perm[i]]` in row order.
pub fn assignment_value(c: &DMatrix<f64>, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| c[(i, j)]).sum()
}

fn check_square_finite(c: &DMatrix<f64>) -> Result<()> {
    if !c.is_square() {
        return Err(Error::DimensionError("cost matrix must be square"));
    }
    for j in 0..c.ncols() {
        for i in 0..c.nrows() {
            if !c[(i, j)].is_finite() {
                return Err(Error::NonFiniteCost { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// A permutation maximizing `Σ_i c[i, π(i)]`, in `O(n³)` worst case.
pub fn solve_max_lap(c: &DMatrix<f64>) -> Result<AssignmentSolution> {
    check_square_finite(c)?;
    let n = c.nrows();
    if n == 0 {
        return Ok(AssignmentSolution {
            perm: Permutation::identity(0),
            value: 0.0,
        });
    }
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        let row_max = c.row(i).max();
        for j in 0..n {
            cost[i * n + j] = row_max - c[(i, j)];
        }
    }
    let col4row = lapjv(&cost, n);
    let value = assignment_value(c, &col4row);
    let perm = Permutation::new(col4row).expect("augmenting path yields a perfect matching");
    Ok(AssignmentSolution { perm, value })
}

const UNASSIGNED: usize = usize::MAX;

/// Minimizes `Σ cost[i*n + col4row[i]]` over perfect matchings. `cost` must
/// be finite. Jonker-Volgenant column reduction and reduction transfer, then
/// shortest augmenting paths for the rows still free. Augmenting row
/// reduction is left out: in floating point its price decrements can vanish
/// and the row it displaces keeps bouncing.
fn lapjv(cost: &[f64], n: usize) -> Vec<usize> {
    let row = |i: usize| &cost[i * n..(i + 1) * n];
    let mut col4row = vec![UNASSIGNED; n];
    let mut row4col = vec![UNASSIGNED; n];

    // Column reduction. Rows are scanned in order so the lowest row index
    // wins ties.
    let mut v = row(0).to_vec();
    let mut argmin = vec![0usize; n];
    for i in 1..n {
        for ((vj, am), &c) in v.iter_mut().zip(argmin.iter_mut()).zip(row(i)) {
            if c < *vj {
                *vj = c;
                *am = i;
            }
        }
    }
    let mut matches = vec![0u32; n];
    for j in (0..n).rev() {
        let imin = argmin[j];
        matches[imin] += 1;
        if matches[imin] == 1 {
            col4row[imin] = j;
            row4col[j] = imin;
        }
    }

    // Reduction transfer.
    let mut free: Vec<usize> = Vec::new();
    for i in 0..n {
        match matches[i] {
            0 => free.push(i),
            1 => {
                let j1 = col4row[i];
                let mut min = f64::INFINITY;
                for (j, (&c, &vj)) in row(i).iter().zip(&v).enumerate() {
                    if j != j1 && c - vj < min {
                        min = c - vj;
                    }
                }
                if min.is_finite() {
                    v[j1] -= min;
                }
            }
            _ => {}
        }
    }

    // Shortest augmenting paths from each remaining free row.
    let mut dist = vec![0.0; n];
    let mut pred = vec![0usize; n];
    let mut collist: Vec<usize> = (0..n).collect();
    for &start in &free {
        for (j, (&c, &vj)) in row(start).iter().zip(&v).enumerate() {
            dist[j] = c - vj;
            pred[j] = start;
            collist[j] = j;
        }
        // collist[..low] scanned, collist[low..up] at the current minimum.
        let mut low = 0;
        let mut up = 0;
        let mut last = 0;
        let mut min = 0.0;
        let end_of_path = 'search: loop {
            if up == low {
                last = low;
                min = dist[collist[up]];
                up += 1;
                let scan_from = up;
                for k in scan_from..n {
                    let j = collist[k];
                    let h = dist[j];
                    if h <= min {
                        if h < min {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                }
                for &j in &collist[low..up] {
                    if row4col[j] == UNASSIGNED {
                        break 'search j;
                    }
                }
            }
            let j1 = collist[low];
            low += 1;
            let i = row4col[j1];
            let ci = row(i);
            let h = ci[j1] - v[j1] - min;
            let scan_from = up;
            for k in scan_from..n {
                let j = collist[k];
                let v2 = ci[j] - v[j] - h;
                if v2 < dist[j] {
                    pred[j] = i;
                    if v2 == min {
                        if row4col[j] == UNASSIGNED {
                            break 'search j;
                        }
                        collist[k] = collist[up];
                        collist[up] = j;
                        up += 1;
                    }
                    dist[j] = v2;
                }
            }
        };
        // Columns scanned before the last minimum search get their prices raised.
        for &j in &collist[..last] {
            v[j] += dist[j] - min;
        }
        let mut j = end_of_path;
        loop {
            let i = pred[j];
            row4col[j] = i;
            core::mem::swap(&mut col4row[i], &mut j);
            if i == start {
                break;
            }
        }
    }
    col4row
}

/// Exhaustive maximum over all `n!` permutations, visited in lexicographic
/// order; the first maximizer wins.
pub fn brute_force_lap(c: &DMatrix<f64>) -> Result<AssignmentSolution> {
    check_square_finite(c)?;
    let n = c.nrows();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let mut current: Vec<usize> = (0..n).collect();
    let mut best = current.clone();
    let mut best_value = assignment_value(c, &current);
    while next_permutation(&mut current) {
        let value = assignment_value(c, &current);
        if value > best_value {
            best_value = value;
            best.copy_from_slice(&current);
        }
    }
    Ok(AssignmentSolution {
        perm: Permutation::new(best)?,
        value: best_value,
    })
}

/// Advances `p` to the next permutation in lexicographic order; returns
/// `false` (leaving `p` sorted) after the last one.
pub fn next_permutation(p: &mut [usize]) -> bool {
    if p.len() < 2 {
        return false;
    }
    let mut i = p.len() - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        p.reverse();
        return false;
    }
    let mut j = p.len() - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cost(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, n, |_, _| rng.random_range(-10.0..10.0))
    }

    #[test]
    fn small_examples() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let s = solve_max_lap(&c).unwrap();
        assert!(s.perm.is_identity());
        assert_eq!(s.value, 5.0);

        let s = solve_max_lap(&DMatrix::identity(6, 6)).unwrap();
        assert!(s.perm.is_identity());
        assert_eq!(s.value, 6.0);

        let s = solve_max_lap(&DMatrix::zeros(0, 0)).unwrap();
        assert!(s.perm.is_empty());
    }

    #[test]
    fn brute_force_examples() {
        let s = brute_force_lap(&DMatrix::from_element(1, 1, 0.0)).unwrap();
        assert_eq!(s.perm.as_slice(), &[0]);
        assert_eq!(s.value, 0.0);

        let s = brute_force_lap(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).unwrap();
        assert_eq!(s.perm.as_slice(), &[1, 0]);
        assert_eq!(s.value, 4.0);

        let s = brute_force_lap(&DMatrix::from_element(4, 4, 2.5)).unwrap();
        assert!(s.perm.is_identity());
        assert_eq!(s.value, 10.0);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = DMatrix::zeros(3, 3);
        c[(1, 2)] = f64::NAN;
        assert_eq!(
            solve_max_lap(&c),
            Err(Error::NonFiniteCost { row: 1, col: 2 })
        );
        c[(1, 2)] = f64::NEG_INFINITY;
        assert!(matches!(
            brute_force_lap(&c),
            Err(Error::NonFiniteCost { .. })
        ));
        assert!(matches!(
            brute_force_lap(&DMatrix::zeros(11, 11)),
            Err(Error::TooLarge { n: 11, cap: 10 })
        ));
    }

    #[test]
    fn matches_exhaustive_search_on_7x7() {
        for seed in 0..200 {
            let c = random_cost(7, seed);
            let fast = solve_max_lap(&c).unwrap();
            let slow = brute_force_lap(&c).unwrap();
            assert_eq!(fast.value, slow.value, "seed {seed}");
        }
    }

    #[test]
    fn handles_heavy_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let c = DMatrix::from_fn(6, 6, |_, _| rng.random_range(0..3) as f64);
            assert_eq!(
                solve_max_lap(&c).unwrap().value,
                brute_force_lap(&c).unwrap().value
            );
        }
    }

    #[test]
    fn lexicographic_enumeration_is_complete() {
        let mut p = [0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, [0, 1, 2, 3]);
    }
}
