//! Canonical `L Q U = Q0` decomposition of boundary coupling matrices.
//!
//! Elimination runs in two passes and never permutes rows:
//!
//! 1. Scanning rows top to bottom, the pivot of a row is its first nonzero
//!    entry lying outside previously used pivot columns. Entries to its right
//!    are removed by rightward column substitutions (accumulated in `U`).
//! 2. Downward row substitutions clear each pivot column below its pivot,
//!    then pivots are normalized to one (accumulated in `L`).
//!
//! The resulting 0/1 pattern is unique; `L` and `U` are one valid witness.

use serde::Serialize;

use crate::error::Result;
use crate::matrix::Matrix;
use crate::scalar::{Field, DEFAULT_PIVOT_TOLERANCE};

/// A pivot position, zero-based (`row` indexes the positive family, `col`
/// the negative one).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Pivot {
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalForm<S> {
    pub q0: Matrix<S>,
    pub l: Matrix<S>,
    pub u: Matrix<S>,
    pub pivots: Vec<Pivot>,
}

impl<S: Field> CanonicalForm<S> {
    /// Rank of `Q`.
    pub fn rho(&self) -> usize {
        self.pivots.len()
    }

    /// Largest `i` such that the first `i` rows of `Q` have rank `i`.
    pub fn rho0(&self) -> usize {
        self.pivots
            .iter()
            .enumerate()
            .take_while(|(k, pv)| pv.row == *k)
            .count()
    }

    pub fn l_inverse(&self) -> Result<Matrix<S>> {
        self.l.inverse_lower()
    }

    pub fn u_inverse(&self) -> Result<Matrix<S>> {
        self.u.inverse_upper()
    }

    /// One-based `(r_k, c_k)` pairs.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.pivots
            .iter()
            .map(|pv| (pv.row + 1, pv.col + 1))
            .collect()
    }
}

/// Canonical form with the default relative pivot tolerance for floating
/// point inputs (exact types ignore the tolerance).
pub fn canonical_form<S: Field>(q: &Matrix<S>) -> CanonicalForm<S> {
    canonical_form_with_tolerance(q, DEFAULT_PIVOT_TOLERANCE)
}

pub fn canonical_form_with_tolerance<S: Field>(q: &Matrix<S>, tol: f64) -> CanonicalForm<S> {
    let (p, m) = (q.rows(), q.cols());
    let scale = q.max_abs();
    let negligible = |v: &S| v.is_zero() || v.is_negligible(scale, tol);

    let mut a = q.clone();
    let mut u = Matrix::<S>::identity(m);
    let mut used = vec![false; m];
    let mut pivots = Vec::new();

    for r in 0..p {
        let Some(c) = (0..m).find(|&c| !used[c] && !negligible(&a[(r, c)])) else {
            continue;
        };
        let piv = a[(r, c)].clone();
        for j in (c + 1)..m {
            if negligible(&a[(r, j)]) {
                continue;
            }
            // C_j <- C_j - (a_rj / a_rc) C_c
            let factor = a[(r, j)].clone() / piv.clone();
            for i in 0..p {
                let delta = factor.clone() * a[(i, c)].clone();
                a[(i, j)] = a[(i, j)].clone() - delta;
            }
            for i in 0..m {
                let delta = factor.clone() * u[(i, c)].clone();
                u[(i, j)] = u[(i, j)].clone() - delta;
            }
            a[(r, j)] = S::zero();
        }
        used[c] = true;
        pivots.push(Pivot { row: r, col: c });
    }

    let mut l = Matrix::<S>::identity(p);
    for pv in &pivots {
        let piv = a[(pv.row, pv.col)].clone();
        for i in (pv.row + 1)..p {
            if negligible(&a[(i, pv.col)]) {
                continue;
            }
            // R_i <- R_i - (a_ic / a_rc) R_r
            let factor = a[(i, pv.col)].clone() / piv.clone();
            for j in 0..m {
                let delta = factor.clone() * a[(pv.row, j)].clone();
                a[(i, j)] = a[(i, j)].clone() - delta;
            }
            for j in 0..p {
                let delta = factor.clone() * l[(pv.row, j)].clone();
                l[(i, j)] = l[(i, j)].clone() - delta;
            }
        }
    }
    for pv in &pivots {
        let piv = a[(pv.row, pv.col)].clone();
        for j in 0..p {
            l[(pv.row, j)] = l[(pv.row, j)].clone() / piv.clone();
        }
    }

    let mut q0 = Matrix::<S>::zeros(p, m);
    for pv in &pivots {
        q0[(pv.row, pv.col)] = S::one();
    }
    CanonicalForm { q0, l, u, pivots }
}

/// Whether `q0` is a canonical 0/1 pattern: every entry is 0 or 1 and each
/// row and each column holds at most one 1.
pub fn is_canonical<S: Field>(q0: &Matrix<S>) -> bool {
    let mut col_used = vec![false; q0.cols()];
    for i in 0..q0.rows() {
        let mut row_has_one = false;
        for j in 0..q0.cols() {
            let v = &q0[(i, j)];
            if v.is_zero() {
                continue;
            }
            if *v != S::one() || row_has_one || col_used[j] {
                return false;
            }
            row_has_one = true;
            col_used[j] = true;
        }
    }
    true
}

/// `rho_0` of `Q`, read off the canonical pivots.
pub fn rho_zero<S: Field>(q: &Matrix<S>) -> usize {
    canonical_form(q).rho0()
}
