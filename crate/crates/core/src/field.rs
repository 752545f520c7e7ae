//! Matrix-valued functions of `x ∈ [0, 1]` used for the couplings `M` and `G`.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub enum MatrixField {
    Constant(Matrix<f64>),
    /// `pieces[k]` holds on `[breaks[k], breaks[k+1])`; `breaks` runs from 0 to 1.
    Piecewise {
        breaks: Vec<f64>,
        pieces: Vec<Matrix<f64>>,
    },
    /// Linear interpolation between knots. A repeated knot marks a jump: the
    /// first copy carries the left limit, the second the right one.
    Sampled {
        xs: Vec<f64>,
        values: Vec<Matrix<f64>>,
    },
}

impl MatrixField {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        MatrixField::Constant(Matrix::zeros(rows, cols))
    }

    pub fn piecewise(breaks: Vec<f64>, pieces: Vec<Matrix<f64>>) -> Result<Self> {
        if pieces.is_empty() || breaks.len() != pieces.len() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} breakpoints for {} pieces",
                breaks.len(),
                pieces.len()
            )));
        }
        if breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::DomainError(
                "piecewise field must span [0, 1]".into(),
            ));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DomainError(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let (r, c) = (pieces[0].rows(), pieces[0].cols());
        if pieces.iter().any(|p| p.rows() != r || p.cols() != c) {
            return Err(Error::DimensionMismatch(
                "pieces have different shapes".into(),
            ));
        }
        Ok(MatrixField::Piecewise { breaks, pieces })
    }

    pub fn sampled(xs: Vec<f64>, values: Vec<Matrix<f64>>) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} knots for {} values",
                xs.len(),
                values.len()
            )));
        }
        if xs[0] != 0.0 || *xs.last().unwrap() != 1.0 || xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::DomainError(
                "knots must be nondecreasing from 0 to 1".into(),
            ));
        }
        Ok(MatrixField::Sampled { xs, values })
    }

    fn first(&self) -> &Matrix<f64> {
        match self {
            MatrixField::Constant(m) => m,
            MatrixField::Piecewise { pieces, .. } => &pieces[0],
            MatrixField::Sampled { values, .. } => &values[0],
        }
    }

    pub fn rows(&self) -> usize {
        self.first().rows()
    }

    pub fn cols(&self) -> usize {
        self.first().cols()
    }

    pub fn is_zero(&self) -> bool {
        match self {
            MatrixField::Constant(m) => m.is_zero(),
            MatrixField::Piecewise { pieces, .. } => pieces.iter().all(Matrix::is_zero),
            MatrixField::Sampled { values, .. } => values.iter().all(Matrix::is_zero),
        }
    }

    /// Points in `(0, 1)` where the field may jump.
    pub fn jumps(&self) -> Vec<f64> {
        match self {
            MatrixField::Constant(_) => vec![],
            MatrixField::Piecewise { breaks, .. } => breaks[1..breaks.len() - 1].to_vec(),
            MatrixField::Sampled { xs, .. } => xs
                .windows(2)
                .filter(|w| w[0] == w[1])
                .map(|w| w[0])
                .collect(),
        }
    }

    /// Points where the field is not smooth (jumps and interpolation knots).
    pub fn knots(&self) -> Vec<f64> {
        match self {
            MatrixField::Sampled { xs, .. } => {
                let mut k = xs.clone();
                k.dedup();
                k
            }
            _ => {
                let mut k = vec![0.0];
                k.extend(self.jumps());
                k.push(1.0);
                k
            }
        }
    }

    /// Right-continuous evaluation (left limit at `x = 1`).
    pub fn eval(&self, x: f64) -> Matrix<f64> {
        self.eval_side(x, true)
    }

    /// Evaluation taking the right (`right = true`) or left limit at jumps.
    pub fn eval_side(&self, x: f64, right: bool) -> Matrix<f64> {
        match self {
            MatrixField::Constant(m) => m.clone(),
            MatrixField::Piecewise { breaks, pieces } => {
                let k = if right {
                    breaks.partition_point(|&b| b <= x)
                } else {
                    breaks.partition_point(|&b| b < x)
                };
                pieces[k.clamp(1, pieces.len()) - 1].clone()
            }
            MatrixField::Sampled { xs, values } => {
                // lo and hi bracket x; repeated knots resolve to the requested side
                let idx = if right {
                    xs.partition_point(|&b| b <= x)
                } else {
                    xs.partition_point(|&b| b < x)
                };
                if idx == 0 {
                    return values[0].clone();
                }
                if idx >= xs.len() {
                    return values[xs.len() - 1].clone();
                }
                let (lo, hi) = (idx - 1, idx);
                let (a, b) = (xs[lo], xs[hi]);
                let w = ((x - a) / (b - a)).clamp(0.0, 1.0);
                let (va, vb) = (&values[lo], &values[hi]);
                let mut out = va.clone();
                for i in 0..out.rows() {
                    for j in 0..out.cols() {
                        out[(i, j)] = (1.0 - w) * va[(i, j)] + w * vb[(i, j)];
                    }
                }
                out
            }
        }
    }

    /// Samples `f(x, right)` on `cells` uniform cells plus `extra` knots,
    /// duplicating the knots listed in `jumps` to keep one-sided limits.
    pub fn sample_with(
        cells: usize,
        extra: &[f64],
        jumps: &[f64],
        f: impl Fn(f64, bool) -> Matrix<f64>,
    ) -> Result<Self> {
        let mut knots: Vec<f64> = (0..=cells).map(|k| k as f64 / cells as f64).collect();
        knots.extend(extra.iter().copied().filter(|x| (0.0..=1.0).contains(x)));
        knots.extend(jumps.iter().copied().filter(|x| *x > 0.0 && *x < 1.0));
        knots.sort_by(f64::total_cmp);
        knots.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
        let is_jump = |x: f64| jumps.iter().any(|j| (j - x).abs() <= 1e-14) && x > 0.0 && x < 1.0;
        let mut xs = Vec::with_capacity(knots.len() + jumps.len());
        let mut values = Vec::with_capacity(knots.len() + jumps.len());
        for &x in &knots {
            if is_jump(x) {
                xs.push(x);
                values.push(f(x, false));
            }
            xs.push(x);
            values.push(f(x, true));
        }
        Self::sampled(xs, values)
    }
}
