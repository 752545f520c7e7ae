//! The 3×3 family with speeds `(-1, -1/2, 1)`, `Q = (1 0)` and couplings
//! `g21 = a`, `g32 = b`: closed-form solutions, the integral equation for the
//! control at `T = 2` and its critical products `ab`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::matrix::Matrix;
use crate::quadrature::integrate_pieces;
use crate::simulator::{ControlSignal, SystemSpec};
use crate::speeds::SpeedProfile;

pub const SPEEDS: [f64; 3] = [-1.0, -0.5, 1.0];
/// Control horizon at which the family is critical.
pub const CRITICAL_TIME: f64 = 2.0;
/// Condition estimate above which a collocation system with `n` cells is
/// reported as `NearSingular`.
///
/// The discrete critical products sit `O(n^-2)` away from the exact ones and
/// the estimate grows like `2.5 / |ab - ab_n|`, so the threshold scales with
/// `n^2`.
pub fn near_singular_threshold(n: usize) -> f64 {
    (0.1 * (n * n) as f64).max(1e4)
}
const QUAD_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CounterexampleSpec {
    pub a: f64,
    pub b: f64,
}

/// Initial data, one function per component.
pub struct InitialData<'a> {
    pub y: [&'a (dyn Fn(f64) -> f64 + Sync); 3],
}

/// The two boundary controls.
pub struct Controls<'a> {
    pub u: [&'a (dyn Fn(f64) -> f64 + Sync); 2],
}

impl CounterexampleSpec {
    pub fn new(a: f64, b: f64) -> Self {
        Self { a, b }
    }

    pub fn ab(&self) -> f64 {
        self.a * self.b
    }

    pub fn profile() -> SpeedProfile<f64> {
        SpeedProfile::constant(&SPEEDS, 2).expect("fixed speeds are valid")
    }

    pub fn system(&self) -> SystemSpec {
        let mut g = Matrix::zeros(3, 2);
        g[(1, 0)] = self.a;
        g[(2, 1)] = self.b;
        SystemSpec::new(
            Self::profile(),
            MatrixField::zeros(3, 3),
            Matrix::from_rows(vec![vec![1.0, 0.0]]).expect("one row"),
            MatrixField::Constant(g),
        )
        .expect("dimensions are fixed")
    }

    /// `y_1(s, 0)`.
    pub fn trace1(&self, y0: &InitialData, u: &Controls, s: f64) -> f64 {
        if s - 1.0 >= 0.0 {
            (u.u[0])(s - 1.0)
        } else {
            (y0.y[0])(s)
        }
    }

    fn trace1_integral(&self, y0: &InitialData, u: &Controls, lo: f64, hi: f64) -> f64 {
        integrate_pieces(&|s| self.trace1(y0, u, s), lo, hi, &[1.0], QUAD_TOL)
    }

    /// `y_2(s, 0)`.
    pub fn trace2(&self, y0: &InitialData, u: &Controls, s: f64) -> f64 {
        self.y2(y0, u, s, 0.0)
    }

    fn y2(&self, y0: &InitialData, u: &Controls, t: f64, x: f64) -> f64 {
        if t - 2.0 * (1.0 - x) >= 0.0 {
            let s0 = t - 2.0 * (1.0 - x);
            (u.u[1])(s0) + self.a * self.trace1_integral(y0, u, s0, t)
        } else {
            (y0.y[1])(0.5 * t + x) + self.a * self.trace1_integral(y0, u, 0.0, t)
        }
    }

    /// Evaluates the three components at `(t, x)`. On the characteristic lines
    /// separating the two branches the branch fed by boundary data is used.
    pub fn solution(&self, y0: &InitialData, u: &Controls, t: f64, x: f64) -> [f64; 3] {
        let y1 = if t - 1.0 + x >= 0.0 {
            (u.u[0])(t - 1.0 + x)
        } else {
            (y0.y[0])(t + x)
        };
        let y2 = self.y2(y0, u, t, x);
        let y2_integral = |lo: f64, hi: f64| {
            if self.b == 0.0 {
                0.0
            } else {
                integrate_pieces(&|s| self.trace2(y0, u, s), lo, hi, &[1.0, 2.0], QUAD_TOL)
            }
        };
        let y3 = if t - x >= 0.0 {
            self.trace1(y0, u, t - x) + self.b * y2_integral(t - x, t)
        } else {
            (y0.y[2])(x - t) + self.b * y2_integral(0.0, t)
        };
        [y1, y2, y3]
    }

    /// Right-hand side of the integral equation for `u_1` on `(0, 1)`.
    pub fn rhs(&self, y0: &InitialData, t: f64) -> f64 {
        let y2 = integrate_pieces(&|s| (y0.y[1])(0.5 * s), 1.0 + t, 2.0, &[], QUAD_TOL);
        let y1 = integrate_pieces(&|s| (y0.y[0])(s), 0.0, 1.0, &[], QUAD_TOL);
        -self.b * y2 - self.ab() * (1.0 - t) * y1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalProduct {
    pub k: usize,
    pub analytic: f64,
    pub shooting: f64,
}

/// `α(1)` for `α'' = ab α`, `α(0) = 1`, `α'(0) = 0`, by classical RK4.
pub fn shoot(ab: f64, steps: usize) -> f64 {
    let h = 1.0 / steps as f64;
    let f = |y: [f64; 2]| [y[1], ab * y[0]];
    let mut y = [1.0, 0.0];
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = f([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = f([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for d in 0..2 {
            y[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
        }
    }
    y[0]
}

const SHOOTING_STEPS: usize = 4000;
const SCAN_STEP: f64 = 0.25;

/// The first `k_max + 1` products `ab < 0` for which the control equation at
/// `T = 2` is not uniquely solvable, analytically and by shooting.
pub fn critical_products(k_max: usize) -> Vec<CriticalProduct> {
    let mut roots = Vec::with_capacity(k_max + 1);
    let mut hi = 0.0;
    let mut f_hi = shoot(hi, SHOOTING_STEPS);
    while roots.len() <= k_max {
        let lo = hi - SCAN_STEP;
        let f_lo = shoot(lo, SHOOTING_STEPS);
        if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
            roots.push(bisect(|ab| shoot(ab, SHOOTING_STEPS), lo, hi, 1e-13));
        }
        hi = lo;
        f_hi = f_lo;
    }
    roots
        .into_iter()
        .enumerate()
        .map(|(k, shooting)| CriticalProduct {
            k,
            analytic: critical_product(k),
            shooting,
        })
        .collect()
}

pub fn critical_product(k: usize) -> f64 {
    -(PI / 2.0 + k as f64 * PI).powi(2)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct FredholmSolution {
    pub nodes: Vec<f64>,
    pub u: Vec<f64>,
    pub condition: f64,
}

impl FredholmSolution {
    pub fn eval(&self, t: f64) -> f64 {
        crate::simulator::interp(&self.nodes, &self.u, t)
    }
}

/// Weights `w_j = ∫ hat_j(σ) (1 - max(t, σ)) dσ` for a node `t` of the uniform
/// grid with `n` cells. The integrand is quadratic per cell, so Simpson is
/// exact.
fn kernel_row(n: usize, t: f64) -> Vec<f64> {
    let h = 1.0 / n as f64;
    let kernel = |s: f64| 1.0 - t.max(s);
    let mut w = vec![0.0; n + 1];
    for c in 0..n {
        let (a, b) = (c as f64 * h, (c + 1) as f64 * h);
        let m = 0.5 * (a + b);
        // left hat falls from 1 to 0, right hat rises
        w[c] += h / 6.0 * (kernel(a) + 4.0 * 0.5 * kernel(m));
        w[c + 1] += h / 6.0 * (4.0 * 0.5 * kernel(m) + kernel(b));
    }
    w
}

fn condition_of(a: &DMatrix<f64>) -> f64 {
    let sv = a.singular_values();
    let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

fn solve_dense(a: DMatrix<f64>, rhs: DVector<f64>, threshold: f64) -> Result<(DVector<f64>, f64)> {
    let condition = condition_of(&a);
    if condition.is_nan() || condition > threshold {
        return Err(Error::NearSingular { condition });
    }
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or(Error::NearSingular { condition })?;
    Ok((x, condition))
}

/// System matrix of the piecewise-linear collocation with `n` cells.
pub fn collocation_matrix(ab: f64, n: usize) -> DMatrix<f64> {
    let h = 1.0 / n as f64;
    let mut a = DMatrix::identity(n + 1, n + 1);
    for k in 0..=n {
        for (j, w) in kernel_row(n, k as f64 * h).into_iter().enumerate() {
            a[(k, j)] += ab * w;
        }
    }
    a
}

/// Solves `u(t) + ab ∫_t^1 ∫_0^s u(σ) dσ ds = f(t)` on `n` uniform cells by
/// collocation at the nodes with a piecewise-linear `u`.
pub fn fredholm_solve(ab: f64, f: &dyn Fn(f64) -> f64, n: usize) -> Result<FredholmSolution> {
    fredholm_solve_with_threshold(ab, f, n, near_singular_threshold(n))
}

pub fn fredholm_solve_with_threshold(
    ab: f64,
    f: &dyn Fn(f64) -> f64,
    n: usize,
    threshold: f64,
) -> Result<FredholmSolution> {
    if n < 16 {
        return Err(Error::DomainError(format!(
            "need at least 16 cells, got {n}"
        )));
    }
    let nodes: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
    let rhs = DVector::from_iterator(n + 1, nodes.iter().map(|&t| f(t)));
    let (u, condition) = solve_dense(collocation_matrix(ab, n), rhs, threshold)?;
    Ok(FredholmSolution {
        nodes,
        u: u.iter().copied().collect(),
        condition,
    })
}

/// Midpoint Nyström discretization of the same equation, for cross-checks.
pub fn fredholm_solve_midpoint(
    ab: f64,
    f: &dyn Fn(f64) -> f64,
    n: usize,
) -> Result<FredholmSolution> {
    let h = 1.0 / n as f64;
    let nodes: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * h).collect();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d + ab * h * (1.0 - nodes[i].max(nodes[j]))
    });
    let rhs = DVector::from_iterator(n, nodes.iter().map(|&t| f(t)));
    let (u, condition) = solve_dense(a, rhs, near_singular_threshold(n))?;
    Ok(FredholmSolution {
        nodes,
        u: u.iter().copied().collect(),
        condition,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub ab: f64,
    pub condition: f64,
}

/// Condition estimates of the collocation matrix on `steps + 1` uniform values.
pub fn condition_sweep(lo: f64, hi: f64, steps: usize, n: usize) -> Vec<SweepPoint> {
    (0..=steps)
        .into_par_iter()
        .map(|k| {
            let ab = lo + (hi - lo) * k as f64 / steps.max(1) as f64;
            SweepPoint {
                ab,
                condition: condition_of(&collocation_matrix(ab, n)),
            }
        })
        .collect()
}

fn smallest_singular_value(ab: f64, n: usize) -> f64 {
    collocation_matrix(ab, n)
        .singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Locates the spike of the condition estimate in `[lo, hi]` by golden-section
/// minimization of the smallest singular value.
pub fn locate_spike(lo: f64, hi: f64, n: usize, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (smallest_singular_value(c, n), smallest_singular_value(d, n));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = smallest_singular_value(c, n);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = smallest_singular_value(d, n);
        }
    }
    0.5 * (a + b)
}

/// Null controls at the critical time `T = 2`, on a uniform grid of `[0, 2]`
/// with `2 n` cells.
#[derive(Clone, Debug)]
pub struct CriticalControls {
    pub control: ControlSignal,
    pub fredholm: FredholmSolution,
}

pub fn null_control_t2(
    spec: &CounterexampleSpec,
    y0: &InitialData,
    n: usize,
) -> Result<CriticalControls> {
    null_control_t2_with_threshold(spec, y0, n, near_singular_threshold(n))
}

pub fn null_control_t2_with_threshold(
    spec: &CounterexampleSpec,
    y0: &InitialData,
    n: usize,
    threshold: f64,
) -> Result<CriticalControls> {
    let fredholm = fredholm_solve_with_threshold(spec.ab(), &|t| spec.rhs(y0, t), n, threshold)?;
    let times: Vec<f64> = (0..=2 * n).map(|k| k as f64 / n as f64).collect();
    let u1: Vec<f64> = times
        .iter()
        .enumerate()
        .map(|(k, _)| if k <= n { fredholm.u[k] } else { 0.0 })
        .collect();
    // the segment of u1 on (1, 2) vanishes, so y1(s, 0) = u1(s - 1) on (1, 2)
    let trace = |s: f64| {
        if s < 1.0 {
            (y0.y[0])(s)
        } else {
            fredholm.eval(s - 1.0)
        }
    };
    let mut breaks: Vec<f64> = times.iter().filter(|&&s| s > 1.0).copied().collect();
    breaks.push(1.0);
    let u2: Vec<f64> = times
        .par_iter()
        .map(|&t| -spec.a * integrate_pieces(&trace, t, CRITICAL_TIME, &breaks, QUAD_TOL))
        .collect();
    Ok(CriticalControls {
        control: ControlSignal {
            times,
            values: vec![u1, u2],
        },
        fredholm,
    })
}

/// Data from a smooth `f` on `(0, 1)` with `f(1) = 0` for which the integral
/// equation has right-hand side `f`: `y1 = y3 = 0`, `y2(x) = f'(2x - 1) / b` on
/// `[1/2, 1]`.
pub fn witness_y2(b: f64, f_prime: impl Fn(f64) -> f64, x: f64) -> f64 {
    if x >= 0.5 {
        f_prime(2.0 * x - 1.0) / b
    } else {
        0.0
    }
}

/// Smooth bump supported on `(0.05, 0.95)`.
pub fn wide_bump(x: f64) -> f64 {
    if x <= 0.05 || x >= 0.95 {
        return 0.0;
    }
    let r = (2.0 * x - 1.0) / 0.9;
    (1.0 - 1.0 / (1.0 - r * r)).exp()
}

/// Coefficients `(c1, c2)` such that the controls at `T = 2` for the data
/// `(y1 + c1 w, y2 + c2 w, y3)`, `w` = [`wide_bump`], both start from 0.
///
/// For data vanishing near `x = 1` this makes the boundary values continuous
/// at the corner `(0, 1)`, which the first-order simulator needs to converge
/// at full rate.
pub fn corner_corrections(
    spec: &CounterexampleSpec,
    y0: &InitialData,
    n: usize,
) -> Result<[f64; 2]> {
    let zero = |_: f64| 0.0;
    let start = |y: &InitialData| -> Result<[f64; 2]> {
        let c = null_control_t2(spec, y, n)?.control;
        Ok([c.values[0][0], c.values[1][0]])
    };
    let base = start(y0)?;
    let e1 = start(&InitialData {
        y: [&wide_bump, &zero, &zero],
    })?;
    let e2 = start(&InitialData {
        y: [&zero, &wide_bump, &zero],
    })?;
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    if det.abs() <= 1e-12 * (e1[0].abs() + e1[1].abs()) * (e2[0].abs() + e2[1].abs()) {
        return Err(Error::Singular(
            "corner corrections are not independent".into(),
        ));
    }
    Ok([
        (-base[0] * e2[1] + base[1] * e2[0]) / det,
        (-e1[0] * base[1] + e1[1] * base[0]) / det,
    ])
}
