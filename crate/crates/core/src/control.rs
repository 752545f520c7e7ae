//! Explicit finite-time stabilizing feedback, constructive open-loop null
//! controls for canonical systems, and numerical null-controllability checks.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::lcu::{canonical_form, is_canonical};
use crate::matrix::Matrix;
use crate::mintime::{inf_time, sup_time, TIME_TOLERANCE};
use crate::quadrature::integrate_pieces;
use crate::scalar::Field;
use crate::simulator::{
    l2_norm, sample_state, simulate, BoundaryInput, ControlSignal, SimOptions, StateView,
    SystemSpec,
};
use crate::speeds::SpeedProfile;

/// One term `weight * y_source(t, position)` of a feedback law.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tap {
    pub source: usize,
    pub position: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeedbackLaw {
    /// `taps[i]` defines `u_i`.
    pub taps: Vec<Vec<Tap>>,
    pub settling_time: f64,
}

impl FeedbackLaw {
    pub fn eval(&self, view: &StateView) -> Vec<f64> {
        self.taps
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| t.weight * view.sample(t.source, t.position))
                    .sum()
            })
            .collect()
    }

    pub fn input(&self) -> BoundaryInput<'_> {
        BoundaryInput::Feedback(Box::new(move |view| self.eval(view)))
    }
}

/// `u_i(t) = -Σ_{k>i} u^{ik} y_k(t, ζ_ik(1))` with `(u^{ik}) = U^{-1}` from the
/// canonical decomposition of `q`.
pub fn feedback_law<S: Field>(profile: &SpeedProfile<f64>, q: &Matrix<S>) -> Result<FeedbackLaw> {
    let m = profile.m();
    let settling_time = inf_time(profile, q)?;
    let u_inv = canonical_form(q).u_inverse()?;
    let mut taps = Vec::with_capacity(m);
    for i in 0..m {
        let mut row = Vec::new();
        for k in i + 1..m {
            let w = u_inv[(i, k)].to_f64();
            if w != 0.0 {
                row.push(Tap {
                    source: k,
                    position: profile.zeta(i, k, 1.0)?,
                    weight: -w,
                });
            }
        }
        taps.push(row);
    }
    Ok(FeedbackLaw {
        taps,
        settling_time,
    })
}

fn field_entry_vanishes(field: &MatrixField, i: usize, j: usize) -> bool {
    match field {
        MatrixField::Constant(m) => m[(i, j)] == 0.0,
        MatrixField::Piecewise { pieces, .. } => pieces.iter().all(|p| p[(i, j)] == 0.0),
        MatrixField::Sampled { values, .. } => values.iter().all(|p| p[(i, j)] == 0.0),
    }
}

/// Open-loop control on a uniform time grid, with the intervals where it is
/// determined by the construction.
#[derive(Clone, Debug)]
pub struct NullControl {
    pub control: ControlSignal,
    /// `(component, start, end)` of each determined interval.
    pub determined: Vec<(usize, f64, f64)>,
}

/// Builds a null control in time `t_final` for a system with `M = 0`,
/// canonical `Q`, `G_{--} = 0` and `G_{+-}` vanishing on and below-right of
/// every pivot, provided `t_final` reaches the largest minimal time.
///
/// Components outside the first `ρ0` pivot columns are set to zero. Pivot
/// controls are determined by descending induction on the pivot index; the
/// boundary traces they need are exact transports, as the negative family is
/// uncoupled.
pub fn synthesize_null_control(
    system: &SystemSpec,
    y0: &(dyn Fn(usize, f64) -> f64 + Sync),
    t_final: f64,
    steps: usize,
) -> Result<NullControl> {
    let prof = &system.profile;
    let (m, p) = (prof.m(), prof.p());
    if !system.m.is_zero() {
        return Err(Error::PreconditionViolation(
            "internal coupling must vanish".into(),
        ));
    }
    if !is_canonical(&system.q) {
        return Err(Error::PreconditionViolation(
            "boundary matrix is not in canonical form".into(),
        ));
    }
    for i in 0..m {
        for j in 0..m {
            if !field_entry_vanishes(&system.g, i, j) {
                return Err(Error::PreconditionViolation(format!(
                    "G_-- must vanish, entry ({}, {}) does not",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let cf = canonical_form(&system.q);
    for pv in &cf.pivots {
        for r in pv.row..p {
            if !field_entry_vanishes(&system.g, m + r, pv.col) {
                return Err(Error::PreconditionViolation(format!(
                    "G_+- entry ({}, {}) must vanish for this boundary matrix",
                    m + r + 1,
                    pv.col + 1
                )));
            }
        }
    }
    let bound = sup_time(prof, &system.q)?;
    if t_final < bound - TIME_TOLERANCE * bound.max(1.0) {
        return Err(Error::PreconditionViolation(format!(
            "horizon {t_final} is below the required time {bound}"
        )));
    }

    let times: Vec<f64> = (0..=steps)
        .map(|j| t_final * j as f64 / steps as f64)
        .collect();
    let mut values = vec![vec![0.0; steps + 1]; m];
    let mut determined = Vec::new();
    let t = prof.transport_times().to_vec();
    let g_knots = system.g.knots();

    for k in (0..cf.rho0()).rev() {
        let (c, i) = (cf.pivots[k].col, m + k);
        let (lo, hi) = (t_final - t[i] - t[c], t_final - t[c]);
        determined.push((c, lo.max(0.0), hi));
        let snapshot = ControlSignal {
            times: times.clone(),
            values: values.clone(),
        };
        let trace = |j: usize, s: f64| -> f64 {
            if s < t[j] {
                y0(j, prof.phi_inverse(j, s.max(0.0)).unwrap_or(1.0))
            } else {
                snapshot.eval(j, s - t[j])
            }
        };
        let cols: Vec<usize> = (0..m)
            .filter(|&j| !field_entry_vanishes(&system.g, i, j))
            .collect();
        let new_vals: Vec<(usize, f64)> = times
            .par_iter()
            .enumerate()
            .filter(|(_, &tau)| tau >= lo && tau <= hi)
            .map(|(idx, &tau)| {
                let s_in = tau + t[c];
                let integrand = |s: f64| -> f64 {
                    let xi = prof
                        .phi_inverse(i, (s - s_in).clamp(0.0, t[i]))
                        .unwrap_or(1.0);
                    let g = system.g.eval(xi);
                    cols.iter().map(|&j| g[(i, j)] * trace(j, s)).sum()
                };
                let mut breaks: Vec<f64> = t.iter().take(m).copied().collect();
                breaks.extend(
                    g_knots
                        .iter()
                        .filter_map(|&b| prof.phi(i, b).ok().map(|f| s_in + f)),
                );
                (
                    idx,
                    -integrate_pieces(&integrand, s_in, t_final, &breaks, 1e-11),
                )
            })
            .collect();
        for (idx, v) in new_vals {
            values[c][idx] = v;
        }
    }
    Ok(NullControl {
        control: ControlSignal { times, values },
        determined,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualReport {
    pub nx: Vec<usize>,
    /// `||y(T)||_{L2}` per resolution.
    pub residuals: Vec<f64>,
    /// Residual divided by `||y0||_{L2}`.
    pub relative: Vec<f64>,
    /// Per-component final norms at the coarsest resolution.
    pub components: Vec<f64>,
    /// Least-squares slope of `log(residual)` against `log(h)`.
    pub slope: f64,
}

/// Fitted slope of `log(values)` against `log(1/nx)`.
pub fn refinement_slope(nx: &[usize], values: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = nx
        .iter()
        .zip(values)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&n, &v)| (-(n as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let (mx, my) = (
        pts.iter().map(|p| p.0).sum::<f64>() / k,
        pts.iter().map(|p| p.1).sum::<f64>() / k,
    );
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// Simulates at `nx`, `2 nx` and `4 nx` and reports the final residuals.
pub fn verify_null_control<'a>(
    system: &SystemSpec,
    y0: &(dyn Fn(usize, f64) -> f64 + Sync),
    input: &(dyn Fn() -> BoundaryInput<'a> + Sync),
    t_final: f64,
    nx: usize,
) -> Result<ResidualReport> {
    let levels = vec![nx, 2 * nx, 4 * nx];
    let runs: Vec<Result<(f64, f64, Vec<f64>)>> = levels
        .par_iter()
        .map(|&n| {
            let state = sample_state(system.n(), n, y0);
            let traj = simulate(system, &state, &input(), t_final, &SimOptions::new(n))?;
            Ok((
                traj.final_norm(),
                traj.initial_norm,
                traj.final_component_norms(),
            ))
        })
        .collect();
    let mut residuals = Vec::new();
    let mut relative = Vec::new();
    let mut components = Vec::new();
    for (k, r) in runs.into_iter().enumerate() {
        let (res, init, comps) = r?;
        residuals.push(res);
        relative.push(if init > 0.0 { res / init } else { 0.0 });
        if k == 0 {
            components = comps;
        }
    }
    let slope = refinement_slope(&levels, &residuals);
    Ok(ResidualReport {
        nx: levels,
        residuals,
        relative,
        components,
        slope,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LeastSquaresResult {
    #[serde(skip)]
    pub control: ControlSignal,
    /// `||y(T)||_{L2}` reached by the minimizer.
    pub residual: f64,
    pub initial_norm: f64,
    /// Condition estimate of the regularized Gram matrix of the retained
    /// columns.
    pub condition: f64,
    pub regularization: f64,
    pub columns: usize,
    pub dropped_columns: usize,
}

/// Condition estimates above this abort the least-squares solve.
pub const MAX_GRAM_CONDITION: f64 = 1e12;
const REGULARIZATION: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LeastSquaresOptions {
    /// Hat functions per control component, minus one.
    pub basis: usize,
    /// Weight `α` of the control cost `α ||u||^2_{L2}`.
    pub penalty: f64,
}

impl LeastSquaresOptions {
    /// One hat per two grid cells and no control cost.
    pub fn new(nx: usize) -> Self {
        Self {
            basis: (nx / 2).max(1),
            penalty: 0.0,
        }
    }

    pub fn with_penalty(mut self, penalty: f64) -> Self {
        self.penalty = penalty;
        self
    }

    pub fn with_basis(mut self, basis: usize) -> Self {
        self.basis = basis.max(1);
        self
    }
}

/// Minimizes `||y(T)||^2 + α ||u||^2` over controls spanned by hat functions
/// on a uniform grid of `[0, T]`.
///
/// Without a control cost the minimizer can steer through the numerical
/// diffusion of the scheme, so a small `α` is needed for necessity probes.
pub fn least_squares_control(
    system: &SystemSpec,
    y0: &(dyn Fn(usize, f64) -> f64 + Sync),
    t_final: f64,
    nx: usize,
    ls: &LeastSquaresOptions,
) -> Result<LeastSquaresResult> {
    let basis = ls.basis.max(1);
    let (n, m) = (system.n(), system.n_controls());
    let h = 1.0 / nx as f64;
    let opts = SimOptions::new(nx);
    let weights: Vec<f64> = (0..=nx)
        .map(|k| if k == 0 || k == nx { 0.5 * h } else { h }.sqrt())
        .collect();
    let flatten = |state: &[Vec<f64>]| -> Vec<f64> {
        state
            .iter()
            .flat_map(|row| row.iter().zip(&weights).map(|(v, w)| v * w))
            .collect()
    };
    let nodes: Vec<f64> = (0..=basis)
        .map(|k| t_final * k as f64 / basis as f64)
        .collect();
    let hat = |i: usize, k: usize| {
        let mut values = vec![vec![0.0; basis + 1]; m];
        values[i][k] = 1.0;
        ControlSignal {
            times: nodes.clone(),
            values,
        }
    };
    let init = sample_state(n, nx, y0);
    let free = simulate(system, &init, &BoundaryInput::Zero, t_final, &opts)?;
    let b = DVector::from_vec(flatten(&free.final_state));
    let zero = vec![vec![0.0; nx + 1]; n];
    let labels: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (0..=basis).map(move |k| (i, k)))
        .collect();
    let columns: Vec<Result<Vec<f64>>> = labels
        .par_iter()
        .map(|&(i, k)| {
            let traj = simulate(
                system,
                &zero,
                &BoundaryInput::OpenLoop(hat(i, k)),
                t_final,
                &opts,
            )?;
            Ok(flatten(&traj.final_state))
        })
        .collect();
    let mut cols = Vec::with_capacity(columns.len());
    for c in columns {
        cols.push(c?);
    }
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..cols.len())
        .filter(|&j| norms[j] > 1e-10 * max_norm)
        .collect();
    let rows = b.len();
    let a = DMatrix::from_fn(rows, keep.len(), |r, c| cols[keep[c]][r]);
    let mut control = ControlSignal {
        times: nodes.clone(),
        values: vec![vec![0.0; basis + 1]; m],
    };
    let initial_norm = free.initial_norm;
    if keep.is_empty() {
        return Ok(LeastSquaresResult {
            control,
            residual: l2_norm(&free.final_state, h),
            initial_norm,
            condition: 1.0,
            regularization: 0.0,
            columns: 0,
            dropped_columns: labels.len(),
        });
    }
    let gram = a.transpose() * &a;
    let reg = REGULARIZATION * gram.trace() + ls.penalty * t_final / basis as f64;
    // the input-to-state map usually has a kernel, so only the regularized
    // matrix is checked
    let eig = gram.symmetric_eigen();
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| {
            (lo.min(v.max(0.0) + reg), hi.max(v + reg))
        });
    let condition = hi / lo;
    if !condition.is_finite() || condition > MAX_GRAM_CONDITION {
        return Err(Error::IllConditioned { condition });
    }
    let rhs = eig.eigenvectors.transpose() * -(a.transpose() * &b);
    let scaled = DVector::from_iterator(
        rhs.len(),
        rhs.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(r, &l)| r / (l.max(0.0) + reg)),
    );
    let coef = &eig.eigenvectors * scaled;
    for (c, &j) in keep.iter().enumerate() {
        let (i, k) = labels[j];
        control.values[i][k] = coef[c];
    }
    let res_vec = &a * &coef + &b;
    Ok(LeastSquaresResult {
        control,
        residual: res_vec.norm(),
        initial_norm,
        condition,
        regularization: reg,
        columns: keep.len(),
        dropped_columns: labels.len() - keep.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn six() -> SpeedProfile<f64> {
        SpeedProfile::constant(&[-4.0, -2.0, -1.0, 1.0, 2.0, 3.0], 3).unwrap()
    }

    fn q6() -> Matrix<Rational> {
        Matrix::from_i64_rows(&[&[1, -1, -1], &[1, 0, 2], &[1, 1, 1]])
    }

    #[test]
    fn six_by_six_feedback_taps() {
        let law = feedback_law(&six(), &q6()).unwrap();
        let expect = [
            vec![(1, 0.5, 1.0), (2, 0.25, 1.0)],
            vec![(2, 0.5, -3.0)],
            vec![],
        ];
        for (row, exp) in law.taps.iter().zip(expect.iter()) {
            let got: Vec<(usize, f64, f64)> = row
                .iter()
                .map(|t| (t.source, t.position, t.weight))
                .collect();
            assert_eq!(got.len(), exp.len());
            for (g, e) in got.iter().zip(exp) {
                assert_eq!(g.0, e.0);
                assert!((g.1 - e.1).abs() < 1e-14 && (g.2 - e.2).abs() < 1e-14);
            }
        }
        assert!((law.settling_time - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn single_control_has_no_taps() {
        let prof = SpeedProfile::constant(&[-1.0, 1.0, 2.0], 1).unwrap();
        let q: Matrix<Rational> = Matrix::from_i64_rows(&[&[1], &[2]]);
        let law = feedback_law(&prof, &q).unwrap();
        assert!(law.taps[0].is_empty());
    }

    #[test]
    fn taps_sit_on_matching_travel_times() {
        let prof = SpeedProfile::new(
            &[
                vec![(0.0, -3.0), (1.0, -2.0)],
                vec![(0.0, -1.5), (0.5, -1.0), (1.0, -1.2)],
                vec![(0.0, 1.0)],
            ],
            2,
        )
        .unwrap();
        let q: Matrix<Rational> = Matrix::from_i64_rows(&[&[2, 3]]);
        let law = feedback_law(&prof, &q).unwrap();
        let tap = &law.taps[0][0];
        let lhs = prof.phi(tap.source, tap.position).unwrap();
        assert!((lhs - prof.transport_time(0)).abs() < 1e-12);
    }

    #[test]
    fn zero_data_needs_no_control() {
        let prof = SpeedProfile::constant(&[-1.0, 1.0], 1).unwrap();
        let sys = SystemSpec::uncoupled(prof, Matrix::from_rows(vec![vec![1.0]]).unwrap()).unwrap();
        let res = least_squares_control(&sys, &|_, _| 0.0, 2.5, 40, &LeastSquaresOptions::new(40))
            .unwrap();
        assert_eq!(res.residual, 0.0);
        assert!(res.control.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn synthesis_rejects_short_horizon_and_bad_structure() {
        let prof = SpeedProfile::constant(&[-1.0, -0.5, 1.0], 2).unwrap();
        let q = Matrix::from_rows(vec![vec![1.0, 0.0]]).unwrap();
        let sys = SystemSpec::uncoupled(prof.clone(), q).unwrap();
        assert!(matches!(
            synthesize_null_control(&sys, &|_, _| 0.0, 1.5, 10),
            Err(Error::PreconditionViolation(_))
        ));
        let bad =
            SystemSpec::uncoupled(prof, Matrix::from_rows(vec![vec![2.0, 0.0]]).unwrap()).unwrap();
        assert!(matches!(
            synthesize_null_control(&bad, &|_, _| 0.0, 3.0, 10),
            Err(Error::PreconditionViolation(_))
        ));
    }

    #[test]
    fn synthesis_without_coupling_is_zero() {
        let prof = SpeedProfile::constant(&[-1.0, -0.5, 1.0], 2).unwrap();
        let sys =
            SystemSpec::uncoupled(prof, Matrix::from_rows(vec![vec![1.0, 0.0]]).unwrap()).unwrap();
        let nc = synthesize_null_control(&sys, &|_, x| x * (1.0 - x), 2.0, 50).unwrap();
        assert!(nc.control.values.iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn slope_of_exact_power_law() {
        let s = refinement_slope(&[100, 200, 400], &[1.0, 0.5, 0.25]);
        assert!((s - 1.0).abs() < 1e-12);
    }
}
