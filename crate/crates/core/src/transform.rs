//! Changes of unknowns mapping one system onto an equivalent one: removal of
//! the diagonal of `M`, and the `Q -> L Q U` boundary reduction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::matrix::Matrix;
use crate::quadrature::gauss_legendre_composite;
use crate::simulator::{
    grid, l2_norm, sample_grid, sample_state, simulate, time_steps, BoundaryInput, ControlSignal,
    SimOptions, SystemSpec, Trajectory,
};
use crate::speeds::SpeedProfile;

/// Uniform cells used when a transformed coupling has to be sampled.
pub const SAMPLING_CELLS: usize = 4096;
/// Gauss panels per smooth segment of `m_ii / λ_i`.
const FACTOR_PANELS: usize = 16;

/// `E(x) = diag(e_i(x))`, `e_i(x) = exp(-∫_0^x m_ii / λ_i)`.
#[derive(Clone, Debug)]
pub struct DiagTransform {
    /// Per component: knots and `∫_0^{knot} m_ii / λ_i`.
    knots: Vec<Vec<f64>>,
    cumulative: Vec<Vec<f64>>,
    diag: MatrixField,
    profile: SpeedProfile<f64>,
}

impl DiagTransform {
    fn new(system: &SystemSpec) -> Self {
        let prof = system.profile.clone();
        let mut knots = Vec::new();
        let mut cumulative = Vec::new();
        for i in 0..prof.n() {
            let mut k = system.m.knots();
            k.extend(prof.component(i).breakpoints().map(|(x, _)| x));
            k.push(0.0);
            k.push(1.0);
            k.sort_by(f64::total_cmp);
            k.dedup_by(|a, b| (*a - *b).abs() <= 1e-15);
            let mut c = vec![0.0];
            for w in k.windows(2) {
                let seg = gauss_legendre_composite(
                    |x| system.m.eval(x)[(i, i)] / prof.speed(i, x),
                    w[0],
                    w[1],
                    FACTOR_PANELS,
                );
                c.push(c.last().unwrap() + seg);
            }
            knots.push(k);
            cumulative.push(c);
        }
        Self {
            knots,
            cumulative,
            diag: system.m.clone(),
            profile: prof,
        }
    }

    /// `e_i(x)`.
    pub fn factor(&self, i: usize, x: f64) -> f64 {
        let k = &self.knots[i];
        let idx = k.partition_point(|&v| v <= x).clamp(1, k.len()) - 1;
        let a = k[idx];
        let tail = if x > a {
            gauss_legendre_composite(
                |s| self.diag.eval(s)[(i, i)] / self.profile.speed(i, s),
                a,
                x,
                FACTOR_PANELS,
            )
        } else {
            0.0
        };
        (-(self.cumulative[i][idx] + tail)).exp()
    }

    /// `e_i` at the nodes of a uniform grid.
    pub fn at_nodes(&self, nx: usize) -> Vec<Vec<f64>> {
        sample_state(self.knots.len(), nx, |i, x| self.factor(i, x))
    }
}

fn diagonal_is_zero(field: &MatrixField) -> bool {
    let n = field.rows();
    let zero_diag = |m: &Matrix<f64>| (0..n).all(|i| m[(i, i)] == 0.0);
    match field {
        MatrixField::Constant(m) => zero_diag(m),
        MatrixField::Piecewise { pieces, .. } => pieces.iter().all(zero_diag),
        MatrixField::Sampled { values, .. } => values.iter().all(zero_diag),
    }
}

fn speed_knots(profile: &SpeedProfile<f64>) -> Vec<f64> {
    (0..profile.n())
        .flat_map(|i| {
            profile
                .component(i)
                .breakpoints()
                .map(|(x, _)| x)
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Returns the system with `Ψ(M)` (zero diagonal) and `E G`, and the record `E`.
pub fn apply_diag_removal(system: &SystemSpec) -> Result<(SystemSpec, DiagTransform)> {
    let record = DiagTransform::new(system);
    if diagonal_is_zero(&system.m) {
        return Ok((system.clone(), record));
    }
    let n = system.n();
    let mut extra = system.m.knots();
    extra.extend(speed_knots(&system.profile));
    let psi = MatrixField::sample_with(SAMPLING_CELLS, &extra, &system.m.jumps(), |x, right| {
        let mx = system.m.eval_side(x, right);
        let e: Vec<f64> = (0..n).map(|i| record.factor(i, x)).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    out[(i, j)] = mx[(i, j)] * e[i] / e[j];
                }
            }
        }
        out
    })?;
    let g = if system.g.is_zero() {
        system.g.clone()
    } else {
        let mut gx = extra.clone();
        gx.extend(system.g.knots());
        MatrixField::sample_with(SAMPLING_CELLS, &gx, &system.g.jumps(), |x, right| {
            let gv = system.g.eval_side(x, right);
            let mut out = gv.clone();
            for i in 0..n {
                let e = record.factor(i, x);
                for j in 0..gv.cols() {
                    out[(i, j)] = e * gv[(i, j)];
                }
            }
            out
        })?
    };
    let out = SystemSpec::new(system.profile.clone(), psi, system.q.clone(), g)?;
    Ok((out, record))
}

/// Record of the `L Q U` reduction (negative family mixed by `U^{-1}`,
/// positive family by `L`, both along the `ζ` maps).
#[derive(Clone, Debug)]
pub struct BoundaryTransform {
    pub l: Matrix<f64>,
    pub u: Matrix<f64>,
    pub u_inv: Matrix<f64>,
}

impl BoundaryTransform {
    /// Nonzero `(k, weight)` terms of the new component `i`.
    fn terms(&self, m: usize, i: usize) -> Vec<(usize, f64)> {
        if i < m {
            (i..m)
                .map(|k| (k, self.u_inv[(i, k)]))
                .filter(|t| t.1 != 0.0)
                .collect()
        } else {
            (m..=i)
                .map(|k| (k, self.l[(i - m, k - m)]))
                .filter(|t| t.1 != 0.0)
                .collect()
        }
    }
}

fn check_lu(l: &Matrix<f64>, u: &Matrix<f64>, p: usize, m: usize) -> Result<Matrix<f64>> {
    if l.rows() != p || l.cols() != p || u.rows() != m || u.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "L must be {p}x{p} and U {m}x{m}, got {}x{} and {}x{}",
            l.rows(),
            l.cols(),
            u.rows(),
            u.cols()
        )));
    }
    if !l.is_lower_triangular() || (0..p).any(|i| l[(i, i)] == 0.0) {
        return Err(Error::Singular(
            "L must be lower triangular and invertible".into(),
        ));
    }
    if !u.is_upper_triangular() || (0..m).any(|i| (u[(i, i)] - 1.0).abs() > 1e-12) {
        return Err(Error::Singular(
            "U must be upper triangular with unit diagonal".into(),
        ));
    }
    u.inverse_upper()
}

/// Maps a system `(Λ, 0, Q, G)` to `(Λ, 0, L Q U, Θ(G))`.
pub fn apply_boundary_transform(
    system: &SystemSpec,
    l: &Matrix<f64>,
    u: &Matrix<f64>,
) -> Result<(SystemSpec, BoundaryTransform)> {
    if !system.m.is_zero() {
        return Err(Error::PreconditionViolation(
            "the boundary transform requires a system without internal coupling".into(),
        ));
    }
    let prof = &system.profile;
    let (n, m, p) = (prof.n(), prof.m(), prof.p());
    let u_inv = check_lu(l, u, p, m)?;
    let record = BoundaryTransform {
        l: l.clone(),
        u: u.clone(),
        u_inv,
    };
    let q = l.mul(&system.q).mul(u);
    let identity = *l == Matrix::identity(p) && *u == Matrix::identity(m);
    let g = if system.g.is_zero() || identity {
        system.g.clone()
    } else {
        let terms: Vec<Vec<(usize, f64)>> = (0..n).map(|i| record.terms(m, i)).collect();
        let mut jumps = Vec::new();
        let mut extra = speed_knots(prof);
        for b in system.g.knots() {
            for (i, row) in terms.iter().enumerate() {
                for &(k, _) in row {
                    let tau = prof.phi(k, b)?;
                    if tau <= prof.transport_time(i) {
                        let x = prof.phi_inverse(i, tau)?;
                        if system.g.jumps().contains(&b) {
                            jumps.push(x);
                        }
                        extra.push(x);
                    }
                }
            }
        }
        MatrixField::sample_with(SAMPLING_CELLS, &extra, &jumps, |x, right| {
            let mut out = Matrix::zeros(n, m);
            for (i, row) in terms.iter().enumerate() {
                for &(k, w) in row {
                    let z = prof.zeta(i, k, x).expect("zeta within range");
                    let gz = system.g.eval_side(z, right);
                    for j in 0..m {
                        // (G U)_{kj}
                        let gu: f64 = (0..=j).map(|l| gz[(k, l)] * u[(l, j)]).sum();
                        out[(i, j)] += w * gu;
                    }
                }
            }
            out
        })?
    };
    let out = SystemSpec::new(prof.clone(), MatrixField::zeros(n, n), q, g)?;
    Ok((out, record))
}

/// Link between two equivalent systems.
#[derive(Clone, Debug)]
pub enum Transform {
    Identity,
    Diagonal(DiagTransform),
    Boundary(BoundaryTransform),
}

impl Transform {
    /// New initial datum `ỹ0_i(x)` from `y0`.
    pub fn map_initial(
        &self,
        profile: &SpeedProfile<f64>,
        y0: &dyn Fn(usize, f64) -> f64,
        i: usize,
        x: f64,
    ) -> f64 {
        match self {
            Transform::Identity => y0(i, x),
            Transform::Diagonal(d) => d.factor(i, x) * y0(i, x),
            Transform::Boundary(b) => b
                .terms(profile.m(), i)
                .into_iter()
                .map(|(k, w)| w * y0(k, profile.zeta(i, k, x).expect("zeta within range")))
                .sum(),
        }
    }

    /// Maps grid samples of a solution of the first system.
    pub fn map_state(&self, profile: &SpeedProfile<f64>, state: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let nx = state[0].len() - 1;
        let h = 1.0 / nx as f64;
        let f = |k: usize, x: f64| sample_grid(&state[k], h, x);
        let xs = grid(nx);
        (0..state.len())
            .map(|i| {
                xs.iter()
                    .map(|&x| self.map_initial(profile, &f, i, x))
                    .collect()
            })
            .collect()
    }

    /// Points of the first solution needed to build the new boundary input.
    pub fn input_probes(&self, profile: &SpeedProfile<f64>) -> Vec<(usize, f64)> {
        match self {
            Transform::Boundary(_) => {
                let m = profile.m();
                (0..m)
                    .flat_map(|i| (i + 1..m).map(move |k| (i, k)))
                    .map(|(i, k)| (k, profile.zeta(i, k, 1.0).expect("zeta within range")))
                    .collect()
            }
            _ => vec![],
        }
    }

    /// New boundary input `ũ(t_j)` from a trajectory recorded with [`Self::input_probes`].
    pub fn map_input(&self, profile: &SpeedProfile<f64>, traj: &Trajectory) -> ControlSignal {
        let m = profile.m();
        let values: Vec<Vec<f64>> = (0..m)
            .map(|i| {
                traj.inputs
                    .iter()
                    .enumerate()
                    .map(|(j, uj)| match self {
                        Transform::Identity => uj[i],
                        Transform::Diagonal(d) => d.factor(i, 1.0) * uj[i],
                        Transform::Boundary(b) => {
                            let mut v = b.u_inv[(i, i)] * uj[i];
                            for k in i + 1..m {
                                let w = b.u_inv[(i, k)];
                                if w != 0.0 {
                                    let z = profile.zeta(i, k, 1.0).expect("zeta within range");
                                    let idx = traj
                                        .probes
                                        .iter()
                                        .position(|&(c, x)| c == k && (x - z).abs() <= 1e-14)
                                        .expect("trajectory recorded the input probes");
                                    v += w * traj.probe_values[j][idx];
                                }
                            }
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        ControlSignal {
            times: traj.times.clone(),
            values,
        }
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct EquivalenceReport {
    pub nx: usize,
    pub h: f64,
    /// Largest relative discrepancy over the trials and compared time levels.
    pub discrepancy: f64,
    pub per_trial: Vec<f64>,
}

impl EquivalenceReport {
    /// `discrepancy <= c * h`.
    pub fn within(&self, c: f64) -> bool {
        self.discrepancy <= c * self.h
    }
}

/// Number of intermediate time levels compared besides the final one.
const COMPARED_LEVELS: usize = 4;

/// Simulates `a` on `(y0, u)` and `b` on the mapped data, and returns
/// `max_t ||map(y_a(t)) - y_b(t)|| / (||y0|| + ||u||)` over a few time levels.
pub fn equivalence_discrepancy(
    a: &SystemSpec,
    b: &SystemSpec,
    transform: &Transform,
    y0: &dyn Fn(usize, f64) -> f64,
    u: &ControlSignal,
    t_final: f64,
    nx: usize,
) -> Result<f64> {
    let prof = &a.profile;
    let n = a.n();
    let every = (time_steps(prof, t_final, nx) / COMPARED_LEVELS).max(1);
    let opts_a = SimOptions::new(nx)
        .with_snapshots(every)
        .with_probes(transform.input_probes(prof));
    let ya = sample_state(n, nx, y0);
    let ta = simulate(
        a,
        &ya,
        &BoundaryInput::OpenLoop(u.clone()),
        t_final,
        &opts_a,
    )?;
    let yb = sample_state(n, nx, |i, x| transform.map_initial(prof, y0, i, x));
    let ub = transform.map_input(prof, &ta);
    let tb = simulate(
        b,
        &yb,
        &BoundaryInput::OpenLoop(ub),
        t_final,
        &SimOptions::new(nx).with_snapshots(every),
    )?;
    let h = 1.0 / nx as f64;
    let scale = ta.initial_norm + ta.input_norm;
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for sa in &ta.snapshots {
        let Some(sb) = tb
            .snapshots
            .iter()
            .find(|s| (s.t - sa.t).abs() <= 1e-12 * t_final.max(1.0))
        else {
            continue;
        };
        let mapped = transform.map_state(prof, &sa.values);
        let diff: Vec<Vec<f64>> = mapped
            .iter()
            .zip(&sb.values)
            .map(|(p, q)| p.iter().zip(q).map(|(x, y)| x - y).collect())
            .collect();
        worst = worst.max(l2_norm(&diff, h));
    }
    Ok(worst / scale)
}

fn smooth_bump(x: f64, c: f64, w: f64) -> f64 {
    let r = (x - c) / w;
    if r.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// Random smooth data vanishing near the boundary: one bump per component
/// for `y0`, one per control for `u`.
#[derive(Clone, Debug)]
pub struct RandomData {
    state: Vec<(f64, f64, f64)>,
    input: Vec<(f64, f64, f64)>,
}

impl RandomData {
    pub fn draw(rng: &mut impl Rng, n: usize, m: usize) -> Self {
        let mut bump = |lo: f64, hi: f64| {
            let c = rng.gen_range(lo..hi);
            let w = rng.gen_range(0.35..0.4);
            let a = rng.gen_range(0.5..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (c, w, a)
        };
        let state = (0..n).map(|_| bump(0.45, 0.55)).collect();
        let input = (0..m).map(|_| bump(0.45, 0.55)).collect();
        Self { state, input }
    }

    pub fn y0(&self, i: usize, x: f64) -> f64 {
        let (c, w, a) = self.state[i];
        a * smooth_bump(x, c, w)
    }

    /// Control bump, placed relative to the horizon.
    pub fn control(&self, t_final: f64, steps: usize) -> ControlSignal {
        ControlSignal::from_fn(self.input.len(), t_final, steps, |i, t| {
            let (c, w, a) = self.input[i];
            a * smooth_bump(t / t_final, c, w)
        })
    }
}

/// Runs [`equivalence_discrepancy`] on `trials` random smooth data sets.
pub fn verify_equivalence(
    a: &SystemSpec,
    b: &SystemSpec,
    transform: &Transform,
    trials: usize,
    seed: u64,
    t_final: f64,
    nx: usize,
) -> Result<EquivalenceReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_trial = Vec::with_capacity(trials);
    for _ in 0..trials {
        let data = RandomData::draw(&mut rng, a.n(), a.n_controls());
        let u = data.control(t_final, 4 * nx);
        per_trial.push(equivalence_discrepancy(
            a,
            b,
            transform,
            &|i, x| data.y0(i, x),
            &u,
            t_final,
            nx,
        )?);
    }
    Ok(EquivalenceReport {
        nx,
        h: 1.0 / nx as f64,
        discrepancy: per_trial.iter().copied().fold(0.0, f64::max),
        per_trial,
    })
}
