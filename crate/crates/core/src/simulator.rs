//! Forward solver for `y_t + Λ y_x = M y + G y_-(t, 0)` with
//! `y_-(t, 1) = u(t)` and `y_+(t, 0) = Q y_-(t, 0)`.
//!
//! Each time step traces every grid node one step back along its
//! characteristic. The foot value is interpolated linearly in `x`, or taken
//! from the boundary data when the characteristic entered during the step,
//! and the coupling integral is added by the trapezoidal rule. The implicit
//! dependence on the new time level is resolved by Picard iteration.

use crate::error::{Error, Result};
use crate::field::MatrixField;
use crate::matrix::Matrix;
use crate::speeds::SpeedProfile;

pub const PICARD_TOLERANCE: f64 = 1e-10;
pub const MAX_PICARD_ITERATIONS: usize = 50;
/// Number of times the time step may be halved after a Picard failure.
pub const MAX_STEP_HALVINGS: usize = 4;

#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub profile: SpeedProfile<f64>,
    pub m: MatrixField,
    pub q: Matrix<f64>,
    pub g: MatrixField,
}

impl SystemSpec {
    pub fn new(
        profile: SpeedProfile<f64>,
        m: MatrixField,
        q: Matrix<f64>,
        g: MatrixField,
    ) -> Result<Self> {
        let (n, mm, p) = (profile.n(), profile.m(), profile.p());
        let check = |what: &str, r: usize, c: usize, er: usize, ec: usize| {
            if r != er || c != ec {
                Err(Error::DimensionMismatch(format!(
                    "{what} is {r}x{c}, expected {er}x{ec}"
                )))
            } else {
                Ok(())
            }
        };
        check("M", m.rows(), m.cols(), n, n)?;
        check("Q", q.rows(), q.cols(), p, mm)?;
        check("G", g.rows(), g.cols(), n, mm)?;
        Ok(Self { profile, m, q, g })
    }

    /// System with `M = 0` and `G = 0`.
    pub fn uncoupled(profile: SpeedProfile<f64>, q: Matrix<f64>) -> Result<Self> {
        let (n, m) = (profile.n(), profile.m());
        Self::new(
            profile,
            MatrixField::zeros(n, n),
            q,
            MatrixField::zeros(n, m),
        )
    }

    pub fn n(&self) -> usize {
        self.profile.n()
    }

    pub fn n_controls(&self) -> usize {
        self.profile.m()
    }
}

/// Per-component control samples on a time grid, interpolated linearly.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSignal {
    pub times: Vec<f64>,
    /// `values[i][j]` is `u_i(times[j])`.
    pub values: Vec<Vec<f64>>,
}

impl ControlSignal {
    pub fn new(times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || values.iter().any(|v| v.len() != times.len()) {
            return Err(Error::DimensionMismatch(
                "control samples do not match the time grid".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DomainError(
                "control times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, values })
    }

    pub fn zeros(m: usize, t_final: f64) -> Self {
        Self {
            times: vec![0.0, t_final],
            values: vec![vec![0.0; 2]; m],
        }
    }

    /// Samples `f(i, t)` at `steps + 1` uniform nodes of `[0, t_final]`.
    pub fn from_fn(m: usize, t_final: f64, steps: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        let times: Vec<f64> = (0..=steps)
            .map(|j| t_final * j as f64 / steps as f64)
            .collect();
        let values = (0..m)
            .map(|i| times.iter().map(|&t| f(i, t)).collect())
            .collect();
        Self { times, values }
    }

    pub fn components(&self) -> usize {
        self.values.len()
    }

    pub fn eval(&self, i: usize, t: f64) -> f64 {
        interp(&self.times, &self.values[i], t)
    }

    pub fn end(&self) -> f64 {
        *self.times.last().unwrap()
    }
}

/// Piecewise-linear interpolation, constant beyond the end points.
pub fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let k = xs.partition_point(|&v| v <= x);
    if k == 0 {
        return ys[0];
    }
    if k >= xs.len() {
        return ys[xs.len() - 1];
    }
    let (a, b) = (xs[k - 1], xs[k]);
    let w = (x - a) / (b - a);
    (1.0 - w) * ys[k - 1] + w * ys[k]
}

/// Read-only view of the state at one time level, handed to feedback laws.
pub struct StateView<'a> {
    pub t: f64,
    pub h: f64,
    pub values: &'a [Vec<f64>],
}

impl StateView<'_> {
    /// `y_i(t, x)` by linear interpolation.
    pub fn sample(&self, i: usize, x: f64) -> f64 {
        sample_grid(&self.values[i], self.h, x)
    }
}

pub(crate) fn sample_grid(row: &[f64], h: f64, x: f64) -> f64 {
    let nx = row.len() - 1;
    let s = (x / h).clamp(0.0, nx as f64);
    let cell = (s.floor() as usize).min(nx.saturating_sub(1));
    let w = s - cell as f64;
    if nx == 0 {
        return row[0];
    }
    (1.0 - w) * row[cell] + w * row[cell + 1]
}

pub type FeedbackFn<'a> = Box<dyn Fn(&StateView) -> Vec<f64> + Send + Sync + 'a>;

pub enum BoundaryInput<'a> {
    Zero,
    OpenLoop(ControlSignal),
    Feedback(FeedbackFn<'a>),
}

impl std::fmt::Debug for BoundaryInput<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryInput::Zero => write!(f, "Zero"),
            BoundaryInput::OpenLoop(c) => write!(f, "OpenLoop({} samples)", c.times.len()),
            BoundaryInput::Feedback(_) => write!(f, "Feedback"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub nx: usize,
    /// Keep every `snapshot_every`-th time level (0 keeps only the first and last).
    pub snapshot_every: usize,
    /// `(component, x)` points recorded at every time level.
    pub probes: Vec<(usize, f64)>,
    pub picard_tolerance: f64,
    pub max_picard: usize,
    pub max_halvings: usize,
}

impl SimOptions {
    pub fn new(nx: usize) -> Self {
        Self {
            nx,
            snapshot_every: 0,
            probes: vec![],
            picard_tolerance: PICARD_TOLERANCE,
            max_picard: MAX_PICARD_ITERATIONS,
            max_halvings: MAX_STEP_HALVINGS,
        }
    }

    pub fn with_snapshots(mut self, every: usize) -> Self {
        self.snapshot_every = every;
        self
    }

    pub fn with_probes(mut self, probes: Vec<(usize, f64)>) -> Self {
        self.probes = probes;
        self
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot {
    pub t: f64,
    pub values: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub dt: f64,
    /// `trace0[j][i] = y_i(t_j, 0)`.
    pub trace0: Vec<Vec<f64>>,
    /// `trace1[j][i] = y_i(t_j, 1)`.
    pub trace1: Vec<Vec<f64>>,
    /// Boundary input actually applied, `inputs[j][i] = u_i(t_j)`.
    pub inputs: Vec<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: Vec<Vec<f64>>,
    pub probes: Vec<(usize, f64)>,
    /// `probe_values[j][k]` is probe `k` at `t_j`.
    pub probe_values: Vec<Vec<f64>>,
    pub picard_max: usize,
    pub picard_total: usize,
    pub halvings: usize,
    pub initial_norm: f64,
    pub input_norm: f64,
    /// `max_t ||y(t)||_{L2}`.
    pub max_norm: f64,
    /// Largest `|y_+(t, 0) - Q y_-(t, 0)|` over the time levels.
    pub boundary_defect: f64,
}

impl Trajectory {
    pub fn h(&self) -> f64 {
        self.x[1] - self.x[0]
    }

    pub fn final_norm(&self) -> f64 {
        l2_norm(&self.final_state, self.h())
    }

    /// `max_t ||y(t)|| / (||y0|| + ||u||)`, or 0 for zero data.
    pub fn stability_constant(&self) -> f64 {
        let d = self.initial_norm + self.input_norm;
        if d == 0.0 {
            0.0
        } else {
            self.max_norm / d
        }
    }

    /// Per-component `L2` norms of the final state.
    pub fn final_component_norms(&self) -> Vec<f64> {
        self.final_state
            .iter()
            .map(|r| l2_norm(std::slice::from_ref(r), self.h()))
            .collect()
    }
}

/// `L2(0,1)^n` norm of grid samples, trapezoidal rule.
pub fn l2_norm(state: &[Vec<f64>], h: f64) -> f64 {
    let mut acc = 0.0;
    for row in state {
        let nx = row.len() - 1;
        for (k, v) in row.iter().enumerate() {
            let w = if k == 0 || k == nx { 0.5 } else { 1.0 };
            acc += w * v * v;
        }
    }
    (acc * h).sqrt()
}

/// `L2(0, T)` norm of uniformly sampled time series.
fn l2_time(samples: &[Vec<f64>], dt: f64) -> f64 {
    let last = samples.len() - 1;
    let mut acc = 0.0;
    for (j, row) in samples.iter().enumerate() {
        let w = if j == 0 || j == last { 0.5 } else { 1.0 };
        acc += w * row.iter().map(|v| v * v).sum::<f64>();
    }
    (acc * dt).sqrt()
}

/// Grid nodes `x_k = k / nx`.
pub fn grid(nx: usize) -> Vec<f64> {
    (0..=nx).map(|k| k as f64 / nx as f64).collect()
}

/// Samples `f(i, x)` for `n` components on the grid.
pub fn sample_state(n: usize, nx: usize, f: impl Fn(usize, f64) -> f64) -> Vec<Vec<f64>> {
    let xs = grid(nx);
    (0..n)
        .map(|i| xs.iter().map(|&x| f(i, x)).collect())
        .collect()
}

/// Number of time steps: the fastest characteristic moves at most one cell per step.
pub fn time_steps(profile: &SpeedProfile<f64>, t_final: f64, nx: usize) -> usize {
    ((t_final * profile.max_speed() * nx as f64) * (1.0 - 1e-12))
        .ceil()
        .max(1.0) as usize
}

enum Foot {
    Interior {
        cell: usize,
        w: f64,
    },
    /// Entered through the boundary at `t_j + frac * dt`.
    Boundary {
        frac: f64,
    },
}

struct Stencil {
    foot: Foot,
    /// Row `i` of `M` and `G` at the foot and at the node.
    m_foot: Vec<f64>,
    m_node: Vec<f64>,
    g_foot: Vec<f64>,
    g_node: Vec<f64>,
}

struct Plan {
    n: usize,
    m: usize,
    nx: usize,
    dt: f64,
    stencils: Vec<Vec<Stencil>>,
    q: Matrix<f64>,
    coupled: bool,
}

fn build_plan(sys: &SystemSpec, nx: usize, dt: f64) -> Result<Plan> {
    let prof = &sys.profile;
    let (n, m) = (prof.n(), prof.m());
    let h = 1.0 / nx as f64;
    let coupled = !(sys.m.is_zero() && sys.g.is_zero());
    let mut stencils = Vec::with_capacity(n);
    for i in 0..n {
        let ti = prof.transport_time(i);
        let neg = prof.is_negative(i);
        let mut row = Vec::with_capacity(nx + 1);
        for k in 0..=nx {
            let x = k as f64 * h;
            let phi = prof.phi(i, x)?;
            let back = if neg { phi + dt } else { phi - dt };
            let (foot, xf) = if (0.0..=ti).contains(&back) {
                let xf = prof.phi_inverse(i, back)?;
                let s = (xf / h).clamp(0.0, nx as f64);
                let cell = (s.floor() as usize).min(nx - 1);
                (
                    Foot::Interior {
                        cell,
                        w: s - cell as f64,
                    },
                    xf,
                )
            } else {
                // time since entry is T_i - phi (negative) or phi (positive)
                let since = if neg { ti - phi } else { phi };
                let frac = (1.0 - since / dt).clamp(0.0, 1.0);
                (Foot::Boundary { frac }, if neg { 1.0 } else { 0.0 })
            };
            let (m_foot, m_node, g_foot, g_node) = if coupled {
                let (mf, mn) = (sys.m.eval(xf), sys.m.eval(x));
                let (gf, gn) = (sys.g.eval(xf), sys.g.eval(x));
                (
                    mf.row(i).to_vec(),
                    mn.row(i).to_vec(),
                    gf.row(i).to_vec(),
                    gn.row(i).to_vec(),
                )
            } else {
                (vec![], vec![], vec![], vec![])
            };
            row.push(Stencil {
                foot,
                m_foot,
                m_node,
                g_foot,
                g_node,
            });
        }
        stencils.push(row);
    }
    Ok(Plan {
        n,
        m,
        nx,
        dt,
        stencils,
        q: sys.q.clone(),
        coupled,
    })
}

struct Outcome {
    iterations: usize,
}

impl Plan {
    /// Advances `prev` (at `t`) to `next` (at `t + dt`). `next` holds the
    /// initial guess on entry. `u_prev` is the input at `t`; `u_next` is
    /// filled with the input at `t + dt`.
    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        t: f64,
        prev: &[Vec<f64>],
        u_prev: &[f64],
        next: &mut [Vec<f64>],
        u_next: &mut Vec<f64>,
        input: &BoundaryInput,
        tol: f64,
        max_iter: usize,
    ) -> Result<Outcome> {
        let (n, m, nx, dt) = (self.n, self.m, self.nx, self.dt);
        let h = 1.0 / nx as f64;
        let t_next = t + dt;
        let open_loop = !matches!(input, BoundaryInput::Feedback(_));
        let eval_input = |state: &[Vec<f64>], out: &mut Vec<f64>| {
            out.clear();
            match input {
                BoundaryInput::Zero => out.extend(std::iter::repeat_n(0.0, m)),
                BoundaryInput::OpenLoop(c) => out.extend((0..m).map(|i| c.eval(i, t_next))),
                BoundaryInput::Feedback(f) => out.extend(f(&StateView {
                    t: t_next,
                    h,
                    values: state,
                })),
            }
        };
        if open_loop {
            eval_input(next, u_next);
        }
        let scale0 = prev.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        for iter in 1..=max_iter {
            if !open_loop {
                eval_input(next, u_next);
                if u_next.len() != m {
                    return Err(Error::DimensionMismatch(format!(
                        "feedback returned {} values for {} controls",
                        u_next.len(),
                        m
                    )));
                }
            }
            let mut change = 0.0f64;
            let mut scale = scale0;
            for i in 0..n {
                let neg = i < m;
                for k in 0..=nx {
                    let st = &self.stencils[i][k];
                    let (base, len, foot_src) = match st.foot {
                        Foot::Interior { cell, w } => {
                            let v = (1.0 - w) * prev[i][cell] + w * prev[i][cell + 1];
                            (v, dt, FootSrc::Interior { cell, w })
                        }
                        Foot::Boundary { frac } => {
                            let v = if neg {
                                (1.0 - frac) * u_prev[i] + frac * u_next[i]
                            } else {
                                let r = i - m;
                                (0..m)
                                    .map(|j| {
                                        self.q[(r, j)]
                                            * ((1.0 - frac) * prev[j][0] + frac * next[j][0])
                                    })
                                    .sum()
                            };
                            let node = if neg { nx } else { 0 };
                            (v, (1.0 - frac) * dt, FootSrc::Boundary { frac, node })
                        }
                    };
                    let mut value = base;
                    if self.coupled && len > 0.0 {
                        let at_foot = |l: usize| match foot_src {
                            FootSrc::Interior { cell, w } => {
                                (1.0 - w) * prev[l][cell] + w * prev[l][cell + 1]
                            }
                            FootSrc::Boundary { frac, node } => {
                                (1.0 - frac) * prev[l][node] + frac * next[l][node]
                            }
                        };
                        let trace_foot = |l: usize| match foot_src {
                            FootSrc::Interior { .. } => prev[l][0],
                            FootSrc::Boundary { frac, .. } => {
                                (1.0 - frac) * prev[l][0] + frac * next[l][0]
                            }
                        };
                        let mut f_foot = 0.0;
                        let mut f_node = 0.0;
                        for l in 0..n {
                            let (mf, mn) = (st.m_foot[l], st.m_node[l]);
                            if mf != 0.0 {
                                f_foot += mf * at_foot(l);
                            }
                            if mn != 0.0 {
                                f_node += mn * next[l][k];
                            }
                        }
                        for l in 0..m {
                            let (gf, gn) = (st.g_foot[l], st.g_node[l]);
                            if gf != 0.0 {
                                f_foot += gf * trace_foot(l);
                            }
                            if gn != 0.0 {
                                f_node += gn * next[l][0];
                            }
                        }
                        value += 0.5 * len * (f_foot + f_node);
                    }
                    change = change.max((value - next[i][k]).abs());
                    scale = scale.max(value.abs());
                    next[i][k] = value;
                }
            }
            if change <= tol * scale || scale == 0.0 {
                if !open_loop {
                    eval_input(next, u_next);
                }
                return Ok(Outcome { iterations: iter });
            }
        }
        Err(Error::NoConvergence(format!(
            "Picard iteration on the step at t = {t:.6} exceeded {max_iter} iterations"
        )))
    }
}

#[derive(Clone, Copy)]
enum FootSrc {
    Interior { cell: usize, w: f64 },
    Boundary { frac: f64, node: usize },
}

/// Simulates `system` from the grid samples `y0` (n rows of `nx + 1` values).
pub fn simulate(
    system: &SystemSpec,
    y0: &[Vec<f64>],
    input: &BoundaryInput,
    t_final: f64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let (n, m, nx) = (system.n(), system.n_controls(), opts.nx);
    if t_final.is_nan() || t_final <= 0.0 || !t_final.is_finite() {
        return Err(Error::DomainError(format!(
            "horizon must be positive, got {t_final}"
        )));
    }
    if nx < 2 {
        return Err(Error::DomainError(
            "at least two grid cells are required".into(),
        ));
    }
    if y0.len() != n || y0.iter().any(|r| r.len() != nx + 1) {
        return Err(Error::DimensionMismatch(format!(
            "initial data must have {n} components of {} samples",
            nx + 1
        )));
    }
    if let BoundaryInput::OpenLoop(c) = input {
        if c.components() != m {
            return Err(Error::DimensionMismatch(format!(
                "{} control components for m = {m}",
                c.components()
            )));
        }
        if c.times[0] > 1e-12 || c.end() < t_final - 1e-9 * t_final.max(1.0) {
            return Err(Error::DomainError(format!(
                "control samples span [{}, {}], need [0, {t_final}]",
                c.times[0],
                c.end()
            )));
        }
    }
    for (i, _) in &opts.probes {
        if *i >= n {
            return Err(Error::IndexError(format!(
                "probe component {} out of range",
                i + 1
            )));
        }
    }
    let base_steps = time_steps(&system.profile, t_final, nx);
    let mut last_err = None;
    for halving in 0..=opts.max_halvings {
        let steps = base_steps << halving;
        match run(system, y0, input, t_final, steps, opts) {
            Ok(mut traj) => {
                traj.halvings = halving;
                return Ok(traj);
            }
            Err(e @ Error::NoConvergence(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap())
}

fn run(
    system: &SystemSpec,
    y0: &[Vec<f64>],
    input: &BoundaryInput,
    t_final: f64,
    steps: usize,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let (n, m, nx) = (system.n(), system.n_controls(), opts.nx);
    let h = 1.0 / nx as f64;
    let dt = t_final / steps as f64;
    let plan = build_plan(system, nx, dt)?;

    let mut prev: Vec<Vec<f64>> = y0.to_vec();
    let mut u_prev: Vec<f64> = match input {
        BoundaryInput::Zero => vec![0.0; m],
        BoundaryInput::OpenLoop(c) => (0..m).map(|i| c.eval(i, 0.0)).collect(),
        BoundaryInput::Feedback(f) => f(&StateView {
            t: 0.0,
            h,
            values: &prev,
        }),
    };
    let mut next = prev.clone();
    let mut u_next = Vec::with_capacity(m);

    let probe = |state: &[Vec<f64>]| -> Vec<f64> {
        opts.probes
            .iter()
            .map(|&(i, x)| sample_grid(&state[i], h, x))
            .collect()
    };
    let defect = |state: &[Vec<f64>]| -> f64 {
        (0..n - m)
            .map(|r| {
                let qy: f64 = (0..m).map(|j| plan.q[(r, j)] * state[j][0]).sum();
                (state[m + r][0] - qy).abs()
            })
            .fold(0.0, f64::max)
    };

    let mut times = vec![0.0];
    let mut trace0 = vec![prev.iter().map(|r| r[0]).collect::<Vec<_>>()];
    let mut trace1 = vec![prev.iter().map(|r| r[nx]).collect::<Vec<_>>()];
    let mut inputs = vec![u_prev.clone()];
    let mut snapshots = vec![Snapshot {
        t: 0.0,
        values: prev.clone(),
    }];
    let mut probe_values = vec![probe(&prev)];
    let initial_norm = l2_norm(&prev, h);
    let mut max_norm = initial_norm;
    let mut boundary_defect = 0.0f64;
    let mut picard_max = 0;
    let mut picard_total = 0;

    for j in 0..steps {
        let t = j as f64 * dt;
        let out = plan.step(
            t,
            &prev,
            &u_prev,
            &mut next,
            &mut u_next,
            input,
            opts.picard_tolerance,
            opts.max_picard,
        )?;
        picard_max = picard_max.max(out.iterations);
        picard_total += out.iterations;
        let t_next = if j + 1 == steps {
            t_final
        } else {
            (j + 1) as f64 * dt
        };
        times.push(t_next);
        trace0.push(next.iter().map(|r| r[0]).collect());
        trace1.push(next.iter().map(|r| r[nx]).collect());
        inputs.push(u_next.clone());
        probe_values.push(probe(&next));
        max_norm = max_norm.max(l2_norm(&next, h));
        boundary_defect = boundary_defect.max(defect(&next));
        if opts.snapshot_every > 0 && (j + 1) % opts.snapshot_every == 0 && j + 1 != steps {
            snapshots.push(Snapshot {
                t: t_next,
                values: next.clone(),
            });
        }
        std::mem::swap(&mut prev, &mut next);
        std::mem::swap(&mut u_prev, &mut u_next);
        // previous level is the initial Picard guess
        for (a, b) in next.iter_mut().zip(&prev) {
            a.copy_from_slice(b);
        }
    }
    snapshots.push(Snapshot {
        t: t_final,
        values: prev.clone(),
    });
    let input_norm = l2_time(&inputs, dt);
    Ok(Trajectory {
        x: grid(nx),
        times,
        dt,
        trace0,
        trace1,
        inputs,
        snapshots,
        final_state: prev,
        probes: opts.probes.clone(),
        probe_values,
        picard_max,
        picard_total,
        halvings: 0,
        initial_norm,
        input_norm,
        max_norm,
        boundary_defect,
    })
}
