use hypctrl::control::verify_null_control;
use hypctrl::counterexample::{
    corner_corrections, fredholm_solve, fredholm_solve_midpoint, null_control_t2, wide_bump,
    Controls, CounterexampleSpec, InitialData,
};
use hypctrl::simulator::{interp, sample_state};
use hypctrl::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

fn bump(x: f64, a: f64, b: f64) -> f64 {
    if x <= a || x >= b {
        return 0.0;
    }
    let r = (2.0 * x - a - b) / (b - a);
    (1.0 - 1.0 / (1.0 - r * r)).exp()
}

fn y1(x: f64) -> f64 {
    bump(x, 0.1, 0.7)
}
fn y2(x: f64) -> f64 {
    -0.6 * bump(x, 0.3, 0.9)
}
fn y3(x: f64) -> f64 {
    0.5 * bump(x, 0.2, 0.8)
}

/// Largest error of the simulator against the closed form over a fixed set of
/// random space-time points.
fn oracle_error(spec: &CounterexampleSpec, nx: usize) -> f64 {
    let u1 = |t: f64| 0.6 * bump(t, 0.1, 1.2);
    let u2 = |t: f64| -0.5 * bump(t, 0.2, 1.4);
    let data = InitialData { y: [&y1, &y2, &y3] };
    let controls = Controls { u: [&u1, &u2] };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let points: Vec<(f64, f64)> = (0..100)
        .map(|_| (rng.gen_range(0.1..2.2), rng.gen_range(0.0..1.0)))
        .collect();
    let signal = ControlSignal::from_fn(2, 2.5, 8 * nx, |i, t| if i == 0 { u1(t) } else { u2(t) });
    let sys = spec.system();
    let y0 = sample_state(3, nx, |i, x| [y1(x), y2(x), y3(x)][i]);
    points
        .par_iter()
        .map(|&(t, x)| {
            let traj = simulate(
                &sys,
                &y0,
                &BoundaryInput::OpenLoop(signal.clone()),
                t,
                &SimOptions::new(nx),
            )
            .unwrap();
            let exact = spec.solution(&data, &controls, t, x);
            (0..3)
                .map(|i| (interp(&traj.x, &traj.final_state[i], x) - exact[i]).abs())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

#[test]
fn closed_form_matches_simulator() {
    let spec = CounterexampleSpec::new(0.7, -0.8);
    let (e1, e2) = (oracle_error(&spec, 200), oracle_error(&spec, 400));
    assert!(e1 <= 20.0 / 200.0, "error {e1}");
    assert!(e2 <= e1 / 1.5, "{e1} -> {e2}");
}

#[test]
fn fredholm_discretizations_agree() {
    let f = |t: f64| 0.3 + bump(t, 0.1, 0.9);
    let diff = |n: usize| {
        let a = fredholm_solve(-1.0, &f, n).unwrap();
        let b = fredholm_solve_midpoint(-1.0, &f, n).unwrap();
        // midpoint nodes stop half a cell short of the ends
        (0..=200)
            .map(|k| {
                let t = 0.05 + 0.9 * k as f64 / 200.0;
                (a.eval(t) - b.eval(t)).abs()
            })
            .fold(0.0, f64::max)
    };
    let (d1, d2) = (diff(64), diff(256));
    assert!(d2 < 1e-3, "{d2}");
    assert!(d2 < d1 / 2.0, "{d1} -> {d2}");
}

#[test]
fn fredholm_converges_at_second_order() {
    // u - ∫_t^1 ∫_0^s u = 1 is solved by cos t / cos 1
    let error = |n: usize| {
        let sol = fredholm_solve(-1.0, &|_| 1.0, n).unwrap();
        sol.nodes
            .iter()
            .zip(&sol.u)
            .map(|(&t, &u)| (u - t.cos() / 1f64.cos()).abs())
            .fold(0.0, f64::max)
    };
    let (e1, e2, e3) = (error(32), error(64), error(128));
    assert!(e1 / e2 > 3.5 && e2 / e3 > 3.5, "{e1} {e2} {e3}");
}

/// Adds wide bumps to `y1` and `y2` so the controls start from the corner
/// values of the data, then checks the simulated residual at `T = 2`.
fn residual_constants(spec: &CounterexampleSpec) -> Vec<f64> {
    let n = 256;
    let [cb, cc] = corner_corrections(spec, &InitialData { y: [&y1, &y2, &y3] }, n).unwrap();
    let z1 = move |x: f64| y1(x) + cb * wide_bump(x);
    let z2 = move |x: f64| y2(x) + cc * wide_bump(x);
    let controls = null_control_t2(spec, &InitialData { y: [&z1, &z2, &y3] }, n).unwrap();
    let data = |i: usize, x: f64| [z1(x), z2(x), y3(x)][i];
    let report = verify_null_control(
        &spec.system(),
        &data,
        &|| BoundaryInput::OpenLoop(controls.control.clone()),
        2.0,
        100,
    )
    .unwrap();
    report
        .relative
        .iter()
        .zip(&report.nx)
        .map(|(r, &nx)| r * nx as f64)
        .collect()
}

#[test]
fn null_control_at_critical_time_away_from_critical_set() {
    for (a, b) in [(1.0, 0.5), (2.0, -2.0)] {
        let c = residual_constants(&CounterexampleSpec::new(a, b));
        assert!(c.iter().all(|&c| c <= 5.0), "ab = {}: {c:?}", a * b);
        assert!(c[2] <= 1.5 * c[0], "ab = {}: {c:?}", a * b);
    }
}
