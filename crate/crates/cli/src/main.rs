mod config;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use hypctrl::control::{synthesize_null_control, verify_null_control};
use hypctrl::counterexample::{self, CounterexampleSpec, InitialData};
use hypctrl::mintime::{russell_time, sup_time, tcn_time};
use hypctrl::simulator::{sample_state, time_steps};
use hypctrl::*;
use serde_json::json;

use config::Config;
use report::{control_csv, emit_json, matrix_json, pairs_csv, read_control_csv, trajectory_csv};

#[derive(Parser)]
#[command(
    name = "hypctrl",
    version,
    about = "Null control times and controls for 1-D linear hyperbolic systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON system description.
    #[arg(long)]
    config: PathBuf,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct InputChoice {
    /// CSV with columns t, u1, ..., um.
    #[arg(long)]
    control: Option<PathBuf>,
    /// Closed loop with the explicit feedback law.
    #[arg(long)]
    feedback: bool,
    /// Zero boundary input.
    #[arg(long)]
    zero: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct CounterexampleMode {
    /// Solve at T = 2 for a = 1, b = AB.
    #[arg(long, allow_hyphen_values = true)]
    ab: Option<f64>,
    /// Condition estimates at STEPS + 1 values of ab in [LO, HI].
    #[arg(long, num_args = 3, value_names = ["LO", "HI", "STEPS"], allow_hyphen_values = true)]
    sweep: Option<Vec<f64>>,
    /// Critical products for k = 0..=K.
    #[arg(long, value_name = "K")]
    roots: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Canonical LCU form of the boundary matrix.
    Decompose {
        #[command(flatten)]
        io: Common,
        /// Exact rational arithmetic.
        #[arg(long)]
        rational: bool,
    },
    /// Transport times and the comparison times.
    Times {
        #[command(flatten)]
        io: Common,
    },
    /// Extremal minimal null control times.
    Mintime {
        #[command(flatten)]
        io: Common,
        /// Include the candidate terms of both formulas.
        #[arg(long)]
        terms: bool,
    },
    /// Trajectory CSV under a given boundary input.
    Simulate {
        #[command(flatten)]
        io: Common,
        #[command(flatten)]
        input: InputChoice,
        /// Snapshots kept in the CSV besides the first and last.
        #[arg(long, default_value_t = 20)]
        snapshots: usize,
    },
    /// Feedback law and its residual study.
    Stabilize {
        #[command(flatten)]
        io: Common,
    },
    /// Open-loop null control for a canonical system; writes the control CSV.
    Synthesize {
        #[command(flatten)]
        io: Common,
        /// Time samples of the control.
        #[arg(long, default_value_t = 2000)]
        steps: usize,
    },
    /// The three-equation family with critical time 2.
    Counterexample {
        #[command(flatten)]
        mode: CounterexampleMode,
        /// Collocation cells on (0, 1).
        #[arg(long, default_value_t = 512)]
        n: usize,
        /// Coarsest grid of the residual study.
        #[arg(long, default_value_t = 200)]
        nx: usize,
        /// Initial data taken from this config instead of the built-in bumps
        /// (which are adjusted so both controls start from zero).
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const DEFAULT_NX: usize = 200;

fn main() -> ExitCode {
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e
                .chain()
                .find_map(|c| c.downcast_ref::<Error>())
                .map_or(2, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("HYPCTRL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .with_context(|| format!("HYPCTRL_THREADS={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Decompose { io, rational } => decompose(&io, rational),
        Command::Times { io } => times(&io),
        Command::Mintime { io, terms } => mintime(&io, terms),
        Command::Simulate {
            io,
            input,
            snapshots,
        } => simulate_cmd(&io, &input, snapshots),
        Command::Stabilize { io } => stabilize(&io),
        Command::Synthesize { io, steps } => synthesize(&io, steps),
        Command::Counterexample {
            mode,
            n,
            nx,
            config,
            out,
        } => counterexample_cmd(&mode, n, nx, config.as_deref(), out.as_deref()),
    }
}

fn decompose(io: &Common, rational: bool) -> Result<()> {
    let cfg = Config::load(&io.config)?;
    let body = if rational {
        let cf = canonical_form(&cfg.q);
        json!({
            "mode": "rational",
            "Q0": matrix_json(&cf.q0), "L": matrix_json(&cf.l), "U": matrix_json(&cf.u),
            "pairs": cf.pairs(), "rho": cf.rho(), "rho0": cf.rho0(),
        })
    } else {
        let cf = canonical_form(&cfg.q.to_f64());
        json!({
            "mode": "float",
            "Q0": matrix_json(&cf.q0), "L": matrix_json(&cf.l), "U": matrix_json(&cf.u),
            "pairs": cf.pairs(), "rho": cf.rho(), "rho0": cf.rho0(),
        })
    };
    emit_json(body, io.out.as_deref())
}

fn times(io: &Common) -> Result<()> {
    let cfg = Config::load(&io.config)?;
    let p = &cfg.profile;
    emit_json(
        json!({
            "transport_times": p.transport_times(),
            "russell_time": russell_time(p),
            "tcn_time": tcn_time(p),
        }),
        io.out.as_deref(),
    )
}

fn mintime(io: &Common, terms: bool) -> Result<()> {
    let cfg = Config::load(&io.config)?;
    let r = time_report(&cfg.profile, &cfg.q)?;
    let mut body = json!({
        "inf_time": r.inf_time, "sup_time": r.sup_time,
        "russell_time": r.russell_time, "tcn_time": r.tcn_time,
        "invariant": r.invariant, "rho": r.rho, "rho0": r.rho0, "pairs": r.pairs,
    });
    if terms {
        body["contributing_terms"] = json!({ "inf": r.inf_terms, "sup": r.sup_terms });
    }
    emit_json(body, io.out.as_deref())
}

fn horizon(cfg: &Config, fallback: f64) -> f64 {
    cfg.horizon.unwrap_or(fallback)
}

fn simulate_cmd(io: &Common, input: &InputChoice, snapshots: usize) -> Result<()> {
    let cfg = Config::load(&io.config)?;
    cfg.require_initial()?;
    let nx = cfg.nx.unwrap_or(DEFAULT_NX);
    let law = feedback_law(&cfg.profile, &cfg.q)?;
    let t = horizon(&cfg, law.settling_time);
    let make_input = || -> Result<BoundaryInput<'_>> {
        Ok(if let Some(path) = &input.control {
            if !path.is_file() {
                bail!("usage: control file {} does not exist", path.display());
            }
            BoundaryInput::OpenLoop(read_control_csv(path, cfg.profile.m())?)
        } else if input.feedback {
            law.input()
        } else {
            BoundaryInput::Zero
        })
    };
    let state = sample_state(cfg.profile.n(), nx, |i, x| cfg.initial_value(i, x));
    let every = (time_steps(&cfg.profile, t, nx) / snapshots.max(1)).max(1);
    let traj = simulate(
        &cfg.system,
        &state,
        &make_input()?,
        t,
        &SimOptions::new(nx).with_snapshots(every),
    )?;
    trajectory_csv(&traj, io.out.as_deref())?;
    eprintln!(
        "T = {t}, Nx = {nx}, final_norm = {:.6e}, relative = {:.6e}, boundary_defect = {:.3e}",
        traj.final_norm(),
        traj.final_norm() / traj.initial_norm.max(f64::MIN_POSITIVE),
        traj.boundary_defect
    );
    if input.feedback {
        let y0 = |i: usize, x: f64| cfg.initial_value(i, x);
        let rep = verify_null_control(&cfg.system, &y0, &|| law.input(), t, nx)?;
        eprintln!(
            "residuals {:?} at Nx {:?}, refinement slope {:.3}",
            rep.residuals, rep.nx, rep.slope
        );
    }
    Ok(())
}

fn stabilize(io: &Common) -> Result<()> {
    let cfg = Config::load(&io.config)?;
    let law = feedback_law(&cfg.profile, &cfg.q)?;
    let mut body = json!({ "law": law });
    if cfg.initial.is_some() {
        let t = horizon(&cfg, law.settling_time);
        let y0 = |i: usize, x: f64| cfg.initial_value(i, x);
        let rep = verify_null_control(
            &cfg.system,
            &y0,
            &|| law.input(),
            t,
            cfg.nx.unwrap_or(DEFAULT_NX),
        )?;
        body["horizon"] = json!(t);
        body["residuals"] = json!(rep);
    }
    emit_json(body, io.out.as_deref())
}

fn synthesize(io: &Common, steps: usize) -> Result<()> {
    let cfg = Config::load(&io.config)?;
    cfg.require_initial()?;
    let Some(out) = io.out.as_deref() else {
        bail!("usage: synthesize writes the control CSV to --out");
    };
    let t = horizon(&cfg, sup_time(&cfg.profile, &cfg.q)?);
    let y0 = |i: usize, x: f64| cfg.initial_value(i, x);
    let nc = synthesize_null_control(&cfg.system, &y0, t, steps)?;
    control_csv(&nc.control, Some(out))?;
    let rep = verify_null_control(
        &cfg.system,
        &y0,
        &|| BoundaryInput::OpenLoop(nc.control.clone()),
        t,
        cfg.nx.unwrap_or(DEFAULT_NX),
    )?;
    emit_json(
        json!({ "horizon": t, "determined": nc.determined, "residuals": rep }),
        None,
    )
}

fn bump(x: f64, a: f64, b: f64) -> f64 {
    if x <= a || x >= b {
        return 0.0;
    }
    let r = (2.0 * x - a - b) / (b - a);
    (1.0 - 1.0 / (1.0 - r * r)).exp()
}

fn counterexample_cmd(
    mode: &CounterexampleMode,
    n: usize,
    nx: usize,
    config: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    if let Some(k) = mode.roots {
        let roots = counterexample::critical_products(k);
        return emit_json(json!({ "roots": roots }), out);
    }
    if let Some(s) = &mode.sweep {
        let (lo, hi) = (s[0], s[1]);
        if s[2] < 1.0 || s[2].fract() != 0.0 || lo.is_nan() || hi.is_nan() || lo >= hi {
            bail!("usage: --sweep LO HI STEPS needs LO < HI and a positive integer STEPS");
        }
        let rows: Vec<(f64, f64)> = counterexample::condition_sweep(lo, hi, s[2] as usize, n)
            .into_iter()
            .map(|p| (p.ab, p.condition))
            .collect();
        return pairs_csv(["ab", "condition"], &rows, out);
    }
    let ab = mode.ab.expect("clap enforces one mode");
    let spec = CounterexampleSpec::new(1.0, ab);
    let cfg = config.map(Config::load).transpose()?;
    if let Some(c) = &cfg {
        c.require_initial()?;
        if c.profile.n() != 3 {
            bail!("field `initial`: the family has 3 components");
        }
    }
    let base = |i: usize, x: f64| {
        [
            bump(x, 0.1, 0.7),
            -0.6 * bump(x, 0.3, 0.9),
            0.5 * bump(x, 0.2, 0.8),
        ][i]
    };
    let [c1, c2] = if cfg.is_none() {
        let (b1, b2, b3) = (|x| base(0, x), |x| base(1, x), |x| base(2, x));
        counterexample::corner_corrections(&spec, &InitialData { y: [&b1, &b2, &b3] }, n)?
    } else {
        [0.0, 0.0]
    };
    let data = |i: usize, x: f64| match &cfg {
        Some(c) => c.initial_value(i, x),
        None => base(i, x) + [c1, c2, 0.0][i] * counterexample::wide_bump(x),
    };
    let (f1, f2, f3) = (|x| data(0, x), |x| data(1, x), |x| data(2, x));
    let controls = counterexample::null_control_t2(&spec, &InitialData { y: [&f1, &f2, &f3] }, n)?;
    control_csv(&controls.control, out)?;
    let rep = verify_null_control(
        &spec.system(),
        &data,
        &|| BoundaryInput::OpenLoop(controls.control.clone()),
        counterexample::CRITICAL_TIME,
        nx,
    )?;
    eprintln!(
        "ab = {ab}, condition = {:.3e}, residuals {:?} at Nx {:?}, slope {:.3}",
        controls.fredholm.condition, rep.residuals, rep.nx, rep.slope
    );
    Ok(())
}
