//! JSON and CSV emission.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use hypctrl::{ControlSignal, Field, Matrix, Trajectory};
use serde_json::{json, Value};

use crate::config::SCHEMA_VERSION;

/// Exact entries print as strings (`"-1/3"`), floating ones as numbers.
pub fn matrix_json<S: Field + std::fmt::Display>(m: &Matrix<S>) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| {
                Value::Array(
                    (0..m.cols())
                        .map(|j| {
                            if S::EXACT {
                                Value::String(m[(i, j)].to_string())
                            } else {
                                json!(m[(i, j)].to_f64())
                            }
                        })
                        .collect(),
                )
            })
            .collect(),
    )
}

/// Adds the schema version and prints to `out` or stdout.
pub fn emit_json(mut body: Value, out: Option<&Path>) -> Result<()> {
    if let Value::Object(map) = &mut body {
        map.insert("version".into(), json!(SCHEMA_VERSION));
    }
    let text = serde_json::to_string_pretty(&body)? + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Shortest round-trip text, with `-0` printed as `0`.
fn num(v: f64) -> String {
    (v + 0.0).to_string()
}

fn sink(out: Option<&Path>) -> Result<csv::Writer<Box<dyn Write>>> {
    let w: Box<dyn Write> = match out {
        Some(path) => Box::new(
            std::fs::File::create(path)
                .with_context(|| format!("cannot write {}", path.display()))?,
        ),
        None => Box::new(std::io::stdout()),
    };
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w))
}

/// `t, x, y1, ..., yn` for every stored snapshot.
pub fn trajectory_csv(traj: &Trajectory, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    let n = traj.final_state.len();
    let mut header = vec!["t".to_string(), "x".to_string()];
    header.extend((1..=n).map(|i| format!("y{i}")));
    w.write_record(&header)?;
    for snap in &traj.snapshots {
        for (k, x) in traj.x.iter().enumerate() {
            let mut row = vec![num(snap.t), num(*x)];
            row.extend(snap.values.iter().map(|c| num(c[k])));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `t, u1, ..., um`.
pub fn control_csv(c: &ControlSignal, out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=c.components()).map(|i| format!("u{i}")));
    w.write_record(&header)?;
    for (k, t) in c.times.iter().enumerate() {
        let mut row = vec![num(*t)];
        row.extend(c.values.iter().map(|v| num(v[k])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_control_csv(path: &Path, m: usize) -> Result<ControlSignal> {
    let mut r = csv::Reader::from_path(path)
        .with_context(|| format!("cannot read control file {}", path.display()))?;
    let width = r.headers()?.len();
    if width != m + 1 {
        anyhow::bail!(
            "control file {}: {} columns, expected t and {m} controls",
            path.display(),
            width
        );
    }
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); m];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |k: usize| -> Result<f64> {
            rec[k].trim().parse().with_context(|| {
                format!(
                    "control file {}: row {}, column {}",
                    path.display(),
                    line + 1,
                    k + 1
                )
            })
        };
        times.push(parse(0)?);
        for (i, col) in values.iter_mut().enumerate() {
            col.push(parse(i + 1)?);
        }
    }
    Ok(ControlSignal::new(times, values)?)
}

/// Two-column CSV with a header.
pub fn pairs_csv(header: [&str; 2], rows: &[(f64, f64)], out: Option<&Path>) -> Result<()> {
    let mut w = sink(out)?;
    w.write_record(header)?;
    for (a, b) in rows {
        w.write_record([num(*a), num(*b)])?;
    }
    w.flush()?;
    Ok(())
}
