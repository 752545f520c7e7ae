//! JSON system description.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hypctrl::scalar::parse_rational;
use hypctrl::simulator::interp;
use hypctrl::{Matrix, MatrixField, Rational, SpeedProfile, SystemSpec};
use serde::Deserialize;
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum SpeedEntry {
    Constant(f64),
    /// `[x, λ(x)]` breakpoints, linear in between.
    Breakpoints(Vec<[f64; 2]>),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum FieldEntry {
    Dense(Vec<Vec<f64>>),
    Piecewise {
        breaks: Vec<f64>,
        pieces: Vec<Vec<Vec<f64>>>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub version: u32,
    #[serde(default)]
    pub n: Option<usize>,
    pub m: usize,
    pub speeds: Vec<SpeedEntry>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Value>>,
    #[serde(rename = "M", default)]
    pub internal: Option<FieldEntry>,
    #[serde(rename = "G", default)]
    pub coupling: Option<FieldEntry>,
    /// Per component `[x, y0(x)]` samples.
    #[serde(default)]
    pub initial: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub nx: Option<usize>,
}

pub struct Config {
    pub profile: SpeedProfile<f64>,
    pub q: Matrix<Rational>,
    pub system: SystemSpec,
    pub initial: Option<Vec<(Vec<f64>, Vec<f64>)>>,
    pub horizon: Option<f64>,
    pub nx: Option<usize>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            anyhow!(
                "parse error at line {}, column {}: {e}",
                e.line(),
                e.column()
            )
        })?;
        raw.build()
    }

    pub fn initial_value(&self, i: usize, x: f64) -> f64 {
        match &self.initial {
            Some(samples) => interp(&samples[i].0, &samples[i].1, x),
            None => 0.0,
        }
    }

    pub fn require_initial(&self) -> Result<()> {
        if self.initial.is_none() {
            bail!("field `initial`: this command needs initial data");
        }
        Ok(())
    }
}

/// Exact value of a JSON number or rational string such as `"1/3"`.
fn exact(v: &Value) -> Option<Rational> {
    match v {
        Value::Number(num) => parse_rational(&num.to_string()),
        Value::String(s) => parse_rational(s),
        _ => None,
    }
}

fn dense(rows: &[Vec<f64>], r: usize, c: usize, what: &str) -> Result<Matrix<f64>> {
    if rows.len() != r {
        bail!("field `{what}`: {} rows, expected {r}", rows.len());
    }
    for (k, row) in rows.iter().enumerate() {
        if row.len() != c {
            bail!(
                "field `{what}`: row {} has {} entries, expected {c}",
                k + 1,
                row.len()
            );
        }
    }
    Ok(Matrix::from_rows(rows.to_vec())?)
}

fn field(entry: &Option<FieldEntry>, r: usize, c: usize, what: &str) -> Result<MatrixField> {
    Ok(match entry {
        None => MatrixField::zeros(r, c),
        Some(FieldEntry::Dense(rows)) => MatrixField::Constant(dense(rows, r, c, what)?),
        Some(FieldEntry::Piecewise { breaks, pieces }) => {
            let mats = pieces
                .iter()
                .enumerate()
                .map(|(k, p)| dense(p, r, c, &format!("{what}.pieces[{k}]")))
                .collect::<Result<Vec<_>>>()?;
            MatrixField::piecewise(breaks.clone(), mats)
                .with_context(|| format!("field `{what}`"))?
        }
    })
}

impl RawConfig {
    fn build(self) -> Result<Config> {
        if self.version != SCHEMA_VERSION {
            bail!(
                "field `version`: {} is not supported (expected {SCHEMA_VERSION})",
                self.version
            );
        }
        let n = self.speeds.len();
        if let Some(declared) = self.n {
            if declared != n {
                bail!("field `n`: {declared} does not match the {n} speeds given");
            }
        }
        if self.m == 0 || self.m >= n {
            bail!("field `m`: {} must lie in 1..{n}", self.m);
        }
        let (m, p) = (self.m, n - self.m);
        let raw: Vec<Vec<(f64, f64)>> = self
            .speeds
            .iter()
            .map(|s| match s {
                SpeedEntry::Constant(v) => vec![(0.0, *v)],
                SpeedEntry::Breakpoints(pts) => pts.iter().map(|p| (p[0], p[1])).collect(),
            })
            .collect();
        let profile = SpeedProfile::new(&raw, m).context("field `speeds`")?;

        if self.q.len() != p {
            bail!("field `Q`: {} rows, expected {p}", self.q.len());
        }
        let mut q = Matrix::<Rational>::zeros(p, m);
        for (i, row) in self.q.iter().enumerate() {
            if row.len() != m {
                bail!(
                    "field `Q`: row {} has {} entries, expected {m}",
                    i + 1,
                    row.len()
                );
            }
            for (j, v) in row.iter().enumerate() {
                q[(i, j)] = exact(v).ok_or_else(|| {
                    anyhow!(
                        "field `Q`: entry ({}, {}) is not a number: {v}",
                        i + 1,
                        j + 1
                    )
                })?;
            }
        }
        let mm = field(&self.internal, n, n, "M")?;
        let g = field(&self.coupling, n, m, "G")?;
        let system = SystemSpec::new(profile.clone(), mm, q.to_f64(), g)?;

        let initial = match self.initial {
            None => None,
            Some(comps) => {
                if comps.len() != n {
                    bail!("field `initial`: {} components, expected {n}", comps.len());
                }
                let mut out = Vec::with_capacity(n);
                for (i, pts) in comps.iter().enumerate() {
                    if pts.is_empty() || pts.windows(2).any(|w| w[1][0] <= w[0][0]) {
                        bail!(
                            "field `initial`: component {} needs increasing sample abscissae",
                            i + 1
                        );
                    }
                    out.push((
                        pts.iter().map(|p| p[0]).collect(),
                        pts.iter().map(|p| p[1]).collect(),
                    ));
                }
                Some(out)
            }
        };
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                bail!("field `horizon`: {t} must be positive");
            }
        }
        if self.nx == Some(0) {
            bail!("field `nx`: must be positive");
        }
        Ok(Config {
            profile,
            q,
            system,
            initial,
            horizon: self.horizon,
            nx: self.nx,
        })
    }
}
