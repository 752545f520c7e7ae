//! Smallest and largest minimal null control times over all internal
//! couplings, the invariance criterion and the classical comparison times.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lcu::{canonical_form, CanonicalForm};
use crate::matrix::Matrix;
use crate::scalar::{Field, Real};
use crate::speeds::SpeedProfile;

/// Relative tolerance (times the Russell time) for time comparisons.
pub const TIME_TOLERANCE: f64 = 1e-10;

/// A candidate term of a max-formula: `T_pos + T_neg`, or a single time.
/// Indices are zero-based equation indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TermKey {
    pub positive: Option<usize>,
    pub negative: Option<usize>,
}

impl TermKey {
    fn pair(positive: usize, negative: usize) -> Self {
        Self {
            positive: Some(positive),
            negative: Some(negative),
        }
    }

    fn single(i: usize, m: usize) -> Self {
        if i < m {
            Self {
                positive: None,
                negative: Some(i),
            }
        } else {
            Self {
                positive: Some(i),
                negative: None,
            }
        }
    }

    /// Label with one-based indices, e.g. `"T4+T2"`.
    pub fn label(&self) -> String {
        match (self.positive, self.negative) {
            (Some(a), Some(b)) => format!("T{}+T{}", a + 1, b + 1),
            (Some(a), None) | (None, Some(a)) => format!("T{}", a + 1),
            (None, None) => "0".into(),
        }
    }

    fn value<F: Real>(&self, times: &[F]) -> F {
        self.positive.map_or(F::zero(), |i| times[i])
            + self.negative.map_or(F::zero(), |i| times[i])
    }

    /// `self <= other` for every admissible speed profile. Positive transport
    /// times decrease with the index, negative ones increase.
    fn dominated_by(&self, other: &TermKey) -> bool {
        let pos_ok = match (self.positive, other.positive) {
            (None, _) => true,
            (Some(a), Some(c)) => c <= a,
            (Some(_), None) => false,
        };
        let neg_ok = match (self.negative, other.negative) {
            (None, _) => true,
            (Some(b), Some(d)) => b <= d,
            (Some(_), None) => false,
        };
        pos_ok && neg_ok
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Term<F> {
    pub label: String,
    pub value: F,
    /// Never larger than some other candidate, whatever the speeds.
    pub dominated: bool,
    /// Attains the maximum for these speeds.
    pub attains: bool,
    #[serde(skip)]
    pub key: TermKey,
}

fn build_terms<F: Real>(keys: Vec<TermKey>, times: &[F]) -> (F, Vec<Term<F>>) {
    let mut unique: Vec<TermKey> = Vec::new();
    for k in keys {
        if !unique.contains(&k) {
            unique.push(k);
        }
    }
    let values: Vec<F> = unique.iter().map(|k| k.value(times)).collect();
    let max = values.iter().fold(F::zero(), |a, &v| a.max(v));
    let tol = F::lit(TIME_TOLERANCE) * (F::one() + max);
    let terms = unique
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(idx, (k, &v))| Term {
            label: k.label(),
            value: v,
            dominated: unique
                .iter()
                .enumerate()
                .any(|(j, o)| j != idx && k.dominated_by(o)),
            attains: v >= max - tol,
            key: *k,
        })
        .collect();
    (max, terms)
}

#[derive(Clone, Debug, Serialize)]
pub struct TimeReport<F> {
    pub inf_time: F,
    pub sup_time: F,
    pub russell_time: F,
    pub tcn_time: Option<F>,
    pub invariant: bool,
    pub rho: usize,
    pub rho0: usize,
    pub pairs: Vec<(usize, usize)>,
    pub inf_terms: Vec<Term<F>>,
    pub sup_terms: Vec<Term<F>>,
}

impl<F: Real> TimeReport<F> {
    /// Labels of the candidates that survive dominance pruning.
    pub fn pruned_labels(terms: &[Term<F>]) -> Vec<String> {
        terms
            .iter()
            .filter(|t| !t.dominated)
            .map(|t| t.label.clone())
            .collect()
    }
}

fn check_dims<F: Real, S: Field>(profile: &SpeedProfile<F>, q: &Matrix<S>) -> Result<()> {
    if q.rows() != profile.p() || q.cols() != profile.m() {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{} but the speeds need {}x{}",
            q.rows(),
            q.cols(),
            profile.p(),
            profile.m()
        )));
    }
    Ok(())
}

fn inf_keys<S: Field>(m: usize, cf: &CanonicalForm<S>) -> Vec<TermKey> {
    let mut keys: Vec<TermKey> = cf
        .pivots
        .iter()
        .map(|pv| TermKey::pair(m + pv.row, pv.col))
        .collect();
    keys.push(TermKey::single(m, m));
    keys.push(TermKey::single(m - 1, m));
    keys
}

fn sup_keys<S: Field>(m: usize, p: usize, cf: &CanonicalForm<S>) -> Vec<TermKey> {
    let rho0 = cf.rho0();
    let mut keys: Vec<TermKey> = cf.pivots[..rho0]
        .iter()
        .map(|pv| TermKey::pair(m + pv.row, pv.col))
        .collect();
    if rho0 < p {
        keys.push(TermKey::pair(m + rho0, m - 1));
    } else {
        keys.push(TermKey::single(m - 1, m));
    }
    keys
}

pub fn inf_time<F: Real, S: Field>(profile: &SpeedProfile<F>, q: &Matrix<S>) -> Result<F> {
    check_dims(profile, q)?;
    let cf = canonical_form(q);
    Ok(build_terms(inf_keys(profile.m(), &cf), profile.transport_times()).0)
}

pub fn sup_time<F: Real, S: Field>(profile: &SpeedProfile<F>, q: &Matrix<S>) -> Result<F> {
    check_dims(profile, q)?;
    let cf = canonical_form(q);
    Ok(build_terms(
        sup_keys(profile.m(), profile.p(), &cf),
        profile.transport_times(),
    )
    .0)
}

fn invariant_from<F: Real, S: Field>(profile: &SpeedProfile<F>, cf: &CanonicalForm<S>) -> bool {
    let (m, p) = (profile.m(), profile.p());
    let rho0 = cf.rho0();
    if rho0 == p {
        return true;
    }
    if rho0 == 0 {
        return false;
    }
    let t = profile.transport_times();
    let best = cf.pivots[..rho0]
        .iter()
        .map(|pv| t[m + pv.row] + t[pv.col])
        .fold(F::zero(), F::max);
    let tol = F::lit(TIME_TOLERANCE) * russell_time(profile);
    best >= t[m + rho0] + t[m - 1] - tol
}

/// Whether the minimal null control time is the same for every internal coupling.
pub fn is_invariant<F: Real, S: Field>(profile: &SpeedProfile<F>, q: &Matrix<S>) -> Result<bool> {
    check_dims(profile, q)?;
    Ok(invariant_from(profile, &canonical_form(q)))
}

/// `T_{m+1} + T_m`.
pub fn russell_time<F: Real>(profile: &SpeedProfile<F>) -> F {
    let m = profile.m();
    profile.transport_time(m) + profile.transport_time(m - 1)
}

/// Comparison time for the class of matrices with invertible leading blocks.
/// `None` when `m < 2`, where that class is empty.
pub fn tcn_time<F: Real>(profile: &SpeedProfile<F>) -> Option<F> {
    let (m, p) = (profile.m(), profile.p());
    if m < 2 {
        return None;
    }
    let t = profile.transport_times();
    let pairs = (0..m.min(p))
        .map(|k| t[m + k] + t[k])
        .fold(F::zero(), F::max);
    Some(if m >= p { pairs.max(t[m - 1]) } else { pairs })
}

pub fn time_report<F: Real, S: Field>(
    profile: &SpeedProfile<F>,
    q: &Matrix<S>,
) -> Result<TimeReport<F>> {
    check_dims(profile, q)?;
    let cf = canonical_form(q);
    let times = profile.transport_times();
    let (inf, inf_terms) = build_terms(inf_keys(profile.m(), &cf), times);
    let (sup, sup_terms) = build_terms(sup_keys(profile.m(), profile.p(), &cf), times);
    Ok(TimeReport {
        inf_time: inf,
        sup_time: sup,
        russell_time: russell_time(profile),
        tcn_time: tcn_time(profile),
        invariant: invariant_from(profile, &cf),
        rho: cf.rho(),
        rho0: cf.rho0(),
        pairs: cf.pairs(),
        inf_terms,
        sup_terms,
    })
}

/// Sparse internal coupling realizing the largest minimal control time.
///
/// Entry `(row, col)` equals
/// `(lambda_row(x) - lambda_col(x)) / (-lambda_col(x)) * weight`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtremalCoupling<F> {
    pub n: usize,
    pub entries: Vec<(usize, usize, F)>,
}

impl<F: Real> ExtremalCoupling<F> {
    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.2 == F::zero())
    }

    pub fn eval(&self, profile: &SpeedProfile<F>, x: F) -> Matrix<F>
    where
        F: Field,
    {
        let mut out = Matrix::zeros(self.n, self.n);
        for &(r, c, w) in &self.entries {
            let lc = profile.speed(c, x);
            out[(r, c)] = (profile.speed(r, x) - lc) / (-lc) * w;
        }
        out
    }
}

pub fn extremal_internal_coupling<F: Real, S: Field>(
    profile: &SpeedProfile<F>,
    q: &Matrix<S>,
) -> Result<ExtremalCoupling<F>> {
    check_dims(profile, q)?;
    let (m, p) = (profile.m(), profile.p());
    let cf = canonical_form(q);
    let mut entries = Vec::new();
    if !invariant_from(profile, &cf) {
        let rho0 = cf.rho0();
        let l_inv = cf.l_inverse()?;
        for i in rho0..p {
            let w = F::lit(l_inv[(i, rho0)].to_f64());
            if w != F::zero() {
                entries.push((m + i, m - 1, w));
            }
        }
    }
    Ok(ExtremalCoupling {
        n: profile.n(),
        entries,
    })
}
