//! Characteristic speeds, transport times and characteristic flows.
//!
//! Each speed is a continuous piecewise-linear function on `[0, 1]`. The
//! travel-time coordinate `phi_i(x) = int_0^x dxi / |lambda_i(xi)|` is
//! integrated exactly on every affine piece, and inverted in closed form, so
//! transport times carry no quadrature error.
//!
//! Equations are indexed from zero: `0..m` is the negative family (entering
//! at `x = 1`) and `m..n` the positive one (entering at `x = 0`).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Smallest admissible `min |lambda_i|`.
pub const DEFAULT_SPEED_FLOOR: f64 = 1e-6;

/// Slopes at or below this magnitude are treated as constant pieces.
const FLAT_SLOPE: f64 = 1e-14;

/// Relative tolerance accepted at the ends of `[0, 1]` and `[0, T_i]`.
const EDGE_TOL: f64 = 1e-12;

/// One continuous piecewise-linear speed with cached travel times.
#[derive(Clone, Debug)]
pub struct Speed<F> {
    xs: Vec<F>,
    vals: Vec<F>,
    /// `phi` at each breakpoint.
    cum: Vec<F>,
}

impl<F: Real> Speed<F> {
    fn new(points: &[(F, F)]) -> Result<Self> {
        let points: Vec<(F, F)> = match points {
            [] => return Err(Error::DomainError("empty breakpoint list".into())),
            [(_, v)] => vec![(F::zero(), *v), (F::one(), *v)],
            _ => points.to_vec(),
        };
        let xs: Vec<F> = points.iter().map(|p| p.0).collect();
        let vals: Vec<F> = points.iter().map(|p| p.1).collect();
        if xs.iter().chain(vals.iter()).any(|v| !v.is_finite()) {
            return Err(Error::DomainError("non-finite breakpoint".into()));
        }
        if xs[0] != F::zero() || *xs.last().unwrap() != F::one() {
            return Err(Error::DomainError(format!(
                "breakpoints must start at 0 and end at 1, got [{:?}, {:?}]",
                xs[0],
                xs.last().unwrap()
            )));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::DomainError(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self {
            xs,
            vals,
            cum: Vec::new(),
        })
    }

    fn finish(&mut self) {
        let mut cum = Vec::with_capacity(self.xs.len());
        cum.push(F::zero());
        for j in 0..self.xs.len() - 1 {
            let len = self.xs[j + 1] - self.xs[j];
            cum.push(cum[j] + self.piece_time(j, len));
        }
        self.cum = cum;
    }

    fn slope(&self, j: usize) -> F {
        (self.vals[j + 1] - self.vals[j]) / (self.xs[j + 1] - self.xs[j])
    }

    /// `int_{x_j}^{x_j + d} dxi / |lambda(xi)|` on piece `j`.
    fn piece_time(&self, j: usize, d: F) -> F {
        let v0 = self.vals[j];
        let z = self.slope(j) * d / v0;
        (d / v0.abs()) * ln1p_over(z)
    }

    fn piece(&self, x: F) -> usize {
        match self.xs.iter().position(|&b| b > x) {
            Some(0) => 0,
            Some(k) => (k - 1).min(self.xs.len() - 2),
            None => self.xs.len() - 2,
        }
    }

    pub fn eval(&self, x: F) -> F {
        let j = self.piece(x);
        self.vals[j] + self.slope(j) * (x - self.xs[j])
    }

    pub fn breakpoints(&self) -> impl Iterator<Item = (F, F)> + '_ {
        self.xs.iter().copied().zip(self.vals.iter().copied())
    }

    fn total(&self) -> F {
        *self.cum.last().unwrap()
    }

    fn phi(&self, x: F) -> F {
        let j = self.piece(x);
        self.cum[j] + self.piece_time(j, x - self.xs[j])
    }

    fn phi_inverse(&self, tau: F) -> F {
        let j = match self.cum.iter().position(|&c| c > tau) {
            Some(0) => 0,
            Some(k) => (k - 1).min(self.xs.len() - 2),
            None => self.xs.len() - 2,
        };
        let delta = tau - self.cum[j];
        let v0 = self.vals[j];
        // lambda(x) = v0 * exp(s * sign(v0) * delta) on the piece
        let w = self.slope(j) * v0.signum() * delta;
        let x = self.xs[j] + v0.abs() * delta * expm1_over(w);
        x.max(self.xs[j]).min(self.xs[j + 1])
    }
}

/// `ln(1 + z) / z`, continuous at `z = 0`.
fn ln1p_over<F: Real>(z: F) -> F {
    if z.abs() <= F::lit(FLAT_SLOPE) {
        F::one() - z / F::lit(2.0)
    } else {
        z.ln_1p() / z
    }
}

/// `(exp(w) - 1) / w`, continuous at `w = 0`.
fn expm1_over<F: Real>(w: F) -> F {
    if w.abs() <= F::lit(FLAT_SLOPE) {
        F::one() + w / F::lit(2.0)
    } else {
        w.exp_m1() / w
    }
}

/// The diagonal speed matrix together with its transport-time table.
#[derive(Clone, Debug)]
pub struct SpeedProfile<F> {
    m: usize,
    speeds: Vec<Speed<F>>,
    times: Vec<F>,
    eps: F,
}

impl<F: Real> SpeedProfile<F> {
    /// Validates raw breakpoint lists (`(x, lambda)` pairs, or a single pair
    /// meaning a constant) for `m` negative and `raw.len() - m` positive speeds.
    pub fn new(raw: &[Vec<(F, F)>], m: usize) -> Result<Self> {
        Self::with_floor(raw, m, F::lit(DEFAULT_SPEED_FLOOR))
    }

    pub fn with_floor(raw: &[Vec<(F, F)>], m: usize, floor: F) -> Result<Self> {
        let n = raw.len();
        if m < 1 || m >= n {
            return Err(Error::DomainError(format!(
                "need at least one negative and one positive speed (n = {n}, m = {m})"
            )));
        }
        let mut speeds = raw
            .iter()
            .map(|p| Speed::new(p))
            .collect::<Result<Vec<_>>>()?;

        let mut eps = F::infinity();
        for (i, s) in speeds.iter().enumerate() {
            let negative = i < m;
            for (x, v) in s.breakpoints() {
                let wrong_sign = if negative {
                    v >= F::zero()
                } else {
                    v <= F::zero()
                };
                if wrong_sign || v.abs() < floor {
                    return Err(Error::SignViolation {
                        component: i + 1,
                        x: x.to_f64().unwrap(),
                    });
                }
                eps = eps.min(v.abs());
            }
        }

        for i in 0..n - 1 {
            if i + 1 == m {
                continue; // sign checks already separate the two families
            }
            let (lo, hi) = (&speeds[i], &speeds[i + 1]);
            let mut nodes: Vec<F> = lo.xs.iter().chain(hi.xs.iter()).copied().collect();
            nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if let Some(&x) = nodes.iter().find(|&&x| lo.eval(x) >= hi.eval(x)) {
                return Err(Error::OrderViolation {
                    lower: i + 1,
                    upper: i + 2,
                    x: x.to_f64().unwrap(),
                });
            }
        }

        for s in &mut speeds {
            s.finish();
        }
        let times = speeds.iter().map(Speed::total).collect();
        Ok(Self {
            m,
            speeds,
            times,
            eps,
        })
    }

    /// Profile with constant speeds.
    pub fn constant(speeds: &[F], m: usize) -> Result<Self> {
        let raw: Vec<Vec<(F, F)>> = speeds.iter().map(|&v| vec![(F::zero(), v)]).collect();
        Self::new(&raw, m)
    }

    pub fn n(&self) -> usize {
        self.speeds.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.speeds.len() - self.m
    }

    pub fn is_negative(&self, i: usize) -> bool {
        i < self.m
    }

    /// `min_i min_x |lambda_i(x)|`.
    pub fn eps(&self) -> F {
        self.eps
    }

    /// `max_i max_x |lambda_i(x)|`.
    pub fn max_speed(&self) -> F {
        self.speeds
            .iter()
            .flat_map(|s| s.vals.iter())
            .fold(F::zero(), |a, v| a.max(v.abs()))
    }

    pub fn speed(&self, i: usize, x: F) -> F {
        self.speeds[i].eval(x)
    }

    pub fn component(&self, i: usize) -> &Speed<F> {
        &self.speeds[i]
    }

    /// Transport time `T_i = int_0^1 dx / |lambda_i|`.
    pub fn transport_time(&self, i: usize) -> F {
        self.times[i]
    }

    pub fn transport_times(&self) -> &[F] {
        &self.times
    }

    /// Travel-time coordinate, a bijection from `[0, 1]` onto `[0, T_i]`.
    pub fn phi(&self, i: usize, x: F) -> Result<F> {
        let x = clamp_range(x, F::zero(), F::one())?;
        Ok(self.speeds[i].phi(x))
    }

    pub fn phi_inverse(&self, i: usize, tau: F) -> Result<F> {
        let tau = clamp_range(tau, F::zero(), self.times[i])?;
        Ok(self.speeds[i].phi_inverse(tau))
    }

    /// `zeta_ij(x) = phi_j^{-1}(phi_i(x))`, defined when both indices belong
    /// to the same family and `T_i <= T_j` (so `i <= j` for the negative
    /// family and `i >= j` for the positive one).
    pub fn zeta(&self, i: usize, j: usize, x: F) -> Result<F> {
        let same_family = self.is_negative(i) == self.is_negative(j);
        let ordered = if self.is_negative(i) { i <= j } else { i >= j };
        if !same_family || !ordered {
            return Err(Error::IndexError(format!(
                "zeta_({},{}) leaves [0, 1]: needs the same family with T_i <= T_j",
                i + 1,
                j + 1
            )));
        }
        if i == j {
            return clamp_range(x, F::zero(), F::one());
        }
        let tau = self.phi(i, x)?.min(self.times[j]);
        self.phi_inverse(j, tau)
    }

    /// Entry and exit times of the characteristic of equation `i` through `(t, x)`.
    pub fn entry_exit_times(&self, i: usize, t: F, x: F) -> Result<(F, F)> {
        let phi = self.phi(i, x)?;
        let total = self.times[i];
        Ok(if self.is_negative(i) {
            (t - (total - phi), t + phi)
        } else {
            (t - phi, t + (total - phi))
        })
    }

    /// Position at time `s` of the characteristic of equation `i` passing
    /// through `(t, x)`.
    pub fn characteristic(&self, i: usize, s: F, t: F, x: F) -> Result<F> {
        let (s_in, s_out) = self.entry_exit_times(i, t, x)?;
        let s = clamp_range(s, s_in, s_out)?;
        let phi = self.phi(i, x)?;
        let target = if self.is_negative(i) {
            phi - (s - t)
        } else {
            phi + (s - t)
        };
        self.phi_inverse(i, target)
    }
}

fn clamp_range<F: Real>(v: F, lo: F, hi: F) -> Result<F> {
    let tol = F::lit(EDGE_TOL) * (F::one() + lo.abs().max(hi.abs()));
    if !(v >= lo - tol && v <= hi + tol) {
        return Err(Error::RangeError {
            value: v.to_f64().unwrap_or(f64::NAN),
            lo: lo.to_f64().unwrap(),
            hi: hi.to_f64().unwrap(),
        });
    }
    Ok(v.max(lo).min(hi))
}
