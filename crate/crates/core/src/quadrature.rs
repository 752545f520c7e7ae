//! Quadrature rules shared by the transforms and the closed-form solutions.

const GL5_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]` (exact for degree 9).
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS)
        .map(|(&t, w)| w * f(mid + half * t))
        .sum::<f64>()
}

/// [`gauss_legendre`] on `panels` equal sub-intervals.
pub fn gauss_legendre_composite(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| gauss_legendre(&f, a + k as f64 * h, a + (k + 1) as f64 * h))
        .sum()
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || (b - a).abs() < 1e-13 {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integral of `f` over `[a, b]` split at `breaks`, each piece by adaptive Simpson.
pub fn integrate_pieces(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    if b == a {
        return 0.0;
    }
    if b < a {
        return -integrate_pieces(f, b, a, breaks, tol);
    }
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], tol))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_is_exact_on_polynomials() {
        let v = gauss_legendre(|x| x.powi(9) - 3.0 * x.powi(4) + 1.0, -1.0, 2.0);
        let exact = (2f64.powi(10) - 1.0) / 10.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((v - exact).abs() < 1e-11);
    }

    #[test]
    fn simpson_handles_kinks_with_breaks() {
        let f = |x: f64| (x - 0.3).abs();
        let v = integrate_pieces(&f, 0.0, 1.0, &[0.3], 1e-12);
        assert!((v - (0.045 + 0.245)).abs() < 1e-12);
        assert!(
            (adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12) - (1f64.exp() - 1.0)).abs()
                < 1e-11
        );
    }
}
