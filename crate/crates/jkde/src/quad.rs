//! Numerical integration helpers.
//!
//! Two routes on purpose: fixed-order Gauss-Legendre over knot-split panels,
//! which is exact for the piecewise-polynomial integrands that dominate this
//! crate, and adaptive Simpson, used where an independent cross-check of a
//! closed form or panel integral is wanted.

use std::sync::OnceLock;

const GL_ORDER: usize = 16;

/// Legendre polynomial P_n and its derivative at x.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let pk = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = pk;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights for Gauss-Legendre of order `GL_ORDER` on [-1, 1].
fn gl_nodes() -> &'static [(f64, f64)] {
    static NODES: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    NODES.get_or_init(|| {
        let n = GL_ORDER;
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            // Newton from the Chebyshev-like initial guess.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre_pair(n, x);
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (_, d) = legendre_pair(n, x);
            out.push((x, 2.0 / ((1.0 - x * x) * d * d)));
        }
        out
    })
}

/// Gauss-Legendre integral of `f` over [a, b]; exact for polynomials of
/// degree below `2 * GL_ORDER`.
pub(crate) fn integrate_gl<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for &(x, w) in gl_nodes() {
        sum += w * f(mid + half * x);
    }
    sum * half
}

/// Sorted panel boundaries: `a`, `b`, and the interior knots that fall
/// strictly between them.
pub(crate) fn panel_knots(a: f64, b: f64, interior: &[f64]) -> Vec<f64> {
    let mut knots = vec![a];
    for &k in interior {
        if k > a && k < b {
            knots.push(k);
        }
    }
    knots.push(b);
    knots.sort_by(|u, v| u.partial_cmp(v).unwrap());
    knots.dedup();
    knots
}

/// Gauss-Legendre integral over consecutive panels.
pub(crate) fn integrate_panels<F: Fn(f64) -> f64>(f: F, knots: &[f64]) -> f64 {
    let mut sum = 0.0;
    for w in knots.windows(2) {
        sum += integrate_gl(&f, w[0], w[1]);
    }
    sum
}

/// Adaptive Simpson integral of `f` over [a, b] to absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, fa, m, fm, b, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
    }
}
