//! Numeric integration shared by the logarithmic integral and the Perron
//! contour machinery: Gauss–Legendre panels (nodes computed at startup by
//! Newton iteration, machine precision), classic adaptive Simpson, and an
//! adaptive integrator for vertical lines in the complex plane.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Nodes and weights of the n-point Gauss–Legendre rule on [-1, 1].
fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n' by the three-term recurrence
            let (mut p0, mut p1) = (1.0f64, x);
            for j in 2..=n {
                let pj = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = pj;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for j in 2..=n {
            let pj = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = pj;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        nodes[k] = x;
        weights[k] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

macro_rules! cached_rule {
    ($fn_name:ident, $n:expr) => {
        pub fn $fn_name() -> &'static (Vec<f64>, Vec<f64>) {
            static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
            RULE.get_or_init(|| legendre_rule($n))
        }
    };
}

cached_rule!(gl8, 8);
cached_rule!(gl16, 16);
cached_rule!(gl24, 24);
cached_rule!(gl32, 32);

/// ∫_a^b f(t) dt by one Gauss–Legendre panel with the given rule.
pub fn gl_panel(rule: &(Vec<f64>, Vec<f64>), f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (&x, &w) in rule.0.iter().zip(rule.1.iter()) {
        sum += w * f(mid + half * x);
    }
    sum * half
}

fn gl_panel_complex(
    rule: &(Vec<f64>, Vec<f64>),
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
) -> Complex64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = Complex64::new(0.0, 0.0);
    for (&x, &w) in rule.0.iter().zip(rule.1.iter()) {
        sum += f(mid + half * x) * w;
    }
    sum * half
}

/// Classic adaptive Simpson with Richardson correction. `rel_tol` is
/// relative to the magnitude of the running estimate.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::Domain(format!("bad interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let abs_tol = (rel_tol * whole.abs()).max(f64::MIN_POSITIVE * 64.0);
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 * (a.abs() + b.abs()) {
            return Ok(left + right + delta / 15.0);
        }
        if depth >= 60 {
            return Err(Error::Numerical(format!(
                "adaptive simpson failed to converge on [{a}, {b}]"
            )));
        }
        Ok(
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?,
        )
    }
    recurse(&f, a, b, fa, fm, fb, whole, abs_tol, 0)
}

/// Adaptively integrate f along the vertical segment Re z = c,
/// Im z ∈ [-t_max, t_max]: returns ∫ f(c + it) dt.
///
/// Initial panels grow geometrically away from t = 0 (the 1/z-type weight
/// these integrands carry concentrates near the real axis) and are capped so
/// a GL-32 panel sees a bounded number of oscillations of e^{i t·osc_freq}.
/// Each panel is accepted when GL-32 and GL-16 agree to its share of `tol`,
/// else bisected.
pub fn integrate_vertical(
    f: &(impl Fn(Complex64) -> Complex64 + Sync),
    c: f64,
    t_max: f64,
    osc_freq: f64,
    tol: f64,
) -> Result<Complex64> {
    if t_max <= 0.0 {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    let h_cap = (24.0 / osc_freq.max(1e-9)).min(t_max / 4.0).max(1e-12);
    let mut edges = vec![0.0f64];
    let mut t = c.abs().max(t_max * 1e-9).min(h_cap);
    while t < t_max {
        edges.push(t);
        t *= 2.0;
        if t - edges[edges.len() - 1] > h_cap {
            // switch to fixed-width panels once past the geometric ramp
            t = edges[edges.len() - 1] + h_cap;
        }
    }
    edges.push(t_max);
    let mut panels: Vec<(f64, f64)> = Vec::new();
    for w in edges.windows(2) {
        panels.push((w[0], w[1]));
        panels.push((-w[1], -w[0]));
    }

    let g = |t: f64| f(Complex64::new(c, t));
    let node_budget = std::sync::atomic::AtomicU64::new(0);
    let results = crate::exec::par_map(&panels, |&(a, b)| {
        panel_adaptive(&g, a, b, tol * (b - a) / (2.0 * t_max), 0, &node_budget)
    });
    let mut total = Complex64::new(0.0, 0.0);
    for r in results {
        total += r?;
    }
    Ok(total)
}

/// Hard ceiling on GL-32 panel evaluations per integral.
const MAX_PANELS: u64 = 4_000_000;

fn panel_adaptive(
    g: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    panels_used: &std::sync::atomic::AtomicU64,
) -> Result<Complex64> {
    let used = panels_used.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
    if used > MAX_PANELS {
        return Err(Error::Numerical(format!(
            "contour quadrature exceeded {MAX_PANELS} panels ({} nodes) without converging",
            MAX_PANELS * 48
        )));
    }
    let coarse = gl_panel_complex(gl16(), g, a, b);
    let fine = gl_panel_complex(gl32(), g, a, b);
    let err = (fine - coarse).norm();
    if err <= tol || (b - a) < 1e-13 * (a.abs() + b.abs() + 1.0) {
        return Ok(fine);
    }
    if depth >= 26 {
        return Err(Error::Numerical(format!(
            "contour panel [{a}, {b}] failed to converge after {} nodes (residual {err:.3e})",
            (used + 1) * 48
        )));
    }
    let m = 0.5 * (a + b);
    Ok(panel_adaptive(g, a, m, 0.5 * tol, depth + 1, panels_used)?
        + panel_adaptive(g, m, b, 0.5 * tol, depth + 1, panels_used)?)
}
