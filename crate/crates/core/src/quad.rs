//! Adaptive quadrature with handling for an integrable power singularity
//! at the left endpoint.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step<F>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    if !flm.is_finite() || !frm.is_finite() {
        return Err(Error::NonFiniteField(format!("integrand at {lm} or {rm}")));
    }
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let err = left + right - whole;
    if err.abs() <= 15.0 * tol || (b - a).abs() < 1e-300 {
        return Ok(left + right + err / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::QuadratureNonConvergence);
    }
    let l = adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let r = adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Adaptive Simpson quadrature of a smooth integrand with relative
/// tolerance `rel_tol` (floored in absolute terms for near-zero results).
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a == b {
        return Ok(0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    if !fa.is_finite() || !fm.is_finite() || !fb.is_finite() {
        return Err(Error::NonFiniteField("integrand at endpoints".into()));
    }
    let whole = simpson(fa, fm, fb, b - a);
    let scale = whole.abs().max(1e-30);
    adaptive_step(&f, a, b, fa, fm, fb, whole, rel_tol * scale, 0)
}

/// Integral over [0, z] of s^{-gamma} g(s) with gamma in (0, 1) and g
/// smooth. The substitution s = w^{1/(1-gamma)} removes the endpoint
/// singularity analytically:
///
///   int_0^z s^{-gamma} g(s) ds = 1/(1-gamma) int_0^{z^{1-gamma}} g(w^{1/(1-gamma)}) dw.
pub fn integrate_left_singular<G>(gamma: f64, g: G, z: f64, rel_tol: f64) -> Result<f64>
where
    G: Fn(f64) -> f64,
{
    assert!(
        (0.0..1.0).contains(&gamma),
        "exponent must lie in [0, 1) for an integrable singularity"
    );
    assert!(z >= 0.0);
    if z == 0.0 {
        return Ok(0.0);
    }
    let q = 1.0 - gamma;
    let inner = |w: f64| g(w.powf(1.0 / q));
    let raw = adaptive_simpson(inner, 0.0, z.powf(q), rel_tol)?;
    Ok(raw / q)
}
