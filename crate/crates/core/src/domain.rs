//! Implicit space-time domains {phi < 0} and the geometries under study:
//! cylinders, space-time balls, Petrovsky log-log cusps, and normalized
//! p-parabolic (heat) balls.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::geometry::{Point, SpaceTimeBox};
use crate::params::PParams;
use crate::sampling::BoxSampler;

/// Large positive value standing in for "outside the admissible time slab".
const FAR_OUTSIDE: f64 = 1e30;

/// Tolerance for a projected point to count as on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;

type Phi = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Domain {
    label: String,
    dim: usize,
    phi: Phi,
    pub bbox: SpaceTimeBox,
    /// For cylinders: the top time. Boundary points on the open top face
    /// are not part of the parabolic boundary.
    top_face: Option<(f64, Vec<f64>, Vec<f64>)>,
}

impl std::fmt::Debug for Domain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Domain")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("bbox", &self.bbox)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundarySample {
    pub point: Point,
    pub is_parabolic: bool,
}

impl Domain {
    pub fn phi(&self, p: &Point) -> f64 {
        (self.phi)(p)
    }

    /// True iff the point lies strictly inside (phi < 0). Points outside
    /// the bounding box are outside by definition.
    pub fn contains(&self, p: &Point) -> bool {
        self.bbox.contains(p) && self.phi(p) < 0.0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn classify(&self, q: &Point) -> bool {
        match &self.top_face {
            None => true,
            Some((t1, lo, hi)) => {
                let on_top = (q.t - t1).abs() <= 1e-9
                    && q.x
                        .iter()
                        .zip(lo.iter().zip(hi))
                        .all(|(v, (a, b))| *v > a + 1e-9 && *v < b - 1e-9);
                !on_top
            }
        }
    }
}

/// Space-time cylinder Q x (t0, t1) over an axis-aligned spatial box.
pub fn cylinder(x_min: Vec<f64>, x_max: Vec<f64>, t0: f64, t1: f64) -> Result<Domain> {
    if x_min.len() != x_max.len() || x_min.is_empty() {
        return Err(Error::InvalidArgument("cylinder box dimensions mismatch".into()));
    }
    if t0 >= t1 {
        return Err(Error::InvalidArgument(format!("need t0 < t1, got {t0} >= {t1}")));
    }
    if x_min.iter().zip(&x_max).any(|(a, b)| a >= b) {
        return Err(Error::InvalidArgument("degenerate spatial box".into()));
    }
    let (lo, hi) = (x_min.clone(), x_max.clone());
    let phi: Phi = Arc::new(move |p: &Point| {
        let mut m = (t0 - p.t).max(p.t - t1);
        for (v, (a, b)) in p.x.iter().zip(lo.iter().zip(&hi)) {
            m = m.max(a - v).max(v - b);
        }
        m
    });
    let bbox = SpaceTimeBox::new(x_min.clone(), x_max.clone(), t0, t1);
    Ok(Domain {
        label: "cylinder".into(),
        dim: x_min.len(),
        phi,
        bbox,
        top_face: Some((t1, x_min, x_max)),
    })
}

/// Closed ball in space-time: phi = |x-cx|^2 + (t-ct)^2 - R^2.
pub fn spacetime_ball(center_x: &[f64], center_t: f64, r: f64) -> Result<Domain> {
    if r <= 0.0 {
        return Err(Error::InvalidArgument(format!("ball radius must be positive, got {r}")));
    }
    let c = center_x.to_vec();
    let phi: Phi = Arc::new(move |p: &Point| {
        let mut s = (p.t - center_t).powi(2) - r * r;
        for (v, cv) in p.x.iter().zip(&c) {
            s += (v - cv).powi(2);
        }
        s
    });
    let pad = 0.02 * r;
    let bbox = SpaceTimeBox::new(
        center_x.iter().map(|v| v - r - pad).collect(),
        center_x.iter().map(|v| v + r + pad).collect(),
        center_t - r - pad,
        center_t + r + pad,
    );
    Ok(Domain { label: "ball".into(), dim: center_x.len(), phi, bbox, top_face: None })
}

/// The domain below the cusp |x|^2 = -factor * beta * t * log|log|t||,
/// cut off by the plane t = -c. Factor 1 is the sharp (regular) domain,
/// factor > 1 the irregular family. Requires c < 1/e so that
/// log|log|t|| stays positive on the slab.
pub fn petrovsky_domain(factor: f64, c: f64, params: &PParams) -> Result<Domain> {
    if factor < 1.0 {
        return Err(Error::InvalidArgument(format!("factor must be >= 1, got {factor}")));
    }
    let e_inv = 1.0 / std::f64::consts::E;
    if !(c > 0.0 && c < e_inv) {
        return Err(Error::InvalidArgument(format!(
            "petrovsky time constant must satisfy 0 < c < 1/e ~= {e_inv:.6}, got {c}; \
             log|log|t|| changes sign at |t| = 1/e"
        )));
    }
    let beta = params.beta;
    let coef = factor * beta;
    let lateral = move |p: &Point| -> f64 {
        let r2: f64 = p.x.iter().map(|v| v * v).sum();
        if p.t >= 0.0 {
            r2 + p.t
        } else if p.t > -0.999 * e_inv {
            // t < 0 on the slab: the second term is negative inside
            r2 + coef * p.t * (1.0 / p.t.abs()).ln().ln()
        } else {
            FAR_OUTSIDE
        }
    };
    let phi: Phi = Arc::new(move |p: &Point| lateral(p).max(-(p.t + c)));

    // spatial extent: scan the cusp profile over the slab
    let mut w2_max: f64 = 0.0;
    for k in 1..=2000 {
        let t = -c * k as f64 / 2000.0;
        let w2 = -coef * t * (1.0 / t.abs()).ln().ln();
        w2_max = w2_max.max(w2);
    }
    let half = w2_max.sqrt() * 1.02 + 1e-9;
    let n = params.n();
    let t_pad = 0.02 * c;
    let bbox = SpaceTimeBox::new(
        vec![-half; n],
        vec![half; n],
        (-c - t_pad).max(-0.999 * e_inv),
        t_pad,
    );
    Ok(Domain { label: format!("petrovsky(factor={factor})"), dim: n, phi, bbox, top_face: None })
}

/// Natural logarithm of the self-similar kernel H_p(y, s) = s^{-a/b} e^{-|y|^2/(b s)}
/// for s > 0.
pub fn ln_fundamental_kernel(r2: f64, s: f64, params: &PParams) -> f64 {
    -(params.alpha / params.beta) * s.ln() - r2 / (params.beta * s)
}

/// Super-level set H_p(apex_x - x, apex_t - t) > level: the normalized
/// p-parabolic ball with its apex ("latest moment") at (apex_x, apex_t).
pub fn heat_ball(level: f64, apex_x: &[f64], apex_t: f64, params: &PParams) -> Result<Domain> {
    if level <= 0.0 {
        return Err(Error::InvalidArgument(format!("level must be positive, got {level}")));
    }
    if params.is_infinite() {
        return Err(Error::InvalidArgument("heat ball needs finite p".into()));
    }
    let q = *params;
    let apex = apex_x.to_vec();
    let phi: Phi = Arc::new(move |p: &Point| {
        let s = apex_t - p.t;
        if s <= 0.0 {
            return level;
        }
        let r2: f64 = p.x.iter().zip(&apex).map(|(v, a)| (v - a).powi(2)).sum();
        let ln_h = ln_fundamental_kernel(r2, s, &q);
        (level - ln_h.exp()).max(-1e300)
    });

    // depth on the axis: s^{-a/b} = level, then scan the radius profile
    let gamma = params.alpha / params.beta;
    let s_max = level.powf(-1.0 / gamma);
    let mut r2_max: f64 = 0.0;
    for k in 1..=2000 {
        let s = s_max * k as f64 / 2000.0;
        let r2 = params.beta * s * (-level.ln() - gamma * s.ln());
        r2_max = r2_max.max(r2);
    }
    let half = r2_max.sqrt() * 1.02 + 1e-9;
    let n = params.n();
    let bbox = SpaceTimeBox::new(
        apex_x.iter().map(|v| v - half).collect(),
        apex_x.iter().map(|v| v + half).collect(),
        apex_t - 1.02 * s_max,
        apex_t + 0.02 * s_max,
    );
    Ok(Domain { label: format!("heatball(level={level})"), dim: n, phi, bbox, top_face: None })
}

/// Domain from an arbitrary phi closure (negative inside).
pub fn from_phi<F>(label: String, dim: usize, phi: F, bbox: SpaceTimeBox) -> Domain
where
    F: Fn(&Point) -> f64 + Send + Sync + 'static,
{
    Domain { label, dim, phi: Arc::new(phi), bbox, top_face: None }
}

/// Domain from a phi expression over x1..xn, t (negative inside).
pub fn expression_domain(expr: &str, dim: usize, bbox: SpaceTimeBox) -> Result<Domain> {
    let compiled = Expression::parse(expr, dim)?;
    let src = expr.to_string();
    let phi: Phi = Arc::new(move |p: &Point| compiled.eval_point(p));
    Ok(Domain { label: format!("expr({src})"), dim, phi, bbox, top_face: None })
}

/// Bisect the segment from an inside point to an outside point down to
/// |phi| <= 1e-10. Deterministic for fixed inputs.
pub fn project_to_boundary(domain: &Domain, inside: &Point, outside: &Point) -> Result<BoundarySample> {
    let fi = domain.phi(inside);
    let fo = domain.phi(outside);
    if !(fi < 0.0 && fo >= 0.0) {
        return Err(Error::ProjectionFailed);
    }
    let mut lo = 0.0f64; // parameter at inside
    let mut hi = 1.0f64;
    let at = |s: f64| -> Point {
        let x = inside
            .x
            .iter()
            .zip(&outside.x)
            .map(|(a, b)| a + s * (b - a))
            .collect();
        Point::new(x, inside.t + s * (outside.t - inside.t))
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let q = at(mid);
        let f = domain.phi(&q);
        if f.abs() <= BOUNDARY_TOL {
            return Ok(BoundarySample { is_parabolic: domain.classify(&q), point: q });
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // the parameter interval is exhausted to rounding; accept the outside
    // end of the bracket if it is within tolerance
    let q = at(hi);
    if domain.phi(&q).abs() <= BOUNDARY_TOL {
        Ok(BoundarySample { is_parabolic: domain.classify(&q), point: q })
    } else {
        Err(Error::ProjectionFailed)
    }
}

/// Detect boundary membership by sign mixing in a small neighborhood.
/// Handles cusp tips where phi itself does not vanish at the point.
pub fn is_boundary_point(domain: &Domain, p: &Point, r: f64) -> bool {
    if domain.phi(p).abs() <= BOUNDARY_TOL {
        return true;
    }
    let bbox = SpaceTimeBox::new(
        p.x.iter().map(|v| v - r).collect(),
        p.x.iter().map(|v| v + r).collect(),
        p.t - r,
        p.t + r,
    );
    let mut sampler = BoxSampler::new(&bbox, 17);
    let mut saw_in = domain.phi(p) < 0.0;
    let mut saw_out = !saw_in;
    for _ in 0..256 {
        let q = sampler.next_point();
        if domain.phi(&q) < 0.0 {
            saw_in = true;
        } else {
            saw_out = true;
        }
        if saw_in && saw_out {
            return true;
        }
    }
    false
}
