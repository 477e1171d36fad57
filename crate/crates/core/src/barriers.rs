//! Barrier constructions at boundary points and an automated verifier of
//! the barrier axioms: positivity, positive liminf away from the target,
//! vanishing at the target, and the supersolution (or subsolution)
//! inequality in the viscosity sense.
//!
//! The exterior-sphere barrier is verified on a small ball externally
//! tangent to the exterior sphere at the contact point, so the only
//! boundary point shared with the sphere is the target itself.
//!
//! The log-log cusp constructions are evaluated in similarity
//! coordinates. With t < 0 write L = |log|t||, lambda = log L and
//! xi = |x|^2/(beta |t|); the Petrovsky barrier is
//!
//!   w = L^{-delta} - c e^xi L^{-(delta+1)},  delta = c alpha/beta,
//!
//! and the sharp irregularity subsolution is
//!
//!   w = -e^{k xi - (1+eps1) Lambda} + 1/Lambda,  Lambda = log L.
//!
//! The slabs required by the sharp construction (Lambda of order
//! 8 alpha / (beta eps1) and beyond) correspond to |t| far below the
//! smallest positive double, so that construction is verified entirely
//! in (xi, Lambda) variables; no solver run is attempted inside it.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::domain::{from_phi, petrovsky_domain, project_to_boundary, Domain};
use crate::error::{Error, Result};
use crate::geometry::{Point, SpaceTimeBox};
use crate::jet::Jet2;
use crate::operator::{residual_sided, EnvelopeSide};
use crate::params::{PParams, DEFAULT_TAU};
use crate::sampling::BoxSampler;

/// Default Petrovsky barrier time slab: |t| < e^{-e^2}, so that
/// L = |log|t|| >= e^2 clears every smallness condition at moderate
/// parameters.
pub fn default_petrovsky_slab() -> f64 {
    (-(std::f64::consts::E * std::f64::consts::E)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    SupersolutionBarrier,
    SubsolutionWitness,
}

#[derive(Debug, Clone)]
pub struct AxiomFailure {
    pub axiom: &'static str,
    pub location: String,
    pub violation: f64,
}

#[derive(Debug, Clone)]
pub struct BarrierReport {
    pub positivity_ok: bool,
    pub boundary_liminf_ok: bool,
    pub vanishing_at_target_ok: bool,
    pub supersolution_ok: bool,
    pub worst_violation: f64,
    pub sample_count: usize,
    /// Smallest barrier value seen on boundary samples away from the target.
    pub boundary_floor: f64,
    pub failures: Vec<AxiomFailure>,
}

impl BarrierReport {
    pub fn all_ok(&self) -> bool {
        self.positivity_ok
            && self.boundary_liminf_ok
            && self.vanishing_at_target_ok
            && self.supersolution_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ContactKind {
    NorthPole,
    OffAxis,
}

#[derive(Debug, Clone)]
enum Kind {
    Sphere {
        center_x: Vec<f64>,
        center_t: f64,
        r0: f64,
        a: f64,
        rho: f64,
        contact_kind: ContactKind,
    },
    Petrovsky {
        c: f64,
        delta: f64,
        c_time: f64,
    },
    Irregularity {
        eps1: f64,
        k: f64,
        m: f64,
        lambda_min: f64,
        lambda_max: f64,
    },
}

#[derive(Debug, Clone)]
pub struct Barrier {
    pub label: String,
    pub params: PParams,
    pub orientation: Orientation,
    pub target: Point,
    pub constants: BTreeMap<String, f64>,
    pub domain: Option<Domain>,
    kind: Kind,
}

/// Pick the sphere-barrier steepness so that
/// -R0 + a (p-1)/p delta^2 > (p+n-2)/(2p) holds with margin exactly 1.
/// In terms of the derived constants: a = (R0 + alpha/4 + 1) * 4/(beta delta^2),
/// which extends verbatim to p = inf.
pub fn choose_sphere_parameter(delta: f64, r0: f64, params: &PParams) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    (r0 + params.alpha / 4.0 + 1.0) * 4.0 / (params.beta * delta * delta)
}

fn sphere_jet(x: &[f64], t: f64, center_x: &[f64], center_t: f64, r0: f64, a: f64) -> Jet2 {
    let n = x.len();
    let mut r2 = (t - center_t).powi(2);
    for (v, c) in x.iter().zip(center_x) {
        r2 += (v - c).powi(2);
    }
    let e0 = (-a * r0 * r0).exp();
    let e = (-a * r2).exp();
    let du = DVector::from_fn(n, |i, _| 2.0 * a * e * (x[i] - center_x[i]));
    let d2u = DMatrix::from_fn(n, n, |i, j| {
        let v = -4.0 * a * a * e * (x[i] - center_x[i]) * (x[j] - center_x[j]);
        if i == j {
            v + 2.0 * a * e
        } else {
            v
        }
    });
    Jet2 { u: e0 - e, ut: 2.0 * a * e * (t - center_t), du, d2u }
}

impl Barrier {
    pub fn value(&self, p: &Point) -> f64 {
        self.jet(p).u
    }

    /// Analytic jet at an ordinary floating-point space-time point. The
    /// irregularity construction lives mostly outside representable time;
    /// only its value is meaningful here, and its PDE checks run in
    /// similarity coordinates instead.
    pub fn jet(&self, p: &Point) -> Jet2 {
        match &self.kind {
            Kind::Sphere { center_x, center_t, r0, a, .. } => {
                sphere_jet(&p.x, p.t, center_x, *center_t, *r0, *a)
            }
            Kind::Petrovsky { c, delta, .. } => petrovsky_jet(*c, *delta, p, &self.params),
            Kind::Irregularity { eps1, k, .. } => {
                let n = self.params.n();
                let u = if p.t < 0.0 {
                    let big_l = (1.0 / p.t.abs()).ln();
                    let lambda = big_l.ln();
                    let xi = p.space_norm().powi(2) / (self.params.beta * p.t.abs());
                    irregularity_value(xi, lambda, *eps1, *k)
                } else {
                    f64::NAN
                };
                Jet2 {
                    u,
                    ut: f64::NAN,
                    du: DVector::from_element(n, f64::NAN),
                    d2u: DMatrix::from_element(n, n, f64::NAN),
                }
            }
        }
    }
}

/// Exterior-sphere barrier w = e^{-a R0^2} - e^{-a R^2} at a contact
/// point of the closed ball {R <= R0}. Rejects the south pole (on the
/// axis below the ball, w_t - A_p w = 2a e^{-aR^2}((t-t') - (p+n-2)/p)
/// is negative for every a > 0), and requires R0 >= alpha/2 at the
/// north pole.
pub fn exterior_sphere_barrier(
    center_x: &[f64],
    center_t: f64,
    r0: f64,
    contact: &Point,
    params: &PParams,
) -> Result<Barrier> {
    exterior_sphere_barrier_with(center_x, center_t, r0, contact, params, None)
}

/// Same construction with an explicit steepness override; used for
/// negative controls with a chosen below the admissible threshold.
pub fn exterior_sphere_barrier_with(
    center_x: &[f64],
    center_t: f64,
    r0: f64,
    contact: &Point,
    params: &PParams,
    a_override: Option<f64>,
) -> Result<Barrier> {
    if r0 <= 0.0 {
        return Err(Error::InvalidArgument(format!("sphere radius must be positive, got {r0}")));
    }
    if contact.dim() != center_x.len() || contact.dim() != params.n() {
        return Err(Error::InvalidDimension(contact.dim()));
    }
    let mut d0sq = 0.0;
    for (v, c) in contact.x.iter().zip(center_x) {
        d0sq += (v - c).powi(2);
    }
    let dist = (d0sq + (contact.t - center_t).powi(2)).sqrt();
    if (dist - r0).abs() > 1e-9 * r0.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "contact point is at distance {dist} from the center, not on the sphere of radius {r0}"
        )));
    }
    let d0 = d0sq.sqrt();
    let axis_tol = 1e-12 * r0.max(1.0);
    let contact_kind = if d0 <= axis_tol {
        if contact.t < center_t {
            return Err(Error::InvalidArgument(
                "south-pole contact rejected: on the axis below the ball \
                 w_t - A_p w = 2a e^{-aR^2}((t - t') - (p+n-2)/p) is negative \
                 for every positive a"
                    .into(),
            ));
        }
        if r0 < params.alpha / 2.0 - 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "north-pole contact needs R0 >= alpha/2 = {}, got {r0}",
                params.alpha / 2.0
            )));
        }
        ContactKind::NorthPole
    } else {
        ContactKind::OffAxis
    };

    // verification neighborhood: a ball externally tangent at the contact
    let (delta, rho) = match contact_kind {
        ContactKind::NorthPole => (r0 / 2.0, r0 / 4.0),
        ContactKind::OffAxis => (d0 / 2.0, 0.4 * d0.min(r0)),
    };
    let a = a_override.unwrap_or_else(|| choose_sphere_parameter(delta, r0, params));

    // snap the contact exactly onto the sphere
    let scale = r0 / dist;
    let contact_x: Vec<f64> =
        contact.x.iter().zip(center_x).map(|(v, c)| c + scale * (v - c)).collect();
    let contact_t = center_t + scale * (contact.t - center_t);
    let target = Point::new(contact_x.clone(), contact_t);

    // outward unit normal in space-time and the tangent-ball center
    let nx: Vec<f64> = contact_x.iter().zip(center_x).map(|(v, c)| (v - c) / r0).collect();
    let nt = (contact_t - center_t) / r0;
    let out_x: Vec<f64> = contact_x.iter().zip(&nx).map(|(v, d)| v + rho * d).collect();
    let out_t = contact_t + rho * nt;

    let cx = center_x.to_vec();
    let (ox, ot, rr, cc, ct) = (out_x.clone(), out_t, rho, cx.clone(), center_t);
    let phi = move |p: &Point| -> f64 {
        let mut tangent = (p.t - ot).powi(2) - rr * rr;
        for (v, o) in p.x.iter().zip(&ox) {
            tangent += (v - o).powi(2);
        }
        let mut rsq = (p.t - ct).powi(2);
        for (v, c) in p.x.iter().zip(&cc) {
            rsq += (v - c).powi(2);
        }
        tangent.max(r0 * r0 - rsq)
    };
    let pad = 0.02 * rho;
    let bbox = SpaceTimeBox::new(
        out_x.iter().map(|v| v - rho - pad).collect(),
        out_x.iter().map(|v| v + rho + pad).collect(),
        out_t - rho - pad,
        out_t + rho + pad,
    );
    let domain = from_phi("sphere-contact".into(), params.n(), phi, bbox);

    let mut constants = BTreeMap::new();
    constants.insert("a".into(), a);
    constants.insert("R0".into(), r0);
    constants.insert("delta".into(), delta);
    constants.insert("rho".into(), rho);
    Ok(Barrier {
        label: "exterior-sphere".into(),
        params: *params,
        orientation: Orientation::SupersolutionBarrier,
        target,
        constants,
        domain: Some(domain),
        kind: Kind::Sphere { center_x: cx, center_t, r0, a, rho, contact_kind },
    })
}

fn petrovsky_jet(c: f64, delta: f64, p: &Point, params: &PParams) -> Jet2 {
    let n = p.dim();
    if p.t >= 0.0 {
        return Jet2 {
            u: f64::NAN,
            ut: f64::NAN,
            du: DVector::from_element(n, f64::NAN),
            d2u: DMatrix::from_element(n, n, f64::NAN),
        };
    }
    let t = p.t;
    let beta = params.beta;
    let l = (1.0 / t.abs()).ln(); // |log|t||, positive on |t| < 1
    let f = -c * l.powf(-(delta + 1.0));
    let g = l.powf(-delta);
    let fp = -c * (delta + 1.0) / (t * l.powf(delta + 2.0));
    let gp = delta / (t * l.powf(delta + 1.0));
    let r2: f64 = p.x.iter().map(|v| v * v).sum();
    let e = (-r2 / (beta * t)).exp(); // >= 1 for t < 0
    let fe = f * e;
    Jet2 {
        u: fe + g,
        ut: e * (fp + r2 * f / (beta * t * t)) + gp,
        du: DVector::from_fn(n, |i, _| -2.0 * fe * p.x[i] / (beta * t)),
        d2u: DMatrix::from_fn(n, n, |i, j| {
            let v = 4.0 * fe * p.x[i] * p.x[j] / (beta * beta * t * t);
            if i == j {
                v - 2.0 * fe / (beta * t)
            } else {
                v
            }
        }),
    }
}

/// Barrier value in similarity coordinates xi = |x|^2/(beta |t|) and
/// lambda = log L, L = |log|t||: w = e^{-delta lambda} - c e^{xi - (delta+1) lambda}.
pub fn petrovsky_value_sim(c: f64, delta: f64, xi: f64, lambda: f64) -> f64 {
    (-delta * lambda).exp() - c * (xi - (delta + 1.0) * lambda).exp()
}

/// The proof bracket -c(delta+1)/L - c alpha/beta + delta e^{|x|^2/(beta t)}.
/// The normalized residual t L^{delta+1} e^{|x|^2/(beta t)} (w_t - A_p w)
/// must equal it identically on the classical branch.
pub fn petrovsky_bracket_gap(c: f64, params: &PParams, p: &Point) -> f64 {
    let delta = c * params.alpha / params.beta;
    let jet = petrovsky_jet(c, delta, p, params);
    let res = residual_sided(&jet, params, DEFAULT_TAU, EnvelopeSide::Lower);
    let l = (1.0 / p.t.abs()).ln();
    let r2: f64 = p.x.iter().map(|v| v * v).sum();
    let e_neg = (r2 / (params.beta * p.t)).exp(); // e^{|x|^2/(beta t)} <= 1
    let lhs = p.t * l.powf(delta + 1.0) * e_neg * res;
    let bracket = -c * (delta + 1.0) / l - c * params.alpha / params.beta + delta * e_neg;
    (lhs - bracket).abs()
}

/// Petrovsky barrier at the origin of the factor-1 cusp domain:
/// w = |log|t||^{-delta} - c |log|t||^{-(delta+1)} e^{-|x|^2/(beta t)}
/// with delta = c alpha / beta.
pub fn petrovsky_barrier(c: f64, params: &PParams) -> Result<Barrier> {
    petrovsky_barrier_with_slab(c, default_petrovsky_slab(), params)
}

pub fn petrovsky_barrier_with_slab(c: f64, c_time: f64, params: &PParams) -> Result<Barrier> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("need 0 < c < 1, got {c}")));
    }
    let delta = c * params.alpha / params.beta;
    let domain = petrovsky_domain(1.0, c_time, params)?;
    let mut constants = BTreeMap::new();
    constants.insert("c".into(), c);
    constants.insert("delta".into(), delta);
    constants.insert("c_time".into(), c_time);
    Ok(Barrier {
        label: "petrovsky".into(),
        params: *params,
        orientation: Orientation::SupersolutionBarrier,
        target: Point::new(vec![0.0; params.n()], 0.0),
        constants,
        domain: Some(domain),
        kind: Kind::Petrovsky { c, delta, c_time },
    })
}

/// Smallest Lambda = log|log|t|| satisfying the slab condition
/// (eps1/2) log|log|t|| > 4 alpha/beta of the sharp construction.
pub fn irregularity_time_condition(params: &PParams, eps1: f64) -> f64 {
    8.0 * params.alpha / (params.beta * eps1)
}

fn irregularity_value(xi: f64, lambda: f64, eps1: f64, k: f64) -> f64 {
    -(k * xi - (1.0 + eps1) * lambda).exp() + 1.0 / lambda
}

/// k xi on the level surface {w = m}: (1+eps1) Lambda + log(1/Lambda - m).
fn irregularity_level_kxi(lambda: f64, eps1: f64, m: f64) -> f64 {
    (1.0 + eps1) * lambda + (1.0 / lambda - m).ln()
}

/// Sign surrogate of the subsolution inequality: w is a subsolution at
/// (xi, Lambda) iff
///
///   S = (1+eps1) e^{-Lambda} - xi k(1-k) + alpha k/beta
///       - e^{eps1 Lambda - k xi} / Lambda^2  <=  0.
///
/// Covers the classical branch (xi > 0) and the axis envelope branch
/// (xi = 0) alike, since the Hessian on the axis is a scalar multiple of
/// the identity.
fn irregularity_subsolution_sign(xi: f64, lambda: f64, eps1: f64, k: f64, params: &PParams) -> f64 {
    let dominant = (eps1 * lambda - k * xi - 2.0 * lambda.ln()).exp();
    (1.0 + eps1) * (-lambda).exp() - xi * k * (1.0 - k) + params.alpha * k / params.beta - dominant
}

/// The sharp irregularity subsolution w = f(t) e^{-|x|^2 k/(beta t)} + g(t)
/// with f = -|log|t||^{-(1+eps1)}, g = 1/log|log|t||, k in (1/2, 1).
/// Its level domain pinched at the origin witnesses irregularity of the
/// factor-(1+eps) cusp; when a target eps is supplied the builder
/// enforces the containment condition (eps1+1)/k < 1 + eps/2 and records
/// the margin.
pub fn irregularity_subsolution(
    eps1: f64,
    k: f64,
    m: f64,
    params: &PParams,
    target_eps: Option<f64>,
) -> Result<Barrier> {
    if eps1 <= 0.0 {
        return Err(Error::InvalidArgument(format!("need eps1 > 0, got {eps1}")));
    }
    if !(k > 0.5 && k < 1.0) {
        return Err(Error::InvalidArgument(format!("need k in (1/2, 1), got {k}")));
    }
    if m >= 0.0 {
        return Err(Error::InvalidArgument(format!("need a negative level m, got {m}")));
    }
    let mut constants = BTreeMap::new();
    if let Some(eps) = target_eps {
        let lhs = (eps1 + 1.0) / k;
        let bound = 1.0 + eps / 2.0;
        if lhs >= bound {
            return Err(Error::InvalidArgument(format!(
                "containment in the factor-(1+{eps}) domain needs (eps1+1)/k < 1 + eps/2; \
                 got {lhs} >= {bound}"
            )));
        }
        constants.insert("containment_margin".into(), bound - lhs);
        constants.insert("target_eps".into(), eps);
    }

    // time slab: the dominant exponential must beat the O(1) terms for
    // every xi, which needs Lambda past the stated condition plus the
    // log corrections absorbed in the proof's chain
    let ab = params.alpha / params.beta;
    let mut lambda_min = irregularity_time_condition(params, eps1)
        .max(1.2 * 4.0 * ab * k / (eps1 * (1.0 - k)))
        .max(10.0);
    for _ in 0..4 {
        let need = (2.0 / eps1)
            * (2.0 * lambda_min.ln() + (2.0 * ab * k).ln().abs() + (1.0 / k).ln() + 1.0);
        lambda_min = lambda_min.max(need);
    }
    let lambda_max = 10.0 * lambda_min;

    constants.insert("eps1".into(), eps1);
    constants.insert("k".into(), k);
    constants.insert("m".into(), m);
    constants.insert("lambda_min".into(), lambda_min);
    constants.insert("lambda_max".into(), lambda_max);
    Ok(Barrier {
        label: "irregularity-subsolution".into(),
        params: *params,
        orientation: Orientation::SubsolutionWitness,
        target: Point::new(vec![0.0; params.n()], 0.0),
        constants,
        domain: None,
        kind: Kind::Irregularity { eps1, k, m, lambda_min, lambda_max },
    })
}

/// South-pole failure witness at one axis sample: the envelope residual
/// factors as 2a e^{-aR^2} * ((t-t') - (p+n-2)/p), a positive prefactor
/// times a sign-carrying bracket. The bracket is reported separately
/// because the prefactor underflows to zero for large a.
#[derive(Debug, Clone)]
pub struct SouthPoleWitness {
    pub a: f64,
    pub point: Point,
    /// (t - t') - (p+n-2)/p at the witness point; negative below the ball.
    pub bracket: f64,
    /// The full residual 2a e^{-aR^2} * bracket (may underflow to -0).
    pub residual: f64,
}

/// Scan axis samples just below the south pole for the point where the
/// supersolution inequality is least violated; the bracket stays
/// negative there for every positive a.
pub fn south_pole_failure_witness(
    center_x: &[f64],
    center_t: f64,
    r0: f64,
    params: &PParams,
    a: f64,
) -> SouthPoleWitness {
    let mut best: Option<SouthPoleWitness> = None;
    for i in 1..=200 {
        let t = center_t - r0 - r0 / 4.0 * i as f64 / 200.0;
        let jet = sphere_jet(center_x, t, center_x, center_t, r0, a);
        let residual = residual_sided(&jet, params, DEFAULT_TAU, EnvelopeSide::Lower);
        let bracket = (t - center_t) - params.alpha / 2.0;
        let w = SouthPoleWitness {
            a,
            point: Point::new(center_x.to_vec(), t),
            bracket,
            residual,
        };
        if best.as_ref().map(|b| w.bracket > b.bracket).unwrap_or(true) {
            best = Some(w);
        }
    }
    best.expect("axis scan is nonempty")
}

struct Checker {
    tol: f64,
    worst: f64,
    count: usize,
    failures: Vec<AxiomFailure>,
    flags: BTreeMap<&'static str, bool>,
}

impl Checker {
    fn new(tol: f64) -> Self {
        let mut flags = BTreeMap::new();
        for axiom in ["positivity", "boundary_liminf", "vanishing", "pde_inequality"] {
            flags.insert(axiom, true);
        }
        Checker { tol, worst: 0.0, count: 0, failures: Vec::new(), flags }
    }

    /// Record a check: violations above tol fail the axiom and are kept
    /// as witnesses (first few only).
    fn check(&mut self, axiom: &'static str, violation: f64, location: impl Fn() -> String) {
        self.count += 1;
        let v = violation.max(0.0);
        if v > self.tol || !v.is_finite() {
            self.worst = self.worst.max(v);
            self.flags.insert(axiom, false);
            if self.failures.len() < 32 {
                self.failures.push(AxiomFailure { axiom, location: location(), violation: v });
            }
        }
    }

    fn into_report(self, boundary_floor: f64) -> BarrierReport {
        BarrierReport {
            positivity_ok: self.flags["positivity"],
            boundary_liminf_ok: self.flags["boundary_liminf"],
            vanishing_at_target_ok: self.flags["vanishing"],
            supersolution_ok: self.flags["pde_inequality"],
            worst_violation: self.worst,
            sample_count: self.count,
            boundary_floor,
            failures: self.failures,
        }
    }
}

/// Verify the barrier axioms by deterministic sampling. Supersolution
/// barriers check w > 0, a positive boundary floor away from the target,
/// w -> 0 along approach paths, and the supersolution inequality
/// (classical where |Dw| > tau, envelope on the axis). The subsolution
/// witness checks the level-domain separation instead: w >= m inside its
/// level domain, w = m < 0 on the level surface, w -> 0 along interior
/// approaches, and the subsolution inequality.
pub fn verify_barrier(b: &Barrier, n_samples: usize, tol: f64) -> BarrierReport {
    verify_barrier_seeded(b, n_samples, tol, 0)
}

/// Same verification with an explicit seed for the sampling phase.
pub fn verify_barrier_seeded(b: &Barrier, n_samples: usize, tol: f64, seed: u64) -> BarrierReport {
    match &b.kind {
        Kind::Sphere { .. } => verify_sphere(b, n_samples, tol, seed),
        Kind::Petrovsky { .. } => verify_petrovsky(b, n_samples, tol, seed),
        Kind::Irregularity { .. } => verify_irregularity(b, n_samples, tol),
    }
}

fn verify_sphere(b: &Barrier, n_samples: usize, tol: f64, seed: u64) -> BarrierReport {
    let (center_x, center_t, r0, rho, contact_kind) = match &b.kind {
        Kind::Sphere { center_x, center_t, r0, rho, contact_kind, .. } => {
            (center_x.clone(), *center_t, *r0, *rho, *contact_kind)
        }
        _ => unreachable!(),
    };
    let domain = b.domain.as_ref().expect("sphere barrier carries its domain");
    let mut chk = Checker::new(tol);
    let mut sampler = BoxSampler::new(&domain.bbox, 1 + seed);

    let mut interior = Vec::with_capacity(n_samples);
    let mut tries = 0;
    while interior.len() < n_samples && tries < 100 * n_samples {
        tries += 1;
        let p = sampler.next_point();
        if domain.contains(&p) {
            interior.push(p);
        }
    }

    // interior axioms: positivity and the supersolution inequality
    for p in &interior {
        let jet = b.jet(p);
        chk.check("positivity", -jet.u, || format!("x={:?}, t={}", p.x, p.t));
        let res = residual_sided(&jet, &b.params, DEFAULT_TAU, EnvelopeSide::Lower);
        chk.check("pde_inequality", -res, || format!("x={:?}, t={}", p.x, p.t));
    }

    // structured axis samples exercise the envelope branch (north pole)
    if contact_kind == ContactKind::NorthPole {
        for i in 1..=200 {
            let t = b.target.t + 2.0 * rho * i as f64 / 201.0;
            let p = Point::new(center_x.clone(), t);
            if !domain.contains(&p) {
                continue;
            }
            let jet = b.jet(&p);
            let res = residual_sided(&jet, &b.params, DEFAULT_TAU, EnvelopeSide::Lower);
            chk.check("pde_inequality", -res, || format!("axis t={t}"));
        }
    }

    // boundary liminf away from the target
    let r_excl = 0.25 * rho;
    let out_x: Vec<f64> =
        b.target.x.iter().zip(&center_x).map(|(v, c)| v + rho * (v - c) / r0).collect();
    let out_t = b.target.t + rho * (b.target.t - center_t) / r0;
    let mut floor = f64::INFINITY;
    let mut floor_seen = false;
    for (i, p) in interior.iter().enumerate() {
        // alternate projections toward the outer sphere and the exterior ball
        let outside = if i % 2 == 0 {
            let mut d: Vec<f64> = p.x.iter().zip(&out_x).map(|(v, o)| v - o).collect();
            let mut nt = p.t - out_t;
            let norm = (d.iter().map(|v| v * v).sum::<f64>() + nt * nt).sqrt().max(1e-30);
            for v in &mut d {
                *v *= 1.2 * rho / norm;
            }
            nt *= 1.2 * rho / norm;
            Point::new(out_x.iter().zip(&d).map(|(o, v)| o + v).collect(), out_t + nt)
        } else {
            let mut d: Vec<f64> = p.x.iter().zip(&center_x).map(|(v, c)| v - c).collect();
            let mut nt = p.t - center_t;
            let norm = (d.iter().map(|v| v * v).sum::<f64>() + nt * nt).sqrt().max(1e-30);
            for v in &mut d {
                *v *= 0.9 * r0 / norm;
            }
            nt *= 0.9 * r0 / norm;
            Point::new(center_x.iter().zip(&d).map(|(c, v)| c + v).collect(), center_t + nt)
        };
        if let Ok(sample) = project_to_boundary(domain, p, &outside) {
            if sample.point.dist(&b.target) >= r_excl {
                floor_seen = true;
                let w = b.value(&sample.point);
                floor = floor.min(w);
                chk.check("boundary_liminf", if w > 0.0 { 0.0 } else { tol + 1.0 }, || {
                    format!("boundary x={:?}, t={}", sample.point.x, sample.point.t)
                });
            }
        }
    }
    if !floor_seen {
        chk.check("boundary_liminf", f64::INFINITY, || "no boundary samples".into());
    }

    // vanishing along three approach paths fanning out from the contact
    let mut dir_n: Vec<f64> =
        b.target.x.iter().zip(&center_x).map(|(v, c)| (v - c) / r0).collect();
    dir_n.push((b.target.t - center_t) / r0);
    // a unit vector orthogonal to the normal, preferring the time axis
    let mut ortho = vec![0.0; dir_n.len()];
    let last = dir_n.len() - 1;
    if dir_n[last].abs() < 0.9 {
        ortho[last] = 1.0;
    } else {
        ortho[0] = 1.0;
    }
    let dot: f64 = dir_n.iter().zip(&ortho).map(|(a, b)| a * b).sum();
    for (o, d) in ortho.iter_mut().zip(&dir_n) {
        *o -= dot * d;
    }
    let on: f64 = ortho.iter().map(|v| v * v).sum::<f64>().sqrt();
    for o in &mut ortho {
        *o /= on;
    }
    for angle in [0.0f64, 0.5, -0.5] {
        let dir: Vec<f64> = dir_n
            .iter()
            .zip(&ortho)
            .map(|(n, o)| angle.cos() * n + angle.sin() * o)
            .collect();
        let mut s = 0.9;
        let mut last_w = f64::INFINITY;
        for _ in 0..80 {
            let p = Point::new(
                b.target.x.iter().zip(&dir).map(|(v, d)| v + s * rho * d).collect(),
                b.target.t + s * rho * dir[last],
            );
            last_w = b.value(&p).abs();
            if last_w < tol {
                break;
            }
            s *= 0.5;
        }
        chk.check("vanishing", last_w - tol, || format!("approach angle {angle}"));
    }

    let floor = if floor.is_finite() { floor } else { 0.0 };
    chk.into_report(floor)
}

fn verify_petrovsky(b: &Barrier, n_samples: usize, tol: f64, seed: u64) -> BarrierReport {
    let (c, delta, c_time) = match &b.kind {
        Kind::Petrovsky { c, delta, c_time } => (*c, *delta, *c_time),
        _ => unreachable!(),
    };
    let domain = b.domain.as_ref().expect("petrovsky barrier carries its domain");
    let mut chk = Checker::new(tol);
    let mut sampler = BoxSampler::new(&domain.bbox, 2 + seed);

    let mut interior = Vec::with_capacity(n_samples);
    let mut tries = 0;
    while interior.len() < n_samples && tries < 400 * n_samples {
        tries += 1;
        let p = sampler.next_point();
        if p.t > -1e-250 || !domain.contains(&p) {
            continue;
        }
        interior.push(p);
    }

    for p in &interior {
        let jet = b.jet(p);
        chk.check("positivity", -jet.u, || format!("x={:?}, t={}", p.x, p.t));
        let res = residual_sided(&jet, &b.params, DEFAULT_TAU, EnvelopeSide::Lower);
        chk.check("pde_inequality", -res, || format!("x={:?}, t={}", p.x, p.t));
    }

    // axis samples: envelope branch, log-spaced down to the f64 floor
    for i in 0..200 {
        let expo = -c_time.ln() + (250.0 * std::f64::consts::LN_10 + c_time.ln()) * i as f64 / 199.0;
        let t = -(-expo).exp();
        if t >= 0.0 || t <= -c_time {
            continue;
        }
        let p = Point::new(vec![0.0; b.params.n()], t);
        let jet = b.jet(&p);
        let res = residual_sided(&jet, &b.params, DEFAULT_TAU, EnvelopeSide::Lower);
        chk.check("pde_inequality", -res, || format!("axis t={t}"));
    }

    // algebraic tail in similarity coordinates: the supersolution bracket
    // -c(delta+1)/L - c alpha/beta + delta e^{-xi} must stay nonpositive
    for i in 0..60 {
        let lambda = 2.0 + 700.0 * i as f64 / 59.0; // log L
        for j in 0..60 {
            let xi = lambda.exp().min(1e6) * j as f64 / 59.0;
            let bracket = -c * (delta + 1.0) * (-lambda).exp()
                - c * b.params.alpha / b.params.beta
                + delta * (-xi).exp();
            chk.check("pde_inequality", bracket, || format!("sim coords xi={xi}, lambda={lambda}"));
        }
    }

    // boundary floor away from the origin
    let r_excl = 0.05 * domain.bbox.diameter();
    let mut floor = f64::INFINITY;
    let mut floor_seen = false;
    let half = domain.bbox.x_max[0];
    for (i, p) in interior.iter().enumerate() {
        let outside = if i % 2 == 0 {
            let mut x = p.x.clone();
            let j = i % b.params.n();
            x[j] = if x[j] >= 0.0 { 1.1 * half } else { -1.1 * half };
            Point::new(x, p.t)
        } else {
            Point::new(p.x.clone(), domain.bbox.t_min - 0.01 * c_time)
        };
        if let Ok(sample) = project_to_boundary(domain, p, &outside) {
            if sample.point.dist(&b.target) >= r_excl {
                floor_seen = true;
                let w = b.value(&sample.point);
                floor = floor.min(w);
                chk.check("boundary_liminf", if w > 0.0 { 0.0 } else { tol + 1.0 }, || {
                    format!("boundary x={:?}, t={}", sample.point.x, sample.point.t)
                });
            }
        }
    }
    if !floor_seen {
        chk.check("boundary_liminf", f64::INFINITY, || "no boundary samples".into());
    }

    // vanishing at the origin along the axis, the lateral surface and a
    // mid path, parameterized by lambda = log|log|t|| so the approach
    // continues far past representable times
    let lambda_end = ((2.0 / tol).ln() / delta).max(5.0);
    for (name, frac) in [("axis", 0.0), ("mid", 0.5), ("lateral", 1.0)] {
        let mut last_w = f64::INFINITY;
        for step in 1..=40 {
            let lambda = lambda_end * step as f64 / 40.0;
            let xi = frac * lambda;
            last_w = petrovsky_value_sim(c, delta, xi, lambda).abs();
        }
        chk.check("vanishing", last_w - tol, || format!("{name} path, lambda={lambda_end}"));
    }

    let floor = if floor.is_finite() { floor } else { 0.0 };
    chk.into_report(floor)
}

fn verify_irregularity(b: &Barrier, n_samples: usize, tol: f64) -> BarrierReport {
    let (eps1, k, m, lambda_min, lambda_max) = match &b.kind {
        Kind::Irregularity { eps1, k, m, lambda_min, lambda_max } => {
            (*eps1, *k, *m, *lambda_min, *lambda_max)
        }
        _ => unreachable!(),
    };
    let mut chk = Checker::new(tol);
    let side = (n_samples as f64).sqrt().ceil() as usize;

    // interior of the level domain: subsolution inequality and the level
    // separation w >= m
    for i in 0..side {
        let lambda = lambda_min + (lambda_max - lambda_min) * (i as f64 + 0.5) / side as f64;
        let kxi_max = irregularity_level_kxi(lambda, eps1, m);
        for j in 0..side {
            let xi = kxi_max / k * j as f64 / side as f64;
            let s = irregularity_subsolution_sign(xi, lambda, eps1, k, &b.params);
            chk.check("pde_inequality", s, || format!("xi={xi}, lambda={lambda}"));
            let w = irregularity_value(xi, lambda, eps1, k);
            chk.check("positivity", m - w, || format!("xi={xi}, lambda={lambda}"));
        }
    }

    // the level surface carries w = m < 0, separated from the interior
    // limit 0 along the axis
    for i in 0..(4 * side) {
        let lambda = lambda_min + (lambda_max - lambda_min) * (i as f64 + 0.5) / (4 * side) as f64;
        let xi = irregularity_level_kxi(lambda, eps1, m) / k;
        let w = irregularity_value(xi, lambda, eps1, k);
        let sep = (w - m).abs().max(if m < -tol { 0.0 } else { tol + 1.0 });
        chk.check("boundary_liminf", sep - tol, || format!("level surface at lambda={lambda}"));
    }

    // interior approach to the origin: w -> 0 along the axis and along
    // rays at fixed fractions of the level surface
    let lambda_end = (4.0 / tol).max(4.0 * lambda_max);
    for (name, frac) in [("axis", 0.0), ("mid", 0.5), ("near-surface", 0.9)] {
        let kxi = irregularity_level_kxi(lambda_end, eps1, m) * frac;
        let w = irregularity_value(kxi / k, lambda_end, eps1, k);
        chk.check("vanishing", w.abs() - tol, || format!("{name} path, lambda={lambda_end}"));
    }

    chk.into_report(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sphere_parameter_examples() {
        let q = PParams::new(2.0, 1).unwrap();
        assert_relative_eq!(choose_sphere_parameter(0.5, 1.0, &q), 18.0);
        let q = PParams::new(10.0, 3).unwrap();
        assert_relative_eq!(
            choose_sphere_parameter(1.0, 0.5, &q),
            (0.5 + 11.0 / 20.0 + 1.0) * 10.0 / 9.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn sphere_parameter_satisfies_inequality_with_margin() {
        for &(p, n, r0, delta) in &[
            (2.0, 1, 1.0, 0.5),
            (10.0, 3, 0.5, 1.0),
            (3.0, 2, 2.0, 0.25),
            (f64::INFINITY, 2, 1.0, 0.5),
        ] {
            let q = PParams::new(p, n).unwrap();
            let a = choose_sphere_parameter(delta, r0, &q);
            // -R0 + a (p-1)/p delta^2 - (p+n-2)/(2p), written via alpha, beta
            let margin = -r0 + a * delta * delta * q.beta / 4.0 - q.alpha / 4.0;
            assert_relative_eq!(margin, 1.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn north_pole_radius_constraint() {
        let q = PParams::new(2.0, 1).unwrap(); // alpha = 1
        let north = |r0: f64| Point::new(vec![0.0], r0);
        assert!(exterior_sphere_barrier(&[0.0], 0.0, 0.6, &north(0.6), &q).is_ok());
        assert!(exterior_sphere_barrier(&[0.0], 0.0, 0.4, &north(0.4), &q).is_err());
    }

    #[test]
    fn south_pole_rejected() {
        let q = PParams::new(3.0, 2).unwrap();
        let south = Point::new(vec![0.0, 0.0], -1.0);
        let err = exterior_sphere_barrier(&[0.0, 0.0], 0.0, 1.0, &south, &q).unwrap_err();
        assert!(err.to_string().contains("south-pole"));
    }

    #[test]
    fn equatorial_contact_accepted_any_radius() {
        let q = PParams::new(2.0, 1).unwrap();
        for r0 in [0.1, 0.5, 2.0] {
            let contact = Point::new(vec![r0], 0.0);
            assert!(exterior_sphere_barrier(&[0.0], 0.0, r0, &contact, &q).is_ok());
        }
    }

    #[test]
    fn sphere_barrier_vanishes_exactly_on_sphere() {
        let q = PParams::new(3.0, 1).unwrap();
        let contact = Point::new(vec![1.0], 0.0);
        let b = exterior_sphere_barrier(&[0.0], 0.0, 1.0, &contact, &q).unwrap();
        assert_eq!(b.value(&Point::new(vec![1.0], 0.0)), 0.0);
        assert_eq!(b.value(&Point::new(vec![0.0], 1.0)), 0.0);
        assert!(b.value(&Point::new(vec![1.2], 0.0)) > 0.0);
        assert!(b.value(&Point::new(vec![0.5], 0.0)) < 0.0);
    }

    #[test]
    fn equatorial_barrier_passes_verification() {
        for &(p, n) in &[(2.0, 1), (3.0, 2)] {
            let q = PParams::new(p, n).unwrap();
            let cx = vec![0.0; n];
            let mut contact_x = vec![0.0; n];
            contact_x[0] = 1.0;
            let contact = Point::new(contact_x, 0.5);
            let b = exterior_sphere_barrier(&cx, 0.5, 1.0, &contact, &q).unwrap();
            let report = verify_barrier(&b, 400, 1e-8);
            assert!(report.all_ok(), "equatorial p={p}, n={n}: {:?}", report.failures);
            assert!(report.boundary_floor > 0.0);
        }
    }

    #[test]
    fn north_pole_barrier_passes_verification() {
        let q = PParams::new(2.0, 1).unwrap();
        let contact = Point::new(vec![0.0], 0.6);
        let b = exterior_sphere_barrier(&[0.0], 0.0, 0.6, &contact, &q).unwrap();
        let report = verify_barrier(&b, 400, 1e-8);
        assert!(report.all_ok(), "north pole: {:?}", report.failures);
    }

    #[test]
    fn broken_sphere_parameter_fails_supersolution() {
        let q = PParams::new(2.0, 1).unwrap();
        let contact = Point::new(vec![1.0], 0.5);
        let b = exterior_sphere_barrier_with(&[0.0], 0.5, 1.0, &contact, &q, Some(0.05)).unwrap();
        let report = verify_barrier(&b, 400, 1e-8);
        assert!(!report.supersolution_ok);
        assert!(report.failures.iter().any(|f| f.axiom == "pde_inequality"));
    }

    #[test]
    fn south_pole_witness_negative_for_all_a() {
        let q = PParams::new(2.0, 1).unwrap();
        for a in [1.0, 10.0, 100.0, 1000.0] {
            let w = south_pole_failure_witness(&[0.0], 0.0, 1.0, &q, a);
            assert!(w.bracket < 0.0, "a={a}: bracket {} not negative", w.bracket);
            // the full residual keeps the sign; its magnitude underflows
            // once a R^2 exceeds the exponent range
            assert!(w.residual < 0.0 || w.residual.is_sign_negative(), "a={a}");
            assert!(w.point.t < -1.0);
        }
    }

    #[test]
    fn petrovsky_delta_choice() {
        let q = PParams::new(2.0, 2).unwrap(); // alpha = beta = 2
        let b = petrovsky_barrier(0.5, &q).unwrap();
        assert_relative_eq!(b.constants["delta"], 0.5);
        assert!(petrovsky_barrier(1.5, &q).is_err());
        assert!(petrovsky_barrier(-0.1, &q).is_err());
    }

    #[test]
    fn petrovsky_lateral_boundary_value() {
        // on the cusp surface w = (1-c) |log|t||^{-delta}; with c = 0.5,
        // L = e (lambda = 1), delta = 0.5 this is 0.5 e^{-1/2}
        let w = petrovsky_value_sim(0.5, 0.5, 1.0, 1.0);
        assert_relative_eq!(w, 0.5 * (-0.5f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn petrovsky_axis_value_positive() {
        let q = PParams::new(2.0, 2).unwrap();
        let b = petrovsky_barrier(0.5, &q).unwrap();
        for &t in &[-1e-4, -1e-8, -1e-30, -1e-200] {
            let w = b.value(&Point::new(vec![0.0, 0.0], t));
            assert!(w > 0.0, "axis value at t={t} is {w}");
        }
    }

    #[test]
    fn petrovsky_bracket_identity() {
        // sample inside the cusp: |x|^2 = frac^2 * beta |t| log|log|t||
        let q = PParams::new(2.0, 2).unwrap();
        for &t in &[-1e-4f64, -1e-6, -1e-12] {
            let l = (1.0 / t.abs()).ln();
            for &frac in &[0.3, 0.9] {
                let r = frac * (q.beta * t.abs() * l.ln()).sqrt();
                let p = Point::new(vec![r / 2f64.sqrt(), r / 2f64.sqrt()], t);
                let gap = petrovsky_bracket_gap(0.5, &q, &p);
                assert!(gap < 1e-10, "bracket gap {gap} at r={r}, t={t}");
            }
        }
    }

    #[test]
    fn petrovsky_axis_residual_tight_in_the_limit() {
        // on the axis the envelope residual is -c(delta+1)/(t L^{delta+2}):
        // strictly positive, and the normalized slack
        // -t L^{delta+1} (w_t - envelope) = c(delta+1)/L decreases to 0,
        // so the inequality becomes an equality in the limit
        let q = PParams::new(2.0, 1).unwrap();
        let c = 0.5;
        let b = petrovsky_barrier(c, &q).unwrap();
        let delta = b.constants["delta"];
        let mut prev_slack = f64::INFINITY;
        for &t in &[-1e-4f64, -1e-8, -1e-16, -1e-32] {
            let jet = b.jet(&Point::new(vec![0.0], t));
            let res = residual_sided(&jet, &q, DEFAULT_TAU, EnvelopeSide::Lower);
            assert!(res > 0.0, "axis residual {res} at t={t}");
            let l = (1.0 / t.abs()).ln();
            let slack = -t * l.powf(delta + 1.0) * res;
            assert_relative_eq!(slack, c * (delta + 1.0) / l, max_relative = 1e-9);
            assert!(slack < prev_slack);
            prev_slack = slack;
        }
    }

    #[test]
    fn petrovsky_barrier_passes_verification() {
        for &(p, n) in &[(2.0, 1), (2.0, 2), (5.0, 3)] {
            let q = PParams::new(p, n).unwrap();
            let b = petrovsky_barrier(0.5, &q).unwrap();
            let report = verify_barrier(&b, 2000, 1e-8);
            assert!(report.all_ok(), "petrovsky p={p}, n={n}: {:?}", report.failures);
            assert!(report.boundary_floor > 0.0);
        }
    }

    #[test]
    fn irregularity_constraint_arithmetic() {
        let q = PParams::new(2.0, 1).unwrap();
        // eps = 1 target: (1.2)/0.9 = 1.333 < 1.5 accepted
        let b = irregularity_subsolution(0.2, 0.9, -0.1, &q, Some(1.0)).unwrap();
        assert_relative_eq!(
            b.constants["containment_margin"],
            1.5 - 1.2 / 0.9,
            max_relative = 1e-12
        );
        // eps = 0.1 target: 1.333 > 1.05 rejected
        assert!(irregularity_subsolution(0.2, 0.9, -0.1, &q, Some(0.1)).is_err());
        assert!(irregularity_subsolution(-0.2, 0.9, -0.1, &q, None).is_err());
        assert!(irregularity_subsolution(0.2, 0.4, -0.1, &q, None).is_err());
        assert!(irregularity_subsolution(0.2, 0.9, 0.1, &q, None).is_err());
    }

    #[test]
    fn irregularity_time_condition_example() {
        // p=2, n=1: alpha/beta = 1/2, eps1 = 0.2 -> need log|log|t|| > 20
        let q = PParams::new(2.0, 1).unwrap();
        assert_relative_eq!(irregularity_time_condition(&q, 0.2), 20.0);
    }

    #[test]
    fn irregularity_witness_passes_verification() {
        let q = PParams::new(2.0, 1).unwrap();
        let b = irregularity_subsolution(0.2, 0.9, -0.1, &q, Some(1.0)).unwrap();
        let report = verify_barrier(&b, 2000, 1e-8);
        assert!(report.all_ok(), "irregularity: {:?}", report.failures);
        // the separation: boundary values sit at m < 0, interior limit is 0
        assert!(report.boundary_floor < 0.0);
    }

    #[test]
    fn target_on_domain_boundary() {
        let q = PParams::new(2.0, 1).unwrap();
        let contact = Point::new(vec![1.0], 0.0);
        let b = exterior_sphere_barrier(&[0.0], 0.0, 1.0, &contact, &q).unwrap();
        let d = b.domain.as_ref().unwrap();
        assert!(d.phi(&b.target).abs() <= 1e-10);

        let pb = petrovsky_barrier(0.5, &q).unwrap();
        let d = pb.domain.as_ref().unwrap();
        assert!(d.phi(&pb.target).abs() <= 1e-10);
    }
}
