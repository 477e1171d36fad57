//! Demo API: plain functions producing JSON for the browser page.
//! Everything here runs (and is tested) on the host; the wasm layer in
//! lib.rs only forwards strings.

use serde::Serialize;

use pparab::domain::{self, BoundarySample, Domain};
use pparab::geometry::Point;
use pparab::lab::probe_regularity;
use pparab::params::PParams;
use pparab::solutions::{fundamental, TimeSign};
use pparab::solver::{solve, GridSpec, NodeClass};

#[derive(Serialize)]
struct FieldJson {
    nx: usize,
    nt: usize,
    x0: f64,
    t0: f64,
    h: f64,
    dt: f64,
    /// Row-major (time-major) solution values; exterior nodes carry 0.
    values: Vec<f64>,
    /// 0 exterior, 1 boundary, 2 interior.
    mask: Vec<u8>,
    min: f64,
    max: f64,
    label: String,
}

fn demo_domain(kind: &str, shape: f64, q: &PParams) -> Result<(Domain, Point), String> {
    match kind {
        "petrovsky" => {
            let d = domain::petrovsky_domain(shape.max(1.0), 0.3, q).map_err(|e| e.to_string())?;
            Ok((d, Point::new(vec![0.0], 0.0)))
        }
        "heatball" => {
            let d = domain::heat_ball(shape.max(0.05), &[0.0], 0.0, q).map_err(|e| e.to_string())?;
            Ok((d, Point::new(vec![0.0], 0.0)))
        }
        "ball" => {
            let d = domain::spacetime_ball(&[0.0], 0.0, shape.max(0.1)).map_err(|e| e.to_string())?;
            Ok((d, Point::new(vec![0.0], shape.max(0.1))))
        }
        "cylinder" => {
            let d = domain::cylinder(vec![-2.0], vec![2.0], 0.5, 1.5).map_err(|e| e.to_string())?;
            Ok((d, Point::new(vec![0.0], 1.5)))
        }
        other => Err(format!("unknown domain kind '{other}'")),
    }
}

/// Solve on a one-dimensional demo domain and return the space-time
/// field for heatmap rendering. The cylinder uses the self-similar
/// solution as boundary data; the implicit domains use the distance
/// datum of the regularity probe.
pub fn solve_field(kind: &str, p: f64, shape: f64, h: f64) -> Result<String, String> {
    let q = PParams::new(p, 1).map_err(|e| e.to_string())?;
    let h = h.clamp(0.005, 0.2);
    let (dom, target) = demo_domain(kind, shape, &q)?;
    let spec = GridSpec::with_cfl_dt(h, dom.bbox.clone(), &q);
    let exact = if kind == "cylinder" {
        Some(fundamental(&q, TimeSign::Positive).map_err(|e| e.to_string())?)
    } else {
        None
    };
    let datum = |s: &BoundarySample| match &exact {
        Some(sol) => sol.value(&s.point),
        None => s.point.dist(&target).min(1.0),
    };
    let sol = solve(&dom, &datum, &spec, &q).map_err(|e| e.to_string())?;
    let nx = sol.raster.grid.len();
    let nt = sol.raster.times.len();
    let mut values = Vec::with_capacity(nx * nt);
    let mut mask = Vec::with_capacity(nx * nt);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..nt {
        for i in 0..nx {
            let class = sol.raster.class[k][i];
            let v = sol.values[k][i];
            values.push(v);
            mask.push(match class {
                NodeClass::Exterior => 0,
                NodeClass::Boundary => 1,
                NodeClass::Interior => 2,
            });
            if class != NodeClass::Exterior {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    let out = FieldJson {
        nx,
        nt,
        x0: sol.raster.grid.origin[0],
        t0: sol.raster.times[0],
        h: spec.h,
        dt: spec.dt,
        values,
        mask,
        min: lo,
        max: hi,
        label: dom.label().to_string(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ProbeJson {
    levels: Vec<[f64; 2]>,
    gaps: Vec<f64>,
    verdict: String,
    label: String,
}

/// Boundary-regularity probe on a demo domain; returns the per-level
/// readings and the verdict string.
pub fn regularity_gaps(kind: &str, p: f64, shape: f64) -> Result<String, String> {
    let q = PParams::new(p, 1).map_err(|e| e.to_string())?;
    let (dom, target) = demo_domain(kind, shape, &q)?;
    let report = probe_regularity(
        &dom,
        &target,
        &q,
        &[0.04, 0.02, 0.01],
        0.05,
        0.15,
        &[0.0, -1.0],
    )
    .map_err(|e| e.to_string())?;
    let out = ProbeJson {
        levels: report.levels.iter().map(|(h, v)| [*h, *v]).collect(),
        gaps: report.gap_sequence.clone(),
        verdict: report.verdict.to_string(),
        label: dom.label().to_string(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct ProfilesJson {
    x: Vec<f64>,
    curves: Vec<CurveJson>,
}

#[derive(Serialize)]
struct CurveJson {
    p: f64,
    values: Vec<f64>,
}

/// Spatial profiles of the self-similar solution H_p(x, t) at a fixed
/// time, including the p = inf limit W.
pub fn fundamental_profiles(p_list: &[f64], t: f64, half_width: f64, count: usize) -> Result<String, String> {
    if t <= 0.0 {
        return Err("profiles need t > 0".into());
    }
    let count = count.clamp(16, 2048);
    let x: Vec<f64> = (0..count)
        .map(|i| -half_width + 2.0 * half_width * i as f64 / (count - 1) as f64)
        .collect();
    let mut curves = Vec::new();
    for &p in p_list {
        let q = PParams::new(p, 1).map_err(|e| e.to_string())?;
        let sol = fundamental(&q, TimeSign::Positive).map_err(|e| e.to_string())?;
        let values = x.iter().map(|v| sol.value(&Point::new(vec![*v], t))).collect();
        curves.push(CurveJson { p, values });
    }
    serde_json::to_string(&ProfilesJson { x, curves }).map_err(|e| e.to_string())
}
