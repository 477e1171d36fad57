//! Explicit monotone finite-difference solver for u_t = A_p u on
//! implicit space-time domains, with boundary data prescribed on the
//! full Euclidean boundary. Time marches forward from the earliest
//! slice; values on the latest slice are outputs, never inputs.

use std::collections::BTreeMap;

use crate::domain::{project_to_boundary, BoundarySample, Domain};
use crate::error::{Error, Result};
use crate::geometry::{Point, SpaceTimeBox};
use crate::params::PParams;
use crate::solutions::Solution;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub h: f64,
    pub dt: f64,
    pub bbox: SpaceTimeBox,
}

impl GridSpec {
    /// Spec with dt at the CFL bound for the given parameters.
    pub fn with_cfl_dt(h: f64, bbox: SpaceTimeBox, params: &PParams) -> Self {
        GridSpec { h, dt: cfl_max_dt(h, params), bbox }
    }
}

/// Stability bound for the forward-Euler update:
/// 0.9 h^2 / (2 (n/p + max(1/p, (p-1)/p))); the p = inf limit is 0.9 h^2/2.
pub fn cfl_max_dt(h: f64, params: &PParams) -> f64 {
    assert!(h > 0.0);
    let c1 = params.trace_coeff();
    let lead = if params.is_infinite() {
        1.0
    } else {
        c1.max((params.p() - 1.0) / params.p())
    };
    0.9 * h * h / (2.0 * (params.n() as f64 * c1 + lead))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Interior,
    Boundary,
    Exterior,
}

/// Uniform spatial grid: node i has coordinates origin + i*h per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceGrid {
    pub h: f64,
    pub origin: Vec<f64>,
    pub shape: Vec<usize>,
    strides: Vec<usize>,
}

impl SpaceGrid {
    fn new(h: f64, origin: Vec<f64>, shape: Vec<usize>) -> Self {
        let mut strides = vec![1; shape.len()];
        for d in (0..shape.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * shape[d + 1];
        }
        SpaceGrid { h, origin, shape, strides }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn multi(&self, idx: usize) -> Vec<usize> {
        let mut rem = idx;
        self.strides
            .iter()
            .map(|s| {
                let q = rem / s;
                rem %= s;
                q
            })
            .collect()
    }

    pub fn index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(m, s)| m * s).sum()
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi(idx)
            .iter()
            .zip(&self.origin)
            .map(|(m, o)| o + *m as f64 * self.h)
            .collect()
    }

    /// Axis neighbor index, or None at the grid edge.
    pub fn neighbor(&self, idx: usize, axis: usize, step: i64) -> Option<usize> {
        let m = self.multi(idx);
        let v = m[axis] as i64 + step;
        if v < 0 || v >= self.shape[axis] as i64 {
            return None;
        }
        let delta = (v - m[axis] as i64) * self.strides[axis] as i64;
        Some((idx as i64 + delta) as usize)
    }
}

#[derive(Debug, Clone)]
pub struct Rasterized {
    pub grid: SpaceGrid,
    pub times: Vec<f64>,
    /// Node classification per time slice.
    pub class: Vec<Vec<NodeClass>>,
    /// Projected boundary points for boundary nodes, per slice.
    pub datum_points: Vec<BTreeMap<usize, BoundarySample>>,
    pub first_slice: usize,
}

impl Rasterized {
    pub fn interior_count(&self) -> usize {
        self.class
            .iter()
            .map(|s| s.iter().filter(|c| **c == NodeClass::Interior).count())
            .sum()
    }
}

#[derive(Debug, Clone)]
pub struct GridSolution {
    pub spec: GridSpec,
    pub params: PParams,
    pub raster: Rasterized,
    /// Values per slice per node; exterior nodes hold 0.
    pub values: Vec<Vec<f64>>,
}

impl GridSolution {
    pub fn point(&self, slice: usize, node: usize) -> Point {
        Point::new(self.raster.grid.coords(node), self.raster.times[slice])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub linf: f64,
    pub l2: f64,
    pub h: f64,
    pub dt: f64,
    pub n_interior: usize,
}

fn inside(domain: &Domain, grid: &SpaceGrid, node: usize, t: f64) -> bool {
    domain.phi(&Point::new(grid.coords(node), t)) < 0.0
}

/// Classify grid nodes against the domain, slice by slice. A node is
/// interior when it and its axis neighbors are inside both at its own
/// slice and the previous one (the forward march reads those values);
/// inside nodes failing that are boundary, with their datum point
/// projected toward the most nearly inside exterior neighbor. The whole
/// earliest slice of the domain is boundary: that is the initial data.
pub fn rasterize(domain: &Domain, spec: &GridSpec) -> Result<Rasterized> {
    let n = domain.dim();
    let bbox = &spec.bbox;
    let mut shape = Vec::with_capacity(n);
    for d in 0..n {
        let count = ((bbox.x_max[d] - bbox.x_min[d]) / spec.h).round() as usize + 1;
        if count < 3 {
            return Err(Error::InvalidArgument(format!(
                "grid too coarse along axis {d}: {count} nodes"
            )));
        }
        shape.push(count);
    }
    let grid = SpaceGrid::new(spec.h, bbox.x_min.clone(), shape);
    let nt = ((bbox.t_max - bbox.t_min) / spec.dt).floor() as usize + 1;
    let times: Vec<f64> = (0..nt).map(|k| bbox.t_min + k as f64 * spec.dt).collect();

    let nn = grid.len();
    let mut class = vec![vec![NodeClass::Exterior; nn]; nt];
    let mut datum_points: Vec<BTreeMap<usize, BoundarySample>> = vec![BTreeMap::new(); nt];

    // raw membership per slice
    let mut is_in = vec![vec![false; nn]; nt];
    for (k, t) in times.iter().enumerate() {
        for (i, flag) in is_in[k].iter_mut().enumerate() {
            *flag = inside(domain, &grid, i, *t);
        }
    }
    let first_slice = match is_in.iter().position(|s| s.iter().any(|v| *v)) {
        Some(k) => k,
        None => return Err(Error::EmptyInterior),
    };

    let mut any_interior = false;
    for k in first_slice..nt {
        let t = times[k];
        for i in 0..nn {
            if !is_in[k][i] {
                continue;
            }
            let stencil_ok = |kk: usize| -> bool {
                is_in[kk][i]
                    && (0..n).all(|d| {
                        [-1i64, 1].iter().all(|s| {
                            grid.neighbor(i, d, *s).map(|j| is_in[kk][j]).unwrap_or(false)
                        })
                    })
            };
            let interior = k > first_slice && stencil_ok(k) && stencil_ok(k - 1);
            if interior {
                class[k][i] = NodeClass::Interior;
                any_interior = true;
                continue;
            }
            class[k][i] = NodeClass::Boundary;
            let here = Point::new(grid.coords(i), t);
            // exterior reference: the spatial exterior neighbor with the
            // smallest phi, then the same node at the previous slice,
            // then a straight drop below the first slice
            let mut best: Option<(f64, Point)> = None;
            for d in 0..n {
                for s in [-1i64, 1] {
                    let cand = match grid.neighbor(i, d, s) {
                        Some(j) if !is_in[k][j] => Point::new(grid.coords(j), t),
                        Some(_) => continue,
                        None => {
                            let mut x = grid.coords(i);
                            x[d] += s as f64 * spec.h;
                            Point::new(x, t)
                        }
                    };
                    let phi = domain.phi(&cand);
                    if phi >= 0.0 && best.as_ref().map(|(b, _)| phi < *b).unwrap_or(true) {
                        best = Some((phi, cand));
                    }
                }
            }
            if best.is_none() && k > 0 && !is_in[k - 1][i] {
                let cand = Point::new(grid.coords(i), times[k - 1]);
                best = Some((domain.phi(&cand), cand));
            }
            if best.is_none() {
                // first slice of the domain with everything inside: walk
                // backwards in time until we exit
                let mut t_out = t - spec.dt;
                for _ in 0..64 {
                    if domain.phi(&Point::new(grid.coords(i), t_out)) >= 0.0 {
                        break;
                    }
                    t_out -= spec.dt;
                }
                let cand = Point::new(grid.coords(i), t_out);
                if domain.phi(&cand) >= 0.0 {
                    best = Some((domain.phi(&cand), cand));
                }
            }
            match best {
                Some((_, outside_pt)) => {
                    let sample = project_to_boundary(domain, &here, &outside_pt)?;
                    datum_points[k].insert(i, sample);
                }
                None => {
                    // fully wet first slice with no exit below: treat the
                    // node itself as the datum location
                    datum_points[k].insert(
                        i,
                        BoundarySample { point: here, is_parabolic: true },
                    );
                }
            }
        }
    }
    if !any_interior {
        return Err(Error::EmptyInterior);
    }
    Ok(Rasterized { grid, times, class, datum_points, first_slice })
}

/// One-slice application of the discrete operator at an interior node:
/// (1/p) * (2n+1)-point Laplacian + ((p-2)/p) * second difference along
/// the discrete gradient direction. Off-grid samples for the directional
/// difference come from multilinear interpolation; when the discrete
/// gradient is at most h in norm (or the interpolation cell touches the
/// exterior), the directional term falls back to the average of the
/// extreme second differences over axis and diagonal directions.
pub fn discrete_operator(
    values: &[f64],
    class: &[NodeClass],
    grid: &SpaceGrid,
    node: usize,
    params: &PParams,
    h: f64,
) -> f64 {
    let n = grid.dim();
    let c1 = params.trace_coeff();
    let c2 = params.dir_coeff();
    let u0 = values[node];

    let mut lap = 0.0;
    let mut grad = vec![0.0; n];
    for (d, g) in grad.iter_mut().enumerate() {
        let jp = grid.neighbor(node, d, 1).expect("interior node has neighbors");
        let jm = grid.neighbor(node, d, -1).expect("interior node has neighbors");
        lap += (values[jp] + values[jm] - 2.0 * u0) / (h * h);
        *g = (values[jp] - values[jm]) / (2.0 * h);
    }
    if c2 == 0.0 {
        return c1 * lap;
    }

    let gnorm = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
    let dir_term = if gnorm > h {
        directional_second_difference(values, class, grid, node, &grad, gnorm, h)
    } else {
        None
    };
    let dir = dir_term.unwrap_or_else(|| extreme_average(values, class, grid, node, h));
    c1 * lap + c2 * dir
}

/// Multilinear interpolation of the slice values at an off-grid point.
/// Returns None when the interpolation cell leaves the grid or touches an
/// exterior node.
fn interpolate(
    values: &[f64],
    class: &[NodeClass],
    grid: &SpaceGrid,
    x: &[f64],
) -> Option<f64> {
    let n = grid.dim();
    let mut base = Vec::with_capacity(n);
    let mut frac = Vec::with_capacity(n);
    for (d, v) in x.iter().enumerate() {
        let rel = (v - grid.origin[d]) / grid.h;
        let fl = rel.floor();
        let i = fl as i64;
        if i < 0 || i as usize + 1 >= grid.shape[d] {
            return None;
        }
        base.push(i as usize);
        frac.push(rel - fl);
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << n) {
        let mut multi = base.clone();
        let mut w = 1.0;
        for d in 0..n {
            if corner & (1 << d) != 0 {
                multi[d] += 1;
                w *= frac[d];
            } else {
                w *= 1.0 - frac[d];
            }
        }
        let idx = grid.index(&multi);
        if class[idx] == NodeClass::Exterior {
            return None;
        }
        acc += w * values[idx];
    }
    Some(acc)
}

fn directional_second_difference(
    values: &[f64],
    class: &[NodeClass],
    grid: &SpaceGrid,
    node: usize,
    grad: &[f64],
    gnorm: f64,
    h: f64,
) -> Option<f64> {
    let x0 = grid.coords(node);
    let mut plus = x0.clone();
    let mut minus = x0;
    for ((p, m), g) in plus.iter_mut().zip(minus.iter_mut()).zip(grad) {
        let step = h * g / gnorm;
        *p += step;
        *m -= step;
    }
    let up = interpolate(values, class, grid, &plus)?;
    let um = interpolate(values, class, grid, &minus)?;
    Some((up + um - 2.0 * values[node]) / (h * h))
}

/// Average of the minimum and maximum second differences over the 2n
/// axis and 2n(n-1) diagonal directions (only directions whose sample
/// nodes exist and are not exterior participate).
fn extreme_average(
    values: &[f64],
    class: &[NodeClass],
    grid: &SpaceGrid,
    node: usize,
    h: f64,
) -> f64 {
    let n = grid.dim();
    let u0 = values[node];
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut push = |d2: f64| {
        lo = lo.min(d2);
        hi = hi.max(d2);
    };
    let valid = |idx: Option<usize>| -> Option<usize> {
        idx.filter(|j| class[*j] != NodeClass::Exterior)
    };
    for d in 0..n {
        if let (Some(jp), Some(jm)) =
            (valid(grid.neighbor(node, d, 1)), valid(grid.neighbor(node, d, -1)))
        {
            push((values[jp] + values[jm] - 2.0 * u0) / (h * h));
        }
    }
    for d1 in 0..n {
        for d2 in (d1 + 1)..n {
            for s in [1i64, -1] {
                let step = |idx: usize, sign: i64| -> Option<usize> {
                    grid.neighbor(idx, d1, sign).and_then(|j| grid.neighbor(j, d2, sign * s))
                };
                if let (Some(jp), Some(jm)) = (valid(step(node, 1)), valid(step(node, -1))) {
                    // samples at distance h*sqrt(2): divide by 2h^2
                    push((values[jp] + values[jm] - 2.0 * u0) / (2.0 * h * h));
                }
            }
        }
    }
    if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else {
        0.0
    }
}

struct MarchOutcome {
    sol: GridSolution,
    first_bad_slice: Option<usize>,
}

fn march(
    domain: &Domain,
    datum: &dyn Fn(&BoundarySample) -> f64,
    spec: &GridSpec,
    params: &PParams,
) -> Result<MarchOutcome> {
    let raster = rasterize(domain, spec)?;
    let nn = raster.grid.len();
    let nt = raster.times.len();
    let mut values = vec![vec![0.0f64; nn]; nt];
    let mut first_bad = None;

    for k in raster.first_slice..nt {
        // boundary nodes are pinned to the datum at their projected points
        for (i, sample) in &raster.datum_points[k] {
            values[k][*i] = datum(sample);
        }
        if k + 1 < nt {
            let (done, rest) = values.split_at_mut(k + 1);
            let cur = &done[k];
            let next = &mut rest[0];
            for i in 0..nn {
                if raster.class[k + 1][i] == NodeClass::Interior {
                    let val = cur[i]
                        + spec.dt
                            * discrete_operator(
                                cur,
                                &raster.class[k],
                                &raster.grid,
                                i,
                                params,
                                spec.h,
                            );
                    next[i] = val;
                    if !val.is_finite() && first_bad.is_none() {
                        first_bad = Some(k + 1);
                    }
                }
            }
        }
    }
    Ok(MarchOutcome {
        sol: GridSolution { spec: spec.clone(), params: *params, raster, values },
        first_bad_slice: first_bad,
    })
}

/// Forward-Euler solve with boundary data sampled at projected boundary
/// points. Rejects time steps above the CFL bound and subquadratic p
/// (1 < p < 2 runs carry no stability guarantee; use
/// `solve_experimental` for those).
pub fn solve(
    domain: &Domain,
    datum: &dyn Fn(&BoundarySample) -> f64,
    spec: &GridSpec,
    params: &PParams,
) -> Result<GridSolution> {
    let max_dt = cfl_max_dt(spec.h, params);
    if spec.dt > max_dt * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt: spec.dt, max_dt });
    }
    if !params.is_infinite() && params.p() < 2.0 {
        return Err(Error::InvalidArgument(
            "1 < p < 2 lies outside the monotonicity guarantee; \
             call solve_experimental to run it anyway"
                .into(),
        ));
    }
    let out = march(domain, datum, spec, params)?;
    if let Some(slice) = out.first_bad_slice {
        return Err(Error::Unstable { slice });
    }
    Ok(out.sol)
}

/// Unchecked run: permits subquadratic p and CFL violations, returning
/// whatever the march produces. Negative controls use this.
pub fn solve_experimental(
    domain: &Domain,
    datum: &dyn Fn(&BoundarySample) -> f64,
    spec: &GridSpec,
    params: &PParams,
) -> Result<GridSolution> {
    Ok(march(domain, datum, spec, params)?.sol)
}

/// L-infinity and RMS error against an exact solution over interior
/// nodes in the final quarter of the time window.
pub fn error_vs(gsol: &GridSolution, exact: &Solution) -> ErrorReport {
    let times = &gsol.raster.times;
    let t_cut = times[gsol.raster.first_slice]
        + 0.75 * (times[times.len() - 1] - times[gsol.raster.first_slice]);
    let mut linf = 0.0f64;
    let mut sum_sq = 0.0f64;
    let mut count = 0usize;
    for (k, t) in times.iter().enumerate() {
        if *t < t_cut {
            continue;
        }
        for i in 0..gsol.raster.grid.len() {
            if gsol.raster.class[k][i] != NodeClass::Interior {
                continue;
            }
            let p = gsol.point(k, i);
            if exact.is_singular(&p) {
                continue;
            }
            let e = (gsol.values[k][i] - exact.value(&p)).abs();
            linf = linf.max(e);
            sum_sq += e * e;
            count += 1;
        }
    }
    ErrorReport {
        linf,
        l2: if count > 0 { (sum_sq / count as f64).sqrt() } else { 0.0 },
        h: gsol.spec.h,
        dt: gsol.spec.dt,
        n_interior: count,
    }
}

/// Discrete comparison: with ordered boundary data the solutions stay
/// ordered at every interior node and slice (tolerance 1e-12). Runs the
/// unchecked march so CFL-violating negative controls report false
/// rather than erroring.
pub fn check_discrete_comparison(
    domain: &Domain,
    datum_low: &dyn Fn(&BoundarySample) -> f64,
    datum_high: &dyn Fn(&BoundarySample) -> f64,
    spec: &GridSpec,
    params: &PParams,
) -> Result<bool> {
    let low = march(domain, datum_low, spec, params)?.sol;
    let high = march(domain, datum_high, spec, params)?.sol;
    for k in 0..low.raster.times.len() {
        for i in 0..low.raster.grid.len() {
            if low.raster.class[k][i] != NodeClass::Interior {
                continue;
            }
            let (a, b) = (low.values[k][i], high.values[k][i]);
            // non-finite values count as violations
            if a.is_nan() || b.is_nan() || a > b + 1e-12 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
