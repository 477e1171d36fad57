//! Experiment dispatch: build the inputs from a validated config, run
//! the requested command, and write CSV artifacts plus a short summary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pparab::barriers::{
    exterior_sphere_barrier, irregularity_subsolution, petrovsky_barrier, verify_barrier_seeded,
};
use pparab::domain::BoundarySample;
use pparab::geometry::Point;
use pparab::jet::numeric_jet;
use pparab::lab::{
    cylinder_top_experiment, fundamental_limit_check, probe_regularity, sweep_p,
};
use pparab::operator::residual;
use pparab::params::DEFAULT_TAU;
use pparab::sampling::SplitMix64;
use pparab::solutions::catalog;
use pparab::solver::{cfl_max_dt, error_vs, solve, solve_experimental, GridSpec, NodeClass};

use crate::config::{
    build_domain, build_params, parse_datum_spec, Command, DatumSpec, ExperimentConfig,
    ExperimentSection,
};

pub struct RunOutput {
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

pub struct RunFailure(pub String);

impl<E: std::fmt::Display> From<E> for RunFailure {
    fn from(e: E) -> Self {
        RunFailure(e.to_string())
    }
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<(), RunFailure> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| RunFailure(format!("create {dir:?}: {e}")))?;
        }
    }
    let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| RunFailure(format!("write {path:?}: {e}")))?;
    Ok(())
}

fn out_path(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.command.name())))
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    match cfg.command {
        Command::VerifySolutions => run_verify_solutions(cfg),
        Command::VerifyBarriers => run_verify_barriers(cfg),
        Command::Solve => run_solve(cfg),
        Command::ProbeRegularity => run_probe(cfg),
        Command::CylinderTop => run_cylinder_top(cfg),
        Command::SweepP => run_sweep(cfg),
        Command::FundamentalLimit => run_limit(cfg),
    }
}

fn ex(cfg: &ExperimentConfig) -> ExperimentSection {
    cfg.experiment.clone().unwrap_or_default()
}

fn run_verify_solutions(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    let q = build_params(cfg)?;
    let seed = cfg.seed.unwrap_or(0);
    let (entries, skips) = catalog(&q);
    let mut rows = Vec::new();
    let mut summary = String::new();
    writeln!(summary, "catalog at p={}, n={}: {} entries", q.p(), q.n(), entries.len()).ok();
    for sol in &entries {
        // residual sweep off the singular set and the vanishing-gradient set
        let mut rng = SplitMix64::new(seed.wrapping_add(11));
        let mut worst = 0.0f64;
        let mut taken = 0;
        while taken < 200 {
            let x: Vec<f64> = (0..q.n())
                .map(|_| {
                    let v = rng.next_in(0.2, 1.8);
                    if rng.next_f64() < 0.5 {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            let pt = Point::new(x, rng.next_in(0.4, 1.8));
            if sol.is_singular(&pt) || sol.value(&pt).abs() > 8.0 {
                continue;
            }
            let jet = sol.jet(&pt);
            if jet.grad_norm() <= DEFAULT_TAU {
                continue;
            }
            worst = worst.max(residual(&jet, &q, DEFAULT_TAU).abs());
            taken += 1;
        }
        // second-order agreement of analytic and finite-difference jets
        let mut ratios = Vec::new();
        let mut tries = 0;
        while ratios.len() < 20 && tries < 2000 {
            tries += 1;
            let x: Vec<f64> = (0..q.n()).map(|_| rng.next_in(0.3, 1.5)).collect();
            let pt = Point::new(x, rng.next_in(0.5, 1.5));
            if sol.is_singular(&pt) {
                continue;
            }
            let exact = sol.jet(&pt);
            let err = |h: f64| -> Option<f64> {
                let fd = numeric_jet(|p| sol.value(p), &pt, h).ok()?;
                let mut e = (fd.ut - exact.ut).abs();
                e = e.max((&fd.du - &exact.du).amax());
                Some(e.max((&fd.d2u - &exact.d2u).amax()))
            };
            if let (Some(e1), Some(e2)) = (err(2e-2), err(1e-2)) {
                if e1 > 1e-9 {
                    ratios.push(e1 / e2);
                }
            }
        }
        let jet_ratio = if ratios.is_empty() {
            4.0 // differenced exactly (polynomial entries)
        } else {
            ratios.iter().sum::<f64>() / ratios.len() as f64
        };
        writeln!(
            summary,
            "  {:<20} samples=200 max_residual={worst:.3e} jet_ratio={jet_ratio:.2}",
            sol.label
        )
        .ok();
        rows.push(vec![
            sol.label.clone(),
            fmt(q.p()),
            q.n().to_string(),
            fmt(worst),
            fmt(jet_ratio),
        ]);
    }
    for s in &skips {
        writeln!(summary, "  {:<20} skipped: {}", s.name, s.reason).ok();
    }
    let path = out_path(cfg);
    write_csv(&path, "label,p,n,max_residual,jet_ratio", &rows)?;
    Ok(RunOutput { summary, artifacts: vec![path] })
}

fn run_verify_barriers(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    let q = build_params(cfg)?;
    let e = ex(cfg);
    let construction = e.construction.clone().unwrap_or_default();
    let barrier = match construction.as_str() {
        "sphere" => {
            let contact = e.contact.clone().ok_or(RunFailure("missing contact".into()))?;
            let (cx, ct) = contact.split_at(q.n());
            let center_x = e.sphere_center_x.clone().unwrap_or_else(|| vec![0.0; q.n()]);
            let center_t = e.sphere_center_t.unwrap_or(0.0);
            exterior_sphere_barrier(
                &center_x,
                center_t,
                e.r0.ok_or(RunFailure("missing r0".into()))?,
                &Point::new(cx.to_vec(), ct[0]),
                &q,
            )?
        }
        "petrovsky" => petrovsky_barrier(e.barrier_c.ok_or(RunFailure("missing barrier_c".into()))?, &q)?,
        "irregularity" => irregularity_subsolution(
            e.eps1.ok_or(RunFailure("missing eps1".into()))?,
            e.k.ok_or(RunFailure("missing k".into()))?,
            e.m.ok_or(RunFailure("missing m".into()))?,
            &q,
            e.target_eps,
        )?,
        other => return Err(RunFailure(format!("unknown construction '{other}'"))),
    };
    let samples = e.samples.unwrap_or(2000);
    let tol = e.tol.unwrap_or(1e-8);
    let report = verify_barrier_seeded(&barrier, samples, tol, cfg.seed.unwrap_or(0));

    let mut summary = String::new();
    writeln!(
        summary,
        "{} barrier at x={:?}, t={} (p={}, n={})",
        barrier.label,
        barrier.target.x,
        barrier.target.t,
        q.p(),
        q.n()
    )
    .ok();
    writeln!(summary, "  positivity            {}", report.positivity_ok).ok();
    writeln!(summary, "  boundary liminf       {} (floor {:.3e})", report.boundary_liminf_ok, report.boundary_floor).ok();
    writeln!(summary, "  vanishing at target   {}", report.vanishing_at_target_ok).ok();
    writeln!(summary, "  pde inequality        {}", report.supersolution_ok).ok();
    writeln!(summary, "  worst violation       {:.3e} over {} samples", report.worst_violation, report.sample_count).ok();
    for f in report.failures.iter().take(5) {
        writeln!(summary, "  failed {} at {} by {:.3e}", f.axiom, f.location, f.violation).ok();
    }
    let row = vec![
        construction.clone(),
        fmt(q.p()),
        q.n().to_string(),
        report.positivity_ok.to_string(),
        report.boundary_liminf_ok.to_string(),
        report.vanishing_at_target_ok.to_string(),
        report.supersolution_ok.to_string(),
        fmt(report.worst_violation),
        fmt(report.boundary_floor),
        report.sample_count.to_string(),
    ];
    let path = out_path(cfg);
    write_csv(
        &path,
        "construction,p,n,positivity_ok,boundary_liminf_ok,vanishing_at_target_ok,supersolution_ok,worst_violation,boundary_floor,sample_count",
        &[row],
    )?;
    if !report.all_ok() {
        return Err(RunFailure(format!("barrier verification failed\n{summary}")));
    }
    Ok(RunOutput { summary, artifacts: vec![path] })
}

fn run_solve(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    let q = build_params(cfg)?;
    let domain = build_domain(cfg)?;
    let grid = cfg.grid.as_ref().ok_or(RunFailure("missing [grid]".into()))?;
    let e = ex(cfg);
    let dt = grid.dt.unwrap_or_else(|| cfl_max_dt(grid.h, &q));
    let spec = GridSpec { h: grid.h, dt, bbox: domain.bbox.clone() };
    let datum_spec = parse_datum_spec(
        e.datum.as_deref().ok_or(RunFailure("missing experiment.datum".into()))?,
        cfg,
    )?;
    let datum_fn: Box<dyn Fn(&BoundarySample) -> f64> = match &datum_spec {
        DatumSpec::Constant(c) => {
            let c = *c;
            Box::new(move |_: &BoundarySample| c)
        }
        DatumSpec::Exact(sol) => {
            let sol = sol.clone();
            Box::new(move |s: &BoundarySample| sol.value(&s.point))
        }
        DatumSpec::Expression(expr) => {
            let expr = expr.clone();
            Box::new(move |s: &BoundarySample| expr.eval_point(&s.point))
        }
    };
    let subquadratic = !q.is_infinite() && q.p() < 2.0;
    let sol = if subquadratic && e.experimental_subquadratic.unwrap_or(false) {
        solve_experimental(&domain, &*datum_fn, &spec, &q)?
    } else {
        solve(&domain, &*datum_fn, &spec, &q)?
    };

    // CSV rows for the requested probe slices (default: the final slice)
    let times = &sol.raster.times;
    let slice_of = |t: f64| -> usize {
        times
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (*a - t).abs().total_cmp(&(*b - t).abs()))
            .map(|(k, _)| k)
            .unwrap()
    };
    let slices: Vec<usize> = match &e.probe_times {
        Some(ts) => ts.iter().map(|t| slice_of(*t)).collect(),
        None => vec![times.len() - 1],
    };
    let mut rows = Vec::new();
    for &k in &slices {
        for i in 0..sol.raster.grid.len() {
            if sol.raster.class[k][i] == NodeClass::Exterior {
                continue;
            }
            let p = sol.point(k, i);
            let mut row = vec![fmt(p.t)];
            row.extend(p.x.iter().map(|v| fmt(*v)));
            row.push(fmt(sol.values[k][i]));
            rows.push(row);
        }
    }
    let header = {
        let mut h = String::from("t");
        for d in 1..=q.n() {
            write!(h, ",x{d}").ok();
        }
        h.push_str(",u");
        h
    };
    let path = out_path(cfg);
    write_csv(&path, &header, &rows)?;
    let mut artifacts = vec![path.clone()];

    let mut summary = format!(
        "solved {} at p={}, n={} with h={}, dt={} ({} slices, {} interior nodes)\n",
        domain.label(),
        q.p(),
        q.n(),
        spec.h,
        spec.dt,
        times.len(),
        sol.raster.interior_count()
    );
    if let DatumSpec::Exact(exact) = &datum_spec {
        let report = error_vs(&sol, exact);
        let spath = path.with_extension("summary.csv");
        write_csv(
            &spath,
            "linf,l2,h,dt,n_interior",
            &[vec![
                fmt(report.linf),
                fmt(report.l2),
                fmt(report.h),
                fmt(report.dt),
                report.n_interior.to_string(),
            ]],
        )?;
        writeln!(
            summary,
            "error vs {}: linf={:.6e}, l2={:.6e} over {} nodes",
            exact.label, report.linf, report.l2, report.n_interior
        )
        .ok();
        artifacts.push(spath);
    }
    Ok(RunOutput { summary, artifacts })
}

fn run_probe(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    let q = build_params(cfg)?;
    let domain = build_domain(cfg)?;
    let e = ex(cfg);
    let target_raw = e.target.clone().ok_or(RunFailure("missing experiment.target".into()))?;
    let (tx, tt) = target_raw.split_at(q.n());
    let target = Point::new(tx.to_vec(), tt[0]);
    let mut past = vec![0.0; q.n() + 1];
    past[q.n()] = -1.0;
    let approach = e.approach.clone().unwrap_or(past);
    let report = probe_regularity(
        &domain,
        &target,
        &q,
        e.h_levels.as_deref().ok_or(RunFailure("missing experiment.h_levels".into()))?,
        e.gap_tol.unwrap_or(0.05),
        e.irr_floor.unwrap_or(0.15),
        &approach,
    )?;
    let rows: Vec<Vec<String>> = report
        .levels
        .iter()
        .zip(&report.gap_sequence)
        .map(|((h, v), g)| vec![fmt(*h), fmt(*v), fmt(*g)])
        .collect();
    let path = out_path(cfg);
    write_csv(&path, "h,approach_value,gap", &rows)?;
    let verdict_path = path.with_extension("verdict.txt");
    let summary = format!(
        "probe at x={:?}, t={} on {}: verdict {}\n  gaps {:?}\n",
        target.x,
        target.t,
        domain.label(),
        report.verdict,
        report.gap_sequence
    );
    std::fs::write(&verdict_path, format!("{}\n", report.verdict))
        .map_err(|err| RunFailure(format!("write {verdict_path:?}: {err}")))?;
    Ok(RunOutput { summary, artifacts: vec![path, verdict_path] })
}

fn run_cylinder_top(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    let q = build_params(cfg)?;
    let d = cfg.domain.as_ref().ok_or(RunFailure("missing [domain]".into()))?;
    let grid = cfg.grid.as_ref().ok_or(RunFailure("missing [grid]".into()))?;
    let e = ex(cfg);
    let report = cylinder_top_experiment(
        d.x_min.clone().ok_or(RunFailure("missing domain.x_min".into()))?,
        d.x_max.clone().ok_or(RunFailure("missing domain.x_max".into()))?,
        d.t0.ok_or(RunFailure("missing domain.t0".into()))?,
        d.t1.ok_or(RunFailure("missing domain.t1".into()))?,
        &q,
        grid.h,
        e.eps.ok_or(RunFailure("missing experiment.eps".into()))?,
    )?;
    let mut rows = Vec::new();
    for (p, res, lower) in &report.samples {
        let mut row = vec![fmt(p.t)];
        row.extend(p.x.iter().map(|v| fmt(*v)));
        row.push(fmt(*res));
        row.push(fmt(*lower));
        rows.push(row);
    }
    let header = {
        let mut h = String::from("t");
        for dd in 1..=q.n() {
            write!(h, ",x{dd}").ok();
        }
        h.push_str(",residual,lower_bound");
        h
    };
    let path = out_path(cfg);
    write_csv(&path, &header, &rows)?;
    let summary = format!(
        "top annotations ignored: {}\nperturbed residual positive at all {} samples (eps={}, bracket width {:.4})\n",
        report.identical_interiors,
        report.samples.len(),
        report.eps,
        report.bracket_width
    );
    if !report.identical_interiors {
        return Err(RunFailure("interiors differ under changed top annotations".into()));
    }
    if report.samples.iter().any(|(_, res, _)| *res <= 0.0) {
        return Err(RunFailure("perturbed residual failed to stay positive".into()));
    }
    Ok(RunOutput { summary, artifacts: vec![path] })
}

fn run_sweep(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    let q = build_params(cfg)?;
    let domain = build_domain(cfg)?;
    let grid = cfg.grid.as_ref().ok_or(RunFailure("missing [grid]".into()))?;
    let e = ex(cfg);
    let p_list = e.p_list.clone().ok_or(RunFailure("missing experiment.p_list".into()))?;
    let datum_spec = match e.datum.as_deref() {
        Some(spec) => parse_datum_spec(spec, cfg)?,
        None => DatumSpec::Expression(
            pparab::expr::Expression::parse("exp(-(x1 - t))", cfg.params.n)
                .expect("default datum parses"),
        ),
    };
    let datum = move |s: &BoundarySample| match &datum_spec {
        DatumSpec::Constant(c) => *c,
        DatumSpec::Exact(sol) => sol.value(&s.point),
        DatumSpec::Expression(expr) => expr.eval_point(&s.point),
    };
    let rows = sweep_p(&domain, &datum, grid.h, &p_list, q.n())?;
    let mut summary = String::from("L_inf gap to the p=inf solution:\n");
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            writeln!(summary, "  p={:<8} gap={:.6e}", r.p, r.linf_gap_to_infty).ok();
            vec![fmt(r.p), fmt(r.h), fmt(r.linf_gap_to_infty)]
        })
        .collect();
    let path = out_path(cfg);
    write_csv(&path, "p,h,linf_gap_to_infty", &csv_rows)?;
    Ok(RunOutput { summary, artifacts: vec![path] })
}

fn run_limit(cfg: &ExperimentConfig) -> Result<RunOutput, RunFailure> {
    let q = build_params(cfg)?;
    let e = ex(cfg);
    let pts: Vec<Point> = e
        .points
        .clone()
        .ok_or(RunFailure("missing experiment.points".into()))?
        .into_iter()
        .map(|row| {
            let (x, t) = row.split_at(q.n());
            Point::new(x.to_vec(), t[0])
        })
        .collect();
    let p_list = e.p_list.clone().ok_or(RunFailure("missing experiment.p_list".into()))?;
    let rows = fundamental_limit_check(&pts, &p_list, q.n())?;
    let mut summary = String::from("|H_p - W| per point per p:\n");
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            writeln!(
                summary,
                "  x={:?} t={} p={:<10} gap={:.6e}",
                r.point.x, r.point.t, r.p, r.gap
            )
            .ok();
            let mut row = vec![fmt(r.p), fmt(r.point.t)];
            row.extend(r.point.x.iter().map(|v| fmt(*v)));
            row.push(fmt(r.hp));
            row.push(fmt(r.w));
            row.push(fmt(r.gap));
            row
        })
        .collect();
    let header = {
        let mut h = String::from("p,t");
        for d in 1..=q.n() {
            write!(h, ",x{d}").ok();
        }
        h.push_str(",hp,w,gap");
        h
    };
    let path = out_path(cfg);
    write_csv(&path, &header, &csv_rows)?;
    Ok(RunOutput { summary, artifacts: vec![path] })
}
