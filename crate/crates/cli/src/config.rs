//! Experiment configuration: a TOML document with a command, equation
//! parameters, a domain description, grid settings and per-experiment
//! constants. Validation collects every violation before reporting.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pparab::domain::{self, Domain};
use pparab::geometry::SpaceTimeBox;
use pparab::params::PParams;
use pparab::solutions::{self, Solution, TimeSign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifySolutions,
    VerifyBarriers,
    Solve,
    ProbeRegularity,
    CylinderTop,
    SweepP,
    FundamentalLimit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VerifySolutions => "verify-solutions",
            Command::VerifyBarriers => "verify-barriers",
            Command::Solve => "solve",
            Command::ProbeRegularity => "probe-regularity",
            Command::CylinderTop => "cylinder-top",
            Command::SweepP => "sweep-p",
            Command::FundamentalLimit => "fundamental-limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    /// p in (1, inf]; TOML `inf` selects the limit equation.
    pub p: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    /// cylinder | ball | petrovsky | heatball | custom-expression
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_min: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apex_x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apex_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expression: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub h: f64,
    /// Omitted: the CFL bound for (h, p, n).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    /// solve: `constant:<v>` | `exact:<catalog-label>` | `expression:<expr>`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub datum: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe_times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experimental_subquadratic: Option<bool>,
    /// cylinder-top
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// sweep-p
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_list: Option<Vec<f64>>,
    /// probe-regularity
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_levels: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub irr_floor: Option<f64>,
    /// space coordinates then time
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach: Option<Vec<f64>>,
    /// fundamental-limit: rows of space coordinates then time
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    /// verify-barriers
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contact: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_center_x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere_center_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub params: ParamsSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentSection>,
}

/// Parse a TOML document into a validated config; on failure every
/// detected violation is reported, not just the first.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, Vec<String>> {
    let cfg: ExperimentConfig =
        toml::from_str(text).map_err(|e| vec![format!("config syntax: {e}")])?;
    let errors = validate(&cfg);
    if errors.is_empty() {
        Ok(cfg)
    } else {
        Err(errors)
    }
}

/// Render a config back to TOML. parse_config(render(c)) == c for every
/// valid config.
#[cfg_attr(not(test), allow(dead_code))]
pub fn render(cfg: &ExperimentConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}

/// Collect every validation error: parameter preconditions, domain
/// constraints, and per-command required keys.
pub fn validate(cfg: &ExperimentConfig) -> Vec<String> {
    let mut errors = Vec::new();
    let p = cfg.params.p;
    if p.is_nan() || p <= 1.0 {
        errors.push(format!(
            "params.p: the equation requires 1 < p <= inf, got {p}"
        ));
    }
    if cfg.params.n == 0 {
        errors.push("params.n: spatial dimension must be >= 1".into());
    }
    let n = cfg.params.n.max(1);

    let needs_domain = matches!(
        cfg.command,
        Command::Solve | Command::ProbeRegularity | Command::SweepP
    );
    if needs_domain && cfg.domain.is_none() {
        errors.push(format!("[domain] section is required for {}", cfg.command.name()));
    }
    if let Some(d) = &cfg.domain {
        validate_domain(d, n, &mut errors);
    }

    let needs_grid = matches!(
        cfg.command,
        Command::Solve | Command::CylinderTop | Command::SweepP
    );
    if needs_grid && cfg.grid.is_none() {
        errors.push(format!("[grid] section is required for {}", cfg.command.name()));
    }
    if let Some(g) = &cfg.grid {
        if g.h.is_nan() || g.h <= 0.0 {
            errors.push(format!("grid.h must be positive, got {}", g.h));
        }
        if let Some(dt) = g.dt {
            if dt.is_nan() || dt <= 0.0 {
                errors.push(format!("grid.dt must be positive, got {dt}"));
            }
        }
    }

    let ex = cfg.experiment.clone().unwrap_or_default();
    match cfg.command {
        Command::Solve => {
            if ex.datum.is_none() {
                errors.push("experiment.datum is required for solve".into());
            } else if let Err(e) = parse_datum_spec(ex.datum.as_deref().unwrap(), cfg) {
                errors.push(e);
            }
            if p < 2.0 && !ex.experimental_subquadratic.unwrap_or(false) {
                errors.push(
                    "params.p < 2 has no monotonicity guarantee; set \
                     experiment.experimental_subquadratic = true to run anyway"
                        .into(),
                );
            }
        }
        Command::ProbeRegularity => {
            match &ex.h_levels {
                None => errors.push("experiment.h_levels is required for probe-regularity".into()),
                Some(hs) => {
                    if hs.len() < 3 {
                        errors.push("experiment.h_levels needs at least 3 entries".into());
                    }
                    if hs.windows(2).any(|w| w[1] >= w[0]) {
                        errors.push("experiment.h_levels must be strictly decreasing".into());
                    }
                }
            }
            match &ex.target {
                None => errors.push("experiment.target is required for probe-regularity".into()),
                Some(t) if t.len() != n + 1 => errors.push(format!(
                    "experiment.target needs {} entries (space then time), got {}",
                    n + 1,
                    t.len()
                )),
                _ => {}
            }
            if let Some(a) = &ex.approach {
                if a.len() != n + 1 {
                    errors.push(format!(
                        "experiment.approach needs {} entries, got {}",
                        n + 1,
                        a.len()
                    ));
                }
            }
        }
        Command::CylinderTop => {
            match ex.eps {
                None => errors.push("experiment.eps is required for cylinder-top".into()),
                Some(e) if e <= 0.0 => {
                    errors.push(format!("experiment.eps must be positive, got {e}"))
                }
                _ => {}
            }
            match &cfg.domain {
                Some(d) if d.kind == "cylinder" => {}
                _ => errors.push("cylinder-top needs a [domain] of kind cylinder".into()),
            }
        }
        Command::SweepP => match &ex.p_list {
            None => errors.push("experiment.p_list is required for sweep-p".into()),
            Some(ps) => {
                for v in ps {
                    if v.is_nan() || *v <= 1.0 {
                        errors.push(format!("experiment.p_list entry {v} violates 1 < p"));
                    }
                }
            }
        },
        Command::FundamentalLimit => {
            match &ex.points {
                None => errors.push("experiment.points is required for fundamental-limit".into()),
                Some(pts) => {
                    for (i, row) in pts.iter().enumerate() {
                        if row.len() != n + 1 {
                            errors.push(format!(
                                "experiment.points[{i}] needs {} entries (space then time)",
                                n + 1
                            ));
                        } else if row[n] <= 0.0 {
                            errors.push(format!(
                                "experiment.points[{i}]: the limit table needs t > 0"
                            ));
                        }
                    }
                }
            }
            if ex.p_list.is_none() {
                errors.push("experiment.p_list is required for fundamental-limit".into());
            }
        }
        Command::VerifyBarriers => match ex.construction.as_deref() {
            None => errors.push("experiment.construction is required for verify-barriers".into()),
            Some("sphere") => {
                if ex.r0.is_none() || ex.contact.is_none() {
                    errors.push("sphere barrier needs experiment.r0 and experiment.contact".into());
                }
                if let Some(c) = &ex.contact {
                    if c.len() != n + 1 {
                        errors.push(format!(
                            "experiment.contact needs {} entries (space then time)",
                            n + 1
                        ));
                    }
                }
            }
            Some("petrovsky") => {
                match ex.barrier_c {
                    None => errors.push("petrovsky barrier needs experiment.barrier_c".into()),
                    Some(c) if !(c > 0.0 && c < 1.0) => {
                        errors.push(format!("experiment.barrier_c must lie in (0,1), got {c}"))
                    }
                    _ => {}
                }
            }
            Some("irregularity") => {
                if ex.eps1.is_none() || ex.k.is_none() || ex.m.is_none() {
                    errors.push(
                        "irregularity witness needs experiment.eps1, experiment.k, experiment.m"
                            .into(),
                    );
                }
            }
            Some(other) => errors.push(format!(
                "unknown construction '{other}' (have sphere, petrovsky, irregularity)"
            )),
        },
        Command::VerifySolutions => {}
    }
    errors
}

fn validate_domain(d: &DomainSection, n: usize, errors: &mut Vec<String>) {
    let need = |field: &str, ok: bool, errors: &mut Vec<String>| {
        if !ok {
            errors.push(format!("domain.{field} is required for kind {}", d.kind));
        }
    };
    match d.kind.as_str() {
        "cylinder" => {
            need("x_min", d.x_min.is_some(), errors);
            need("x_max", d.x_max.is_some(), errors);
            need("t0", d.t0.is_some(), errors);
            need("t1", d.t1.is_some(), errors);
            if let (Some(t0), Some(t1)) = (d.t0, d.t1) {
                if t0 >= t1 {
                    errors.push(format!("domain: need t0 < t1, got {t0} >= {t1}"));
                }
            }
        }
        "ball" => {
            need("center_x", d.center_x.is_some(), errors);
            need("center_t", d.center_t.is_some(), errors);
            need("radius", d.radius.is_some(), errors);
        }
        "petrovsky" => {
            need("factor", d.factor.is_some(), errors);
            need("c", d.c.is_some(), errors);
            if let Some(c) = d.c {
                let e_inv = 1.0 / std::f64::consts::E;
                if !(c > 0.0 && c < e_inv) {
                    errors.push(format!(
                        "domain.c: the cusp needs 0 < c < 1/e ~= {e_inv:.6}, got {c} \
                         (log|log|t|| changes sign at |t| = 1/e)"
                    ));
                }
            }
        }
        "heatball" => {
            need("level", d.level.is_some(), errors);
            need("apex_x", d.apex_x.is_some(), errors);
            need("apex_t", d.apex_t.is_some(), errors);
            if let Some(l) = d.level {
                if l <= 0.0 {
                    errors.push(format!("domain.level must be positive, got {l}"));
                }
            }
        }
        "custom-expression" => {
            need("expression", d.expression.is_some(), errors);
            need("x_min", d.x_min.is_some(), errors);
            need("x_max", d.x_max.is_some(), errors);
            need("t0", d.t0.is_some(), errors);
            need("t1", d.t1.is_some(), errors);
            if let Some(expr) = &d.expression {
                if let Err(e) = pparab::expr::Expression::parse(expr, n) {
                    errors.push(format!("domain.expression: {e}"));
                }
            }
        }
        other => errors.push(format!(
            "unknown domain kind '{other}' (have cylinder, ball, petrovsky, heatball, custom-expression)"
        )),
    }
    for (name, v) in [("x_min", &d.x_min), ("x_max", &d.x_max), ("center_x", &d.center_x), ("apex_x", &d.apex_x)] {
        if let Some(v) = v {
            if v.len() != n {
                errors.push(format!("domain.{name} needs {n} entries, got {}", v.len()));
            }
        }
    }
}

/// Build the Domain described by the config (call after validation).
pub fn build_domain(cfg: &ExperimentConfig) -> Result<Domain, String> {
    let d = cfg.domain.as_ref().ok_or("missing [domain] section")?;
    let q = build_params(cfg)?;
    match d.kind.as_str() {
        "cylinder" => domain::cylinder(
            d.x_min.clone().unwrap(),
            d.x_max.clone().unwrap(),
            d.t0.unwrap(),
            d.t1.unwrap(),
        )
        .map_err(|e| e.to_string()),
        "ball" => domain::spacetime_ball(d.center_x.as_ref().unwrap(), d.center_t.unwrap(), d.radius.unwrap())
            .map_err(|e| e.to_string()),
        "petrovsky" => domain::petrovsky_domain(d.factor.unwrap(), d.c.unwrap(), &q)
            .map_err(|e| e.to_string()),
        "heatball" => {
            domain::heat_ball(d.level.unwrap(), d.apex_x.as_ref().unwrap(), d.apex_t.unwrap(), &q)
                .map_err(|e| e.to_string())
        }
        "custom-expression" => {
            let bbox = SpaceTimeBox::new(
                d.x_min.clone().unwrap(),
                d.x_max.clone().unwrap(),
                d.t0.unwrap(),
                d.t1.unwrap(),
            );
            domain::expression_domain(d.expression.as_ref().unwrap(), cfg.params.n, bbox)
                .map_err(|e| e.to_string())
        }
        other => Err(format!("unknown domain kind '{other}'")),
    }
}

pub fn build_params(cfg: &ExperimentConfig) -> Result<PParams, String> {
    PParams::new(cfg.params.p, cfg.params.n).map_err(|e| e.to_string())
}

/// Boundary data for solve: a constant, a catalog entry, or an expression.
pub enum DatumSpec {
    Constant(f64),
    Exact(Solution),
    Expression(pparab::expr::Expression),
}

pub fn parse_datum_spec(spec: &str, cfg: &ExperimentConfig) -> Result<DatumSpec, String> {
    let q = build_params(cfg)?;
    if let Some(v) = spec.strip_prefix("constant:") {
        let c: f64 = v
            .trim()
            .parse()
            .map_err(|_| format!("experiment.datum: bad constant '{v}'"))?;
        return Ok(DatumSpec::Constant(c));
    }
    if let Some(label) = spec.strip_prefix("exact:") {
        let sol = match label.trim() {
            "traveling-wave" => {
                let mut e1 = vec![0.0; q.n()];
                e1[0] = 1.0;
                solutions::traveling_wave(&e1, 1.0, 0.0, 1.0, &q)
            }
            "separable" => solutions::separable(1.0, &q),
            "similarity-integral" => solutions::similarity_integral(1.0, &q),
            "fundamental" => solutions::fundamental(&q, TimeSign::Positive),
            "fundamental-negative" => solutions::fundamental(&q, TimeSign::Negative),
            other => {
                return Err(format!(
                    "experiment.datum: unknown catalog label '{other}' (have traveling-wave, \
                     separable, similarity-integral, fundamental, fundamental-negative)"
                ))
            }
        };
        return sol.map(DatumSpec::Exact).map_err(|e| e.to_string());
    }
    if let Some(expr) = spec.strip_prefix("expression:") {
        return pparab::expr::Expression::parse(expr, cfg.params.n)
            .map(DatumSpec::Expression)
            .map_err(|e| format!("experiment.datum: {e}"));
    }
    Err(format!(
        "experiment.datum '{spec}' must start with constant:, exact: or expression:"
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_solve() -> &'static str {
        r#"
command = "solve"
[params]
p = 2.0
n = 1
[domain]
kind = "cylinder"
x_min = [-1.0]
x_max = [1.0]
t0 = 0.0
t1 = 1.0
[grid]
h = 0.1
[experiment]
datum = "constant:1.0"
"#
    }

    #[test]
    fn minimal_solve_config_parses() {
        let cfg = parse_config(minimal_solve()).unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert!(cfg.grid.as_ref().unwrap().dt.is_none()); // defaulted at run time
    }

    #[test]
    fn p_one_names_the_precondition() {
        let text = minimal_solve().replace("p = 2.0", "p = 1.0");
        let errs = parse_config(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("1 < p")), "{errs:?}");
    }

    #[test]
    fn petrovsky_c_half_cites_the_restriction() {
        let text = r#"
command = "probe-regularity"
[params]
p = 2.0
n = 1
[domain]
kind = "petrovsky"
factor = 1.0
c = 0.5
[experiment]
h_levels = [0.04, 0.02, 0.01]
target = [0.0, 0.0]
"#;
        let errs = parse_config(text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("1/e")), "{errs:?}");
    }

    #[test]
    fn all_errors_reported_not_just_first() {
        let text = r#"
command = "solve"
[params]
p = 0.5
n = 0
[grid]
h = -1.0
"#;
        let errs = parse_config(text).unwrap_err();
        assert!(errs.len() >= 4, "expected several errors, got {errs:?}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = minimal_solve().to_string() + "\nwhatever = 3\n";
        assert!(parse_config(&text).is_err());
        let text = minimal_solve().replace("[grid]\nh = 0.1", "[grid]\nh = 0.1\nbogus = 1");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn round_trip_identity() {
        let mut cfg = parse_config(minimal_solve()).unwrap();
        cfg.seed = Some(7);
        cfg.out = Some("results/run.csv".into());
        let rendered = render(&cfg);
        let back = parse_config(&rendered).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn round_trip_preserves_infinite_p() {
        let text = minimal_solve().replace("p = 2.0", "p = inf");
        let cfg = parse_config(text.as_str()).unwrap();
        assert!(cfg.params.p.is_infinite());
        let back = parse_config(&render(&cfg)).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn subquadratic_needs_flag() {
        let text = minimal_solve().replace("p = 2.0", "p = 1.5");
        let errs = parse_config(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("experimental_subquadratic")));
        let with_flag = text.replace(
            "datum = \"constant:1.0\"",
            "datum = \"constant:1.0\"\nexperimental_subquadratic = true",
        );
        assert!(parse_config(&with_flag).is_ok());
    }

    #[test]
    fn datum_specs() {
        let cfg = parse_config(minimal_solve()).unwrap();
        assert!(matches!(parse_datum_spec("constant:2.5", &cfg), Ok(DatumSpec::Constant(v)) if v == 2.5));
        assert!(matches!(parse_datum_spec("exact:fundamental", &cfg), Ok(DatumSpec::Exact(_))));
        assert!(matches!(
            parse_datum_spec("expression:x1^2 + t", &cfg),
            Ok(DatumSpec::Expression(_))
        ));
        assert!(parse_datum_spec("exact:nope", &cfg).is_err());
        assert!(parse_datum_spec("bare", &cfg).is_err());
    }
}
