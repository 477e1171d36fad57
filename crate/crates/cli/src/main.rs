//! Command-line front end. Subcommands mirror the experiment catalog;
//! the heavier experiments read a TOML config (see the README for the
//! schema) while the verification commands are flag-driven. Exit codes:
//! 0 success, 1 experiment-level failure, 2 config error.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{
    Command as Cmd, DomainSection, ExperimentConfig, ExperimentSection, GridSection, ParamsSection,
};

fn parse_p(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| e.to_string()),
    }
}

#[derive(Parser)]
#[command(
    name = "pparab",
    version,
    about = "Numerical laboratory for the normalized p-parabolic equation",
    long_about = "Explicit solutions with machine-checkable residuals, barrier \
constructions with automated axiom verification, a monotone finite-difference \
solver on implicit space-time domains, and boundary-regularity experiments. \
All commands write CSV artifacts (UTF-8, comma-separated, '.' decimal, header \
row) and honor PPARAB_THREADS as the worker cap."
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Args)]
struct CommonArgs {
    /// Output CSV path (defaults to `<command>.csv`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for quasi-random sampling phases
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML experiment configuration
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Subcommand)]
enum Commands {
    /// Verify every catalog entry: residual sweep and jet convergence
    VerifySolutions {
        /// Equation exponent p in (1, inf]; accepts "inf"
        #[arg(long, value_parser = parse_p)]
        p: f64,
        /// Spatial dimension
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Verify the barrier axioms for one construction
    #[command(allow_negative_numbers = true)]
    VerifyBarriers {
        /// sphere | petrovsky | irregularity
        #[arg(long)]
        construction: String,
        #[arg(long, value_parser = parse_p)]
        p: f64,
        #[arg(long)]
        n: usize,
        /// Petrovsky barrier constant in (0,1)
        #[arg(long)]
        c: Option<f64>,
        /// Exterior sphere radius
        #[arg(long)]
        r0: Option<f64>,
        /// Sphere contact point: space coordinates then time
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        contact: Option<Vec<f64>>,
        /// Sphere center, spatial part (defaults to the origin)
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        center_x: Option<Vec<f64>>,
        /// Sphere center, time coordinate
        #[arg(long)]
        center_t: Option<f64>,
        /// Irregularity witness exponent eps1 > 0
        #[arg(long)]
        eps1: Option<f64>,
        /// Irregularity witness k in (1/2, 1)
        #[arg(long)]
        k: Option<f64>,
        /// Irregularity witness level m < 0
        #[arg(long)]
        m: Option<f64>,
        /// Enforce containment in the factor-(1+eps) cusp
        #[arg(long)]
        target_eps: Option<f64>,
        /// Sample count (default 2000)
        #[arg(long)]
        samples: Option<usize>,
        /// Axiom tolerance (default 1e-8)
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve on a configured domain; an exact datum also writes an
    /// error-summary CSV
    Solve {
        /// TOML experiment configuration
        #[arg(long)]
        config: PathBuf,
        /// TOML file whose `[domain]` section replaces the config's
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long, value_parser = parse_p)]
        p: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Spatial step
        #[arg(long)]
        h: Option<f64>,
        /// Time step (defaults to the CFL bound)
        #[arg(long)]
        dt: Option<f64>,
        /// `constant:<v>` | `exact:<catalog-label>` | `expression:<expr>`
        #[arg(long)]
        datum: Option<String>,
        /// Permit 1 < p < 2 despite the missing monotonicity guarantee
        #[arg(long)]
        experimental_subquadratic: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Boundary-regularity probe over refinement levels
    ProbeRegularity(ConfigArgs),
    /// Cylinder-top irrelevance and the perturbation bracket
    CylinderTop(ConfigArgs),
    /// Solve for each p and compare against the p = inf solution
    SweepP(ConfigArgs),
    /// Tabulate |H_p - W| per point per p
    FundamentalLimit(ConfigArgs),
}

fn load_config(path: &PathBuf) -> Result<ExperimentConfig, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("read {path:?}: {e}")])?;
    config::parse_config(&text)
}

fn apply_common(cfg: &mut ExperimentConfig, common: &CommonArgs) {
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    if let Some(seed) = common.seed {
        cfg.seed = Some(seed);
    }
}

fn config_errors(errors: Vec<String>) -> ExitCode {
    eprintln!("config error{}:", if errors.len() == 1 { "" } else { "s" });
    for e in errors {
        eprintln!("  - {e}");
    }
    ExitCode::from(2)
}

fn execute(cfg: &ExperimentConfig) -> ExitCode {
    match run::run(cfg) {
        Ok(out) => {
            print!("{}", out.summary);
            for a in out.artifacts {
                println!("wrote {}", a.display());
            }
            ExitCode::SUCCESS
        }
        Err(run::RunFailure(msg)) => {
            eprintln!("{}: {msg}", cfg.command.name());
            ExitCode::from(1)
        }
    }
}

fn expect_command(cfg: &ExperimentConfig, want: Cmd) -> Result<(), Vec<String>> {
    if cfg.command != want {
        return Err(vec![format!(
            "config declares command '{}' but the subcommand is '{}'",
            cfg.command.name(),
            want.name()
        )]);
    }
    Ok(())
}

fn run_config_command(args: &ConfigArgs, want: Cmd) -> ExitCode {
    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => return config_errors(e),
    };
    if let Err(e) = expect_command(&cfg, want) {
        return config_errors(e);
    }
    apply_common(&mut cfg, &args.common);
    execute(&cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Commands::VerifySolutions { p, n, common } => {
            let mut cfg = ExperimentConfig {
                command: Cmd::VerifySolutions,
                out: None,
                seed: None,
                params: ParamsSection { p: *p, n: *n },
                domain: None,
                grid: None,
                experiment: None,
            };
            apply_common(&mut cfg, common);
            let errors = config::validate(&cfg);
            if !errors.is_empty() {
                return config_errors(errors);
            }
            execute(&cfg)
        }
        Commands::VerifyBarriers {
            construction,
            p,
            n,
            c,
            r0,
            contact,
            center_x,
            center_t,
            eps1,
            k,
            m,
            target_eps,
            samples,
            tol,
            common,
        } => {
            let mut cfg = ExperimentConfig {
                command: Cmd::VerifyBarriers,
                out: None,
                seed: None,
                params: ParamsSection { p: *p, n: *n },
                domain: None,
                grid: None,
                experiment: Some(ExperimentSection {
                    construction: Some(construction.clone()),
                    barrier_c: *c,
                    r0: *r0,
                    contact: contact.clone(),
                    sphere_center_x: center_x.clone(),
                    sphere_center_t: *center_t,
                    eps1: *eps1,
                    k: *k,
                    m: *m,
                    target_eps: *target_eps,
                    samples: *samples,
                    tol: *tol,
                    ..Default::default()
                }),
            };
            apply_common(&mut cfg, common);
            let errors = config::validate(&cfg);
            if !errors.is_empty() {
                return config_errors(errors);
            }
            execute(&cfg)
        }
        Commands::Solve {
            config: path,
            domain,
            p,
            n,
            h,
            dt,
            datum,
            experimental_subquadratic,
            common,
        } => {
            let mut cfg = match load_config(path) {
                Ok(c) => c,
                Err(e) => return config_errors(e),
            };
            if let Err(e) = expect_command(&cfg, Cmd::Solve) {
                return config_errors(e);
            }
            if let Some(dpath) = domain {
                #[derive(serde::Deserialize)]
                struct DomainOnly {
                    domain: DomainSection,
                }
                let text = match std::fs::read_to_string(dpath) {
                    Ok(t) => t,
                    Err(e) => return config_errors(vec![format!("read {dpath:?}: {e}")]),
                };
                match toml::from_str::<DomainOnly>(&text) {
                    Ok(d) => cfg.domain = Some(d.domain),
                    Err(e) => return config_errors(vec![format!("domain file: {e}")]),
                }
            }
            if let Some(p) = p {
                cfg.params.p = *p;
            }
            if let Some(n) = n {
                cfg.params.n = *n;
            }
            if let Some(h) = h {
                cfg.grid.get_or_insert(GridSection { h: *h, dt: None }).h = *h;
            }
            if let Some(dt) = dt {
                if let Some(g) = cfg.grid.as_mut() {
                    g.dt = Some(*dt);
                }
            }
            let exper = cfg.experiment.get_or_insert_with(ExperimentSection::default);
            if let Some(d) = datum {
                exper.datum = Some(d.clone());
            }
            if *experimental_subquadratic {
                exper.experimental_subquadratic = Some(true);
            }
            apply_common(&mut cfg, common);
            let errors = config::validate(&cfg);
            if !errors.is_empty() {
                return config_errors(errors);
            }
            execute(&cfg)
        }
        Commands::ProbeRegularity(args) => run_config_command(args, Cmd::ProbeRegularity),
        Commands::CylinderTop(args) => run_config_command(args, Cmd::CylinderTop),
        Commands::SweepP(args) => run_config_command(args, Cmd::SweepP),
        Commands::FundamentalLimit(args) => run_config_command(args, Cmd::FundamentalLimit),
    }
}
