//! Command-line front end: parses configuration, runs one campaign, writes its artifacts.

pub mod config;
pub mod manifest;
pub mod plotdata;
pub mod validate;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use volterra_spde_core::experiments::{
    run_contraction, run_ergodicity, run_exponential_moments, run_invariant_limit, run_moment_audit, run_oracle_validation,
    run_short_memory_sweep, ExperimentConfig, ExperimentKind, Outcome,
};
use volterra_spde_core::ExperimentError;

use config::ConfigFile;
use manifest::{sha256_hex, unix_now, RunManifest};
use validate::{build_config, file_kind, ConfigError, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "volterra-spde", version, about = "Fading-memory stochastic reaction-diffusion experiments")]
pub struct Cli {
    /// Configuration file with [system], [solver] and [experiment] sections.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory (default `out`).
    #[arg(long, global = true, env = "VOLTERRA_SPDE_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub dt: Option<f64>,
    /// Memory scales, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub epsilon: Option<Vec<f64>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Short-memory error sweep against the memoryless limit.
    Sweep,
    /// Nudged-coupling contraction and Girsanov budget.
    Contraction,
    /// Energy inequalities and exponential-moment stability.
    Moments,
    /// Convergence to equilibrium in the weighted distance.
    Ergodicity,
    /// Stationary statistics against the memoryless limit.
    Invariant,
    /// Memory representations and quadrature against closed forms.
    ValidateOracles,
    /// Check the configuration without running anything.
    Validate,
}

impl Command {
    fn kind(self) -> Option<ExperimentKind> {
        match self {
            Command::Sweep => Some(ExperimentKind::Sweep),
            Command::Contraction => Some(ExperimentKind::Contraction),
            Command::Moments => Some(ExperimentKind::Moments),
            Command::Ergodicity => Some(ExperimentKind::Ergodicity),
            Command::Invariant => Some(ExperimentKind::Invariant),
            Command::ValidateOracles => Some(ExperimentKind::Oracles),
            Command::Validate => None,
        }
    }
}

#[derive(Serialize)]
struct FailureSummary<'a> {
    experiment: &'a str,
    failed: Vec<FailedAudit<'a>>,
}

#[derive(Serialize)]
struct FailedAudit<'a> {
    name: &'a str,
    detail: &'a str,
}

fn load(path: Option<&Path>) -> Result<(ConfigFile, PathBuf), String> {
    match path {
        None => Ok((ConfigFile::default(), PathBuf::from("."))),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| format!("cannot read {}: {e}", p.display()))?;
            let file = ConfigFile::parse(&text).map_err(|e| format!("{}: {e}", p.display()))?;
            let base = p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
            Ok((file, base))
        }
    }
}

fn canonical_config(file: &ConfigFile, kind: ExperimentKind, o: &Overrides) -> String {
    let mut s = format!("kind = {}\n", kind.id());
    s.push_str(&file.canonical());
    if let Some(v) = o.seed {
        writeln!(s, "cli.seed = {v}").expect("string write");
    }
    if let Some(v) = o.dt {
        writeln!(s, "cli.dt = {v}").expect("string write");
    }
    if let Some(v) = o.workers {
        writeln!(s, "cli.workers = {v}").expect("string write");
    }
    if let Some(v) = &o.epsilons {
        writeln!(s, "cli.epsilon = {v:?}").expect("string write");
    }
    s
}

/// The moments subcommand runs two campaigns under one id.
fn merge(mut a: Outcome, b: Outcome) -> Outcome {
    a.rows.extend(b.rows);
    a.summary.audits.extend(b.summary.audits);
    a.summary.fits.extend(b.summary.fits);
    a.summary.scalars.extend(b.summary.scalars);
    a
}

pub fn run_campaign(cfg: &ExperimentConfig) -> Result<Outcome, ExperimentError> {
    Ok(match cfg.kind {
        ExperimentKind::Sweep => run_short_memory_sweep(cfg)?.outcome,
        ExperimentKind::Contraction => run_contraction(cfg)?.outcome,
        ExperimentKind::Moments => merge(run_moment_audit(cfg)?.outcome, run_exponential_moments(cfg)?.outcome),
        ExperimentKind::Ergodicity => run_ergodicity(cfg)?.outcome,
        ExperimentKind::Invariant => run_invariant_limit(cfg)?.outcome,
        ExperimentKind::Oracles => run_oracle_validation(cfg)?.outcome,
    })
}

fn report_config_error(e: &ConfigError) {
    match e {
        ConfigError::Parse(p) => eprintln!("error: {p}"),
        ConfigError::Invalid(d) => {
            for d in d {
                eprintln!("error: {d}");
            }
        }
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (file, base) = match load(cli.config.as_deref()) {
        Ok(x) => x,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_CONFIG;
        }
    };
    let overrides = Overrides { seed: cli.seed, out: None, workers: cli.workers, dt: cli.dt, epsilons: cli.epsilon.clone() };
    let kind = match cli.command.kind() {
        Some(k) => k,
        None => match file_kind(&file) {
            Ok(k) => k.unwrap_or(ExperimentKind::Sweep),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_CONFIG;
            }
        },
    };
    let mut cfg = match build_config(&file, kind, &overrides, &base) {
        Ok(c) => c,
        Err(e) => {
            report_config_error(&e);
            return EXIT_CONFIG;
        }
    };
    if cli.command == Command::Validate {
        println!("configuration is valid for `{}`", kind.id());
        return EXIT_OK;
    }
    let out = cli.out.clone().or(cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
    cfg.output = Some(out.clone());

    let started = unix_now();
    let outcome = match run_campaign(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    let written = outcome
        .write_to(&out)
        .map_err(|e| e.to_string())
        .and_then(|mut files| {
            files.extend(plotdata::emit_plotdata(&outcome, &out.join("plotdata")).map_err(|e| e.to_string())?);
            Ok(files)
        })
        .and_then(|files| {
            let m = RunManifest {
                experiment: outcome.summary.experiment.clone(),
                config_hash: sha256_hex(&canonical_config(&file, kind, &overrides)),
                seed: cfg.solver.seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                started_unix: started,
                finished_unix: unix_now(),
                files,
            };
            m.write_to(&out).map_err(|e| e.to_string())
        });
    if let Err(e) = written {
        eprintln!("error: writing results: {e}");
        return EXIT_RUNTIME;
    }
    for a in &outcome.summary.audits {
        println!("[{}] {}: {}", if a.passed { "pass" } else { "FAIL" }, a.name, a.detail);
    }
    if outcome.passed() {
        EXIT_OK
    } else {
        let failed = outcome
            .summary
            .audits
            .iter()
            .filter(|a| !a.passed)
            .map(|a| FailedAudit { name: &a.name, detail: &a.detail })
            .collect();
        let s = FailureSummary { experiment: &outcome.summary.experiment, failed };
        eprintln!("{}", serde_json::to_string(&s).expect("failure summary serializes"));
        EXIT_AUDIT
    }
}
