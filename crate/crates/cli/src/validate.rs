//! Typed construction of an experiment configuration and the model-assumption checks.

use std::fmt;
use std::path::{Path, PathBuf};

use volterra_spde_core::dynamics::{MemoryBackend, Observable, SystemSpec};
use volterra_spde_core::experiments::{ExperimentConfig, ExperimentKind};
use volterra_spde_core::memory::{KernelSpec, KernelTable};
use volterra_spde_core::spectral::{DomainSpec, NoiseSpec, PotentialSpec};
use volterra_spde_core::{ExperimentError, MemoryError};

use crate::config::{ConfigFile, ParseError, Section};

/// One failed check, tagged with the assumption it enforces or `config` for plain input errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub assumption: &'static str,
    pub message: String,
}

impl Diagnostic {
    fn new(assumption: &'static str, message: impl Into<String>) -> Self {
        Self { assumption, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.assumption, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Parse(ParseError),
    Invalid(Vec<Diagnostic>),
}

impl From<ParseError> for ConfigError {
    fn from(e: ParseError) -> Self {
        ConfigError::Parse(e)
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Parse(e) => write!(f, "{e}"),
            ConfigError::Invalid(d) => {
                for (i, d) in d.iter().enumerate() {
                    if i > 0 {
                        writeln!(f)?;
                    }
                    write!(f, "{d}")?;
                }
                Ok(())
            }
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub dt: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
}

fn kernel_diagnostic(e: &MemoryError) -> Diagnostic {
    match e {
        MemoryError::FirstMoment { moment } => {
            Diagnostic::new("(M2)", format!("the normalizing condition int s mu(s) ds = 1 fails: first moment is {moment}"))
        }
        MemoryError::Decay { .. } | MemoryError::Positivity { .. } | MemoryError::Table(_) => {
            Diagnostic::new("(M1)", format!("mu must be positive with mu' + delta mu <= 0: {e}"))
        }
        other => Diagnostic::new("config", other.to_string()),
    }
}

fn build_kernel(file: &ConfigFile, base: &Path, diags: &mut Vec<Diagnostic>) -> Result<Option<KernelSpec>, ParseError> {
    let family = file.value::<String>(Section::System, "kernel")?.unwrap_or_else(|| "exponential".into());
    let delta = file.value::<f64>(Section::System, "delta")?;
    let c = file.value::<f64>(Section::System, "kernel_normalization")?.unwrap_or(1.0);
    let kernel = match family.as_str() {
        "exponential" => KernelSpec::exponential(delta.unwrap_or(1.0)),
        "table" => {
            let Some(path) = file.value::<PathBuf>(Section::System, "kernel_table")? else {
                diags.push(Diagnostic::new("config", "kernel = table needs system.kernel_table"));
                return Ok(None);
            };
            let path = if path.is_relative() { base.join(path) } else { path };
            match std::fs::read_to_string(&path) {
                Ok(text) => KernelTable::parse(&text, delta).map(KernelSpec::tabulated),
                Err(e) => {
                    diags.push(Diagnostic::new("config", format!("cannot read kernel table {}: {e}", path.display())));
                    return Ok(None);
                }
            }
        }
        other => {
            let line = file.get(Section::System, "kernel").map_or(0, |e| e.line);
            return Err(ParseError::Value { line, key: "kernel".into(), message: format!("unknown kernel `{other}` (expected exponential or table)") });
        }
    };
    match kernel.map(|k| k.with_normalization(c)).and_then(|k| k.check_admissible().map(|_| k)) {
        Ok(k) => Ok(Some(k)),
        Err(e) => {
            diags.push(kernel_diagnostic(&e));
            Ok(None)
        }
    }
}

fn build_system(file: &ConfigFile, base: &Path, diags: &mut Vec<Diagnostic>) -> Result<Option<SystemSpec>, ParseError> {
    let s = Section::System;
    let length = file.value::<f64>(s, "length")?.unwrap_or(std::f64::consts::PI);
    let n_modes = file.value::<usize>(s, "n_modes")?.unwrap_or(64);
    let n_quad = file.value::<usize>(s, "n_quad")?.unwrap_or(2 * n_modes);
    let kappa = file.value::<f64>(s, "kappa")?.unwrap_or(0.5);
    let coeffs = file.value::<Vec<f64>>(s, "potential")?.unwrap_or_else(|| vec![0.0, 1.0, 0.0, -1.0]);
    let q0 = file.value::<f64>(s, "noise_q0")?.unwrap_or(0.25);
    let power = file.value::<f64>(s, "noise_power")?.unwrap_or(2.0);
    let n_bar = file.value::<usize>(s, "n_bar")?.unwrap_or(2);
    let backend = file.value::<MemoryBackend>(s, "backend")?.unwrap_or(MemoryBackend::ExpReduction);

    let domain = DomainSpec::new(length, n_modes, n_quad).map_err(|e| diags.push(Diagnostic::new("config", e.to_string()))).ok();
    let potential = match PotentialSpec::new(coeffs.clone()) {
        Ok(p) => {
            if !p.a_phi().is_finite() {
                diags.push(Diagnostic::new("(P3)", "sup phi' must be finite"));
            }
            Some(p)
        }
        Err(e) if coeffs.first().is_some_and(|c| *c != 0.0) => {
            diags.push(Diagnostic::new("(P0)", format!("phi(0) = 0 is required: {e}")));
            None
        }
        Err(e) => {
            diags.push(Diagnostic::new("(P1)-(P2)", format!("phi must grow algebraically and be dissipative: {e}")));
            None
        }
    };
    let noise = match NoiseSpec::power_law(n_modes.max(1), q0, power, n_bar) {
        Ok(n) => {
            let tr = domain.as_ref().map_or(0.0, |d| n.trace_qaq(d));
            if !tr.is_finite() {
                diags.push(Diagnostic::new("(Q1)", "Tr(QAQ) must be finite"));
            }
            Some(n)
        }
        Err(e) if n_bar == 0 || n_bar > n_modes => {
            diags.push(Diagnostic::new("(Q3)", format!("n_bar must index a retained mode: {e}")));
            None
        }
        Err(e) => {
            diags.push(Diagnostic::new("(Q1)", format!("Q must be symmetric, nonnegative and bounded: {e}")));
            None
        }
    };
    let kernel = build_kernel(file, base, diags)?;
    if !(kappa > 0.0 && kappa < 1.0) {
        diags.push(Diagnostic::new("config", format!("kappa must lie in (0, 1), got {kappa}")));
        return Ok(None);
    }
    let (Some(domain), Some(potential), Some(noise), Some(kernel)) = (domain, potential, noise, kernel) else {
        return Ok(None);
    };
    match SystemSpec::new(domain, kappa, kernel, potential, noise, backend) {
        Ok(spec) => {
            let lhs = spec.nudge_strength();
            let a_phi = spec.potential.a_phi();
            if lhs <= a_phi {
                diags.push(Diagnostic::new(
                    "(Q3)",
                    format!("kappa * alpha_nbar = {lhs} must exceed a_phi = {a_phi} for some n_bar with a_Q = a_Q(n_bar) > 0"),
                ));
            }
            let a_q = spec.noise.a_q();
            if a_q.is_nan() || a_q <= 0.0 {
                diags.push(Diagnostic::new("(Q3)", format!("there must exist a_Q = a_Q(n_bar) > 0, but min_(k <= n_bar) q_k = {a_q}")));
            }
            Ok(Some(spec))
        }
        Err(e) => {
            diags.push(Diagnostic::new("config", e.to_string()));
            Ok(None)
        }
    }
}

fn apply_experiment(file: &ConfigFile, cfg: &mut ExperimentConfig) -> Result<(), ParseError> {
    let e = Section::Experiment;
    macro_rules! set {
        ($key:literal, $ty:ty, $field:expr) => {
            if let Some(v) = file.value::<$ty>(e, $key)? {
                $field = v;
            }
        };
    }
    set!("epsilons", Vec<f64>, cfg.epsilons);
    set!("ensemble", usize, cfg.ensemble);
    set!("horizon", f64, cfg.horizon);
    set!("workers", usize, cfg.workers);
    let p = &mut cfg.params;
    set!("initial", Vec<f64>, p.initial);
    set!("checkpoints", Vec<f64>, p.checkpoints);
    set!("separations", Vec<f64>, p.separations);
    set!("ergodic_separation", f64, p.ergodic_separation);
    set!("n_pairs", usize, p.n_pairs);
    set!("shift_ensemble", usize, p.shift_ensemble);
    set!("shift_horizon", f64, p.shift_horizon);
    set!("fit_start", f64, p.fit_start);
    set!("fit_end", f64, p.fit_end);
    set!("cap_n", f64, p.cap_n);
    set!("beta", f64, p.beta);
    set!("burn_in", f64, p.burn_in);
    set!("window", f64, p.window);
    set!("moment_beta", f64, p.moment_beta);
    set!("moment_start", f64, p.moment_start);
    set!("memoryless_both", bool, p.memoryless_both);
    set!("linear_check", bool, p.linear_check);
    if let Some(names) = file.value::<Vec<String>>(e, "observables")? {
        let line = file.get(e, "observables").map_or(0, |x| x.line);
        cfg.observables = names
            .iter()
            .map(|n| n.parse::<Observable>())
            .collect::<Result<_, _>>()
            .map_err(|message| ParseError::Value { line, key: "observables".into(), message })?;
    }
    if let Some(out) = file.value::<PathBuf>(e, "output")? {
        cfg.output = Some(out);
    }
    Ok(())
}

/// The experiment kind named in the file, if any.
pub fn file_kind(file: &ConfigFile) -> Result<Option<ExperimentKind>, ParseError> {
    file.value::<ExperimentKind>(Section::Experiment, "kind")
}

/// Builds and validates the configuration for `kind`. `base` resolves relative paths in the file.
pub fn build_config(file: &ConfigFile, kind: ExperimentKind, overrides: &Overrides, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let mut diags = Vec::new();
    let system = build_system(file, base, &mut diags)?;
    let mut cfg = ExperimentConfig::default_for(kind).map_err(|e| ConfigError::Invalid(vec![Diagnostic::new("config", e.to_string())]))?;
    if let Some(s) = system {
        cfg.system = s;
    }
    let sv = Section::Solver;
    if let Some(v) = file.value::<f64>(sv, "dt")? {
        cfg.solver.dt = v;
    }
    if let Some(v) = file.value::<u64>(sv, "seed")? {
        cfg.solver.seed = v;
    }
    if let Some(v) = file.value::<usize>(sv, "record_every")? {
        cfg.solver.record_every = v;
    }
    apply_experiment(file, &mut cfg)?;
    if let Some(v) = overrides.seed {
        cfg.solver.seed = v;
    }
    if let Some(v) = overrides.dt {
        cfg.solver.dt = v;
    }
    if let Some(v) = overrides.workers {
        cfg.workers = v;
    }
    if let Some(v) = &overrides.epsilons {
        cfg.epsilons = v.clone();
    }
    if let Some(v) = &overrides.out {
        cfg.output = Some(v.clone());
    }
    if !diags.is_empty() {
        return Err(ConfigError::Invalid(diags));
    }
    match cfg.validate() {
        Ok(()) => {}
        Err(ExperimentError::Dynamics(e)) => return Err(ConfigError::Invalid(vec![Diagnostic::new("config", e.to_string())])),
        Err(e) => return Err(ConfigError::Invalid(vec![Diagnostic::new("config", e.to_string())])),
    }
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str) -> Result<ExperimentConfig, ConfigError> {
        build_config(&ConfigFile::parse(text).unwrap(), ExperimentKind::Sweep, &Overrides::default(), Path::new("."))
    }

    fn cites(r: Result<ExperimentConfig, ConfigError>, tag: &str) -> bool {
        matches!(r, Err(ConfigError::Invalid(d)) if d.iter().any(|d| d.assumption == tag))
    }

    #[test]
    fn empty_file_gives_reference_system() {
        let c = build("").unwrap();
        assert_eq!(c.system.n_modes(), 64);
        assert_eq!(c.system.kappa, 0.5);
        assert_eq!(c.epsilons.len(), 5);
    }

    #[test]
    fn assumption_checks_cite_their_tags() {
        assert!(cites(build("[system]\nkappa = 0.1\n"), "(Q3)"));
        assert!(cites(build("[system]\nkernel_normalization = 2\n"), "(M2)"));
        assert!(cites(build("[system]\npotential = 1, 1, 0, -1\n"), "(P0)"));
        assert!(cites(build("[system]\npotential = 0, 0, 1\n"), "(P1)-(P2)"));
        assert!(cites(build("[system]\nnoise_q0 = -1\n"), "(Q1)"));
        assert!(cites(build("[system]\nnoise_q0 = 0\n"), "(Q3)"));
        assert!(cites(build("[system]\ndelta = -1\n"), "(M1)"));
        assert!(cites(build("[system]\nkappa = 1.5\n"), "config"));
    }

    #[test]
    fn overrides_win() {
        let f = ConfigFile::parse("[solver]\nseed = 5\n").unwrap();
        let o = Overrides { seed: Some(9), epsilons: Some(vec![0.5]), ..Overrides::default() };
        let c = build_config(&f, ExperimentKind::Sweep, &o, Path::new(".")).unwrap();
        assert_eq!(c.solver.seed, 9);
        assert_eq!(c.epsilons, vec![0.5]);
    }
}
