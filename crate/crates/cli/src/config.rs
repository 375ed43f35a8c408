//! Flat `key = value` configuration files with `[system]`, `[solver]` and
//! `[experiment]` sections.
//!
//! Keys not given fall back to the campaign defaults of the chosen subcommand.
//! `#` starts a comment. Lists are comma separated.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;
use volterra_spde_core::dynamics::MemoryBackend;
use volterra_spde_core::experiments::ExperimentKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{section}.{key}`")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: `{section}.{key}` is set twice (first on line {first})")]
    Duplicate { line: usize, first: usize, section: String, key: String },
    #[error("line {line}: bad value for `{key}`: {message}")]
    Value { line: usize, key: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Section {
    System,
    Solver,
    Experiment,
}

impl Section {
    fn name(self) -> &'static str {
        match self {
            Section::System => "system",
            Section::Solver => "solver",
            Section::Experiment => "experiment",
        }
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Section::System => &[
                "length",
                "n_modes",
                "n_quad",
                "kappa",
                "potential",
                "noise_q0",
                "noise_power",
                "n_bar",
                "kernel",
                "delta",
                "kernel_normalization",
                "kernel_table",
                "backend",
            ],
            Section::Solver => &["dt", "seed", "record_every"],
            Section::Experiment => &[
                "kind",
                "epsilons",
                "ensemble",
                "horizon",
                "observables",
                "workers",
                "output",
                "initial",
                "checkpoints",
                "separations",
                "ergodic_separation",
                "n_pairs",
                "shift_ensemble",
                "shift_horizon",
                "fit_start",
                "fit_end",
                "cap_n",
                "beta",
                "burn_in",
                "window",
                "moment_beta",
                "moment_start",
                "memoryless_both",
                "linear_check",
            ],
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A raw value and the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

/// The parsed file, before typing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConfigFile {
    entries: BTreeMap<(Section, String), Entry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut entries: BTreeMap<(Section, String), Entry> = BTreeMap::new();
        let mut section = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ParseError::Syntax { line, message: format!("unterminated section header `{content}`") })?
                    .trim();
                section = Some(match name {
                    "system" => Section::System,
                    "solver" => Section::Solver,
                    "experiment" => Section::Experiment,
                    other => return Err(ParseError::Syntax { line, message: format!("unknown section `[{other}]`") }),
                });
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ParseError::Syntax { line, message: format!("expected `key = value`, found `{content}`") })?;
            let (key, value) = (key.trim(), value.trim());
            let sec = section.ok_or_else(|| ParseError::Syntax { line, message: format!("`{key}` appears before any section header") })?;
            if !sec.keys().contains(&key) {
                return Err(ParseError::UnknownKey { line, section: sec.name().into(), key: key.into() });
            }
            if value.is_empty() {
                return Err(ParseError::Value { line, key: key.into(), message: "empty value".into() });
            }
            if let Some(prev) = entries.get(&(sec, key.to_string())) {
                return Err(ParseError::Duplicate { line, first: prev.line, section: sec.name().into(), key: key.into() });
            }
            entries.insert((sec, key.to_string()), Entry { value: value.to_string(), line });
        }
        Ok(Self { entries })
    }

    pub fn get(&self, section: Section, key: &str) -> Option<&Entry> {
        self.entries.get(&(section, key.to_string()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Typed lookup; `None` when the key is absent.
    pub fn value<T: FromValue>(&self, section: Section, key: &str) -> Result<Option<T>, ParseError> {
        match self.get(section, key) {
            None => Ok(None),
            Some(e) => T::from_value(&e.value).map(Some).map_err(|message| ParseError::Value { line: e.line, key: key.into(), message }),
        }
    }

    /// Canonical `section.key = value` listing, used for hashing.
    pub fn canonical(&self) -> String {
        self.entries.iter().map(|((s, k), e)| format!("{s}.{k} = {}\n", e.value)).collect()
    }
}

/// Conversion from the textual value of one key.
pub trait FromValue: Sized {
    fn from_value(s: &str) -> Result<Self, String>;
}

impl FromValue for f64 {
    fn from_value(s: &str) -> Result<Self, String> {
        match s {
            "pi" => Ok(std::f64::consts::PI),
            _ => s.parse::<f64>().map_err(|e| format!("`{s}` is not a number ({e})")),
        }
    }
}

impl FromValue for usize {
    fn from_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("`{s}` is not a nonnegative integer ({e})"))
    }
}

impl FromValue for u64 {
    fn from_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("`{s}` is not a nonnegative integer ({e})"))
    }
}

impl FromValue for bool {
    fn from_value(s: &str) -> Result<Self, String> {
        match s {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            _ => Err(format!("`{s}` is not a boolean")),
        }
    }
}

impl FromValue for String {
    fn from_value(s: &str) -> Result<Self, String> {
        Ok(s.to_string())
    }
}

impl FromValue for PathBuf {
    fn from_value(s: &str) -> Result<Self, String> {
        Ok(PathBuf::from(s))
    }
}

impl FromValue for ExperimentKind {
    fn from_value(s: &str) -> Result<Self, String> {
        ExperimentKind::from_str(s)
    }
}

impl FromValue for MemoryBackend {
    fn from_value(s: &str) -> Result<Self, String> {
        match s {
            "exp" | "exp_reduction" => Ok(MemoryBackend::ExpReduction),
            "grid" => Ok(MemoryBackend::Grid),
            "memoryless" => Ok(MemoryBackend::Memoryless),
            _ => Err(format!("unknown backend `{s}` (expected exp, grid or memoryless)")),
        }
    }
}

impl<T: FromValue> FromValue for Vec<T> {
    fn from_value(s: &str) -> Result<Self, String> {
        s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(T::from_value).collect()
    }
}
