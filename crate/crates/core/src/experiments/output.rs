//! Tabular and summary output shared by all campaigns.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::fit::RateFit;
use crate::error::ExperimentError;

/// One CSV line: a mean with its 95% half-width.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub epsilon: f64,
    pub t: f64,
    pub observable: String,
    pub mean: f64,
    pub half_width: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub seed: u64,
}

pub const CSV_HEADER: &str = "experiment,epsilon,t,observable,mean,half_width,M,seed";

impl Row {
    /// Floats in `{:.16e}`, seventeen significant digits, which round-trips every `f64`.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{},{:.16e},{:.16e},{},{}",
            self.experiment, self.epsilon, self.t, self.observable, self.mean, self.half_width, self.m, self.seed
        )
    }
}

/// A pass/fail check with a human-readable account of both sides.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Audit {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Audit {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

/// The JSON summary of a campaign.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Summary {
    pub experiment: String,
    pub seed: u64,
    pub fits: BTreeMap<String, RateFit>,
    pub audits: Vec<Audit>,
    pub scalars: BTreeMap<String, f64>,
}

/// Rows plus summary; every campaign produces one.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Outcome {
    pub rows: Vec<Row>,
    pub summary: Summary,
}

impl Outcome {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self { rows: Vec::new(), summary: Summary { experiment: experiment.into(), seed, ..Summary::default() } }
    }

    pub fn passed(&self) -> bool {
        self.summary.audits.iter().all(|a| a.passed)
    }

    pub fn audit(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.summary.audits.push(Audit::new(name, passed, detail));
    }

    pub fn row(&mut self, epsilon: f64, t: f64, observable: &str, mean: f64, half_width: f64, m: usize) {
        self.rows.push(Row {
            experiment: self.summary.experiment.clone(),
            epsilon,
            t,
            observable: observable.into(),
            mean,
            half_width,
            m,
            seed: self.summary.seed,
        });
    }

    pub fn csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv());
            s.push('\n');
        }
        s
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }

    /// Writes `<id>.csv` and `<id>_summary.json` into `dir` and returns their paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>, ExperimentError> {
        std::fs::create_dir_all(dir)?;
        let id = &self.summary.experiment;
        let csv = dir.join(format!("{id}.csv"));
        let json = dir.join(format!("{id}_summary.json"));
        std::fs::File::create(&csv)?.write_all(self.csv().as_bytes())?;
        std::fs::File::create(&json)?.write_all(self.summary_json().as_bytes())?;
        Ok(vec![csv, json])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_floats() {
        let mut o = Outcome::new("sweep", 7);
        o.row(0.1, 1.0 / 3.0, "err", std::f64::consts::PI, 1e-300, 256);
        let csv = o.csv();
        let line = csv.lines().nth(1).unwrap();
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "sweep");
        assert_eq!(fields[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(fields[4].parse::<f64>().unwrap(), std::f64::consts::PI);
        assert_eq!(fields[6], "256");
        assert!(o.passed());
        o.audit("x", false, "");
        assert!(!o.passed());
    }
}
