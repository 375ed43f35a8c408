//! Whitespace-separated `x y half_width` files for plotting tools.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use volterra_spde_core::experiments::Outcome;

/// `(observable, epsilon)` to `(t, mean, half_width)` points.
type Series = BTreeMap<(String, String), Vec<(f64, f64, f64)>>;

fn slug(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// Writes one file per fit and one per `(observable, epsilon)` series with at least two
/// points. Nothing is written (and the directory is not created) for an empty outcome.
pub fn emit_plotdata(outcome: &Outcome, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let id = &outcome.summary.experiment;
    let mut files = Vec::new();
    let mut series: Series = BTreeMap::new();
    for r in &outcome.rows {
        series.entry((r.observable.clone(), format!("{}", r.epsilon))).or_default().push((r.t, r.mean, r.half_width));
    }
    let mut pending: Vec<(String, String)> = Vec::new();
    for (name, fit) in &outcome.summary.fits {
        let mut text = format!("# {id} fit {name}: slope {} intercept {} r2 {}\n# x y half_width\n", fit.slope, fit.intercept, fit.r2);
        for (i, (x, y)) in fit.points.iter().enumerate() {
            let hw = fit.half_widths.get(i).copied().unwrap_or(0.0);
            writeln!(text, "{x} {y} {hw}").expect("string write");
        }
        pending.push((format!("{id}_fit_{}.dat", slug(name)), text));
    }
    for ((obs, eps), pts) in &series {
        if pts.len() < 2 {
            continue;
        }
        let mut text = format!("# {id} {obs} at eps={eps}\n# t mean half_width\n");
        for (t, m, hw) in pts {
            writeln!(text, "{t} {m} {hw}").expect("string write");
        }
        pending.push((format!("{id}_{}_eps{}.dat", slug(obs), slug(eps)), text));
    }
    if pending.is_empty() {
        return Ok(files);
    }
    std::fs::create_dir_all(dir)?;
    for (name, text) in pending {
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        files.push(path);
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_outcome_writes_nothing() {
        let dir = std::env::temp_dir().join(format!("plotdata-empty-{}", std::process::id()));
        let files = emit_plotdata(&Outcome::new("sweep", 1), &dir).unwrap();
        assert!(files.is_empty());
        assert!(!dir.exists());
    }

    #[test]
    fn series_need_two_points() {
        let dir = std::env::temp_dir().join(format!("plotdata-series-{}", std::process::id()));
        let mut o = Outcome::new("sweep", 1);
        o.row(0.1, 0.0, "err", 1.0, 0.1, 16);
        o.row(0.1, 1.0, "err", 0.5, 0.1, 16);
        o.row(0.2, 1.0, "err", 0.5, 0.1, 16);
        let files = emit_plotdata(&o, &dir).unwrap();
        assert_eq!(files.len(), 1);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
