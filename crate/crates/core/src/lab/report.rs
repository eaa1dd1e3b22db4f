//! Experiment reports and their on-disk form.

use std::path::{Path, PathBuf};

use serde::Serialize;

use super::plot::{render_svg, Plot};
use crate::stats::{bootstrap_median_slope, loglog_fit, median};
use crate::{Error, Result};

/// Column order of `records.csv`.
pub const RECORD_COLUMNS: [&str; 6] = ["n", "lambda", "seed", "risk", "variance", "wallclock_ms"];

/// One cell of an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Record {
    pub n: usize,
    pub lambda: Option<f64>,
    /// Cell seed; every random stream of the cell is derived from it.
    pub seed: u64,
    pub risk: Option<f64>,
    pub variance: Option<f64>,
    pub wallclock_ms: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub n: usize,
    pub seed: u64,
    pub reason: String,
}

/// Log-log fit of a per-n median against n, with a bootstrap band.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub label: String,
    pub exponent: f64,
    pub intercept: f64,
    pub r2: f64,
    pub band: Option<(f64, f64)>,
    pub ns: Vec<usize>,
    pub medians: Vec<f64>,
}

/// Fits `median(values at n)` against `n` over groups with a positive
/// median. Needs at least two such groups.
pub fn fit_median_exponent(
    label: &str,
    groups: &[(usize, Vec<f64>)],
    bootstrap: Option<(usize, f64, u64)>,
) -> Option<ExponentFit> {
    let usable: Vec<&(usize, Vec<f64>)> = groups
        .iter()
        .filter(|(_, v)| median(v).is_some_and(|m| m > 0.0))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let ns: Vec<usize> = usable.iter().map(|g| g.0).collect();
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let medians: Vec<f64> = usable.iter().map(|g| median(&g.1).unwrap()).collect();
    let fit = loglog_fit(&xs, &medians).ok()?;
    let band = bootstrap.and_then(|(reps, level, seed)| {
        let vals: Vec<Vec<f64>> = usable.iter().map(|g| g.1.clone()).collect();
        bootstrap_median_slope(&xs, &vals, reps, level, seed).ok()
    });
    Some(ExponentFit {
        label: label.into(),
        exponent: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        band,
        ns,
        medians,
    })
}

/// A named pass/fail comparison.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: String,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    pub fn above(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            comparison: ">".into(),
            threshold,
            passed: value > threshold,
        }
    }

    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            comparison: "<".into(),
            threshold,
            passed: value < threshold,
        }
    }

    /// `|value - target| <= tol`.
    pub fn within(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value,
            comparison: format!("within {tol} of"),
            threshold: target,
            passed: (value - target).abs() <= tol,
        }
    }
}

/// Extra CSV table written next to the records.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Outcome of any experiment verb.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScalingReport {
    pub experiment: String,
    pub records: Vec<Record>,
    pub failures: Vec<Failure>,
    pub fits: Vec<ExponentFit>,
    pub checks: Vec<Check>,
    pub verdict: String,
    pub details: serde_json::Value,
    #[serde(skip)]
    pub plots: Vec<Plot>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl ScalingReport {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.into(),
            records: Vec::new(),
            failures: Vec::new(),
            fits: Vec::new(),
            checks: Vec::new(),
            verdict: String::new(),
            details: serde_json::Value::Null,
            plots: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn fit(&self, label: &str) -> Option<&ExponentFit> {
        self.fits.iter().find(|f| f.label == label)
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "records": self.records.len(),
            "failures": self.failures,
            "fits": self.fits,
            "checks": self.checks,
            "passed": self.passed(),
            "verdict": self.verdict,
            "details": self.details,
        })
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_records_csv(records: &[Record], path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| Error::io(path, std::io::Error::other(e)))?;
    w.write_record(RECORD_COLUMNS)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            fmt_opt(r.lambda),
            r.seed.to_string(),
            fmt_opt(r.risk),
            fmt_opt(r.variance),
            fmt_opt(r.wallclock_ms),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Paths written by [`emit_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct EmittedFiles {
    pub records: PathBuf,
    pub summary: PathBuf,
    pub plots: Vec<PathBuf>,
    pub tables: Vec<PathBuf>,
}

/// Writes `records.csv`, `summary.json`, `plots/*.svg` and any extra tables
/// into `dir`. A report without plots still gets a `risk_vs_n` plot, which
/// is annotated "no data" when empty.
pub fn emit_report(report: &ScalingReport, dir: &Path) -> Result<EmittedFiles> {
    let plot_dir = dir.join("plots");
    std::fs::create_dir_all(&plot_dir).map_err(|e| Error::io(&plot_dir, e))?;

    let records = dir.join("records.csv");
    write_records_csv(&report.records, &records)?;

    let summary = dir.join("summary.json");
    std::fs::write(&summary, serde_json::to_string_pretty(&report.summary_json())?)
        .map_err(|e| Error::io(&summary, e))?;

    let fallback;
    let plots: &[Plot] = if report.plots.is_empty() {
        fallback = [Plot::new("risk_vs_n", &report.experiment, "n", "risk")];
        &fallback
    } else {
        &report.plots
    };
    let mut plot_paths = Vec::new();
    for p in plots {
        let path = plot_dir.join(format!("{}.svg", p.name));
        std::fs::write(&path, render_svg(p)).map_err(|e| Error::io(&path, e))?;
        plot_paths.push(path);
    }

    let mut table_paths = Vec::new();
    for t in &report.tables {
        let path = dir.join(format!("{}.csv", t.name));
        let mut w =
            csv::Writer::from_path(&path).map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
        w.write_record(&t.header)?;
        for row in &t.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        table_paths.push(path);
    }
    Ok(EmittedFiles {
        records,
        summary,
        plots: plot_paths,
        tables: table_paths,
    })
}
