//! Reports produced by the pipelines, and their CSV and JSON renderings.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::StabilityReport;
use crate::maps::MapDescriptor;

use super::scenario::ScenarioKind;

/// Header of the per-mode CSV table.
pub const MODE_HEADER: &str = "mode_index,mu_domain,mu_disc_weighted,abs_diff,rel_diff,rhs_sharp,rhs_coarse,rhs_main,pass";
/// Header of the check table used by battery kinds.
pub const CHECK_HEADER: &str = "check,value,limit,margin,pass";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Validation(format!("unknown report format '{s}' (expected csv or json)"))),
        }
    }
}

/// One compared eigenvalue.
///
/// For transfer and isospectral runs the columns hold the domain-side and the
/// disc-side eigenvalue. Eig runs put the sparse value in `mu_domain` and the
/// reference value in `mu_disc_weighted`. Stability runs put `mu_n` of the first
/// and second weight there, and `margin` is `rhs_main - lhs_upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub mode_index: usize,
    pub mu_domain: f64,
    pub mu_disc_weighted: f64,
    pub abs_diff: f64,
    pub rel_diff: f64,
    pub rhs_sharp: Option<f64>,
    pub rhs_coarse: Option<f64>,
    pub rhs_main: Option<f64>,
    pub margin: f64,
    pub pass: bool,
}

/// One scalar check. Without a limit the row is informational and passes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub value: f64,
    pub limit: Option<f64>,
    pub pass: bool,
}

impl CheckRow {
    /// Passes when `value <= limit`.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        CheckRow { name: name.into(), value, limit: Some(limit), pass: value <= limit }
    }

    pub fn info(name: impl Into<String>, value: f64) -> Self {
        CheckRow { name: name.into(), value, limit: None, pass: true }
    }

    pub fn margin(&self) -> Option<f64> {
        self.limit.map(|l| l - self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub max_rel_diff: Option<f64>,
    /// Smallest per-mode margin, or smallest check margin when there are no mode rows.
    pub min_margin: Option<f64>,
    pub all_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: ScenarioKind,
    /// `[n_r, n_theta]` of the finest mesh used.
    pub mesh: [usize; 2],
    pub maps: Vec<MapDescriptor>,
    pub rows: Vec<ModeRow>,
    pub checks: Vec<CheckRow>,
    pub stability: Option<StabilityReport>,
    pub notes: Vec<String>,
    pub summary: Summary,
}

impl Report {
    /// Builds a report and fills in its summary.
    pub fn new(
        kind: ScenarioKind,
        mesh: [usize; 2],
        maps: Vec<MapDescriptor>,
        rows: Vec<ModeRow>,
        checks: Vec<CheckRow>,
        stability: Option<StabilityReport>,
        notes: Vec<String>,
    ) -> Self {
        let mut r = Report {
            kind,
            mesh,
            maps,
            rows,
            checks,
            stability,
            notes,
            summary: Summary { max_rel_diff: None, min_margin: None, all_pass: true },
        };
        r.summary = r.compute_summary();
        r
    }

    fn compute_summary(&self) -> Summary {
        let max_rel_diff = self.rows.iter().map(|r| r.rel_diff).reduce(f64::max);
        let min_margin = if self.rows.is_empty() {
            self.checks.iter().filter_map(CheckRow::margin).reduce(f64::min)
        } else {
            self.rows.iter().map(|r| r.margin).reduce(f64::min)
        };
        let all_pass = self.rows.iter().all(|r| r.pass)
            && self.checks.iter().all(|c| c.pass)
            && self.stability.as_ref().is_none_or(StabilityReport::all_pass);
        Summary { max_rel_diff, min_margin, all_pass }
    }

    /// True iff every pass flag in the report is true.
    pub fn all_pass(&self) -> bool {
        self.summary.all_pass
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Shortest round-trip representation, switching to exponent form for tiny and huge values.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders `r` as CSV or pretty-printed JSON. Both end with the summary.
pub fn render_report(r: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(r).expect("report values are finite");
            s.push('\n');
            s
        }
        ReportFormat::Csv => render_csv(r),
    }
}

fn render_csv(r: &Report) -> String {
    let mut out = String::new();
    if r.kind.is_spectral() {
        out.push_str(MODE_HEADER);
        out.push('\n');
        for row in &r.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.mode_index,
                num(row.mu_domain),
                num(row.mu_disc_weighted),
                num(row.abs_diff),
                num(row.rel_diff),
                cell(row.rhs_sharp),
                cell(row.rhs_coarse),
                cell(row.rhs_main),
                row.pass
            );
        }
        for c in &r.checks {
            let _ = writeln!(out, "# check,{},{},{},{}", csv_field(&c.name), num(c.value), cell(c.limit), c.pass);
        }
    } else {
        out.push_str(CHECK_HEADER);
        out.push('\n');
        for c in &r.checks {
            let _ = writeln!(out, "{},{},{},{},{}", csv_field(&c.name), num(c.value), cell(c.limit), cell(c.margin()), c.pass);
        }
    }
    for note in &r.notes {
        let _ = writeln!(out, "# note,{}", csv_field(note));
    }
    let _ = writeln!(
        out,
        "# summary,max_rel_diff={},min_margin={},all_pass={}",
        cell(r.summary.max_rel_diff),
        cell(r.summary.min_margin),
        r.summary.all_pass
    );
    out
}

/// Writes the rendered report to `path`.
pub fn emit_report(r: &Report, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(r, format)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
