//! Report serialisation: JSON, CSV (RFC 4180) and plot data.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentReport;
use crate::error::{Error, Result};

/// Column order of the CSV report.
pub const CSV_COLUMNS: [&str; 9] = [
    "P",
    "lattice_points",
    "empirical",
    "predicted",
    "ratio",
    "euler_value",
    "euler_tail",
    "li_value",
    "li_error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportFormat {
    Json,
    Csv,
    PlotData,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "plot-data" => Ok(ReportFormat::PlotData),
            _ => Err(Error::InvalidArgument(format!(
                "unknown report format `{s}` (expected json, csv or plot-data)"
            ))),
        }
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_report<W: Write>(report: &ExperimentReport, format: ReportFormat, mut out: W) -> Result<()> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, report)?;
            writeln!(out)?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(CSV_COLUMNS)?;
            for r in &report.rows {
                w.write_record([
                    r.p.to_string(),
                    cell(r.lattice_points),
                    cell(r.empirical),
                    cell(r.predicted),
                    cell(r.ratio),
                    cell(r.euler_value),
                    cell(r.euler_tail),
                    cell(r.li_value),
                    cell(r.li_error),
                ])?;
            }
            w.flush()?;
        }
        ReportFormat::PlotData => {
            let cfg = &report.config;
            writeln!(out, "# polydens {} plot data", report.version)?;
            writeln!(out, "# mode: {}", serde_json::to_string(&cfg.mode)?.trim_matches('"'))?;
            writeln!(out, "# polynomials: {}", cfg.polynomials.join("; "))?;
            if report.gated {
                writeln!(out, "# gated: hypotheses not satisfied, no rows")?;
            }
            writeln!(out, "# columns: ln(P) ratio")?;
            for r in &report.rows {
                if let Some(ratio) = r.ratio {
                    writeln!(out, "{} {}", (r.p as f64).ln(), ratio)?;
                }
            }
        }
    }
    Ok(())
}

pub fn write_report(report: &ExperimentReport, format: ReportFormat, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    emit_report(report, format, &mut w)?;
    w.flush()?;
    Ok(())
}
