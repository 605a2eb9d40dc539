//! Report serialization: JSON for machines, CSV for spreadsheets, SVG for
//! a quick look at the training curves.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::svg::loss_curves_svg;
use super::transfer::TransferReport;
use super::HarnessError;
use crate::numfmt::float17;

/// Output format selector for [`emit_report`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Svg,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "svg" => Ok(Self::Svg),
            other => Err(format!("unknown report format `{other}` (json, csv, svg)")),
        }
    }
}

impl TransferReport {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Per-trial rows in CSV. Floats carry full precision; an absent
    /// `iterations_to_tol` becomes an empty cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "trial,seed,strategy,final_loss,train_loss,iterations_used,iterations_to_tol,params_optimized,converged\n",
        );
        for trial in &self.trials {
            for row in &trial.rows {
                let to_tol = row
                    .iterations_to_tol
                    .map(|v| v.to_string())
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    trial.trial,
                    trial.seed,
                    row.strategy,
                    float17(row.final_loss),
                    float17(row.train_loss),
                    row.iterations_used,
                    to_tol,
                    row.params_optimized,
                    row.converged
                );
            }
        }
        out
    }

    /// Median training curves as an SVG line plot on a log axis.
    pub fn to_svg(&self) -> String {
        let title = format!(
            "{} / {}: median training objective, {} trials",
            self.config.experiment, self.config.group, self.config.trials
        );
        let series: Vec<(String, Vec<f64>)> = self
            .curves
            .iter()
            .map(|c| (c.strategy.to_string(), c.median_train_loss.clone()))
            .collect();
        loss_curves_svg(&title, &series)
    }

    /// One line fit for a terminal: medians per strategy plus the
    /// leaf-vs-scratch win rate when both ran.
    pub fn summary_line(&self) -> String {
        let mut line = format!(
            "{} {} trials={} budget={}",
            self.config.experiment, self.config.group, self.config.trials,
            self.aggregates.budget_iters
        );
        for stat in &self.aggregates.median_final_loss {
            let _ = write!(line, " {}={:.3e}", stat.strategy, stat.value);
        }
        if let Some(rate) = self.aggregates.win_rate_leaf_vs_scratch {
            let _ = write!(line, " leaf_wins={rate:.2}");
        }
        line
    }
}

/// Writes the report to `dir` in the requested format and returns the path
/// written (`report.json`, `report.csv`, or `plot.svg`).
pub fn emit_report(
    report: &TransferReport,
    format: ReportFormat,
    dir: &Path,
) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(dir)?;
    let (name, body) = match format {
        ReportFormat::Json => ("report.json", report.to_json()?),
        ReportFormat::Csv => ("report.csv", report.to_csv()),
        ReportFormat::Svg => ("plot.svg", report.to_svg()),
    };
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}
