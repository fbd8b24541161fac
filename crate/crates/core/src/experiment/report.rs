//! Experiment reports and the files written for them.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{MageError, Result};
use crate::spectral::PowerFit;

use super::{ExperimentConfig, ExperimentKind};

pub const CSV_HEADER: &str = "experiment,seed,level,lp_diff,sup_diff,c_diff,fit_slope,verdict";

/// Outcome of a single row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowVerdict {
    /// A data row that entered the fits.
    Ok,
    /// A row that used a non-converged solve; excluded from fits.
    Excluded,
    Pass,
    Fail,
}

impl RowVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            RowVerdict::Ok => "ok",
            RowVerdict::Excluded => "excluded",
            RowVerdict::Pass => "pass",
            RowVerdict::Fail => "fail",
        }
    }

    pub fn from_bool(passed: bool) -> Self {
        if passed {
            RowVerdict::Pass
        } else {
            RowVerdict::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Perturbation level, family parameter, exponent or instance index.
    pub level: f64,
    pub label: String,
    pub control: bool,
    pub inputs_hash: String,
    pub lp_diff: Option<f64>,
    pub sup_diff: Option<f64>,
    pub c_diff: Option<f64>,
    pub fit_slope: Option<f64>,
    /// `‖g‖_{1/n}` of the perturbed density.
    pub g_norm: Option<f64>,
    /// Largest relative defect of `c ∫ f ω^n = ∫ ω^n` among the row's
    /// normalized solves on a Kähler metric.
    pub mass_identity: Option<f64>,
    pub converged: bool,
    pub verdict: RowVerdict,
    pub note: Option<String>,
}

impl ReportRow {
    pub fn new(
        experiment: ExperimentKind,
        seed: u64,
        level: f64,
        label: impl Into<String>,
    ) -> Self {
        ReportRow {
            experiment,
            seed,
            level,
            label: label.into(),
            control: false,
            inputs_hash: String::new(),
            lp_diff: None,
            sup_diff: None,
            c_diff: None,
            fit_slope: None,
            g_norm: None,
            mass_identity: None,
            converged: true,
            verdict: RowVerdict::Ok,
            note: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFit {
    pub label: String,
    pub fit: PowerFit,
}

/// A named pass/fail decision together with the rule and threshold it used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    pub rule: String,
}

impl Verdict {
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64, rule: &str) -> Self {
        Verdict {
            name: name.into(),
            passed: value >= threshold,
            value,
            threshold,
            rule: rule.to_string(),
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64, rule: &str) -> Self {
        Verdict {
            name: name.into(),
            passed: value <= threshold,
            value,
            threshold,
            rule: rule.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub rows: Vec<ReportRow>,
    pub fits: Vec<LabeledFit>,
    pub verdicts: Vec<Verdict>,
    /// Exponent targets and other reference values used by the verdicts.
    pub targets: Vec<(String, f64)>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(config: &ExperimentConfig) -> Self {
        ExperimentReport {
            experiment: config.experiment,
            rows: Vec::new(),
            fits: Vec::new(),
            verdicts: Vec::new(),
            targets: Vec::new(),
            provenance: Provenance {
                config: config.clone(),
                config_hash: hash_hex(&serde_json::to_string(config).unwrap_or_default()),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    pub fn all_passed(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        let cell = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{:e},{},{},{},{},{}",
                r.experiment.as_str(),
                r.seed,
                r.level,
                cell(r.lp_diff),
                cell(r.sup_diff),
                cell(r.c_diff),
                cell(r.fit_slope),
                r.verdict.as_str()
            );
        }
        out
    }

    /// Gnuplot script drawing log–log charts from `rows.csv`.
    pub fn plot_script(&self) -> String {
        let (x, y, xl, yl) = match self.experiment {
            ExperimentKind::Stability => (4, 5, "||f - g||_p", "||u - v||_sup"),
            ExperimentKind::CfStability => (4, 6, "||f - g||_p", "|c_f - c_g|"),
            ExperimentKind::Hoelder => (3, 7, "family parameter", "fitted exponent"),
            ExperimentKind::EnvelopeHoelder => (3, 7, "nominal alpha", "envelope exponent"),
            ExperimentKind::AuditSuite => (3, 5, "instance", "audit value"),
        };
        let seeds: Vec<u64> = {
            let mut s: Vec<u64> = self.rows.iter().map(|r| r.seed).collect();
            s.sort_unstable();
            s.dedup();
            s
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# {} report; run with: gnuplot plot.gp",
            self.experiment.as_str()
        );
        out.push_str("set datafile separator ','\n");
        out.push_str("set key autotitle columnhead\n");
        out.push_str("set terminal pngcairo size 900,600\n");
        out.push_str("set output 'plot.png'\n");
        out.push_str("set logscale xy\nset grid\n");
        let _ = writeln!(out, "set xlabel '{xl}'\nset ylabel '{yl}'");
        let plots: Vec<String> = seeds
            .iter()
            .map(|s| {
                format!(
                    "'rows.csv' every ::1 using (${{2}} == {s} && strcol(8) ne 'excluded' ? ${x} : 1/0):{y} with linespoints title 'seed {s}'"
                )
            })
            .collect();
        if plots.is_empty() {
            out.push_str("# no rows\n");
        } else {
            let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
        }
        out
    }
}

pub fn hash_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Writes `report.json`, `rows.csv` and `plot.gp` into `dir`.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    let unwritable = |_| MageError::OutputDirUnwritable(dir.to_path_buf());
    fs::create_dir_all(dir).map_err(unwritable)?;
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(report)?,
    )
    .map_err(unwritable)?;
    fs::write(dir.join("rows.csv"), report.to_csv()).map_err(unwritable)?;
    fs::write(dir.join("plot.gp"), report.plot_script()).map_err(unwritable)?;
    Ok(())
}
