//! Config-driven sweeps probing the stability and regularity estimates,
//! with reports written as JSON, CSV and a gnuplot script.
//!
//! A config is one TOML file:
//!
//! ```toml
//! experiment = "stability"
//! p = 2.0
//! perturbation_levels = [0.2, 0.1, 0.05, 0.025, 0.0125, 0.00625]
//! seeds = [1, 2, 3]
//!
//! [grid]
//! n = 1
//! R = 64
//!
//! [metric]
//! family = "flat_kahler"
//!
//! [density_family]
//! name = "smooth"
//! ```

mod families;
mod jobs;
mod report;
mod sweeps;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::envelope::EnvelopeConfig;
use crate::error::{MageError, Result};
use crate::solver::SolverConfig;
use crate::torus::{make_grid, GridSpec, MetricFamily, TrigTerm};

pub use families::{
    periodic_gaussian, perturb, perturbation_bump, DensityFamily, Member, PerturbationKind,
};
pub use jobs::{EnvelopeJob, EnvelopeSidecar, ExponentFits, Obstacle, SolveJob};
pub use report::{
    emit_report, hash_hex, ExperimentReport, LabeledFit, Provenance, ReportRow, RowVerdict,
    Verdict, CSV_HEADER,
};
pub use sweeps::{
    audit_suite, cf_stability_sweep, envelope_hoelder_sweep, hoelder_sweep, hoelder_target,
    stability_sweep,
};

/// Environment variable overriding the config's seeds (comma separated).
pub const SEED_ENV: &str = "MAGE_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Stability,
    CfStability,
    Hoelder,
    EnvelopeHoelder,
    AuditSuite,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Stability => "stability",
            ExperimentKind::CfStability => "cf_stability",
            ExperimentKind::Hoelder => "hoelder",
            ExperimentKind::EnvelopeHoelder => "envelope_hoelder",
            ExperimentKind::AuditSuite => "audit_suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "R")]
    pub r: usize,
}

/// Which equation the stability sweep solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    /// `ω_u^n = e^u f ω^n`.
    #[default]
    Exponential,
    /// `ω_u^n = c f ω^n`, `sup u = 0`.
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    /// Solved pairs for the Kähler comparison audit.
    pub instances: usize,
    /// Constructed pairs for the sub/supersolution audits.
    pub pairs: usize,
    /// Perturbation size of the corpus pairs.
    pub pair_eps: f64,
    /// Perturbation size for the subsolution construction, which needs
    /// a small `‖f − g‖_p`.
    pub construction_eps: f64,
    /// Solved pairs for the modified comparison audit.
    pub hermitian_instances: usize,
    /// `ε` ladder of the modified comparison audit.
    pub comparison_eps: Vec<f64>,
    /// Extra sublevel shifts `s` for the Kähler rows.
    pub comparison_shifts: Vec<f64>,
    /// Metric for the modified comparison when the config metric is flat.
    pub hermitian_metric: MetricFamily,
    /// Grid of the modified comparison when the config metric is flat;
    /// conformal metrics are Kähler for `n = 1`.
    pub hermitian_grid: GridConfig,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            instances: 20,
            pairs: 10,
            pair_eps: 0.3,
            construction_eps: 0.02,
            hermitian_instances: 3,
            comparison_eps: vec![0.4, 0.3, 0.2, 0.15, 0.1, 0.075],
            comparison_shifts: vec![0.001, 0.01, 0.1],
            hermitian_metric: MetricFamily::ConformalHermitian {
                psi_coefficients: vec![TrigTerm {
                    amplitude: 0.2,
                    freq: vec![1, 0, 0, 0],
                    phase: 0.0,
                }],
            },
            hermitian_grid: GridConfig { n: 2, r: 8 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub grid: GridConfig,
    pub metric: MetricFamily,
    pub density_family: DensityFamily,
    /// Lebesgue exponent, `p > 1`.
    pub p: f64,
    /// Strictly decreasing positive levels `ε`.
    pub perturbation_levels: Vec<f64>,
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub output_dir: Option<PathBuf>,
    pub equation: Equation,
    pub perturbation: PerturbationKind,
    /// Width of the perturbation bump.
    pub bump_width: f64,
    /// Nominal exponents of the envelope sweep.
    pub alphas: Vec<f64>,
    pub envelope: EnvelopeConfig,
    pub audit: AuditConfig,
}

const REQUIRED: [&str; 6] = ["experiment", "grid", "metric", "density_family", "p", "seeds"];

fn invalid(field: &str, message: impl Into<String>) -> MageError {
    MageError::ConfigInvalid {
        field: field.to_string(),
        message: message.into(),
    }
}

fn take<T: DeserializeOwned>(table: &mut toml::Table, key: &str) -> Result<Option<T>> {
    table
        .remove(key)
        .map(|v| {
            v.try_into::<T>()
                .map_err(|e| invalid(key, e.message().trim()))
        })
        .transpose()
}

fn require<T: DeserializeOwned>(table: &mut toml::Table, key: &str) -> Result<T> {
    take(table, key)?.ok_or_else(|| invalid(key, "missing"))
}

impl ExperimentConfig {
    /// Parses and validates a TOML config. Errors name the offending field.
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| invalid("<document>", e.message().trim()))?;
        for key in REQUIRED {
            if !table.contains_key(key) {
                return Err(invalid(key, "missing"));
            }
        }
        let cfg = ExperimentConfig {
            experiment: require(&mut table, "experiment")?,
            grid: require(&mut table, "grid")?,
            metric: require(&mut table, "metric")?,
            density_family: require(&mut table, "density_family")?,
            p: require(&mut table, "p")?,
            perturbation_levels: take(&mut table, "perturbation_levels")?.unwrap_or_default(),
            seeds: require(&mut table, "seeds")?,
            solver: take(&mut table, "solver")?.unwrap_or_default(),
            output_dir: take(&mut table, "output_dir")?,
            equation: take(&mut table, "equation")?.unwrap_or_default(),
            perturbation: take(&mut table, "perturbation")?.unwrap_or_default(),
            bump_width: take(&mut table, "bump_width")?.unwrap_or(0.15),
            alphas: take(&mut table, "alphas")?.unwrap_or_else(|| vec![0.3, 0.5, 0.7]),
            envelope: take(&mut table, "envelope")?.unwrap_or_default(),
            audit: take(&mut table, "audit")?.unwrap_or_default(),
        };
        if let Some(key) = table.keys().next() {
            return Err(invalid(key, "unknown field"));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        make_grid(self.grid.n, self.grid.r).map_err(|e| invalid("grid", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid_spec()?;
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(invalid("p", format!("must exceed 1, got {}", self.p)));
        }
        let levels = &self.perturbation_levels;
        if levels.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(invalid("perturbation_levels", "levels must be positive"));
        }
        if levels.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid(
                "perturbation_levels",
                "levels must be strictly decreasing",
            ));
        }
        let fits = matches!(
            self.experiment,
            ExperimentKind::Stability | ExperimentKind::CfStability
        );
        if fits && levels.is_empty() {
            return Err(invalid("perturbation_levels", "missing"));
        }
        if fits && levels.len() < 4 {
            return Err(invalid(
                "perturbation_levels",
                "exponent fits need at least 4 levels",
            ));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        self.density_family
            .validate(grid)
            .map_err(|m| invalid("density_family", m))?;
        self.solver
            .validate()
            .map_err(|e| invalid("solver", e.to_string()))?;
        self.envelope
            .validate()
            .map_err(|e| invalid("envelope", e.to_string()))?;
        if !(self.bump_width > 0.0 && self.bump_width < 0.5) {
            return Err(invalid("bump_width", "must lie in (0, 1/2)"));
        }
        if self.alphas.iter().any(|a| !(*a > 0.2 && *a <= 0.9)) {
            return Err(invalid("alphas", "exponents must lie in (0.2, 0.9]"));
        }
        if self.perturbation == PerturbationKind::Multiplicative
            && levels.first().is_some_and(|&e| e >= 1.0)
        {
            return Err(invalid(
                "perturbation_levels",
                "multiplicative levels must be below 1",
            ));
        }
        Ok(())
    }

    /// Replaces the seeds with the comma-separated list in `value`.
    pub fn override_seeds(&mut self, value: &str) -> Result<()> {
        let seeds: std::result::Result<Vec<u64>, _> =
            value.split(',').map(|s| s.trim().parse::<u64>()).collect();
        match seeds {
            Ok(s) if !s.is_empty() => {
                self.seeds = s;
                Ok(())
            }
            _ => Err(invalid(
                SEED_ENV,
                format!("cannot parse seeds from {value:?}"),
            )),
        }
    }
}

/// Maps `f` over `items`, concurrently unless `deterministic`; output order
/// follows input order either way.
pub(crate) fn map_rows<T, R, F>(items: Vec<T>, deterministic: bool, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    if deterministic {
        items.into_iter().map(f).collect()
    } else {
        items.into_par_iter().map(f).collect()
    }
}

/// Runs the sweep named by the config.
pub fn run_experiment(cfg: &ExperimentConfig, deterministic: bool) -> Result<ExperimentReport> {
    match cfg.experiment {
        ExperimentKind::Stability => stability_sweep(cfg, deterministic),
        ExperimentKind::CfStability => cf_stability_sweep(cfg, deterministic),
        ExperimentKind::Hoelder => hoelder_sweep(cfg, deterministic),
        ExperimentKind::EnvelopeHoelder => envelope_hoelder_sweep(cfg, deterministic),
        ExperimentKind::AuditSuite => audit_suite(cfg, deterministic),
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides the config's `output_dir`.
    pub out_dir: Option<PathBuf>,
    pub deterministic: bool,
    /// Replaces the config's seeds; normally read from `MAGE_SEED`.
    pub seed_override: Option<String>,
}

impl RunOptions {
    pub fn from_env(out_dir: Option<PathBuf>, deterministic: bool) -> Self {
        RunOptions {
            out_dir,
            deterministic,
            seed_override: std::env::var(SEED_ENV).ok(),
        }
    }
}

/// Loads, runs and emits one experiment. Returns the report and the exit
/// code: 0 iff every verdict passes.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<(ExperimentReport, i32)> {
    let mut cfg = ExperimentConfig::load(config_path)?;
    if let Some(seeds) = &opts.seed_override {
        cfg.override_seeds(seeds)?;
    }
    let dir = opts
        .out_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|_| MageError::OutputDirUnwritable(dir.clone()))?;
    let report = run_experiment(&cfg, opts.deterministic)?;
    emit_report(&report, &dir)?;
    let code = report.exit_code();
    Ok((report, code))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "stability"
p = 2.0
perturbation_levels = [0.2, 0.1, 0.05, 0.025]
seeds = [1]

[grid]
n = 1
R = 16

[metric]
family = "flat_kahler"

[density_family]
name = "smooth"
"#;

    fn field_of(err: MageError) -> String {
        match err {
            MageError::ConfigInvalid { field, .. } => field,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Stability);
        assert_eq!(cfg.grid, GridConfig { n: 1, r: 16 });
        assert_eq!(cfg.solver, SolverConfig::default());
        assert_eq!(cfg.alphas, vec![0.3, 0.5, 0.7]);
    }

    #[test]
    fn missing_p_is_named() {
        let text = BASE.replace("p = 2.0\n", "");
        assert_eq!(
            field_of(ExperimentConfig::from_toml(&text).unwrap_err()),
            "p"
        );
    }

    #[test]
    fn bad_values_are_named() {
        let cases = [
            (BASE.replace("p = 2.0", "p = 1.0"), "p"),
            (
                BASE.replace("[0.2, 0.1, 0.05, 0.025]", "[0.2, 0.1, 0.1, 0.025]"),
                "perturbation_levels",
            ),
            (
                BASE.replace("[0.2, 0.1, 0.05, 0.025]", "[0.2, 0.1, 0.05]"),
                "perturbation_levels",
            ),
            (BASE.replace("R = 16", "R = 15"), "grid"),
            (
                BASE.replace("name = \"smooth\"", "name = \"lumpy\""),
                "density_family",
            ),
            (format!("{BASE}\n[solver]\ntol = 1.0\n"), "solver"),
            (format!("bogus = 1\n{BASE}"), "bogus"),
            (BASE.replace("seeds = [1]", "seeds = []"), "seeds"),
        ];
        for (text, field) in cases {
            assert_eq!(
                field_of(ExperimentConfig::from_toml(&text).unwrap_err()),
                field,
                "{text}"
            );
        }
    }

    #[test]
    fn seed_override() {
        let mut cfg = ExperimentConfig::from_toml(BASE).unwrap();
        cfg.override_seeds("4, 5").unwrap();
        assert_eq!(cfg.seeds, vec![4, 5]);
        assert_eq!(field_of(cfg.override_seeds("x").unwrap_err()), SEED_ENV);
    }

    #[test]
    fn map_rows_keeps_order() {
        let items: Vec<u64> = (0..64).collect();
        let a = map_rows(items.clone(), true, |x| x * x);
        let b = map_rows(items, false, |x| x * x);
        assert_eq!(a, b);
    }
}
