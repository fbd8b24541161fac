//! Single solves and envelopes driven by a config file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::envelope::{envelope, envelope_hoelder_report, hoelder_synthesizer, EnvelopeConfig, EnvelopeResult};
use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::solver::{solve_exponential, solve_normalized, SolveResult, SolverConfig};
use crate::spectral::{hoelder_window, PowerFit};
use crate::torus::{eval_trig, make_grid, make_metric, GridSpec, MetricFamily, TrigTerm};

use super::{DensityFamily, Equation, GridConfig, Member};

fn two() -> f64 {
    2.0
}

/// Config of `mage solve`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveJob {
    pub grid: GridConfig,
    pub metric: MetricFamily,
    pub density_family: DensityFamily,
    /// Index into the family's members.
    #[serde(default)]
    pub member: usize,
    #[serde(default)]
    pub seed: u64,
    /// Exponent used by the spike family's normalization.
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default)]
    pub equation: Equation,
    #[serde(default)]
    pub solver: SolverConfig,
}

/// Obstacle of `mage envelope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Obstacle {
    Constant { value: f64 },
    /// `offset + Σ terms`.
    Trig {
        #[serde(default)]
        offset: f64,
        terms: Vec<TrigTerm>,
    },
    /// Output of the Hölder synthesizer.
    Hoelder { alpha: f64, seed: u64 },
}

impl Obstacle {
    pub fn sample(&self, grid: GridSpec) -> Result<ScalarField> {
        match self {
            Obstacle::Constant { value } => Ok(ScalarField::constant(grid, *value)),
            Obstacle::Trig { offset, terms } => Ok(grid.sample(|x| offset + eval_trig(terms, x))),
            Obstacle::Hoelder { alpha, seed } => hoelder_synthesizer(*alpha, *seed, grid),
        }
    }

    /// Nominal exponent of synthesized obstacles. Smooth obstacles have
    /// none: their envelopes are `C^{1,1}`, which the window cannot resolve
    /// once the modulus saturates at the oscillation.
    fn nominal_alpha(&self) -> Option<f64> {
        match self {
            Obstacle::Hoelder { alpha, .. } => Some(*alpha),
            _ => None,
        }
    }
}

/// Config of `mage envelope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeJob {
    pub grid: GridConfig,
    pub metric: MetricFamily,
    pub obstacle: Obstacle,
    #[serde(default)]
    pub envelope: EnvelopeConfig,
}

/// JSON sidecar written next to an envelope.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeSidecar {
    pub lambda_final: f64,
    pub defect: f64,
    pub offcontact_ma_sup: f64,
    pub contact_fraction: f64,
    pub shift: f64,
    pub exponent_fits: Option<ExponentFits>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExponentFits {
    pub deltas: Vec<f64>,
    pub alpha_nominal: Option<f64>,
    pub fit_f: Option<PowerFit>,
    pub fit_p: Option<PowerFit>,
    pub ratio_sup: f64,
    /// Exponent verdict, for obstacles with a nominal exponent.
    pub passed: Option<bool>,
}

fn parse<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| MageError::ConfigInvalid {
        field: "<document>".into(),
        message: e.message().trim().to_string(),
    })
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|_| MageError::OutputDirUnwritable(dir.to_path_buf()))
}

impl SolveJob {
    pub fn load(path: &Path) -> Result<Self> {
        parse(path)
    }

    /// Solves and writes `u.bin` and `solve.json` into `dir`. A solve that
    /// does not converge is still written, with `converged: false`.
    pub fn run(&self, dir: &Path) -> Result<SolveResult> {
        let grid = make_grid(self.grid.n, self.grid.r)?;
        let metric = make_metric(grid, &self.metric)?;
        let members = self.density_family.members();
        let member: Member = *members.get(self.member).ok_or_else(|| MageError::ConfigInvalid {
            field: "member".into(),
            message: format!("family has {} members", members.len()),
        })?;
        let f = self.density_family.sample(member, self.seed, self.p, &metric)?;
        let res = match self.equation {
            Equation::Exponential => solve_exponential(&f, &metric, &self.solver),
            Equation::Normalized => solve_normalized(&f, &metric, &self.solver),
        };
        let res = match res {
            Ok(r) => r,
            Err(MageError::NotConverged(r)) => *r,
            Err(e) => return Err(e),
        };
        prepare_dir(dir)?;
        res.u.save(dir.join("u.bin"))?;
        fs::write(dir.join("solve.json"), serde_json::to_string_pretty(&res.sidecar())?)?;
        Ok(res)
    }
}

impl EnvelopeJob {
    pub fn load(path: &Path) -> Result<Self> {
        parse(path)
    }

    /// Computes the envelope and writes `p.bin` and `envelope.json`.
    pub fn run(&self, dir: &Path) -> Result<(EnvelopeResult, EnvelopeSidecar)> {
        let grid = make_grid(self.grid.n, self.grid.r)?;
        let metric = make_metric(grid, &self.metric)?;
        let f = self.obstacle.sample(grid)?;
        let deltas = hoelder_window(grid);
        let alpha = self.obstacle.nominal_alpha();
        // fits need three scales in the Hölder window
        let (env, exponent_fits) = if deltas.len() >= 3 {
            let (rep, env) =
                envelope_hoelder_report(&f, alpha.unwrap_or(1.0), &metric, &deltas, &self.envelope)?;
            let passed = alpha.map(|a| {
                rep.passed && rep.fit_p.is_none_or(|fit| fit.slope >= a - 0.05)
            });
            let fits = ExponentFits {
                deltas: rep.deltas,
                alpha_nominal: alpha,
                fit_f: rep.fit_f,
                fit_p: rep.fit_p,
                ratio_sup: rep.ratio_sup,
                passed,
            };
            (env, Some(fits))
        } else {
            (envelope(&f, &metric, &self.envelope)?, None)
        };
        let sidecar = EnvelopeSidecar {
            lambda_final: env.lambda_final,
            defect: env.defect,
            offcontact_ma_sup: env.offcontact_ma_sup,
            contact_fraction: env.contact_fraction(),
            shift: env.shift,
            exponent_fits,
        };
        prepare_dir(dir)?;
        env.p.save(dir.join("p.bin"))?;
        fs::write(dir.join("envelope.json"), serde_json::to_string_pretty(&sidecar)?)?;
        Ok((env, sidecar))
    }
}
