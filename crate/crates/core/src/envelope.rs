//! ω-psh envelopes `P(f) = sup{φ ω-psh : φ ≤ f}` by penalization, and their
//! Hölder regularity.
//!
//! Each stage solves `ω_u^n = max(e^{λ(u−f)}, floor) ω^n`, warm-started from
//! the previous one. The floor keeps the target representable far below
//! the obstacle; the final field is shifted down so that `P ≤ f` holds
//! exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::solver::{solve_penalized, SolverConfig};
use crate::spectral::{
    fit_exponent, hoelder_window, ma_density, modulus_ladder, omega_u, PowerFit,
};
use crate::torus::{make_grid, GridSpec, MetricField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// Increasing penalization parameters.
    pub lambda_schedule: Vec<f64>,
    /// Sup-norm agreement required between the final two stages.
    pub stage_tol: f64,
    pub contact_tol: f64,
    pub defect_tol: f64,
    /// Natural log of the smallest admissible target density.
    pub log_floor: f64,
    /// Targets at or below this are measured without logarithms.
    pub plain_below: f64,
    pub solver: SolverConfig,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig {
            lambda_schedule: (0..=12).map(|k| 4f64.powi(k)).collect(),
            stage_tol: 1e-4,
            contact_tol: 1e-3,
            defect_tol: 1e-4,
            log_floor: (1e-6f64).ln(),
            plain_below: 1e-3,
            solver: SolverConfig {
                tol_residual: 1e-7,
                ..SolverConfig::default()
            },
        }
    }
}

impl EnvelopeConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.lambda_schedule;
        if s.is_empty() || s.iter().any(|l| !(*l > 0.0)) || s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MageError::InvalidParameter(
                "lambda_schedule must be positive and strictly increasing".into(),
            ));
        }
        if *s.last().unwrap() < 1e3 {
            return Err(MageError::InvalidParameter(
                "lambda_schedule must reach 1e3".into(),
            ));
        }
        self.solver.validate()
    }
}

#[derive(Clone, PartialEq)]
pub struct EnvelopeResult {
    pub p: ScalarField,
    pub lambda_final: f64,
    /// `P ≥ f − contact_tol`.
    pub contact_mask: Vec<bool>,
    /// Most negative eigenvalue of `ω + dd^c P`.
    pub defect: f64,
    /// `sup` of the Monge–Ampère density off the contact set.
    pub offcontact_ma_sup: f64,
    /// Downward shift applied to the last stage to enforce `P ≤ f`.
    pub shift: f64,
    /// `sup |u_{λ_k} − u_{λ_{k−1}}|` per stage after the first.
    pub stage_changes: Vec<f64>,
    /// `max(u_{λ_k} − u_{λ_{k−1}})` over the schedule.
    pub monotonicity_excess: f64,
    pub newton_iterations: usize,
}

impl std::fmt::Debug for EnvelopeResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnvelopeResult")
            .field("p", &self.p)
            .field("lambda_final", &self.lambda_final)
            .field("contact_fraction", &self.contact_fraction())
            .field("defect", &self.defect)
            .field("offcontact_ma_sup", &self.offcontact_ma_sup)
            .field("shift", &self.shift)
            .field("stage_changes", &self.stage_changes)
            .finish()
    }
}

impl EnvelopeResult {
    pub fn contact_fraction(&self) -> f64 {
        self.contact_mask.iter().filter(|&&c| c).count() as f64 / self.contact_mask.len() as f64
    }
}

/// Envelope of `f` through the penalization schedule of `cfg`.
pub fn envelope(
    f: &ScalarField,
    metric: &MetricField,
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeResult> {
    cfg.validate()?;
    if f.grid() != metric.grid {
        return Err(MageError::GridMismatch);
    }
    if let Some(i) = f.values().iter().position(|v| !v.is_finite()) {
        return Err(MageError::NonFinite(i));
    }
    let mut u = ScalarField::constant(f.grid(), f.inf());
    let mut last: Option<EnvelopeResult> = None;
    let mut changes = Vec::new();
    let mut mono: f64 = 0.0;
    let mut iterations = 0;
    let mut reached = 0.0;
    for (k, &lambda) in cfg.lambda_schedule.iter().enumerate() {
        let (next, its) = penalized_stage(f, metric, reached, lambda, cfg, &u)
            .map_err(|failed| MageError::EnvelopeStageFailed {
                lambda: failed,
                last: last.clone().map(Box::new),
            })?;
        iterations += its;
        reached = lambda;
        if k > 0 {
            let d = next.sub(&u)?;
            changes.push(d.sup_norm());
            mono = mono.max(d.sup());
        }
        u = next;
        let mut snapshot = finalize(f, &u, metric, lambda, cfg)?;
        snapshot.stage_changes = changes.clone();
        snapshot.monotonicity_excess = mono;
        snapshot.newton_iterations = iterations;
        last = Some(snapshot);
    }
    let result = last.expect("schedule is non-empty");
    if let Some(&c) = changes.last() {
        if c > cfg.stage_tol {
            return Err(MageError::ScheduleTooShort(c));
        }
    }
    Ok(result)
}

/// Halvings of `log λ` allowed between two scheduled stages.
const MAX_SUBDIVISIONS: u32 = 5;

/// Advances the penalized solution from `from` to `to`, inserting geometric
/// midpoints when a stage fails. Returns the solution and the Newton
/// iterations spent, or the `λ` that failed.
fn penalized_stage(
    f: &ScalarField,
    metric: &MetricField,
    from: f64,
    to: f64,
    cfg: &EnvelopeConfig,
    start: &ScalarField,
) -> std::result::Result<(ScalarField, usize), f64> {
    let mut u = start.clone();
    let mut iterations = 0;
    let mut reached = from;
    let mut pending = vec![(to, 0u32)];
    while let Some((lambda, depth)) = pending.pop() {
        let stage = solve_penalized(
            f,
            metric,
            lambda,
            cfg.log_floor,
            cfg.plain_below,
            &cfg.solver,
            &u,
        );
        match stage {
            Ok(res) => {
                iterations += res.iterations;
                u = res.u;
                reached = lambda;
            }
            Err(MageError::NotConverged(r)) if reached > 0.0 && depth < MAX_SUBDIVISIONS => {
                log::debug!("envelope stage λ = {lambda} failed: {:?}", r.history);
                iterations += r.iterations;
                pending.push((lambda, depth + 1));
                pending.push(((reached * lambda).sqrt(), depth + 1));
            }
            Err(_) => return Err(lambda),
        }
    }
    Ok((u, iterations))
}

fn finalize(
    f: &ScalarField,
    u: &ScalarField,
    metric: &MetricField,
    lambda: f64,
    cfg: &EnvelopeConfig,
) -> Result<EnvelopeResult> {
    let shift = u.sub(f)?.sup().max(0.0);
    let p = u.shift(-shift);
    let contact_mask: Vec<bool> = p
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| *a >= b - cfg.contact_tol)
        .collect();
    let defect = omega_u(&p, metric)?
        .iter()
        .map(|g| g.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let rho = ma_density(&p, metric)?;
    let offcontact_ma_sup = rho
        .values()
        .iter()
        .zip(&contact_mask)
        .filter(|(_, &c)| !c)
        .map(|(r, _)| *r)
        .fold(0.0, f64::max);
    Ok(EnvelopeResult {
        p,
        lambda_final: lambda,
        contact_mask,
        defect,
        offcontact_ma_sup,
        shift,
        stage_changes: Vec::new(),
        monotonicity_excess: 0.0,
        newton_iterations: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeHoelderReport {
    pub deltas: Vec<f64>,
    pub tau_f: Vec<f64>,
    pub tau_p: Vec<f64>,
    pub alpha_nominal: f64,
    pub fit_f: Option<PowerFit>,
    pub fit_p: Option<PowerFit>,
    /// `sup_δ τ_P(δ)/τ_f(δ)`.
    pub ratio_sup: f64,
    pub passed: bool,
}

fn fit_or_flat(deltas: &[f64], taus: &[f64]) -> Result<Option<PowerFit>> {
    if taus.iter().all(|&t| t <= 1e-14) {
        return Ok(None);
    }
    let pts: Vec<(f64, f64)> = deltas.iter().copied().zip(taus.iter().copied()).collect();
    fit_exponent(&pts).map(Some)
}

/// Moduli of `f` and of its envelope on `deltas`; passes when the envelope
/// does not lose more than 0.05 of the fitted exponent.
pub fn envelope_hoelder_report(
    f: &ScalarField,
    alpha: f64,
    metric: &MetricField,
    deltas: &[f64],
    cfg: &EnvelopeConfig,
) -> Result<(EnvelopeHoelderReport, EnvelopeResult)> {
    let env = envelope(f, metric, cfg)?;
    let tau_f = modulus_ladder(f, deltas)?;
    let tau_p = modulus_ladder(&env.p, deltas)?;
    let fit_f = fit_or_flat(deltas, &tau_f)?;
    let fit_p = fit_or_flat(deltas, &tau_p)?;
    let ratio_sup = tau_p
        .iter()
        .zip(&tau_f)
        .filter(|(_, &tf)| tf > 0.0)
        .map(|(tp, tf)| tp / tf)
        .fold(0.0, f64::max);
    let passed = match (&fit_f, &fit_p) {
        (_, None) => true,
        (Some(a), Some(b)) => b.slope >= a.slope - 0.05,
        (None, Some(_)) => false,
    };
    Ok((
        EnvelopeHoelderReport {
            deltas: deltas.to_vec(),
            tau_f,
            tau_p,
            alpha_nominal: alpha,
            fit_f,
            fit_p,
            ratio_sup,
            passed,
        },
        env,
    ))
}

/// Lacunary series `Σ_k 2^{−βk} cos(2π 2^k x₁ + φ_k)` over `2^k ≤ R/4`,
/// phases drawn from `seed`. The truncated series measures below its
/// nominal exponent on the Hölder window, so the decay `β` is calibrated
/// by bisection until the fitted exponent matches `alpha`. Fails unless it
/// lands within 0.05.
pub fn hoelder_synthesizer(alpha: f64, seed: u64, grid: GridSpec) -> Result<ScalarField> {
    if !(alpha > 0.2 && alpha < 0.9 + 1e-12) {
        return Err(MageError::InvalidParameter(format!(
            "alpha = {alpha} outside (0.2, 0.9]"
        )));
    }
    let line = make_grid(1, grid.resolution)?;
    let deltas = hoelder_window(line);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = (f64::NAN, 0.0, Vec::new());
    for _ in 0..SYNTH_DRAWS {
        let phases = draw_phases(&mut rng, grid.resolution);
        let measure = |beta: f64| -> Result<f64> {
            let taus = modulus_ladder(&lacunary_series(beta, &phases, line), &deltas)?;
            Ok(fit_or_flat(&deltas, &taus)?.map_or(f64::NAN, |f| f.slope))
        };
        if deltas.len() < 2 {
            break;
        }
        let (mut lo, mut hi) = (0.0, SYNTH_MAX_DECAY);
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            if measure(mid)? < alpha {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let beta = 0.5 * (lo + hi);
        let measured = measure(beta)?;
        if (measured - alpha).abs() <= 0.05 {
            return Ok(lacunary_series(beta, &phases, grid));
        }
        if !((best.0 - alpha).abs() <= (measured - alpha).abs()) {
            best = (measured, beta, phases);
        }
    }
    Err(MageError::ExponentNotRealized {
        requested: alpha,
        measured: best.0,
    })
}

const SYNTH_DRAWS: usize = 16;
const SYNTH_MAX_DECAY: f64 = 6.0;

fn draw_phases(rng: &mut ChaCha8Rng, resolution: usize) -> Vec<f64> {
    let mut phases = Vec::new();
    while (1usize << phases.len()) <= resolution / 4 {
        phases.push(rng.gen_range(0.0..std::f64::consts::TAU));
    }
    phases
}

/// The uncalibrated series with decay `alpha` and phases drawn from `seed`.
pub fn lacunary(alpha: f64, seed: u64, grid: GridSpec) -> ScalarField {
    let phases = draw_phases(&mut ChaCha8Rng::seed_from_u64(seed), grid.resolution);
    lacunary_series(alpha, &phases, grid)
}

fn lacunary_series(decay: f64, phases: &[f64], grid: GridSpec) -> ScalarField {
    grid.sample(|x| {
        phases
            .iter()
            .enumerate()
            .map(|(k, ph)| {
                let freq = (1u64 << k) as f64;
                2f64.powf(-decay * k as f64) * (std::f64::consts::TAU * freq * x[0] + ph).cos()
            })
            .sum()
    })
}
