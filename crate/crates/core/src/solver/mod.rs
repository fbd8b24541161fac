//! Newton solvers for the complex Monge–Ampère equation on the torus.
//!
//! All forms share one residual, written in log form:
//!
//! ```text
//! F(u) = log det(ω + dd^c u) − log det ω − log t(u)
//! ```
//!
//! with target density `t(u) = e^u f` (exponential form), `t = c f`
//! (normalized form, `log c` is an extra unknown) or
//! `t(u) = max(e^{λ(u − f)}, floor)` (penalized form used for envelopes).
//! Each Newton step solves the linearization, scaled row-wise by
//! `det(ω + dd^c u)` so that coefficients stay bounded near the cone
//! boundary, with GMRES preconditioned by the inverse flat Laplacian.

mod audits;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::herm::Herm;
use crate::linsolve::gmres;
use crate::spectral::Spectral;
use crate::torus::MetricField;

pub use audits::{
    check_sub_supersolution, comparison_audits, mass_lower_bound_audit, perturbation_subsolution,
    ComparisonAudit, ComparisonRow, MassAudit, MassCorpus, PerturbationAudit, SubSuperAudit,
};

/// Densities at or below this value switch the residual to plain form.
pub const F_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol_residual: f64,
    pub max_newton_iters: usize,
    pub damping: f64,
    pub continuation_steps: usize,
    pub psh_floor: f64,
    pub f_floor: f64,
    pub gmres_restart: usize,
    pub gmres_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_residual: 1e-10,
            max_newton_iters: 50,
            damping: 1.0,
            continuation_steps: 1,
            psh_floor: 0.0,
            f_floor: F_FLOOR,
            gmres_restart: 40,
            gmres_max_iters: 4000,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(MageError::InvalidParameter(m.to_string()));
        if !(self.tol_residual > 0.0) {
            return bad("tol_residual must be positive");
        }
        if self.max_newton_iters < 1 {
            return bad("max_newton_iters must be at least 1");
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad("damping must lie in (0, 1]");
        }
        if self.continuation_steps < 1 {
            return bad("continuation_steps must be at least 1");
        }
        if self.gmres_restart < 1 {
            return bad("gmres_restart must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub u: ScalarField,
    /// Monge–Ampère constant; 1 for the exponential and penalized forms.
    pub c: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual sup norm before each Newton step and after the last one.
    pub history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
}

/// JSON sidecar written next to a solved field.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSidecar {
    pub c: f64,
    pub residual_sup: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
}

impl SolveResult {
    pub fn sidecar(&self) -> SolveSidecar {
        SolveSidecar {
            c: self.c,
            residual_sup: self.residual_sup,
            iterations: self.iterations,
            converged: self.converged,
            history: self.history.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Target<'a> {
    Exponential {
        f: &'a [f64],
    },
    Normalized {
        f: &'a [f64],
    },
    Penalized {
        f: &'a [f64],
        lambda: f64,
        log_floor: f64,
        plain_below: f64,
    },
}

struct Eval {
    forms: Vec<Herm>,
    residual: Vec<f64>,
    /// Target density at points handled in plain (non-log) form.
    plain: Vec<Option<f64>>,
    /// d(log t)/du per point.
    slope: Vec<f64>,
    merit: f64,
    /// Root mean square of the measured residuals, used by the line search.
    merit_l2: f64,
}

struct Newton<'a> {
    metric: &'a MetricField,
    spec: Spectral,
    cfg: &'a SolverConfig,
    target: Target<'a>,
}

impl<'a> Newton<'a> {
    fn new(metric: &'a MetricField, cfg: &'a SolverConfig, target: Target<'a>) -> Self {
        Newton {
            metric,
            spec: Spectral::new(metric.grid),
            cfg,
            target,
        }
    }

    fn has_constant(&self) -> bool {
        matches!(self.target, Target::Normalized { .. })
    }

    /// Returns `None` when `ω + dd^c u` leaves the cone. Plain rows with a
    /// vanishing target sit on its boundary, so eigenvalues down to
    /// `psh_floor − tol_residual` are admitted there.
    fn eval(&self, u: &[f64], log_c: f64) -> Option<Eval> {
        let hess = self.spec.hessian(u);
        let mut forms = Vec::with_capacity(u.len());
        let slack = self.cfg.psh_floor - self.cfg.tol_residual;
        for (w, h) in self.metric.entries.iter().zip(&hess) {
            let g = w.add(h);
            if !(g.min_eigenvalue() >= slack) {
                return None;
            }
            forms.push(g);
        }
        let mut residual = Vec::with_capacity(u.len());
        let mut plain_targets = Vec::with_capacity(u.len());
        let mut slope = Vec::with_capacity(u.len());
        let mut merit: f64 = 0.0;
        let mut sq = 0.0;
        let floor = self.cfg.f_floor;
        for i in 0..u.len() {
            let ma = forms[i].det() / self.metric.det_omega.values()[i];
            let log_ma = ma.ln();
            // (log target, slope, plain target when the residual is measured
            // without logarithms)
            let (log_t, dt, plain) = match &self.target {
                Target::Exponential { f } => {
                    let fi = f[i];
                    let p = (fi <= floor).then(|| u[i].exp() * fi);
                    (u[i] + fi.max(floor).ln(), 1.0, p)
                }
                Target::Normalized { f } => {
                    let fi = f[i];
                    let p = (fi <= floor).then(|| log_c.exp() * fi);
                    (log_c + fi.max(floor).ln(), 0.0, p)
                }
                Target::Penalized {
                    f,
                    lambda,
                    log_floor,
                    plain_below,
                } => {
                    let s = lambda * (u[i] - f[i]);
                    let (lt, dt) = if s > *log_floor {
                        (s, *lambda)
                    } else {
                        (*log_floor, 0.0)
                    };
                    let p = (lt.exp() <= *plain_below).then(|| lt.exp());
                    (lt, dt, p)
                }
            };
            let r = log_ma - log_t;
            let measured = match plain {
                Some(t) => (ma - t).abs(),
                None => r.abs(),
            };
            if !measured.is_finite() {
                return None;
            }
            merit = merit.max(measured);
            sq += measured * measured;
            // Rows asking to shrink the determinant by a large factor are
            // linearized in plain form: the log linearization overshoots
            // out of the cone there.
            plain_targets.push(plain.or_else(|| (r > 0.5).then(|| log_t.exp())));
            residual.push(r);
            slope.push(dt);
        }
        Some(Eval {
            forms,
            residual,
            plain: plain_targets,
            slope,
            merit,
            merit_l2: (sq / u.len() as f64).sqrt(),
        })
    }

    /// Solves the scaled linearization for the Newton direction. Log rows
    /// are multiplied by `det G`; plain rows linearize `det G − t det ω`.
    fn direction(&self, ev: &Eval, rtol: f64) -> (Vec<f64>, f64, usize) {
        let len = ev.forms.len();
        let adj: Vec<Herm> = ev.forms.iter().map(Herm::adjugate).collect();
        let det_g: Vec<f64> = ev.forms.iter().map(Herm::det).collect();
        let det_w = self.metric.det_omega.values();
        // d(row)/d(log t) per point
        let scale: Vec<f64> = (0..len)
            .map(|i| match ev.plain[i] {
                Some(t) => t * det_w[i],
                None => det_g[i],
            })
            .collect();
        let zeroth: Vec<f64> = scale.iter().zip(&ev.slope).map(|(d, s)| d * s).collect();
        let n = self.metric.grid.n as f64;
        let a_mean = adj.iter().map(Herm::trace).sum::<f64>() / (n * len as f64);
        let levels = shift_levels(&zeroth, a_mean);
        let d_mean = scale.iter().sum::<f64>() / len as f64;
        let bordered = self.has_constant();
        let total = if bordered { len + 1 } else { len };

        let spec = &self.spec;
        let mut apply = |x: &[f64], y: &mut [f64]| {
            let hw = spec.hessian(&x[..len]);
            let dl = if bordered { x[len] } else { 0.0 };
            for i in 0..len {
                y[i] = adj[i].trace_product(&hw[i]) - zeroth[i] * x[i] - scale[i] * dl;
            }
            if bordered {
                y[len] = x[..len].iter().sum::<f64>() / len as f64;
            }
        };
        let mut precond = |r: &[f64], z: &mut [f64]| {
            if bordered {
                let mean_r = r[..len].iter().sum::<f64>() / len as f64;
                let centered: Vec<f64> = r[..len].iter().map(|v| v - mean_r).collect();
                let w = spec.solve_flat(&centered, a_mean, 0.0);
                for i in 0..len {
                    z[i] = w[i] + r[len];
                }
                z[len] = -mean_r / d_mean;
            } else if levels.len() == 1 {
                z.copy_from_slice(&spec.solve_flat(r, a_mean, levels[0].0));
            } else {
                for (m, points) in &levels {
                    let w = spec.solve_flat(r, a_mean, *m);
                    for &i in points {
                        z[i] = w[i];
                    }
                }
            }
        };
        let mut b: Vec<f64> = (0..len)
            .map(|i| match ev.plain[i] {
                Some(t) => t * det_w[i] - det_g[i],
                None => -ev.residual[i] * det_g[i],
            })
            .collect();
        if bordered {
            b.push(0.0);
        }
        let mut x = vec![0.0; total];
        let out = gmres(
            &mut apply,
            &mut precond,
            &b,
            &mut x,
            rtol,
            self.cfg.gmres_restart,
            self.cfg.gmres_max_iters,
        );
        let dl = if bordered { x.pop().unwrap() } else { 0.0 };
        (x, dl, out.iterations)
    }

    fn run(&self, mut u: Vec<f64>, mut log_c: f64) -> (Vec<f64>, f64, SolveStats) {
        let mut stats = SolveStats::default();
        let Some(mut ev) = self.eval(&u, log_c) else {
            stats.merit = f64::INFINITY;
            stats.history.push(f64::INFINITY);
            return (u, log_c, stats);
        };
        loop {
            stats.history.push(ev.merit);
            stats.merit = ev.merit;
            if ev.merit <= self.cfg.tol_residual {
                stats.converged = true;
                break;
            }
            if stats.iterations >= self.cfg.max_newton_iters {
                break;
            }
            // Inexact directions stall the penalized stages; solve tightly.
            let rtol = 1e-10;
            let (w, dl, lin) = self.direction(&ev, rtol);
            stats.linear.push(lin);
            debug!("newton {}: merit {:e}, {lin} linear iterations", stats.iterations, ev.merit);
            stats.iterations += 1;
            let mut alpha = self.cfg.damping;
            let mut accepted = None;
            while alpha >= 1.0 / 4096.0 {
                let trial: Vec<f64> = u.iter().zip(&w).map(|(a, b)| a + alpha * b).collect();
                let trial_c = log_c + alpha * dl;
                if let Some(next) = self.eval(&trial, trial_c) {
                    let decrease = 1.0 - 1e-4 * alpha;
                    if next.merit_l2 <= decrease * ev.merit_l2
                        || next.merit <= decrease * ev.merit
                        || next.merit <= self.cfg.tol_residual
                    {
                        accepted = Some((trial, trial_c, next));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((nu, nc, next)) => {
                    u = nu;
                    log_c = nc;
                    ev = next;
                }
                None => break,
            }
        }
        (u, log_c, stats)
    }
}

/// Shifts for the flat preconditioner `(a·tr dd^c − m)^{-1}` with the
/// points each one serves. Strongly varying zeroth-order coefficients get
/// several shifts, spaced by factors of four, each applied where the local
/// coefficient is closest.
fn shift_levels(zeroth: &[f64], a: f64) -> Vec<(f64, Vec<usize>)> {
    let len = zeroth.len();
    let mean = zeroth.iter().sum::<f64>() / len as f64;
    let top = zeroth.iter().copied().fold(0.0, f64::max);
    // below this the Laplacian dominates every non-constant mode
    let low = 2.0 * a;
    if top <= 4.0 * mean.max(low) {
        return vec![(mean, (0..len).collect())];
    }
    let mut shifts = vec![top];
    while *shifts.last().unwrap() / 4.0 >= low {
        let next = shifts.last().unwrap() / 4.0;
        shifts.push(next);
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); shifts.len() + 1];
    for (i, &zi) in zeroth.iter().enumerate() {
        let k = if zi < low {
            shifts.len()
        } else {
            ((top / zi).log(4.0).round() as usize).min(shifts.len() - 1)
        };
        groups[k].push(i);
    }
    let rest = &groups[shifts.len()];
    let rest_mean = if rest.is_empty() {
        0.0
    } else {
        rest.iter().map(|&i| zeroth[i]).sum::<f64>() / rest.len() as f64
    };
    shifts.push(rest_mean);
    shifts
        .into_iter()
        .zip(groups)
        .filter(|(_, g)| !g.is_empty())
        .collect()
}

#[derive(Debug, Default)]
struct SolveStats {
    iterations: usize,
    converged: bool,
    merit: f64,
    history: Vec<f64>,
    linear: Vec<usize>,
}

fn validate_density(f: &ScalarField, metric: &MetricField) -> Result<()> {
    if f.grid() != metric.grid {
        return Err(MageError::GridMismatch);
    }
    for (index, &value) in f.values().iter().enumerate() {
        if !value.is_finite() || value < -1e-12 {
            return Err(MageError::DensityInvalid { index, value });
        }
    }
    let mass: f64 = f
        .values()
        .iter()
        .zip(metric.det_omega.values())
        .map(|(a, b)| a.max(0.0) * b)
        .sum();
    if !(mass > 0.0) {
        return Err(MageError::InvalidParameter("density has no mass".into()));
    }
    let spec = Spectral::new(f.grid());
    let hi = spec.high_band_fraction(f.values());
    if hi > 1e-4 {
        warn!("density carries {hi:.2e} of its energy above R/4; the grid may not resolve it");
    }
    Ok(())
}

fn homotopy(f: &ScalarField, steps: usize) -> Vec<Vec<f64>> {
    let mean = f.mean();
    (1..=steps)
        .map(|k| {
            let t = k as f64 / steps as f64;
            f.values()
                .iter()
                .map(|&v| ((1.0 - t) * mean + t * v).max(0.0))
                .collect()
        })
        .collect()
}

fn finish(grid_u: ScalarField, c: f64, stats: SolveStats) -> Result<SolveResult> {
    let res = SolveResult {
        u: grid_u,
        c,
        residual_sup: stats.merit,
        iterations: stats.iterations,
        converged: stats.converged,
        history: stats.history,
        linear_iterations: stats.linear,
    };
    if res.converged {
        Ok(res)
    } else {
        Err(MageError::NotConverged(Box::new(res)))
    }
}

fn merge(into: &mut SolveStats, step: SolveStats) {
    into.iterations += step.iterations;
    into.converged = step.converged;
    into.merit = step.merit;
    into.history.extend(step.history);
    into.linear.extend(step.linear);
}

/// Solves `(ω + dd^c u)^n = e^u f ω^n` from `u ≡ 0`.
pub fn solve_exponential(
    f: &ScalarField,
    metric: &MetricField,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    solve_exponential_from(f, metric, cfg, &ScalarField::zeros(metric.grid))
}

pub fn solve_exponential_from(
    f: &ScalarField,
    metric: &MetricField,
    cfg: &SolverConfig,
    initial: &ScalarField,
) -> Result<SolveResult> {
    cfg.validate()?;
    validate_density(f, metric)?;
    if initial.grid() != metric.grid {
        return Err(MageError::GridMismatch);
    }
    let mut u = initial.values().to_vec();
    let mut stats = SolveStats::default();
    for ft in homotopy(f, cfg.continuation_steps) {
        let newton = Newton::new(metric, cfg, Target::Exponential { f: &ft });
        let (nu, _, st) = newton.run(u, 0.0);
        u = nu;
        let ok = st.converged;
        merge(&mut stats, st);
        if !ok {
            break;
        }
    }
    finish(ScalarField::from_values(metric.grid, u), 1.0, stats)
}

/// Solves `(ω + dd^c u)^n = c f ω^n` with `sup u = 0`.
pub fn solve_normalized(
    f: &ScalarField,
    metric: &MetricField,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    cfg.validate()?;
    validate_density(f, metric)?;
    let mut u = vec![0.0; metric.grid.len()];
    let mass: f64 = f
        .values()
        .iter()
        .zip(metric.det_omega.values())
        .map(|(a, b)| a.max(0.0) * b)
        .sum::<f64>()
        * metric.grid.cell_volume();
    let mut log_c = (metric.volume() / mass).ln();
    let mut stats = SolveStats::default();
    for ft in homotopy(f, cfg.continuation_steps) {
        let newton = Newton::new(metric, cfg, Target::Normalized { f: &ft });
        let (nu, nc, st) = newton.run(u, log_c);
        u = nu;
        log_c = nc;
        let ok = st.converged;
        merge(&mut stats, st);
        if !ok {
            break;
        }
    }
    let top = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    u.iter_mut().for_each(|v| *v -= top);
    finish(ScalarField::from_values(metric.grid, u), log_c.exp(), stats)
}

pub(crate) fn solve_penalized(
    f: &ScalarField,
    metric: &MetricField,
    lambda: f64,
    log_floor: f64,
    plain_below: f64,
    cfg: &SolverConfig,
    initial: &ScalarField,
) -> Result<SolveResult> {
    cfg.validate()?;
    let newton = Newton::new(
        metric,
        cfg,
        Target::Penalized {
            f: f.values(),
            lambda,
            log_floor,
            plain_below,
        },
    );
    let (u, _, stats) = newton.run(initial.values().to_vec(), 0.0);
    finish(ScalarField::from_values(metric.grid, u), 1.0, stats)
}

#[cfg(test)]
mod tests;
