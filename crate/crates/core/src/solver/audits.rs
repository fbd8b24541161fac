//! Numerical audits of the comparison-type principles on solved instances.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::ScalarField;
use crate::spectral::{lp_norm, ma_density};
use crate::torus::{CurvatureConstants, MetricField};

use super::{solve_exponential, solve_normalized, SolverConfig};

const AUDIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubSuperAudit {
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
    /// Most negative value of `ω_u^n − e^{λ(u−v)} ω_v^n` (as densities).
    pub hypothesis_margin: f64,
    pub hypothesis_worst_point: usize,
    /// `sup(u − v)`.
    pub max_excess: f64,
    pub conclusion_worst_point: usize,
    pub passed: bool,
}

/// Checks the implication `ω_u^n ≥ e^{λ(u−v)} ω_v^n ⇒ u ≤ v`.
pub fn check_sub_supersolution(
    u: &ScalarField,
    v: &ScalarField,
    lambda: f64,
    metric: &MetricField,
) -> Result<SubSuperAudit> {
    let ru = ma_density(u, metric)?;
    let rv = ma_density(v, metric)?;
    let diff = u.sub(v)?;
    let (mut margin, mut hw) = (f64::INFINITY, 0);
    for i in 0..u.len() {
        let gap = ru.values()[i] - (lambda * diff.values()[i]).exp() * rv.values()[i];
        if gap < margin {
            margin = gap;
            hw = i;
        }
    }
    let cw = diff.argmax();
    let max_excess = diff.values()[cw];
    let hypothesis_holds = margin >= -AUDIT_TOL;
    let conclusion_holds = max_excess <= AUDIT_TOL;
    Ok(SubSuperAudit {
        hypothesis_holds,
        conclusion_holds,
        hypothesis_margin: margin,
        hypothesis_worst_point: hw,
        max_excess,
        conclusion_worst_point: cw,
        passed: !hypothesis_holds || conclusion_holds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationAudit {
    pub lp_diff: f64,
    pub eps: f64,
    pub k: f64,
    pub c_h: f64,
    /// `None` when `ε > ½`, where the construction does not apply.
    pub audit: Option<SubSuperAudit>,
    pub sup_u_minus_v: f64,
}

/// Builds `φ = (1−ε)u + ερ − Kε + n log(1−ε)` from solutions `u`, `v` of
/// the exponential equations with densities `f`, `g`, where `ρ` solves
/// `ω_ρ^n = c_h (|f−g|/‖f−g‖_p + 1) ω^n`, `sup ρ = 0`, `K = sup(−u)` and
/// `ε = e^{(sup u − ln c_h)/n} ‖f−g‖_p^{1/n}`, then audits `φ` as a
/// subsolution against `v`.
pub fn perturbation_subsolution(
    f: &ScalarField,
    g: &ScalarField,
    p: f64,
    metric: &MetricField,
    cfg: &SolverConfig,
) -> Result<PerturbationAudit> {
    let n = metric.grid.n as f64;
    let u = solve_exponential(f, metric, cfg)?.u;
    let v = solve_exponential(g, metric, cfg)?.u;
    let diff = f.sub(g)?;
    let lp_diff = lp_norm(&diff, p, metric)?;
    let sup_u_minus_v = u.sub(&v)?.sup();
    if lp_diff == 0.0 {
        return Ok(PerturbationAudit {
            lp_diff,
            eps: 0.0,
            k: 0.0,
            c_h: f64::NAN,
            audit: Some(check_sub_supersolution(&u, &v, 1.0, metric)?),
            sup_u_minus_v,
        });
    }
    let h = diff.map(|d| d.abs() / lp_diff + 1.0);
    let rho_sol = solve_normalized(&h, metric, cfg)?;
    let c_h = rho_sol.c;
    let eps = ((u.sup() - c_h.ln()) / n).exp() * lp_diff.powf(1.0 / n);
    let k = (-u.inf()).max(0.0);
    let audit = if eps <= 0.5 {
        let shift = -k * eps + n * (1.0 - eps).ln();
        let phi = u.zip_map(&rho_sol.u, |a, b| (1.0 - eps) * a + eps * b + shift)?;
        Some(check_sub_supersolution(&phi, &v, 1.0, metric)?)
    } else {
        None
    };
    Ok(PerturbationAudit {
        lp_diff,
        eps,
        k,
        c_h,
        audit,
        sup_u_minus_v,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub eps: f64,
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// Fraction of grid points in the sublevel set.
    pub set_fraction: f64,
    /// Smallest `C` with `lhs ≤ (1 + C s/ε^n) rhs`; 0 in the Kähler rows.
    pub empirical_c: f64,
    pub vacuous: bool,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonAudit {
    pub kahler: bool,
    pub rows: Vec<ComparisonRow>,
    pub empirical_c: f64,
    pub violations: usize,
    /// `ω_u^n({u < v}) = 0 ⇒ u ≥ v`.
    pub domination_holds: bool,
    pub passed: bool,
}

fn masked_mass(density: &ScalarField, metric: &MetricField, mask: &[bool]) -> f64 {
    density
        .values()
        .iter()
        .zip(metric.det_omega.values())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((a, b), _)| a * b)
        .sum::<f64>()
        * metric.grid.cell_volume()
}

/// Sublevel-set mass comparisons.
///
/// With `B = 0` the Kähler inequality `∫_{u<v+s} ω_{v}^n ≤ ∫_{u<v+s} ω_u^n`
/// is checked for each `s` in `s_list` (plus `s = 0`). Otherwise, for each
/// `ε`, the modified inequality on `{u < (1−ε)v + m_ε + s}` is evaluated
/// and the smallest admissible constant recorded; `s` defaults to
/// `ε³/(32B)` when `s_list` is empty and entries violating
/// `s < ε³/(16B)` are skipped.
pub fn comparison_audits(
    u: &ScalarField,
    v: &ScalarField,
    metric: &MetricField,
    constants: &CurvatureConstants,
    eps_list: &[f64],
    s_list: &[f64],
) -> Result<ComparisonAudit> {
    let n = metric.grid.n as i32;
    let len = u.len() as f64;
    let ru = ma_density(u, metric)?;
    let kahler = constants.b <= 1e-10;
    let mut rows = Vec::new();
    if kahler {
        let rv = ma_density(v, metric)?;
        let mut shifts = vec![0.0];
        shifts.extend(s_list.iter().copied().filter(|&s| s != 0.0));
        for s in shifts {
            let mask: Vec<bool> = u
                .values()
                .iter()
                .zip(v.values())
                .map(|(a, b)| *a < b + s)
                .collect();
            let count = mask.iter().filter(|&&m| m).count();
            let lhs = masked_mass(&rv, metric, &mask);
            let rhs = masked_mass(&ru, metric, &mask);
            rows.push(ComparisonRow {
                eps: 0.0,
                s,
                lhs,
                rhs,
                set_fraction: count as f64 / len,
                empirical_c: 0.0,
                vacuous: count == 0,
                violated: lhs > rhs * (1.0 + AUDIT_TOL) + 1e-12,
            });
        }
    } else {
        for &eps in eps_list {
            let scaled = v.scale(1.0 - eps);
            let rv = ma_density(&scaled, metric)?;
            let m_eps = u.sub(&scaled)?.inf();
            let s_max = eps.powi(3) / (16.0 * constants.b);
            let candidates: Vec<f64> = if s_list.is_empty() {
                vec![eps.powi(3) / (32.0 * constants.b)]
            } else {
                s_list
                    .iter()
                    .copied()
                    .filter(|&s| s > 0.0 && s < s_max)
                    .collect()
            };
            for s in candidates {
                let mask: Vec<bool> = u
                    .values()
                    .iter()
                    .zip(scaled.values())
                    .map(|(a, b)| *a < b + m_eps + s)
                    .collect();
                let count = mask.iter().filter(|&&m| m).count();
                let lhs = masked_mass(&rv, metric, &mask);
                let rhs = masked_mass(&ru, metric, &mask);
                let ratio = if rhs > 0.0 { lhs / rhs } else { f64::INFINITY };
                let empirical_c = if count == 0 {
                    0.0
                } else {
                    (ratio - 1.0).max(0.0) * eps.powi(n) / s
                };
                rows.push(ComparisonRow {
                    eps,
                    s,
                    lhs,
                    rhs,
                    set_fraction: count as f64 / len,
                    empirical_c,
                    vacuous: count == 0,
                    violated: !empirical_c.is_finite(),
                });
            }
        }
    }
    let lower: Vec<bool> = u
        .values()
        .iter()
        .zip(v.values())
        .map(|(a, b)| a < b)
        .collect();
    let dom_mass = masked_mass(&ru, metric, &lower);
    let domination_holds = dom_mass > 0.0 || u.sub(v)?.inf() >= -AUDIT_TOL;
    let violations = rows.iter().filter(|r| r.violated).count();
    let empirical_c = rows.iter().map(|r| r.empirical_c).fold(0.0, f64::max);
    Ok(ComparisonAudit {
        kahler,
        rows,
        empirical_c,
        violations,
        domination_holds,
        passed: violations == 0 && domination_holds && empirical_c.is_finite(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassAudit {
    /// `∫ c f ω^n`.
    pub mass: f64,
    /// `‖c f‖_p`.
    pub lp_norm: f64,
}

/// Mass and `L^p` norm of an admissible density `c f`.
pub fn mass_lower_bound_audit(cf: &ScalarField, metric: &MetricField, p: f64) -> Result<MassAudit> {
    Ok(MassAudit {
        mass: lp_norm(cf, 1.0, metric)?,
        lp_norm: lp_norm(cf, p, metric)?,
    })
}

/// Accumulates mass audits and Laplacian masses across a corpus.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MassCorpus {
    pub records: Vec<(MassAudit, f64)>,
}

impl MassCorpus {
    pub fn record(&mut self, audit: MassAudit, laplacian_mass: f64) {
        self.records.push((audit, laplacian_mass));
    }

    /// Smallest observed mass among densities with `‖cf‖_p ≤ a0`.
    pub fn min_mass(&self, a0: f64) -> Option<f64> {
        self.records
            .iter()
            .filter(|(a, _)| a.lp_norm <= a0)
            .map(|(a, _)| a.mass)
            .reduce(f64::min)
    }

    /// Smallest `C ≥ 1` with every Laplacian mass in `[1/C, C]`.
    pub fn laplacian_band(&self) -> f64 {
        self.records
            .iter()
            .map(|(_, l)| l.max(1.0 / l))
            .fold(1.0, f64::max)
    }
}
