use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::herm::Herm;
use crate::torus::{GridSpec, MetricField};

use super::Spectral;

/// Tolerance of the discrete ω-psh cone test.
pub const EPS_PSH: f64 = 1e-8;

/// Pointwise coefficient matrices of `dd^c u`.
#[derive(Debug, Clone)]
pub struct HessianField {
    pub grid: GridSpec,
    pub entries: Vec<Herm>,
}

impl HessianField {
    pub fn trace_mean(&self) -> f64 {
        self.entries.iter().map(Herm::trace).sum::<f64>() / self.entries.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|h| {
                let (lo, hi) = h.eigenvalues();
                lo.abs().max(hi.abs())
            })
            .fold(0.0, f64::max)
    }
}

pub fn ddc(u: &ScalarField) -> HessianField {
    let grid = u.grid();
    HessianField {
        grid,
        entries: Spectral::new(grid).hessian(u.values()),
    }
}

/// `ω + dd^c u` at every point.
pub fn omega_u(u: &ScalarField, metric: &MetricField) -> Result<Vec<Herm>> {
    if u.grid() != metric.grid {
        return Err(MageError::GridMismatch);
    }
    let h = ddc(u);
    Ok(metric
        .entries
        .iter()
        .zip(&h.entries)
        .map(|(w, hh)| w.add(hh))
        .collect())
}

fn check_cone(forms: &[Herm], eps: f64) -> Result<()> {
    let (index, eigenvalue) = forms.iter().map(Herm::min_eigenvalue).enumerate().fold(
        (0, f64::INFINITY),
        |best, (i, e)| if e < best.1 { (i, e) } else { best },
    );
    if eigenvalue < -eps {
        return Err(MageError::NotOmegaPsh { index, eigenvalue });
    }
    Ok(())
}

/// Density of `(ω + dd^c u)^n` against `ω^n`.
pub fn ma_density(u: &ScalarField, metric: &MetricField) -> Result<ScalarField> {
    ma_density_with_tol(u, metric, EPS_PSH)
}

pub fn ma_density_with_tol(
    u: &ScalarField,
    metric: &MetricField,
    eps_psh: f64,
) -> Result<ScalarField> {
    let forms = omega_u(u, metric)?;
    check_cone(&forms, eps_psh)?;
    let vals = forms
        .iter()
        .zip(metric.det_omega.values())
        .map(|(g, &dw)| g.det().max(0.0) / dw)
        .collect();
    Ok(ScalarField::from_values(u.grid(), vals))
}

/// `(∫ |f|^p ω^n)^{1/p}` by the equal-weight periodic rule. Also accepts
/// `0 < p < 1`, where the result is only a quasi-norm.
pub fn lp_norm(f: &ScalarField, p: f64, metric: &MetricField) -> Result<f64> {
    if f.grid() != metric.grid {
        return Err(MageError::GridMismatch);
    }
    if !(p > 0.0) || !p.is_finite() {
        return Err(MageError::InvalidParameter(format!(
            "Lebesgue exponent {p}"
        )));
    }
    let s: f64 = f
        .values()
        .iter()
        .zip(metric.det_omega.values())
        .map(|(&v, &dw)| v.abs().powf(p) * dw)
        .sum::<f64>()
        * f.grid().cell_volume();
    Ok(s.powf(1.0 / p))
}

/// `∫ ω_u ∧ ω^{n-1}` against the flat measure: the density is
/// `(n−1)! det ω tr(ω^{-1} ω_u)`.
pub fn laplacian_mass(u: &ScalarField, metric: &MetricField) -> Result<f64> {
    let forms = omega_u(u, metric)?;
    check_cone(&forms, EPS_PSH)?;
    // (n-1)! is 1 for n <= 2
    let s: f64 = forms
        .iter()
        .zip(&metric.entries)
        .zip(metric.det_omega.values())
        .map(|((g, w), &dw)| dw * w.inverse().trace_product(g))
        .sum();
    Ok(s * metric.grid.cell_volume())
}

/// `∫ ω_u^n`, normalized like the volume of ω.
pub fn total_ma_mass(u: &ScalarField, metric: &MetricField) -> Result<f64> {
    let rho = ma_density(u, metric)?;
    Ok(rho
        .values()
        .iter()
        .zip(metric.det_omega.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * metric.grid.cell_volume())
}

/// Largest pointwise violation of the mixed Monge–Ampère inequality
/// `ρ((1−s)u + sv)^{1/n} ≥ (1−s) ρ(u)^{1/n} + s ρ(v)^{1/n}`; non-positive
/// when the inequality holds.
pub fn mixed_ma_defect(
    u: &ScalarField,
    v: &ScalarField,
    s: f64,
    metric: &MetricField,
) -> Result<f64> {
    let n = metric.grid.n as f64;
    let ru = ma_density(u, metric)?;
    let rv = ma_density(v, metric)?;
    let w = u.zip_map(v, |a, b| (1.0 - s) * a + s * b)?;
    let rw = ma_density(&w, metric)?;
    Ok((0..ru.len())
        .map(|i| {
            (1.0 - s) * ru.values()[i].powf(1.0 / n) + s * rv.values()[i].powf(1.0 / n)
                - rw.values()[i].powf(1.0 / n)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}
