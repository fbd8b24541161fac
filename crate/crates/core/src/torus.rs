//! The flat complex torus `C^n / (Z^n + i Z^n)`, its periodic grid, and the
//! Hermitian metric families used throughout the crate.
//!
//! Real coordinates are `(x_1, ..., x_2n)` with `z_j = x_{2j-1} + i x_{2j}`.
//! The grid stores `R^{2n}` samples in row-major order, `x_1` slowest.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::herm::Herm;
use crate::spectral::Spectral;

/// Default cap on the number of grid points (2^24, 128 MiB per field).
pub const DEFAULT_POINT_BUDGET: usize = 1 << 24;

/// Positive-definiteness floor for metric eigenvalues, relative to the
/// largest one.
pub const EPS_METRIC: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub resolution: usize,
}

impl GridSpec {
    pub fn real_dim(&self) -> usize {
        2 * self.n
    }

    pub fn len(&self) -> usize {
        self.resolution.pow(self.real_dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// Quadrature weight of one cell, `h^{2n}`.
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    /// Multi-index of a flat index, slowest axis first.
    pub fn multi_index(&self, mut idx: usize, out: &mut [usize]) {
        let r = self.resolution;
        for slot in out.iter_mut().rev() {
            *slot = idx % r;
            idx /= r;
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .fold(0, |acc, &j| acc * self.resolution + j % self.resolution)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut m = vec![0; self.real_dim()];
        self.multi_index(idx, &mut m);
        m.iter().map(|&j| j as f64 * self.spacing()).collect()
    }

    /// Evaluate `f` at every grid point.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let d = self.real_dim();
        let mut m = vec![0usize; d];
        let mut x = vec![0.0; d];
        let h = self.spacing();
        let values = (0..self.len())
            .map(|i| {
                self.multi_index(i, &mut m);
                for (xa, &ja) in x.iter_mut().zip(&m) {
                    *xa = ja as f64 * h;
                }
                f(&x)
            })
            .collect();
        ScalarField::from_values(*self, values)
    }
}

pub fn make_grid(n: usize, resolution: usize) -> Result<GridSpec> {
    make_grid_with_budget(n, resolution, DEFAULT_POINT_BUDGET)
}

pub fn make_grid_with_budget(n: usize, resolution: usize, budget: usize) -> Result<GridSpec> {
    if !(1..=2).contains(&n) {
        return Err(MageError::DimensionUnsupported(n));
    }
    if resolution < 8 || resolution % 2 != 0 {
        return Err(MageError::ResolutionInvalid {
            resolution,
            reason: "must be even and at least 8".into(),
        });
    }
    let points = (resolution as u128).pow(2 * n as u32);
    if points > budget as u128 {
        return Err(MageError::ResolutionInvalid {
            resolution,
            reason: format!("{points} points exceed the budget of {budget}"),
        });
    }
    Ok(GridSpec { n, resolution })
}

/// One term `amplitude * cos(2π k·x + phase)` of a trigonometric polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub freq: Vec<i32>,
    #[serde(default)]
    pub phase: f64,
}

impl TrigTerm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let arg: f64 = self.freq.iter().zip(x).map(|(&k, &xa)| k as f64 * xa).sum();
        self.amplitude * (2.0 * PI * arg + self.phase).cos()
    }
}

pub fn eval_trig(terms: &[TrigTerm], x: &[f64]) -> f64 {
    terms.iter().map(|t| t.eval(x)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum MetricFamily {
    FlatKahler,
    /// `ω = e^ψ ω₀` with ψ a finite trigonometric polynomial.
    ConformalHermitian {
        #[serde(default)]
        psi_coefficients: Vec<TrigTerm>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyTag {
    FlatKahler,
    ConformalHermitian,
}

#[derive(Debug, Clone)]
pub struct MetricField {
    pub grid: GridSpec,
    pub entries: Vec<Herm>,
    pub det_omega: ScalarField,
    pub family_tag: FamilyTag,
    pub conformal_exponent: Option<ScalarField>,
    pub descriptor: MetricFamily,
}

impl MetricField {
    pub fn is_flat(&self) -> bool {
        self.family_tag == FamilyTag::FlatKahler
    }

    /// `∫ ω^n`, normalized so that the flat torus has unit volume.
    pub fn volume(&self) -> f64 {
        self.det_omega.mean()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.entries
            .iter()
            .map(Herm::max_eigenvalue)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Sup norm of `dω = e^ψ dψ ∧ ω₀`, measured by `e^ψ |∇ψ|`. Identically
    /// zero for the flat family and in complex dimension one, where every
    /// 3-form vanishes.
    pub fn torsion_sup(&self) -> f64 {
        let Some(psi) = &self.conformal_exponent else {
            return 0.0;
        };
        if self.grid.n == 1 {
            return 0.0;
        }
        let spec = Spectral::new(self.grid);
        let grads = spec.gradient(psi.values());
        (0..self.grid.len())
            .map(|i| {
                let g2: f64 = grads.iter().map(|g| g[i] * g[i]).sum();
                psi.values()[i].exp() * g2.sqrt()
            })
            .fold(0.0, f64::max)
    }
}

pub fn make_metric(grid: GridSpec, family: &MetricFamily) -> Result<MetricField> {
    let n = grid.n;
    match family {
        MetricFamily::FlatKahler => Ok(MetricField {
            grid,
            entries: vec![Herm::identity(n); grid.len()],
            det_omega: ScalarField::constant(grid, 1.0),
            family_tag: FamilyTag::FlatKahler,
            conformal_exponent: None,
            descriptor: family.clone(),
        }),
        MetricFamily::ConformalHermitian { psi_coefficients } => {
            for t in psi_coefficients {
                if t.freq.len() != grid.real_dim() {
                    return Err(MageError::InvalidParameter(format!(
                        "psi term has {} frequencies, grid has {} axes",
                        t.freq.len(),
                        grid.real_dim()
                    )));
                }
            }
            let psi = grid.sample(|x| eval_trig(psi_coefficients, x));
            // Positivity is judged relative to the largest conformal factor,
            // so a constant rescaling of ω is always admissible.
            let top = psi.sup();
            let mut entries = Vec::with_capacity(grid.len());
            for (i, &p) in psi.values().iter().enumerate() {
                let s = p.exp();
                if !((p - top).exp() >= EPS_METRIC) || !s.is_finite() || s <= 0.0 {
                    return Err(MageError::MetricNotPositive {
                        index: i,
                        eigenvalue: s,
                    });
                }
                entries.push(Herm::scalar(n, s));
            }
            let det = psi.map(|p| (n as f64 * p).exp());
            Ok(MetricField {
                grid,
                entries,
                det_omega: det,
                family_tag: FamilyTag::ConformalHermitian,
                conformal_exponent: Some(psi),
                descriptor: family.clone(),
            })
        }
    }
}

/// Curvature constants of the metric. `k` and `a` are per-function
/// quantities produced by the regularization module and stored here once
/// computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureConstants {
    pub b: f64,
    pub k: Option<f64>,
    pub a: Option<f64>,
}

impl CurvatureConstants {
    pub fn with_k(mut self, k: f64) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = Some(a);
        self
    }
}

/// Pointwise ratio of `2n dd^c ω` against `ω²`.
///
/// For `ω = e^ψ ω₀` one has `dd^c ω = dd^c(e^ψ) ∧ ω₀`. In dimension two a
/// (1,1)-form with coefficient matrix `a` satisfies `α ∧ ω₀ = ½ tr(a) ω₀²`,
/// so the ratio is `2 tr(dd^c e^ψ) e^{-2ψ}`. The companion bound on
/// `dω ∧ d^c ω` compares 6-forms and is vacuous for `n ≤ 2`.
pub fn ddc_omega_ratio(metric: &MetricField) -> Option<ScalarField> {
    let psi = metric.conformal_exponent.as_ref()?;
    if metric.grid.n < 2 {
        return None;
    }
    let spec = Spectral::new(metric.grid);
    let e_psi = psi.map(f64::exp);
    let hess = spec.hessian(e_psi.values());
    let vals = hess
        .iter()
        .zip(psi.values())
        .map(|(h, &p)| 2.0 * h.trace() * (-2.0 * p).exp())
        .collect();
    Some(ScalarField::from_values(metric.grid, vals))
}

pub fn curvature_constants(metric: &MetricField) -> CurvatureConstants {
    let b = ddc_omega_ratio(metric).map(|r| r.sup_norm()).unwrap_or(0.0);
    CurvatureConstants {
        b,
        k: None,
        a: None,
    }
}
