//! Density generators and perturbations used by the sweeps.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::spectral::lp_norm;
use crate::torus::{GridSpec, MetricField};

use num_complex::Complex64;

fn one() -> f64 {
    1.0
}
fn smooth_amplitude() -> f64 {
    0.3
}
fn smooth_modes() -> usize {
    3
}
fn degenerate_order() -> u32 {
    2
}
fn spike_widths() -> Vec<f64> {
    vec![16.0, 8.0, 4.0]
}
fn spike_a0() -> f64 {
    2.0
}
fn half() -> f64 {
    0.5
}
fn plateau_widths() -> Vec<f64> {
    vec![0.25]
}
fn plateau_smoothing() -> f64 {
    4.0
}

/// Named density generator. Members of a family share a generator and
/// differ in one parameter (spike width, plateau width).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityFamily {
    Constant {
        #[serde(default = "one")]
        value: f64,
    },
    /// `exp(a Σ_j cos(2π k_j·x + φ_j)/√m)` with seeded low frequencies.
    Smooth {
        #[serde(default = "smooth_amplitude")]
        amplitude: f64,
        #[serde(default = "smooth_modes")]
        modes: usize,
    },
    /// `sin^{2·order}(π x₁)` normalized to mean one; vanishes on `x₁ = 0`.
    Degenerate {
        #[serde(default = "degenerate_order")]
        order: u32,
    },
    /// `background + s·G_σ` with a periodic Gaussian `G_σ` at a seeded
    /// centre and `s` chosen so that `‖f‖_p = a0`. Widths are in grid
    /// spacings.
    Spike {
        #[serde(default = "spike_widths")]
        widths: Vec<f64>,
        #[serde(default = "spike_a0")]
        a0: f64,
        #[serde(default = "half")]
        background: f64,
    },
    /// The complement of a slab `|x₁| < width/2`, smoothed by a Gaussian of
    /// `smoothing` grid spacings, normalized to mean one.
    Plateau {
        #[serde(default = "plateau_widths")]
        widths: Vec<f64>,
        #[serde(default = "plateau_smoothing")]
        smoothing: f64,
    },
}

/// One member of a family: the value of its varying parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Member {
    pub index: usize,
    pub param: f64,
}

impl DensityFamily {
    pub fn label(&self) -> &'static str {
        match self {
            DensityFamily::Constant { .. } => "constant",
            DensityFamily::Smooth { .. } => "smooth",
            DensityFamily::Degenerate { .. } => "degenerate",
            DensityFamily::Spike { .. } => "spike",
            DensityFamily::Plateau { .. } => "plateau",
        }
    }

    pub fn members(&self) -> Vec<Member> {
        let params: Vec<f64> = match self {
            DensityFamily::Spike { widths, .. } => widths.clone(),
            DensityFamily::Plateau { widths, .. } => widths.clone(),
            _ => vec![0.0],
        };
        params
            .into_iter()
            .enumerate()
            .map(|(index, param)| Member { index, param })
            .collect()
    }

    pub fn validate(&self, grid: GridSpec) -> std::result::Result<(), String> {
        match self {
            DensityFamily::Constant { value } if !(*value > 0.0) => {
                Err("value must be positive".into())
            }
            DensityFamily::Smooth { modes, .. } if *modes == 0 => {
                Err("modes must be positive".into())
            }
            DensityFamily::Degenerate { order }
                if *order == 0 || 4 * *order as usize > grid.resolution =>
            {
                Err(format!(
                    "order must lie in [1, R/4] = [1, {}]",
                    grid.resolution / 4
                ))
            }
            DensityFamily::Spike {
                widths,
                a0,
                background,
            } => {
                if widths.is_empty() || widths.iter().any(|w| !(*w >= 1.0)) {
                    return Err("widths must be non-empty and at least one grid spacing".into());
                }
                if !(*background > 0.0 && a0 > background) {
                    return Err("need 0 < background < a0".into());
                }
                Ok(())
            }
            DensityFamily::Plateau { widths, smoothing } => {
                if widths.is_empty() || widths.iter().any(|w| !(*w > 0.0 && *w < 1.0)) {
                    return Err("widths must be non-empty and inside (0, 1)".into());
                }
                if !(*smoothing > 0.0) {
                    return Err("smoothing must be positive".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Samples `member` of the family; `seed` places centres and phases.
    pub fn sample(
        &self,
        member: Member,
        seed: u64,
        p: f64,
        metric: &MetricField,
    ) -> Result<ScalarField> {
        let grid = metric.grid;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match self {
            DensityFamily::Constant { value } => Ok(ScalarField::constant(grid, *value)),
            DensityFamily::Smooth { amplitude, modes } => {
                let d = grid.real_dim();
                let terms: Vec<(Vec<f64>, f64)> = (0..*modes)
                    .map(|_| {
                        let mut k = vec![0.0; d];
                        while k.iter().all(|&c| c == 0.0) {
                            k.iter_mut()
                                .for_each(|c| *c = rng.gen_range(-2i32..=2) as f64);
                        }
                        (k, rng.gen_range(0.0..2.0 * PI))
                    })
                    .collect();
                let scale = amplitude / (*modes as f64).sqrt();
                Ok(grid.sample(|x| {
                    let s: f64 = terms
                        .iter()
                        .map(|(k, ph)| (2.0 * PI * dot(k, x) + ph).cos())
                        .sum();
                    (scale * s).exp()
                }))
            }
            DensityFamily::Degenerate { order } => {
                let m = *order as i32;
                let mean = binomial(2 * m as u64, m as u64) / 4f64.powi(m);
                Ok(grid.sample(|x| (PI * x[0]).sin().powi(2 * m) / mean))
            }
            DensityFamily::Spike {
                widths,
                a0,
                background,
            } => {
                let sigma = widths[member.index] * grid.spacing();
                let centre: Vec<f64> = (0..grid.real_dim())
                    .map(|_| rng.gen_range(0.0..1.0))
                    .collect();
                let bump = grid.sample(|x| periodic_gaussian(x, &centre, sigma));
                spike_with_norm(&bump, *background, *a0, p, metric)
            }
            DensityFamily::Plateau { widths, smoothing } => {
                let profile = plateau_profile(
                    grid.resolution,
                    widths[member.index],
                    smoothing * grid.spacing(),
                );
                let r = grid.resolution;
                let h = grid.spacing();
                let f = grid.sample(|x| profile[((x[0] / h).round() as usize) % r]);
                let mean = f.mean();
                Ok(f.scale(1.0 / mean))
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Product of one-dimensional wrapped Gaussians of width `sigma`.
pub fn periodic_gaussian(x: &[f64], centre: &[f64], sigma: f64) -> f64 {
    x.iter()
        .zip(centre)
        .map(|(&xa, &ca)| {
            let d = (xa - ca) - (xa - ca).round();
            (-1..=1)
                .map(|m| {
                    let e = d + m as f64;
                    (-e * e / (2.0 * sigma * sigma)).exp()
                })
                .sum::<f64>()
        })
        .product()
}

fn spike_with_norm(
    bump: &ScalarField,
    background: f64,
    a0: f64,
    p: f64,
    metric: &MetricField,
) -> Result<ScalarField> {
    let build = |s: f64| bump.map(|b| background + s * b);
    let p_norm = |s: f64| lp_norm(&build(s), p, metric);
    if p_norm(0.0)? >= a0 {
        return Err(MageError::InvalidParameter(format!(
            "background already has L^{p} norm at least a0 = {a0}"
        )));
    }
    let mut hi = 1.0;
    while p_norm(hi)? < a0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if p_norm(mid)? < a0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(build(lo))
}

/// Indicator of `|x₁| ≥ width/2` convolved with a Gaussian of width
/// `sigma`, on `r` points.
fn plateau_profile(r: usize, width: f64, sigma: f64) -> Vec<f64> {
    let mut data: Vec<Complex64> = (0..r)
        .map(|j| {
            let x = j as f64 / r as f64;
            let d = x.min(1.0 - x);
            Complex64::new(if d >= 0.5 * width { 1.0 } else { 0.0 }, 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(r).process(&mut data);
    for (k, c) in data.iter_mut().enumerate() {
        let kk = if k <= r / 2 {
            k as f64
        } else {
            k as f64 - r as f64
        };
        *c *= (-2.0 * PI * PI * sigma * sigma * kk * kk).exp() / r as f64;
    }
    planner.plan_fft_inverse(r).process(&mut data);
    data.iter().map(|c| c.re.max(0.0)).collect()
}

/// How the perturbed density is built from `f` and a bump `b ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    /// `g = f + ε b`.
    #[default]
    Additive,
    /// `g = f (1 + ε (2b − 1))`.
    Multiplicative,
}

/// Seeded bump of unit height. For most families it is a periodic Gaussian
/// at a random centre. For the degenerate family it is a Gaussian slab
/// around the zero set `x₁ = 0`, modulated along the other coordinates by
/// `1 + ½ cos(2π(x_a − c_a))`, so that `f + ε b` stays of order `ε` on the
/// zero set.
pub fn perturbation_bump(
    family: &DensityFamily,
    width: f64,
    seed: u64,
    grid: GridSpec,
) -> ScalarField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_b0b5);
    let centre: Vec<f64> = (0..grid.real_dim())
        .map(|_| rng.gen_range(0.0..1.0))
        .collect();
    let b = if matches!(family, DensityFamily::Degenerate { .. }) {
        grid.sample(|x| {
            let slab = periodic_gaussian(&x[..1], &[0.0], width);
            let modulation: f64 = x[1..]
                .iter()
                .zip(&centre[1..])
                .map(|(&xa, &ca)| 1.0 + 0.5 * (2.0 * PI * (xa - ca)).cos())
                .product();
            slab * modulation
        })
    } else {
        grid.sample(|x| periodic_gaussian(x, &centre, width))
    };
    let top = b.sup();
    b.scale(1.0 / top)
}

pub fn perturb(
    f: &ScalarField,
    bump: &ScalarField,
    eps: f64,
    kind: PerturbationKind,
) -> Result<ScalarField> {
    match kind {
        PerturbationKind::Additive => f.zip_map(bump, |a, b| a + eps * b),
        PerturbationKind::Multiplicative => {
            f.zip_map(bump, |a, b| a * (1.0 + eps * (2.0 * b - 1.0)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{make_grid, make_metric, MetricFamily};

    fn flat(n: usize, r: usize) -> MetricField {
        make_metric(make_grid(n, r).unwrap(), &MetricFamily::FlatKahler).unwrap()
    }

    #[test]
    fn degenerate_has_unit_mean_and_zero_set() {
        let m = flat(1, 32);
        let fam = DensityFamily::Degenerate { order: 3 };
        let f = fam.sample(fam.members()[0], 0, 2.0, &m).unwrap();
        assert!((f.mean() - 1.0).abs() < 1e-12);
        assert_eq!(f.values()[0], 0.0);
    }

    #[test]
    fn spike_norm_is_held() {
        let m = flat(1, 64);
        let fam = DensityFamily::Spike {
            widths: vec![8.0, 2.0],
            a0: 2.0,
            background: 0.5,
        };
        for member in fam.members() {
            let f = fam.sample(member, 4, 2.0, &m).unwrap();
            assert!((lp_norm(&f, 2.0, &m).unwrap() - 2.0).abs() < 1e-9);
        }
        let wide = fam.sample(fam.members()[0], 4, 2.0, &m).unwrap();
        let narrow = fam.sample(fam.members()[1], 4, 2.0, &m).unwrap();
        assert!(narrow.sup() > wide.sup());
    }

    #[test]
    fn plateau_is_small_on_the_slab() {
        let m = flat(1, 64);
        let fam = DensityFamily::Plateau {
            widths: vec![0.5],
            smoothing: 2.0,
        };
        let f = fam.sample(fam.members()[0], 0, 2.0, &m).unwrap();
        assert!((f.mean() - 1.0).abs() < 1e-12);
        assert!(f.values()[0] < 1e-6);
        assert!(f.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn multiplicative_perturbation_stays_positive() {
        let m = flat(1, 16);
        let fam = DensityFamily::Smooth {
            amplitude: 0.3,
            modes: 2,
        };
        let f = fam.sample(fam.members()[0], 1, 2.0, &m).unwrap();
        let b = perturbation_bump(&fam, 0.15, 1, m.grid);
        assert!((b.sup() - 1.0).abs() < 1e-15);
        let g = perturb(&f, &b, 0.5, PerturbationKind::Multiplicative).unwrap();
        assert!(g.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn degenerate_bump_covers_the_zero_set() {
        let m = flat(2, 8);
        let fam = DensityFamily::Degenerate { order: 2 };
        let b = perturbation_bump(&fam, 0.1, 3, m.grid);
        let r = m.grid.resolution;
        let slab = r * r * r;
        // the first slab of the row-major grid is x₁ = 0
        let floor = b.values()[..slab].iter().copied().fold(f64::INFINITY, f64::min);
        assert!(floor >= 1.0 / 27.0 - 1e-12, "{floor}");
        assert!((b.sup() - 1.0).abs() < 1e-15);
    }
}
