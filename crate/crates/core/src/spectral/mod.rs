//! Spectral calculus on the periodic grid.
//!
//! Derivatives use the symbol `iκ` with `κ = 2πm`. First derivatives set the
//! Nyquist mode to zero so that derivative fields of a real field stay real;
//! pure second derivatives keep it (symbol `−(πR)²`) so that the Laplacian
//! annihilates only constants.

mod fit;
mod measure;
mod modulus;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::herm::Herm;
use crate::torus::GridSpec;

pub use fit::{fit_exponent, PowerFit};
pub use measure::{
    ddc, laplacian_mass, lp_norm, ma_density, ma_density_with_tol, mixed_ma_defect, omega_u,
    total_ma_mass, HessianField, EPS_PSH,
};
pub use modulus::{hoelder_window, modulus_ladder, modulus_of_continuity};

type C64 = Complex64;

pub struct Spectral {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kappa: Vec<f64>,
    kappa_sq: Vec<f64>,
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let r = grid.resolution;
        let kappa = (0..r)
            .map(|j| {
                if 2 * j == r {
                    0.0
                } else if 2 * j < r {
                    2.0 * PI * j as f64
                } else {
                    2.0 * PI * (j as f64 - r as f64)
                }
            })
            .collect();
        let kappa_sq = (0..r)
            .map(|j| {
                let m = if 2 * j <= r {
                    j as f64
                } else {
                    j as f64 - r as f64
                };
                (2.0 * PI * m).powi(2)
            })
            .collect();
        Spectral {
            grid,
            fwd: planner.plan_fft_forward(r),
            inv: planner.plan_fft_inverse(r),
            kappa,
            kappa_sq,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn transform(&self, data: &mut [C64], inverse: bool) {
        let r = self.grid.resolution;
        let d = self.grid.real_dim();
        let fft = if inverse { &self.inv } else { &self.fwd };
        let mut scratch = vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for axis in 0..d {
            let stride = r.pow((d - 1 - axis) as u32);
            if stride == 1 {
                fft.process_with_scratch(data, &mut scratch);
                continue;
            }
            let mut lines = vec![C64::new(0.0, 0.0); r * stride];
            for block in data.chunks_mut(r * stride) {
                for j in 0..r {
                    for i in 0..stride {
                        lines[i * r + j] = block[j * stride + i];
                    }
                }
                fft.process_with_scratch(&mut lines, &mut scratch);
                for j in 0..r {
                    for i in 0..stride {
                        block[j * stride + i] = lines[i * r + j];
                    }
                }
            }
        }
        if inverse {
            let s = 1.0 / data.len() as f64;
            data.iter_mut().for_each(|z| *z *= s);
        }
    }

    pub fn forward(&self, u: &[f64]) -> Vec<C64> {
        let mut data: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        data
    }

    pub fn inverse(&self, mut spec: Vec<C64>) -> Vec<C64> {
        self.transform(&mut spec, true);
        spec
    }

    pub fn inverse_real(&self, spec: Vec<C64>) -> Vec<f64> {
        self.inverse(spec).into_iter().map(|z| z.re).collect()
    }

    /// Calls `f(flat_index, κ, κ²)` for every Fourier mode, with the first-
    /// and second-derivative symbols per axis.
    fn for_each_mode(&self, mut f: impl FnMut(usize, &[f64], &[f64])) {
        let r = self.grid.resolution;
        let d = self.grid.real_dim();
        let mut m = vec![0usize; d];
        let mut k = vec![0.0; d];
        let mut k2 = vec![0.0; d];
        for idx in 0..self.grid.len() {
            for a in 0..d {
                k[a] = self.kappa[m[a]];
                k2[a] = self.kappa_sq[m[a]];
            }
            f(idx, &k, &k2);
            for a in (0..d).rev() {
                m[a] += 1;
                if m[a] < r {
                    break;
                }
                m[a] = 0;
            }
        }
    }

    /// Multiply a spectrum by a symbol `σ(κ)` and return the physical field.
    fn apply_symbol(&self, spec: &[C64], sym: impl Fn(&[f64], &[f64]) -> C64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); spec.len()];
        self.for_each_mode(|i, k, k2| out[i] = spec[i] * sym(k, k2));
        self.inverse(out)
    }

    /// Pointwise coefficient matrices of `dd^c u = 2i ∂∂̄u`, i.e.
    /// `H_jk = 2 ∂²u / ∂z_j ∂z̄_k`.
    pub fn hessian(&self, u: &[f64]) -> Vec<Herm> {
        let spec = self.forward(&centered(u));
        self.hessian_from_spectrum(&spec)
    }

    pub fn hessian_from_spectrum(&self, spec: &[C64]) -> Vec<Herm> {
        let n = self.grid.n;
        if n == 1 {
            let h = self.apply_symbol(spec, |_, q| C64::new(-0.5 * (q[0] + q[1]), 0.0));
            return h
                .into_iter()
                .map(|z| {
                    let mut m = Herm::zero(1);
                    m.a = z.re;
                    m
                })
                .collect();
        }
        // Both diagonal entries are real fields: pack them into one inverse
        // transform as real and imaginary parts.
        let diag = self.apply_symbol(spec, |_, q| {
            C64::new(-0.5 * (q[0] + q[1]), -0.5 * (q[2] + q[3]))
        });
        // 2 ∂_{z_0} ∂_{z̄_1} has symbol ½ (iκ_0 + κ_1)(iκ_2 − κ_3).
        let off = self.apply_symbol(spec, |k, _| {
            0.5 * C64::new(k[1], k[0]) * C64::new(-k[3], k[2])
        });
        diag.into_iter()
            .zip(off)
            .map(|(dg, b)| Herm {
                dim: 2,
                a: dg.re,
                d: dg.im,
                b,
            })
            .collect()
    }

    /// Real partial derivatives `∂u/∂x_a` for every axis.
    pub fn gradient(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let spec = self.forward(&centered(u));
        (0..self.grid.real_dim())
            .map(|a| {
                self.apply_symbol(&spec, |k, _| C64::new(0.0, k[a]))
                    .into_iter()
                    .map(|z| z.re)
                    .collect()
            })
            .collect()
    }

    /// Solves `(a·tr dd^c − m) w = r` on the flat torus. Modes where the
    /// operator vanishes are set to zero.
    pub fn solve_flat(&self, r: &[f64], a: f64, m: f64) -> Vec<f64> {
        let spec = self.forward(r);
        let mut out = vec![C64::new(0.0, 0.0); spec.len()];
        self.for_each_mode(|i, _, q| {
            let k2: f64 = q.iter().sum();
            let den = -0.5 * a * k2 - m;
            if den.abs() > 1e-300 {
                out[i] = spec[i] / den;
            }
        });
        self.inverse_real(out)
    }

    /// Fraction of spectral energy (excluding the mean) carried by modes
    /// with some `|m_a| > R/4`.
    pub fn high_band_fraction(&self, u: &[f64]) -> f64 {
        let spec = self.forward(u);
        let cut = 2.0 * PI * (self.grid.resolution as f64 / 4.0) + 1e-9;
        let (mut hi, mut total) = (0.0, 0.0);
        self.for_each_mode(|i, k, _| {
            if i == 0 {
                return;
            }
            let e = spec[i].norm_sqr();
            total += e;
            if k.iter().any(|x| x.abs() > cut) {
                hi += e;
            }
        });
        if total == 0.0 {
            0.0
        } else {
            hi / total
        }
    }
}

/// `u − mean(u)`; derivatives then do not pick up round-off from large
/// constants.
fn centered(u: &[f64]) -> Vec<f64> {
    let mean = u.iter().sum::<f64>() / u.len() as f64;
    u.iter().map(|v| v - mean).collect()
}
