//! Smoothing by a compactly supported radial kernel, monotonization
//! constants, Kiselman–Legendre transforms and the modulus propagation test.
//!
//! The kernel is `ρ(s) = η exp(1/(s−1))/(1−s)²` on `[0, 1)` and zero beyond,
//! evaluated at `s = |ζ|²/t²`. On the flat torus the exponential map is a
//! translation, so `ρ_t(u)` is a periodic convolution, done here by direct
//! summation over the lattice points of the support ball.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::spectral::{fit_exponent, ma_density, modulus_ladder, omega_u};
use crate::stencil::{accumulate_shift, ball_offsets};
use crate::torus::{GridSpec, MetricField};

pub const DEFAULT_QUAD_RESOLUTION: usize = 4096;
const QUAD_TOL: f64 = 1e-8;
const LADDER_SLACK: f64 = 1e-10;

/// Unnormalised profile `exp(1/(s−1))/(1−s)²`.
fn profile(s: f64) -> f64 {
    if !(0.0..1.0).contains(&s) {
        return 0.0;
    }
    let q = 1.0 - s;
    (-1.0 / q).exp() / (q * q)
}

fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0 * PI,
        2 => 2.0 * PI * PI,
        _ => unreachable!(),
    }
}

/// Composite Simpson rule for `∫₀¹ profile(s) s^{n−1} ds`.
fn radial_integral(n: usize, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = 1.0 / m as f64;
    let g = |s: f64| profile(s) * s.powi(n as i32 - 1);
    let mut acc = g(0.0) + g(1.0);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    acc * h / 3.0
}

/// Normalization `η` with `∫_{ℂⁿ} ρ(|z|²) dV = 1`, checked against the
/// same rule at twice the resolution.
pub fn kernel_eta(n: usize, quad_resolution: usize) -> Result<f64> {
    if !(1..=2).contains(&n) {
        return Err(MageError::DimensionUnsupported(n));
    }
    if quad_resolution < 2 {
        return Err(MageError::InvalidParameter(
            "quad_resolution must be at least 2".into(),
        ));
    }
    // |z|² = s in polar form: dV = σ r^{2n−1} dr = ½σ s^{n−1} ds.
    let eta = |m| 1.0 / (0.5 * sphere_area(n) * radial_integral(n, m));
    let (a, b) = (eta(quad_resolution), eta(2 * quad_resolution));
    if (a - b).abs() > QUAD_TOL {
        return Err(MageError::QuadratureNotConverged((a - b).abs()));
    }
    Ok(b)
}

/// Stored kernel normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFixture {
    pub n: usize,
    pub eta: f64,
    pub quad_resolution: usize,
}

impl KernelFixture {
    pub fn compute(n: usize, quad_resolution: usize) -> Result<Self> {
        Ok(KernelFixture {
            n,
            eta: kernel_eta(n, quad_resolution)?,
            quad_resolution,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifierKernel {
    pub grid: GridSpec,
    pub eta: f64,
    pub quad_resolution: usize,
    /// `ρ` at `s = k/quad_resolution`.
    pub radial_profile: Vec<f64>,
    /// Admissible smoothing scales, ascending.
    pub t_grid: Vec<f64>,
}

impl MollifierKernel {
    /// Kernel for `grid` with scales `2h·√2^k` up to `¼`.
    pub fn new(grid: GridSpec, quad_resolution: usize) -> Result<Self> {
        let eta = kernel_eta(grid.n, quad_resolution)?;
        let radial_profile = (0..=quad_resolution)
            .map(|k| eta * profile(k as f64 / quad_resolution as f64))
            .collect();
        let h = grid.spacing();
        let mut t_grid = Vec::new();
        let mut t = 2.0 * h;
        while t <= 0.25 + 1e-12 {
            t_grid.push(t);
            t *= std::f64::consts::SQRT_2;
        }
        Ok(MollifierKernel {
            grid,
            eta,
            quad_resolution,
            radial_profile,
            t_grid,
        })
    }

    pub fn with_scales(mut self, mut scales: Vec<f64>) -> Result<Self> {
        scales.sort_by(f64::total_cmp);
        for &t in &scales {
            self.check_scale(t)?;
        }
        self.t_grid = scales;
        Ok(self)
    }

    pub fn fixture(&self) -> KernelFixture {
        KernelFixture {
            n: self.grid.n,
            eta: self.eta,
            quad_resolution: self.quad_resolution,
        }
    }

    /// `ρ(s)`.
    pub fn rho(&self, s: f64) -> f64 {
        self.eta * profile(s)
    }

    fn check_scale(&self, t: f64) -> Result<()> {
        let min = self.grid.spacing();
        if !(t >= min * (1.0 - 1e-12) && t <= 0.25 + 1e-12) {
            return Err(MageError::ScaleOutOfRange { t, min, max: 0.25 });
        }
        Ok(())
    }

    /// Lattice weights at scale `t`, normalized to sum to one.
    pub fn weights(&self, t: f64) -> Result<Vec<(Vec<isize>, f64)>> {
        self.check_scale(t)?;
        let h = self.grid.spacing();
        let mut out: Vec<(Vec<isize>, f64)> = ball_offsets(self.grid.real_dim(), t / h)
            .into_iter()
            .filter_map(|v| {
                let r2 = v.iter().map(|&c| (c * c) as f64).sum::<f64>() * h * h;
                let w = self.rho(r2 / (t * t));
                (w > 0.0).then_some((v, w))
            })
            .collect();
        let total: f64 = out.iter().map(|(_, w)| w).sum();
        out.iter_mut().for_each(|(_, w)| *w /= total);
        Ok(out)
    }

    /// Second moment `∫|z|² ρ(|z|²) dV` of the unit-scale kernel.
    pub fn second_moment(&self) -> f64 {
        let n = self.grid.n;
        0.5 * sphere_area(n) * self.eta * radial_integral_weighted(n, 2 * self.quad_resolution)
    }
}

fn radial_integral_weighted(n: usize, intervals: usize) -> f64 {
    let m = intervals + intervals % 2;
    let h = 1.0 / m as f64;
    let g = |s: f64| profile(s) * s.powi(n as i32);
    let mut acc = g(0.0) + g(1.0);
    for k in 1..m {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * g(k as f64 * h);
    }
    acc * h / 3.0
}

/// `ρ_t(u)` by direct periodic convolution.
pub fn mollify(u: &ScalarField, t: f64, kernel: &MollifierKernel) -> Result<ScalarField> {
    if u.grid() != kernel.grid {
        return Err(MageError::GridMismatch);
    }
    let grid = u.grid();
    let mut out = vec![0.0; grid.len()];
    for (v, w) in kernel.weights(t)? {
        accumulate_shift(grid, u.values(), &v, w, &mut out);
    }
    Ok(ScalarField::from_values(grid, out))
}

/// Smallest `K ≥ 0` making `t ↦ ρ_t(u) + K t²` non-decreasing across
/// consecutive scales of `kernel.t_grid`, up to `10⁻¹⁰` per step.
pub fn monotone_constant(
    u: &ScalarField,
    metric: &MetricField,
    kernel: &MollifierKernel,
) -> Result<f64> {
    ma_density(u, metric)?;
    let smoothed: Vec<ScalarField> = kernel
        .t_grid
        .iter()
        .map(|&t| mollify(u, t, kernel))
        .collect::<Result<_>>()?;
    let mut k: f64 = 0.0;
    for (j, pair) in smoothed.windows(2).enumerate() {
        let (t1, t2) = (kernel.t_grid[j], kernel.t_grid[j + 1]);
        let gap = t2 * t2 - t1 * t1;
        for (a, b) in pair[0].values().iter().zip(pair[1].values()) {
            k = k.max((a - b - LADDER_SLACK) / gap);
        }
    }
    Ok(k)
}

/// Largest decrease of `ρ_t(u) + K t²` between consecutive scales.
pub fn ladder_decrease(u: &ScalarField, k: f64, kernel: &MollifierKernel) -> Result<f64> {
    let mut worst: f64 = 0.0;
    let mut prev: Option<(f64, ScalarField)> = None;
    for &t in &kernel.t_grid {
        let cur = mollify(u, t, kernel)?;
        if let Some((t1, p)) = &prev {
            for (a, b) in p.values().iter().zip(cur.values()) {
                worst = worst.max((a + k * t1 * t1) - (b + k * t * t));
            }
        }
        prev = Some((t, cur));
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KLParams {
    pub delta: f64,
    pub c: f64,
    pub k: f64,
    /// Set when `c = δ^α`.
    pub alpha: Option<f64>,
}

impl KLParams {
    pub fn new(delta: f64, c: f64, k: f64) -> Self {
        KLParams {
            delta,
            c,
            k,
            alpha: None,
        }
    }

    pub fn tied(delta: f64, alpha: f64, k: f64) -> Self {
        KLParams {
            delta,
            c: delta.powf(alpha),
            k,
            alpha: Some(alpha),
        }
    }
}

pub const KL_MIN_RUNGS: usize = 16;

/// Geometric ladder from the grid spacing to `δ` with at least
/// [`KL_MIN_RUNGS`] rungs, ending exactly at `δ`.
pub fn kl_ladder(grid: GridSpec, delta: f64) -> Vec<f64> {
    let h = grid.spacing();
    let rungs = KL_MIN_RUNGS.max(((delta / h).ln() / 0.1).ceil() as usize + 1);
    if delta <= h {
        return vec![delta];
    }
    let ratio = (delta / h).powf(1.0 / (rungs - 1) as f64);
    let mut out: Vec<f64> = (0..rungs - 1).map(|j| h * ratio.powi(j as i32)).collect();
    out.push(delta);
    out
}

/// `U_{δ,c} = min_t (ρ_t(u) + K(t²−δ²) + K(t−δ) − c log(t/δ))` over
/// [`kl_ladder`].
pub fn kiselman_legendre(
    u: &ScalarField,
    params: &KLParams,
    kernel: &MollifierKernel,
) -> Result<ScalarField> {
    if !(params.c > 0.0) || !(params.k >= 0.0) {
        return Err(MageError::InvalidParameter(format!(
            "Kiselman–Legendre parameters c = {}, K = {}",
            params.c, params.k
        )));
    }
    let d = params.delta;
    kernel.check_scale(d)?;
    let mut out = vec![f64::INFINITY; u.len()];
    for t in kl_ladder(u.grid(), d) {
        let penalty = params.k * (t * t - d * d) + params.k * (t - d) - params.c * (t / d).ln();
        let s = mollify(u, t, kernel)?;
        for (o, v) in out.iter_mut().zip(s.values()) {
            *o = o.min(v + penalty);
        }
    }
    Ok(ScalarField::from_values(u.grid(), out))
}

/// `A = max(0, −λ_min(ω + dd^c U)/λ_max(ω) − 2Kδ)/c` for one transform.
pub fn kl_curvature_constant(
    transform: &ScalarField,
    params: &KLParams,
    metric: &MetricField,
) -> Result<f64> {
    let forms = omega_u(transform, metric)?;
    let lam = forms
        .iter()
        .map(|g| g.min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let defect = (-lam / metric.max_eigenvalue() - 2.0 * params.k * params.delta).max(0.0);
    Ok(defect / params.c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GkzAudit {
    pub alpha: f64,
    pub c0: f64,
    /// `sup(ρ_t u − u)` per scale of the kernel ladder.
    pub hypothesis: Vec<(f64, f64)>,
    /// `τ(δ)` per scale of the δ ladder.
    pub modulus: Vec<(f64, f64)>,
    /// Smallest `C′` with `τ(δ) ≤ C′ δ^α` on the ladder.
    pub c_prime: f64,
    /// Fitted slope of `log(τ/δ^α)` against `log δ`.
    pub trend_slope: f64,
    pub passed: bool,
}

/// `sup(ρ_t u − u)` at each scale of the kernel ladder.
pub fn smoothing_excess(u: &ScalarField, kernel: &MollifierKernel) -> Result<Vec<(f64, f64)>> {
    kernel
        .t_grid
        .iter()
        .map(|&t| Ok((t, mollify(u, t, kernel)?.sub(u)?.sup())))
        .collect()
}

/// Smallest `C₀` with `sup(ρ_t u − u) ≤ C₀ t^α` on the kernel ladder.
pub fn measure_c0(u: &ScalarField, alpha: f64, kernel: &MollifierKernel) -> Result<f64> {
    Ok(smoothing_excess(u, kernel)?
        .into_iter()
        .map(|(t, e)| e.max(0.0) / t.powf(alpha))
        .fold(0.0, f64::max))
}

/// Checks that `ρ_t u ≤ u + C₀ t^α` on the kernel ladder and measures the
/// resulting Hölder constant on `deltas`.
pub fn gkz_modulus_test(
    u: &ScalarField,
    alpha: f64,
    c0: f64,
    kernel: &MollifierKernel,
    deltas: &[f64],
) -> Result<GkzAudit> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MageError::InvalidParameter(format!(
            "alpha = {alpha} outside (0, 1)"
        )));
    }
    let hypothesis = smoothing_excess(u, kernel)?;
    if let Some(&(t, e)) = hypothesis
        .iter()
        .filter(|(t, e)| *e > c0 * t.powf(alpha) * (1.0 + 1e-9) + 1e-12)
        .max_by(|a, b| (a.1 - c0 * a.0.powf(alpha)).total_cmp(&(b.1 - c0 * b.0.powf(alpha))))
    {
        return Err(MageError::HypothesisViolated {
            t,
            excess: e - c0 * t.powf(alpha),
        });
    }
    let taus = modulus_ladder(u, deltas)?;
    let modulus: Vec<(f64, f64)> = deltas.iter().copied().zip(taus).collect();
    let c_prime = modulus
        .iter()
        .map(|(d, tau)| tau / d.powf(alpha))
        .fold(0.0, f64::max);
    let ratios: Vec<(f64, f64)> = modulus
        .iter()
        .filter(|(_, tau)| *tau > 0.0)
        .map(|(d, tau)| (*d, tau / d.powf(alpha)))
        .collect();
    let trend_slope = if ratios.len() >= 2 {
        fit_exponent(&ratios)?.slope
    } else {
        0.0
    };
    Ok(GkzAudit {
        alpha,
        c0,
        hypothesis,
        modulus,
        c_prime,
        trend_slope,
        passed: c_prime.is_finite() && trend_slope >= -0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{make_grid, make_metric, MetricFamily, TrigTerm};
    use std::f64::consts::{E, PI};

    fn flat(n: usize, r: usize) -> MetricField {
        make_metric(make_grid(n, r).unwrap(), &MetricFamily::FlatKahler).unwrap()
    }

    #[test]
    fn eta_closed_form_n1() {
        // ∫₀¹ e^{1/(s−1)}/(1−s)² ds = e^{−1} after v = 1/(1−s).
        let eta = kernel_eta(1, DEFAULT_QUAD_RESOLUTION).unwrap();
        assert!((eta - E / PI).abs() < 1e-10);
    }

    #[test]
    fn eta_n2_fixture() {
        let eta = kernel_eta(2, DEFAULT_QUAD_RESOLUTION).unwrap();
        // high-precision adaptive quadrature
        assert!((eta - 0.682_318_178_119_895_8).abs() < 1e-10);
        let doubled = kernel_eta(2, 2 * DEFAULT_QUAD_RESOLUTION).unwrap();
        assert!((eta - doubled).abs() < 1e-8);
    }

    #[test]
    fn coarse_quadrature_rejected() {
        assert!(matches!(
            kernel_eta(2, 4),
            Err(MageError::QuadratureNotConverged(_))
        ));
        assert!(matches!(
            kernel_eta(3, 64),
            Err(MageError::DimensionUnsupported(3))
        ));
    }

    #[test]
    fn second_moment_values() {
        let k1 = MollifierKernel::new(make_grid(1, 16).unwrap(), 1024).unwrap();
        assert!((k1.second_moment() - 0.403_652_637_676_805_9).abs() < 1e-9);
        let k2 = MollifierKernel::new(make_grid(2, 16).unwrap(), 1024).unwrap();
        assert!((k2.second_moment() - 0.522_622_406_841_117_3).abs() < 1e-9);
    }

    #[test]
    fn support_and_profile() {
        let k = MollifierKernel::new(make_grid(1, 16).unwrap(), 256).unwrap();
        assert_eq!(k.rho(1.0), 0.0);
        assert_eq!(k.rho(1.5), 0.0);
        assert!((k.rho(0.0) - k.eta * (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(k.radial_profile.len(), 257);
    }

    #[test]
    fn fixture_roundtrip() {
        let fx = KernelFixture::compute(1, 1024).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.json");
        fx.save(&p).unwrap();
        assert_eq!(KernelFixture::load(&p).unwrap(), fx);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap();
        assert!(
            v.get("n").is_some() && v.get("eta").is_some() && v.get("quad_resolution").is_some()
        );
    }

    #[test]
    fn constants_preserved() {
        let g = make_grid(1, 64).unwrap();
        let k = MollifierKernel::new(g, 1024).unwrap();
        let u = ScalarField::constant(g, 5.0);
        for &t in &k.t_grid {
            let s = mollify(&u, t, &k).unwrap();
            assert!(s.values().iter().all(|v| (v - 5.0).abs() < 1e-8));
        }
    }

    #[test]
    fn scale_range() {
        let g = make_grid(1, 16).unwrap();
        let k = MollifierKernel::new(g, 256).unwrap();
        let u = ScalarField::zeros(g);
        assert!(matches!(
            mollify(&u, 0.3, &k),
            Err(MageError::ScaleOutOfRange { .. })
        ));
        assert!(matches!(
            mollify(&u, 0.01, &k),
            Err(MageError::ScaleOutOfRange { .. })
        ));
    }

    #[test]
    fn smooth_error_is_second_order() {
        let g = make_grid(1, 256).unwrap();
        let k = MollifierKernel::new(g, 1024).unwrap();
        let u = g.sample(|x| (2.0 * PI * x[0]).cos() + 0.5 * (2.0 * PI * (x[1] - x[0])).sin());
        let samples: Vec<(f64, f64)> = [0.05, 0.025, 0.0125]
            .iter()
            .map(|&t| (t, mollify(&u, t, &k).unwrap().sub(&u).unwrap().sup_norm()))
            .collect();
        let fit = fit_exponent(&samples).unwrap();
        assert!((fit.slope - 2.0).abs() < 0.05, "{fit:?}");
        // leading term: μ t² Δu / (4n) with the kernel's second moment
        // |Δu| = 4π²|cos a + sin b| peaks at 8π²
        let lap_sup = 8.0 * PI * PI;
        let predicted = k.second_moment() * 0.0125f64.powi(2) * lap_sup / 4.0;
        assert!(
            (samples[2].1 / predicted - 1.0).abs() < 0.2,
            "{samples:?} {predicted}"
        );
    }

    #[test]
    fn mollify_translation_equivariant_and_monotone() {
        let g = make_grid(1, 32).unwrap();
        let k = MollifierKernel::new(g, 512).unwrap();
        let u = g.sample(|x| (2.0 * PI * x[0]).sin() * (4.0 * PI * x[1]).cos());
        let shift = [5isize, -3];
        let a = mollify(&u.translate(&shift), 0.1, &k).unwrap();
        let b = mollify(&u, 0.1, &k).unwrap().translate(&shift);
        assert!(a.sup_distance(&b).unwrap() < 1e-14);
        let v = u.map(|x| x + 0.1 * x.abs());
        let (mu, mv) = (mollify(&u, 0.1, &k).unwrap(), mollify(&v, 0.1, &k).unwrap());
        assert!(mu.values().iter().zip(mv.values()).all(|(a, b)| a <= b));
    }

    #[test]
    fn monotone_constant_flat_and_constant() {
        let m = flat(1, 64);
        let k = MollifierKernel::new(m.grid, 1024).unwrap();
        assert_eq!(
            monotone_constant(&ScalarField::constant(m.grid, 3.0), &m, &k).unwrap(),
            0.0
        );
        let u = m.grid.sample(|x| 0.01 * (2.0 * PI * x[0]).cos());
        let kk = monotone_constant(&u, &m, &k).unwrap();
        // ω-psh u plus |z|²/2 is psh, whose averages grow by μt²/2.
        assert!(kk <= 0.6 * k.second_moment(), "{kk}");
        assert!(ladder_decrease(&u, kk, &k).unwrap() <= 1e-10 + 1e-15);
    }

    #[test]
    fn monotone_constant_rejects_non_psh() {
        let m = flat(1, 32);
        let k = MollifierKernel::new(m.grid, 256).unwrap();
        let u = m.grid.sample(|x| (2.0 * PI * x[0]).cos());
        assert!(matches!(
            monotone_constant(&u, &m, &k),
            Err(MageError::NotOmegaPsh { .. })
        ));
    }

    #[test]
    fn kl_properties() {
        let m = flat(1, 64);
        let k = MollifierKernel::new(m.grid, 1024).unwrap();
        let c = ScalarField::constant(m.grid, 2.0);
        let p = KLParams::new(0.1, 0.05, 0.2);
        let uc = kiselman_legendre(&c, &p, &k).unwrap();
        assert!(uc.values().iter().all(|v| (v - 2.0).abs() < 1e-12));

        let u = m
            .grid
            .sample(|x| 0.01 * ((2.0 * PI * x[0]).cos() - (2.0 * PI * x[1]).sin().abs()));
        let rho_d = mollify(&u, 0.1, &k).unwrap();
        let lo = kiselman_legendre(&u, &KLParams::new(0.1, 0.01, 0.2), &k).unwrap();
        let hi = kiselman_legendre(&u, &KLParams::new(0.1, 0.05, 0.2), &k).unwrap();
        for i in 0..u.len() {
            assert!(lo.values()[i] <= rho_d.values()[i]);
            assert!(lo.values()[i] <= hi.values()[i]);
        }
        let ladder = kl_ladder(m.grid, 0.1);
        assert!(ladder.len() >= KL_MIN_RUNGS);
        assert_eq!(*ladder.last().unwrap(), 0.1);
    }

    #[test]
    fn gkz_on_smooth_function() {
        let g = make_grid(1, 64).unwrap();
        let k = MollifierKernel::new(g, 1024).unwrap();
        let u = g.sample(|x| 0.1 * (2.0 * PI * x[0]).cos());
        let c0 = measure_c0(&u, 0.5, &k).unwrap();
        let deltas = crate::spectral::hoelder_window(g);
        let audit = gkz_modulus_test(&u, 0.5, c0, &k, &deltas).unwrap();
        assert!(audit.passed, "{audit:?}");
        assert!(matches!(
            gkz_modulus_test(&u, 0.5, 0.5 * c0, &k, &deltas),
            Err(MageError::HypothesisViolated { .. })
        ));
    }

    #[test]
    fn conformal_kl_constant_is_finite() {
        let fam = MetricFamily::ConformalHermitian {
            psi_coefficients: vec![TrigTerm {
                amplitude: 0.1,
                freq: vec![1, 0, 0, 0],
                phase: 0.0,
            }],
        };
        let m = make_metric(make_grid(2, 16).unwrap(), &fam).unwrap();
        let k = MollifierKernel::new(m.grid, 512).unwrap();
        let u = m.grid.sample(|x| 0.01 * (2.0 * PI * x[2]).cos());
        let kk = monotone_constant(&u, &m, &k).unwrap();
        assert!(kk.is_finite());
        let p = KLParams::tied(0.25, 0.5, kk);
        let t = kiselman_legendre(&u, &p, &k).unwrap();
        assert!(kl_curvature_constant(&t, &p, &m).unwrap().is_finite());
    }
}
