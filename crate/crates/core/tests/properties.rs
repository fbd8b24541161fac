use std::f64::consts::PI;

use mage::envelope::{envelope, EnvelopeConfig};
use mage::regularization::{kiselman_legendre, mollify, KLParams, MollifierKernel};
use mage::spectral::{fit_exponent, lp_norm, ma_density, omega_u};
use mage::torus::{curvature_constants, make_grid, make_metric, GridSpec, MetricFamily, MetricField, TrigTerm};
use mage::{Herm, ScalarField};
use proptest::prelude::*;

fn flat(n: usize, r: usize) -> MetricField {
    make_metric(make_grid(n, r).unwrap(), &MetricFamily::FlatKahler).unwrap()
}

/// Low-frequency trig field; coefficients in [-1, 1] scaled by `amp`.
fn trig_field(grid: GridSpec, coeffs: &[f64], amp: f64) -> ScalarField {
    let d = grid.real_dim();
    grid.sample(|x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let axis = k % d;
                let phase = (k / d) as f64 * 0.7;
                amp * c * (2.0 * PI * x[axis] + phase).cos()
            })
            .sum()
    })
}

fn min_eig(u: &ScalarField, metric: &MetricField) -> f64 {
    omega_u(u, metric)
        .unwrap()
        .iter()
        .map(|g| g.min_eigenvalue())
        .fold(f64::INFINITY, f64::min)
}

fn coeffs(len: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0f64..1.0, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ma_density_ignores_constants(c in coeffs(4), shift in -10.0f64..10.0) {
        let m = flat(2, 8);
        let u = trig_field(m.grid, &c, 0.01);
        let a = ma_density(&u, &m).unwrap();
        let b = ma_density(&u.shift(shift), &m).unwrap();
        let gap = a.sup_distance(&b).unwrap();
        prop_assert!(gap <= 1e-12, "gap {gap:e}");
    }

    #[test]
    fn mixed_ma_inequality(cu in coeffs(4), cv in coeffs(4), s in 0.0f64..1.0) {
        let m = flat(2, 8);
        let u = trig_field(m.grid, &cu, 0.01);
        let v = trig_field(m.grid, &cv, 0.01);
        let w = u.scale(1.0 - s).add(&v.scale(s)).unwrap();
        let (ru, rv, rw) = (
            ma_density(&u, &m).unwrap(),
            ma_density(&v, &m).unwrap(),
            ma_density(&w, &m).unwrap(),
        );
        for i in 0..ru.len() {
            let lhs = rw.values()[i].sqrt();
            let rhs = (1.0 - s) * ru.values()[i].sqrt() + s * rv.values()[i].sqrt();
            prop_assert!(lhs >= rhs - 1e-8);
        }
    }

    #[test]
    fn lp_norm_homogeneous_and_monotone(c in coeffs(4), k in -5.0f64..5.0, p in 1.0f64..4.0) {
        let m = flat(1, 16);
        let f = trig_field(m.grid, &c, 1.0);
        let a = lp_norm(&f, p, &m).unwrap();
        let b = lp_norm(&f.scale(k), p, &m).unwrap();
        prop_assert!((b - k.abs() * a).abs() <= 1e-12 * (1.0 + b));
        let bigger = f.map(|v| v.abs() + 0.1);
        prop_assert!(lp_norm(&bigger, p, &m).unwrap() >= a);
    }

    #[test]
    fn fitted_slope_ignores_label_scale(slope in 0.2f64..2.0, scale in 0.01f64..100.0) {
        let pts: Vec<(f64, f64)> = [0.2, 0.1, 0.05, 0.025]
            .iter()
            .map(|&x: &f64| (x, 3.0 * x.powf(slope)))
            .collect();
        let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (scale * x, y)).collect();
        let a = fit_exponent(&pts).unwrap();
        let b = fit_exponent(&scaled).unwrap();
        prop_assert!((a.slope - b.slope).abs() < 1e-10);
    }

    #[test]
    fn conformal_metric_is_hermitian_and_curvature_deterministic(a in -0.3f64..0.3, b in -0.3f64..0.3) {
        let grid = make_grid(2, 8).unwrap();
        let family = MetricFamily::ConformalHermitian {
            psi_coefficients: vec![
                TrigTerm { amplitude: a, freq: vec![1, 0, 0, 0], phase: 0.0 },
                TrigTerm { amplitude: b, freq: vec![0, 1, 1, 0], phase: 0.4 },
            ],
        };
        let m = make_metric(grid, &family).unwrap();
        for e in &m.entries {
            prop_assert!(Herm::hermitian_defect(&e.to_matrix()) <= 1e-12);
        }
        let (c1, c2) = (curvature_constants(&m), curvature_constants(&m));
        prop_assert_eq!(c1.b.to_bits(), c2.b.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mollify_preserves_constants_and_order(c in coeffs(4), level in -3.0f64..3.0) {
        let g = make_grid(1, 32).unwrap();
        let k = MollifierKernel::new(g, 512).unwrap();
        let u = trig_field(g, &c, 1.0);
        let v = u.map(|x| x + 0.2 * x.abs());
        for &t in &k.t_grid {
            let one = mollify(&ScalarField::constant(g, level), t, &k).unwrap();
            prop_assert!(one.values().iter().all(|&x| (x - level).abs() <= 1e-8));
            let (mu, mv) = (mollify(&u, t, &k).unwrap(), mollify(&v, t, &k).unwrap());
            prop_assert!(mu.values().iter().zip(mv.values()).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn kiselman_legendre_below_mollification_and_monotone_in_c(
        c in coeffs(4),
        c1 in 0.01f64..1.0,
        extra in 0.0f64..1.0,
    ) {
        let g = make_grid(1, 32).unwrap();
        let k = MollifierKernel::new(g, 512).unwrap();
        let u = trig_field(g, &c, 0.02);
        let delta = 0.125;
        let lo = kiselman_legendre(&u, &KLParams::new(delta, c1, 1.0), &k).unwrap();
        let hi = kiselman_legendre(&u, &KLParams::new(delta, c1 + extra, 1.0), &k).unwrap();
        let rho = mollify(&u, delta, &k).unwrap();
        for i in 0..u.len() {
            prop_assert!(lo.values()[i] <= rho.values()[i]);
            prop_assert!(lo.values()[i] <= hi.values()[i]);
        }
    }
}

fn obstacle(grid: GridSpec, c: &[f64]) -> ScalarField {
    grid.sample(|x| {
        0.3 * c[0] * (2.0 * PI * x[0]).cos()
            + 0.3 * c[1] * (2.0 * PI * x[1]).sin()
            + 0.15 * c[2] * (4.0 * PI * (x[0] + x[1])).cos()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(5))]

    #[test]
    fn envelope_is_below_invariant_and_idempotent(c in coeffs(3), shift in -2.0f64..2.0) {
        let m = flat(1, 16);
        let cfg = EnvelopeConfig::default();
        let f = obstacle(m.grid, &c);
        let p = envelope(&f, &m, &cfg).unwrap().p;
        prop_assert!(p.sub(&f).unwrap().sup() <= 1e-8);
        let shifted = envelope(&f.shift(shift), &m, &cfg).unwrap().p;
        prop_assert!(shifted.sup_distance(&p.shift(shift)).unwrap() <= 1e-8);
        let again = envelope(&p, &m, &cfg).unwrap().p;
        prop_assert!(again.sup_distance(&p).unwrap() <= cfg.stage_tol);
        prop_assert!(min_eig(&p, &m) >= -cfg.defect_tol);
    }

    #[test]
    fn envelope_is_monotone_and_contracting(
        c1 in coeffs(3),
        c2 in coeffs(3),
        lift in 0.0f64..0.3,
        phase in 0.0f64..1.0,
    ) {
        let m = flat(1, 16);
        let cfg = EnvelopeConfig::default();
        let f1 = obstacle(m.grid, &c1);
        let f2 = obstacle(m.grid, &c2);
        let p1 = envelope(&f1, &m, &cfg).unwrap().p;
        let p2 = envelope(&f2, &m, &cfg).unwrap().p;
        prop_assert!(p1.sup_distance(&p2).unwrap() <= f1.sup_distance(&f2).unwrap() + 1e-6);
        let bump = m.grid.sample(|x| 0.5 * lift * (1.0 + (2.0 * PI * (x[0] - phase)).cos()));
        let upper = f1.add(&bump).unwrap();
        let pu = envelope(&upper, &m, &cfg).unwrap().p;
        let excess = p1.sub(&pu).unwrap().sup();
        prop_assert!(excess <= 1e-6, "excess {excess:e}");
    }
}
