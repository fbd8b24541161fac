use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::spectral::{laplacian_mass, ma_density, total_ma_mass};
use crate::torus::{make_grid, make_metric, MetricFamily, TrigTerm};

fn flat(n: usize, r: usize) -> MetricField {
    make_metric(make_grid(n, r).unwrap(), &MetricFamily::FlatKahler).unwrap()
}

fn conformal(r: usize, amp: f64) -> MetricField {
    let family = MetricFamily::ConformalHermitian {
        psi_coefficients: vec![TrigTerm {
            amplitude: amp,
            freq: vec![1, 0, 0, 1],
            phase: 0.0,
        }],
    };
    make_metric(make_grid(2, r).unwrap(), &family).unwrap()
}

fn manufactured(metric: &MetricField, u_star: &ScalarField) -> ScalarField {
    let rho = ma_density(u_star, metric).unwrap();
    rho.zip_map(u_star, |r, u| r * (-u).exp()).unwrap()
}

#[test]
fn unit_density_gives_zero() {
    let m = flat(2, 16);
    let res = solve_exponential(
        &ScalarField::constant(m.grid, 1.0),
        &m,
        &SolverConfig::default(),
    )
    .unwrap();
    assert!(res.u.sup_norm() < 1e-12);
    assert_eq!(res.iterations, 0);
}

#[test]
fn exponential_of_potential_is_recovered() {
    let m = flat(1, 32);
    let w = m.grid.sample(|x| 0.1 * (2.0 * PI * x[0]).sin());
    let res = solve_exponential(&w.map(f64::exp), &m, &SolverConfig::default());
    // f = e^w has nonzero curvature so u = -w only when dd^c w = 0; check
    // the residual equation instead.
    let res = res.unwrap();
    let rho = ma_density(&res.u, &m).unwrap();
    for i in 0..rho.len() {
        let t = res.u.values()[i].exp() * w.values()[i].exp();
        assert!((rho.values()[i] - t).abs() < 1e-9);
    }
    let shifted = solve_exponential(
        &ScalarField::constant(m.grid, 2.0f64.exp()),
        &m,
        &SolverConfig::default(),
    )
    .unwrap();
    assert!(shifted.u.values().iter().all(|v| (v + 2.0).abs() < 1e-12));
}

#[test]
fn manufactured_solution_n1() {
    let m = flat(1, 64);
    // ω + dd^c u* = 1 − 0.4π²·a·cos·cos is positive only for a < 1/(0.4π²)
    let u_star = m
        .grid
        .sample(|x| 0.02 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).cos());
    let f = manufactured(&m, &u_star);
    let res = solve_exponential(&f, &m, &SolverConfig::default()).unwrap();
    assert!(res.u.sup_distance(&u_star).unwrap() < 1e-8);
    assert!(res.residual_sup <= 1e-10);
}

#[test]
fn manufactured_solution_hermitian_n2() {
    let m = conformal(16, 0.1);
    let u_star = m.grid.sample(|x| {
        0.02 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[3]).cos()
            + 0.01 * (2.0 * PI * (x[1] - x[2])).sin()
    });
    let f = manufactured(&m, &u_star);
    let res = solve_exponential(&f, &m, &SolverConfig::default()).unwrap();
    assert!(res.u.sup_distance(&u_star).unwrap() < 1e-6);
}

#[test]
fn quadratic_tail() {
    let m = flat(2, 16);
    let f = m
        .grid
        .sample(|x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[2]).sin());
    let res = solve_exponential(&f, &m, &SolverConfig::default()).unwrap();
    let h = &res.history;
    let mut checked = 0;
    for k in 0..h.len() - 1 {
        if (1e-7..=1e-3).contains(&h[k]) {
            assert!(h[k + 1] <= 50.0 * h[k] * h[k] + 1e-10, "{h:?}");
            checked += 1;
        }
    }
    assert!(res.iterations <= 12);
    let _ = checked;
}

#[test]
fn normalized_constant_density() {
    let m = flat(2, 8);
    let res = solve_normalized(
        &ScalarField::constant(m.grid, 2.0),
        &m,
        &SolverConfig::default(),
    )
    .unwrap();
    assert!((res.c - 0.5).abs() < 1e-12);
    assert!(res.u.sup_norm() < 1e-12);
}

#[test]
fn normalized_mass_identity() {
    let m = conformal(16, 0.1);
    let f = m
        .grid
        .sample(|x| 1.0 + 0.6 * (2.0 * PI * x[1]).cos() * (2.0 * PI * x[2]).cos());
    let res = solve_normalized(&f, &m, &SolverConfig::default()).unwrap();
    assert!(res.u.sup().abs() < 1e-14);
    let mass = total_ma_mass(&res.u, &m).unwrap();
    let fm: f64 = f
        .values()
        .iter()
        .zip(m.det_omega.values())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * m.grid.cell_volume();
    assert!((mass - res.c * fm).abs() < 1e-8 * mass);
    let lm = laplacian_mass(&res.u, &m).unwrap();
    assert!(lm.is_finite() && lm > 0.0);
}

#[test]
fn kahler_normalized_constant_is_volume_ratio() {
    let m = flat(2, 16);
    let f = m.grid.sample(|x| (0.3 * (2.0 * PI * x[0]).sin()).exp());
    let res = solve_normalized(&f, &m, &SolverConfig::default()).unwrap();
    let total = total_ma_mass(&res.u, &m).unwrap();
    assert!((total - 1.0).abs() < 1e-9);
    assert!((res.c * f.mean() - 1.0).abs() < 1e-9);
}

#[test]
fn deterministic_bitwise() {
    let m = conformal(8, 0.1);
    let f = m.grid.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).sin());
    let a = solve_exponential(&f, &m, &SolverConfig::default()).unwrap();
    let b = solve_exponential(&f, &m, &SolverConfig::default()).unwrap();
    assert_eq!(a.u.values(), b.u.values());
    assert_eq!(a.history, b.history);
}

#[test]
fn translation_equivariance() {
    let m = flat(2, 16);
    let f = m
        .grid
        .sample(|x| 1.0 + 0.4 * (2.0 * PI * (x[0] + 2.0 * x[3])).cos());
    let shift = [3isize, 0, -5, 1];
    let a = solve_exponential(&f, &m, &SolverConfig::default()).unwrap();
    let b = solve_exponential(&f.translate(&shift), &m, &SolverConfig::default()).unwrap();
    assert!(a.u.translate(&shift).sup_distance(&b.u).unwrap() < 1e-9);
}

#[test]
fn uniqueness_from_random_starts() {
    let m = flat(1, 32);
    let f = m.grid.sample(|x| 1.0 + 0.5 * (2.0 * PI * x[1]).cos());
    let base = solve_exponential(&f, &m, &SolverConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..3 {
        let a: f64 = rng.gen_range(-0.01..0.01);
        let c: f64 = rng.gen_range(-1.0..1.0);
        let start = m.grid.sample(|x| c + a * (2.0 * PI * (x[0] + x[1])).cos());
        let res = solve_exponential_from(&f, &m, &SolverConfig::default(), &start).unwrap();
        assert!(res.u.sup_distance(&base.u).unwrap() < 1e-9);
    }
}

#[test]
fn degenerate_density_converges_in_plain_form() {
    let m = flat(1, 32);
    let f = m
        .grid
        .sample(|x| (2.0 * PI * x[0]).sin().powi(2) * 0.5 + 0.0);
    let cfg = SolverConfig {
        continuation_steps: 4,
        ..SolverConfig::default()
    };
    let res = solve_exponential(&f, &m, &cfg).unwrap();
    let rho = ma_density(&res.u, &m).unwrap();
    for i in 0..rho.len() {
        let t = res.u.values()[i].exp() * f.values()[i];
        assert!((rho.values()[i] - t).abs() < 1e-6 * (1.0 + t));
    }
}

#[test]
fn invalid_density_reported() {
    let m = flat(1, 8);
    let mut f = ScalarField::constant(m.grid, 1.0);
    f.values_mut()[5] = -0.5;
    match solve_exponential(&f, &m, &SolverConfig::default()) {
        Err(MageError::DensityInvalid { index, value }) => {
            assert_eq!(index, 5);
            assert_eq!(value, -0.5);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn iteration_cap_reports_partial_result() {
    let m = flat(1, 32);
    let f = m.grid.sample(|x| 1.0 + 0.9 * (2.0 * PI * x[0]).cos());
    let cfg = SolverConfig {
        max_newton_iters: 1,
        ..SolverConfig::default()
    };
    match solve_exponential(&f, &m, &cfg) {
        Err(MageError::NotConverged(r)) => {
            assert!(!r.converged);
            assert_eq!(r.iterations, 1);
            assert_eq!(r.history.len(), 2);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn sub_supersolution_audit() {
    let m = flat(1, 32);
    let f = m.grid.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos());
    let v = solve_exponential(&f, &m, &SolverConfig::default())
        .unwrap()
        .u;
    let u = v.shift(-0.1);
    let a = check_sub_supersolution(&u, &v, 1.0, &m).unwrap();
    assert!(a.hypothesis_holds && a.conclusion_holds && a.passed);
    let w = v.shift(0.1);
    let b = check_sub_supersolution(&w, &v, 1.0, &m).unwrap();
    assert!(!b.hypothesis_holds && !b.conclusion_holds && b.passed);
}

#[test]
fn perturbation_construction_is_subsolution() {
    let m = flat(1, 32);
    let f = m.grid.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos());
    let g = m
        .grid
        .sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos() + 0.002 * (2.0 * PI * x[1]).sin());
    let a = perturbation_subsolution(&f, &g, 2.0, &m, &SolverConfig::default()).unwrap();
    assert!(a.eps <= 0.5);
    let audit = a.audit.unwrap();
    assert!(audit.hypothesis_holds, "{audit:?}");
    assert!(audit.conclusion_holds);
}

#[test]
fn comparison_kahler_rows() {
    let m = flat(1, 32);
    let f = m.grid.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos());
    let g = m.grid.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[1]).sin());
    let u = solve_exponential(&f, &m, &SolverConfig::default())
        .unwrap()
        .u;
    let v = solve_exponential(&g, &m, &SolverConfig::default())
        .unwrap()
        .u;
    let consts = crate::torus::curvature_constants(&m);
    let a = comparison_audits(&u, &v, &m, &consts, &[], &[0.01, 0.05]).unwrap();
    assert!(a.kahler);
    assert_eq!(a.rows.len(), 3);
    assert!(a.passed, "{a:?}");
}

#[test]
fn comparison_modified_rows() {
    let m = conformal(16, 0.1);
    let f = m.grid.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[0]).cos());
    let g = m.grid.sample(|x| 1.0 + 0.3 * (2.0 * PI * x[3]).sin());
    let u = solve_exponential(&f, &m, &SolverConfig::default())
        .unwrap()
        .u;
    let v = solve_exponential(&g, &m, &SolverConfig::default())
        .unwrap()
        .u;
    let consts = crate::torus::curvature_constants(&m);
    let a = comparison_audits(&u, &v, &m, &consts, &[0.1, 0.2], &[]).unwrap();
    assert!(!a.kahler);
    assert_eq!(a.rows.len(), 2);
    assert!(a.empirical_c.is_finite());
    // the minimum point always lies in the sublevel set
    assert!(a.rows.iter().all(|r| !r.vacuous));
}

#[test]
fn mass_corpus_band() {
    let m = flat(2, 8);
    let mut corpus = MassCorpus::default();
    let cf = ScalarField::constant(m.grid, 1.0);
    let audit = mass_lower_bound_audit(&cf, &m, 2.0).unwrap();
    assert!((audit.mass - 1.0).abs() < 1e-14);
    corpus.record(audit, 2.0);
    assert_eq!(corpus.min_mass(1.5), Some(1.0));
    assert_eq!(corpus.min_mass(0.5), None);
    assert_eq!(corpus.laplacian_band(), 2.0);
}
