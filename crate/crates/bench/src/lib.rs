//! Inputs shared by the benchmarks.

use std::f64::consts::PI;

use mage::{make_grid, make_metric, MetricFamily, MetricField, ScalarField, TrigTerm};

pub fn flat_metric(n: usize, resolution: usize) -> MetricField {
    make_metric(make_grid(n, resolution).unwrap(), &MetricFamily::FlatKahler).unwrap()
}

pub fn conformal_metric(resolution: usize) -> MetricField {
    let family = MetricFamily::ConformalHermitian {
        psi_coefficients: vec![TrigTerm {
            amplitude: 0.1,
            freq: vec![1, 0, 0, 0],
            phase: 0.0,
        }],
    };
    make_metric(make_grid(2, resolution).unwrap(), &family).unwrap()
}

/// A smooth positive density.
pub fn smooth_density(metric: &MetricField) -> ScalarField {
    metric
        .grid
        .sample(|x| 1.0 + 0.4 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin())
}
