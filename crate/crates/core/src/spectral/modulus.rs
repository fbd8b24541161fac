use crate::error::{MageError, Result};
use crate::field::ScalarField;
use crate::stencil::{ball_offsets, max_abs_diff};
use crate::torus::GridSpec;

/// `τ(δ) = sup{|u(x) − u(y)| : d(x, y) ≤ δ}` over grid pairs, with the flat
/// torus distance.
pub fn modulus_of_continuity(u: &ScalarField, delta: f64) -> Result<f64> {
    Ok(modulus_ladder(u, &[delta])?[0])
}

/// `τ` at several scales, sharing one pass over the lattice offsets.
pub fn modulus_ladder(u: &ScalarField, deltas: &[f64]) -> Result<Vec<f64>> {
    let grid = u.grid();
    let h = grid.spacing();
    for &d in deltas {
        if !(d <= 0.5 + 1e-12) {
            return Err(MageError::DeltaOutOfRange(d));
        }
        if d < h * (1.0 - 1e-12) {
            return Err(MageError::DeltaBelowResolution {
                delta: d,
                spacing: h,
            });
        }
    }
    let Some(dmax) = deltas.iter().copied().reduce(f64::max) else {
        return Ok(Vec::new());
    };
    let offsets = ball_offsets(grid.real_dim(), dmax / h + 1e-9);
    // |u(x+v) − u(x)| is symmetric in v ↦ −v: keep one half-space.
    let mut measured: Vec<(f64, f64)> = offsets
        .iter()
        .filter(|v| v.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0))
        .map(|v| {
            let len = v.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt() * h;
            (len, max_abs_diff(grid, u.values(), v))
        })
        .collect();
    measured.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(deltas
        .iter()
        .map(|&d| {
            measured
                .iter()
                .take_while(|(len, _)| *len <= d * (1.0 + 1e-12))
                .fold(0.0, |m, (_, t)| f64::max(m, *t))
        })
        .collect())
}

/// Measurement scales in `[4/R, 1/4]`, spaced by half octaves and snapped
/// to whole cells.
pub fn hoelder_window(grid: GridSpec) -> Vec<f64> {
    let r = grid.resolution;
    let mut ks: Vec<usize> = Vec::new();
    let mut j = 0;
    loop {
        let k = (4.0 * 2f64.powf(j as f64 / 2.0)).round() as usize;
        if k > r / 4 {
            break;
        }
        if ks.last() != Some(&k) {
            ks.push(k);
        }
        j += 1;
    }
    ks.into_iter().map(|k| k as f64 / r as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::make_grid;
    use std::f64::consts::PI;

    /// All-pairs brute force with explicit torus distance.
    fn brute(u: &ScalarField, delta: f64) -> f64 {
        let g = u.grid();
        let mut best: f64 = 0.0;
        for i in 0..g.len() {
            let xi = g.coords(i);
            for j in 0..g.len() {
                let xj = g.coords(j);
                let d2: f64 = xi
                    .iter()
                    .zip(&xj)
                    .map(|(a, b)| {
                        let t = (a - b).abs();
                        let t = t.min(1.0 - t);
                        t * t
                    })
                    .sum();
                if d2.sqrt() <= delta + 1e-12 {
                    best = best.max((u.values()[i] - u.values()[j]).abs());
                }
            }
        }
        best
    }

    #[test]
    fn matches_brute_force() {
        let g = make_grid(1, 8).unwrap();
        let u = g.sample(|x| (2.0 * PI * x[0]).sin() * (x[1] * 11.0).cos() + x[1] * x[0]);
        for d in [0.125, 0.2, 0.3, 0.5] {
            let fast = modulus_of_continuity(&u, d).unwrap();
            assert!((fast - brute(&u, d)).abs() < 1e-14, "delta {d}");
        }
    }

    #[test]
    fn examples() {
        let g = make_grid(1, 64).unwrap();
        assert_eq!(
            modulus_of_continuity(&ScalarField::constant(g, 2.0), 0.25).unwrap(),
            0.0
        );
        let c = g.sample(|x| (2.0 * PI * x[0]).cos());
        assert!((modulus_of_continuity(&c, 0.5).unwrap() - 2.0).abs() < 1e-12);
        let t = modulus_ladder(&c, &[0.05, 0.1, 0.2]).unwrap();
        assert!(t[0] <= t[1] && t[1] <= t[2]);
        assert!(matches!(
            modulus_of_continuity(&c, 0.001),
            Err(MageError::DeltaBelowResolution { .. })
        ));
        assert!(matches!(
            modulus_of_continuity(&c, 0.7),
            Err(MageError::DeltaOutOfRange(_))
        ));
    }

    #[test]
    fn window_bounds() {
        let w = hoelder_window(make_grid(1, 128).unwrap());
        assert_eq!(w.first().copied(), Some(4.0 / 128.0));
        assert_eq!(w.last().copied(), Some(0.25));
        assert_eq!(hoelder_window(make_grid(2, 32).unwrap()).len(), 3);
    }
}
