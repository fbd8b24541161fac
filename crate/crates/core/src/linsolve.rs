//! Restarted GMRES with right preconditioning.
//!
//! The Newton linearizations are non-symmetric for variable coefficients,
//! so a Krylov method without a symmetry requirement is used.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOutcome {
    pub iterations: usize,
    /// Final residual relative to `‖b‖`.
    pub relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` starting from the contents of `x`.
pub fn gmres(
    apply: &mut dyn FnMut(&[f64], &mut [f64]),
    precond: &mut dyn FnMut(&[f64], &mut [f64]),
    b: &[f64],
    x: &mut [f64],
    rtol: f64,
    restart: usize,
    max_iter: usize,
) -> GmresOutcome {
    let len = b.len();
    let bnorm = norm(b).max(1e-300);
    let m = restart.max(1);
    let mut total = 0;
    let mut ax = vec![0.0; len];
    let mut z = vec![0.0; len];
    let mut w = vec![0.0; len];
    loop {
        apply(x, &mut ax);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        if beta <= rtol * bnorm || total >= max_iter {
            return GmresOutcome {
                iterations: total,
                relative_residual: beta / bnorm,
                converged: beta <= rtol * bnorm,
            };
        }
        let mut basis: Vec<Vec<f64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m && total < max_iter {
            precond(&basis[k], &mut z);
            apply(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(&w, v);
                hess[i][k] = hik;
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hik * vi);
            }
            let hnext = norm(&w);
            hess[k + 1][k] = hnext;
            for i in 0..k {
                let t = cs[i] * hess[i][k] + sn[i] * hess[i + 1][k];
                hess[i + 1][k] = -sn[i] * hess[i][k] + cs[i] * hess[i + 1][k];
                hess[i][k] = t;
            }
            let den = hess[k][k].hypot(hess[k + 1][k]);
            cs[k] = if den == 0.0 { 1.0 } else { hess[k][k] / den };
            sn[k] = if den == 0.0 {
                0.0
            } else {
                hess[k + 1][k] / den
            };
            hess[k][k] = den;
            hess[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            total += 1;
            k += 1;
            if g[k].abs() <= rtol * bnorm || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hess[i][j] * y[j]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        let mut comb = vec![0.0; len];
        for (yi, v) in y.iter().zip(&basis) {
            comb.iter_mut().zip(v).for_each(|(c, vi)| *c += yi * vi);
        }
        precond(&comb, &mut z);
        x.iter_mut().zip(&z).for_each(|(xi, zi)| *xi += zi);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        // Tridiagonal convection–diffusion matrix.
        let n = 50;
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..n {
                let l = if i > 0 { x[i - 1] } else { 0.0 };
                let r = if i + 1 < n { x[i + 1] } else { 0.0 };
                y[i] = 3.0 * x[i] - 1.3 * l - 0.7 * r;
            }
        };
        let mut ident = |x: &[f64], y: &mut [f64]| y.copy_from_slice(x);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = vec![0.0; n];
        let out = gmres(&mut apply, &mut ident, &b, &mut x, 1e-12, 10, 500);
        assert!(out.converged);
        let mut ax = vec![0.0; n];
        apply(&x, &mut ax);
        let err: f64 = ax
            .iter()
            .zip(&b)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
    }

    #[test]
    fn exact_preconditioner_converges_in_one_step() {
        let d: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let mut apply = |x: &[f64], y: &mut [f64]| {
            for i in 0..20 {
                y[i] = d[i] * x[i];
            }
        };
        let mut pre = |x: &[f64], y: &mut [f64]| {
            for i in 0..20 {
                y[i] = x[i] / (i as f64 + 1.0);
            }
        };
        let b = vec![1.0; 20];
        let mut x = vec![0.0; 20];
        let out = gmres(&mut apply, &mut pre, &b, &mut x, 1e-12, 5, 50);
        assert!(out.converged && out.iterations == 1);
    }
}
