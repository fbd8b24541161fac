//! Pointwise Hermitian matrices of size 1 or 2.
//!
//! The complex dimension of the torus is at most 2, so every pointwise
//! (1,1)-form fits in a fixed-size struct. A real (1,1)-form
//! `i Σ a_jk dz_j ∧ dz̄_k` is stored through its coefficient matrix `a`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Herm {
    pub dim: u8,
    /// (0,0) entry.
    pub a: f64,
    /// (1,1) entry; unused when `dim == 1`.
    pub d: f64,
    /// (0,1) entry; the (1,0) entry is its conjugate.
    pub b: Complex64,
}

impl Herm {
    pub fn zero(dim: usize) -> Self {
        Herm {
            dim: dim as u8,
            a: 0.0,
            d: 0.0,
            b: Complex64::new(0.0, 0.0),
        }
    }

    pub fn scalar(dim: usize, s: f64) -> Self {
        let mut h = Herm::zero(dim);
        h.a = s;
        if dim == 2 {
            h.d = s;
        }
        h
    }

    pub fn identity(dim: usize) -> Self {
        Herm::scalar(dim, 1.0)
    }

    pub fn trace(&self) -> f64 {
        if self.dim == 1 {
            self.a
        } else {
            self.a + self.d
        }
    }

    pub fn det(&self) -> f64 {
        if self.dim == 1 {
            self.a
        } else {
            self.a * self.d - self.b.norm_sqr()
        }
    }

    /// Eigenvalues in ascending order (second equals first when `dim == 1`).
    pub fn eigenvalues(&self) -> (f64, f64) {
        if self.dim == 1 {
            return (self.a, self.a);
        }
        let mid = 0.5 * (self.a + self.d);
        let half = 0.5 * (self.a - self.d);
        let rad = (half * half + self.b.norm_sqr()).sqrt();
        (mid - rad, mid + rad)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().0
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues().1
    }

    pub fn add(&self, o: &Herm) -> Herm {
        Herm {
            dim: self.dim,
            a: self.a + o.a,
            d: self.d + o.d,
            b: self.b + o.b,
        }
    }

    pub fn scale(&self, s: f64) -> Herm {
        Herm {
            dim: self.dim,
            a: self.a * s,
            d: self.d * s,
            b: self.b * s,
        }
    }

    /// Adjugate, so that `adj(M) M = det(M) I`.
    pub fn adjugate(&self) -> Herm {
        if self.dim == 1 {
            return Herm::identity(1);
        }
        Herm {
            dim: 2,
            a: self.d,
            d: self.a,
            b: -self.b,
        }
    }

    pub fn inverse(&self) -> Herm {
        self.adjugate().scale(1.0 / self.det())
    }

    /// `tr(self · other)` for Hermitian operands.
    pub fn trace_product(&self, o: &Herm) -> f64 {
        if self.dim == 1 {
            self.a * o.a
        } else {
            self.a * o.a + self.d * o.d + 2.0 * (self.b * o.b.conj()).re
        }
    }

    pub fn to_matrix(&self) -> [[Complex64; 2]; 2] {
        let z = Complex64::new(0.0, 0.0);
        if self.dim == 1 {
            return [[Complex64::new(self.a, 0.0), z], [z, z]];
        }
        [
            [Complex64::new(self.a, 0.0), self.b],
            [self.b.conj(), Complex64::new(self.d, 0.0)],
        ]
    }

    /// Max entrywise modulus of `M - M^H` for the full matrix representation.
    pub fn hermitian_defect(m: &[[Complex64; 2]; 2]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((v - m[j][i].conj()).norm());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two_spectrum() {
        let h = Herm {
            dim: 2,
            a: 2.0,
            d: 1.0,
            b: Complex64::new(0.5, -0.5),
        };
        let (lo, hi) = h.eigenvalues();
        assert!((lo * hi - h.det()).abs() < 1e-14);
        assert!((lo + hi - h.trace()).abs() < 1e-14);
        let inv = h.inverse();
        // tr(M M^{-1}) = 2
        assert!((h.trace_product(&inv) - 2.0).abs() < 1e-14);
        assert_eq!(Herm::hermitian_defect(&h.to_matrix()), 0.0);
    }

    #[test]
    fn one_by_one() {
        let h = Herm::scalar(1, 3.0);
        assert_eq!(h.det(), 3.0);
        assert_eq!(h.eigenvalues(), (3.0, 3.0));
        assert_eq!(h.adjugate().a, 1.0);
    }
}
