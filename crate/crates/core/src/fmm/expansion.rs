//! Truncated series expansions about cell centers.

use crate::geom::Vec3;
use num_complex::Complex64;

use super::harmonics::coeff_len;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionKind {
    /// Valid far from the expansion center; represents a source cluster.
    Multipole,
    /// Valid near the expansion center; accumulates remote influence.
    Local,
}

/// Coefficients (n, m) for 0 ≤ m ≤ n ≤ order; m < 0 entries are implied by
/// the conjugate symmetry c_n^{-m} = (−1)^m conj(c_n^m).
#[derive(Debug, Clone)]
pub struct Expansion {
    pub order: usize,
    pub center: Vec3,
    pub kind: ExpansionKind,
    pub coeffs: Vec<Complex64>,
}

impl Expansion {
    pub fn zero(order: usize, center: Vec3, kind: ExpansionKind) -> Self {
        Expansion {
            order,
            center,
            kind,
            coeffs: vec![Complex64::default(); coeff_len(order)],
        }
    }

    pub fn add_assign(&mut self, other: &Expansion) {
        debug_assert_eq!(self.order, other.order);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b;
        }
    }

    /// Max-norm relative difference against another expansion.
    pub fn relative_difference(&self, other: &Expansion) -> f64 {
        let scale = self
            .coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max)
            / scale
    }
}
