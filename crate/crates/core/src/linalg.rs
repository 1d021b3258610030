//! Small dense linear-algebra helpers shared by the state-space modules.

use nalgebra::{DMatrix, DVector};

use crate::hilbert::HermitianOperator;
use crate::C64;

/// Hermitian pairing `(a|b) = sum conj(a_i) b_i` on coordinate vectors.
pub fn hdot(a: &DVector<C64>, b: &DVector<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &DVector<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Eigendecomposition of a Hermitian operator: `A = V diag(lambda) V^H`
/// with real eigenvalues and a unitary eigenbasis.
pub struct HermEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<C64>,
}

impl HermEigen {
    pub fn new(a: &HermitianOperator) -> Self {
        let se = nalgebra::SymmetricEigen::new(a.entries().clone());
        Self {
            eigenvalues: se.eigenvalues,
            eigenvectors: se.eigenvectors,
        }
    }

    /// Applies `f` to the spectrum: returns `V diag(f(lambda)) V^H x`.
    pub fn apply_function(&self, f: impl Fn(f64) -> C64, x: &DVector<C64>) -> DVector<C64> {
        let coeffs = self.eigenvectors.adjoint() * x;
        let scaled = DVector::from_iterator(
            coeffs.len(),
            coeffs.iter().zip(self.eigenvalues.iter()).map(|(c, l)| c * f(*l)),
        );
        &self.eigenvectors * scaled
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max)
    }
}
