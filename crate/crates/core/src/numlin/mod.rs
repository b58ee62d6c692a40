//! Self-contained dense linear algebra: factorizations, eigenvalues, SVD,
//! Lyapunov and continuous algebraic Riccati solvers.
//!
//! Everything operates on [`DenseMatrix`] values and is deterministic; all
//! functions are pure and the results are safe to share across threads.

mod lu;
mod lyapunov;
mod riccati;
mod schur;
mod svd;
pub mod sym;

pub use lu::{inverse, lu_factor, solve_linear, LuFactors};
pub use lyapunov::{lyapunov_residual, lyapunov_solve};
pub use riccati::{care_residual_brq, care_solve};
pub use schur::{eigenvalues, eigenvalues_from_schur, order_schur, real_schur, schur_blocks, spectral_abscissa};
pub use svd::{
    complex_embedding, null_space, sigma_max_complex, sigma_min, sigma_min_complex, svd, Svd,
};
pub use sym::{cholesky, psd_sqrt_factor, sym_eigen, sym_eigen_generalized};

use crate::matrix::DenseMatrix;

/// Spectrum of a real matrix as (real, imaginary) pairs, closed under
/// conjugation by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrum {
    pub values: Vec<(f64, f64)>,
}

impl ComplexSpectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Maximum real part, or -inf for an empty spectrum.
    pub fn abscissa(&self) -> f64 {
        self.values.iter().map(|v| v.0).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Eigenvalues with real part at least `threshold`.
    pub fn unstable_part(&self, threshold: f64) -> Vec<(f64, f64)> {
        self.values.iter().copied().filter(|v| v.0 >= threshold).collect()
    }

    /// Multiset comparison within an absolute tolerance.
    pub fn matches(&self, other: &ComplexSpectrum, tol: f64) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut used = vec![false; other.len()];
        for &(re, im) in &self.values {
            let mut found = false;
            for (k, &(or, oi)) in other.values.iter().enumerate() {
                if !used[k] && (re - or).hypot(im - oi) <= tol {
                    used[k] = true;
                    found = true;
                    break;
                }
            }
            if !found {
                return false;
            }
        }
        true
    }

    /// Check conjugate pairing: every eigenvalue with nonzero imaginary part
    /// has a partner within `tol`.
    pub fn conjugate_paired(&self, tol: f64) -> bool {
        let conj = ComplexSpectrum {
            values: self.values.iter().map(|&(re, im)| (re, -im)).collect(),
        };
        self.matches(&conj, tol)
    }

    /// Smallest distance from the complex point (re, im) to the spectrum.
    pub fn distance_to(&self, re: f64, im: f64) -> f64 {
        self.values
            .iter()
            .map(|&(r, i)| (r - re).hypot(i - im))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Frequency response C (iw I - A)^{-1} B of a real state-space triple,
/// returned as (real, imaginary) parts of the p x m complex matrix.
pub fn freq_response(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
    omega: f64,
) -> crate::error::Result<(DenseMatrix, DenseMatrix)> {
    let n = a.rows();
    let m = b.cols();
    // (iw I - A)(Xr + i Xi) = B  =>  [[-A, -wI], [wI, -A]] [Xr; Xi] = [B; 0]
    let mut big = DenseMatrix::zeros(2 * n, 2 * n);
    let neg_a = a.scale(-1.0);
    big.set_block(0, 0, &neg_a);
    big.set_block(n, n, &neg_a);
    for i in 0..n {
        big[(i, n + i)] = -omega;
        big[(n + i, i)] = omega;
    }
    let mut rhs = DenseMatrix::zeros(2 * n, m);
    rhs.set_block(0, 0, b);
    let x = solve_linear(&big, &rhs)?;
    let xr = x.block(0, 0, n, m);
    let xi = x.block(n, 0, n, m);
    Ok((c * &xr, c * &xi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spectrum_multiset_matching() {
        let a = ComplexSpectrum { values: vec![(1.0, 2.0), (1.0, -2.0), (0.5, 0.0)] };
        let b = ComplexSpectrum { values: vec![(0.5, 0.0), (1.0, -2.0), (1.0, 2.0)] };
        assert!(a.matches(&b, 1e-12));
        assert!(a.conjugate_paired(1e-12));
    }

    #[test]
    fn freq_response_scalar() {
        // G(s) = 1/(s+1); |G(i)| = 1/sqrt(2).
        let a = DenseMatrix::from_rows(&[&[-1.0]]);
        let b = DenseMatrix::from_rows(&[&[1.0]]);
        let c = DenseMatrix::from_rows(&[&[1.0]]);
        let (re, im) = freq_response(&a, &b, &c, 1.0).unwrap();
        let mag = (re[(0, 0)].powi(2) + im[(0, 0)].powi(2)).sqrt();
        assert!((mag - 1.0 / 2.0f64.sqrt()).abs() < 1e-14);
    }
}
