//! Internal model of the reference frequencies: the controller block
//! (G1, G2) containing p copies of each frequency with its polynomial
//! multiplicity, plus the default observability companion Q0.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::numlin;

#[derive(Debug, Clone)]
pub struct InternalModel {
    /// Output dimension p of the tracked signal.
    pub p: usize,
    /// (omega_k, n_k) with strictly increasing omega; an omega = 0 entry is
    /// optional and contributes p*n_0 states, every other 2*p*n_k.
    pub freqs: Vec<(f64, usize)>,
    pub g1: DenseMatrix,
    pub g2: DenseMatrix,
    pub dim_z0: usize,
}

pub fn build_internal_model(p: usize, freqs: &[(f64, usize)]) -> Result<InternalModel> {
    if p == 0 {
        return Err(Error::InvalidArgument("internal model needs p >= 1".into()));
    }
    let mut prev = -1.0;
    for &(omega, n) in freqs {
        if omega < 0.0 {
            return Err(Error::InvalidArgument(format!("negative frequency {omega}")));
        }
        if omega <= prev {
            return Err(Error::InvalidArgument(
                "frequencies must be strictly increasing (duplicates invalid)".into(),
            ));
        }
        if n < 1 {
            return Err(Error::InvalidArgument("frequency multiplicity n_k must be >= 1".into()));
        }
        prev = omega;
    }
    let dim: usize = freqs
        .iter()
        .map(|&(omega, n)| if omega == 0.0 { p * n } else { 2 * p * n })
        .sum();
    let mut g1 = DenseMatrix::zeros(dim, dim);
    let mut g2 = DenseMatrix::zeros(dim, p);
    let eye_p = DenseMatrix::identity(p);
    let mut at = 0usize;
    for &(omega, n) in freqs {
        if omega == 0.0 {
            // Jordan-like chain of p-blocks with identity superdiagonal;
            // G2 drives the last block.
            for j in 0..n.saturating_sub(1) {
                g1.set_block(at + j * p, at + (j + 1) * p, &eye_p);
            }
            g2.set_block(at + (n - 1) * p, 0, &eye_p);
            at += n * p;
        } else {
            // n x n grid of 2p-blocks: rotation blocks on the diagonal,
            // identity superdiagonal; G2 ends in (I_p, 0_p).
            let mut om = DenseMatrix::zeros(2 * p, 2 * p);
            for i in 0..p {
                om[(i, p + i)] = omega;
                om[(p + i, i)] = -omega;
            }
            let eye_2p = DenseMatrix::identity(2 * p);
            for j in 0..n {
                g1.set_block(at + j * 2 * p, at + j * 2 * p, &om);
                if j + 1 < n {
                    g1.set_block(at + j * 2 * p, at + (j + 1) * 2 * p, &eye_2p);
                }
            }
            g2.set_block(at + (n - 1) * 2 * p, 0, &eye_p);
            at += 2 * n * p;
        }
    }
    Ok(InternalModel { p, freqs: freqs.to_vec(), g1, g2, dim_z0: dim })
}

/// Default observability companion: the identity on Z0 (always observable).
/// The observability rank check is still run so adversarial replacements
/// are caught at the same place.
pub fn default_q0(im: &InternalModel) -> DenseMatrix {
    DenseMatrix::identity(im.dim_z0)
}

/// Numerical observability of (Q0, G1) via the stacked observability matrix.
pub fn observability_ok(q0: &DenseMatrix, g1: &DenseMatrix) -> Result<bool> {
    let n = g1.rows();
    if n == 0 {
        return Ok(true);
    }
    if q0.cols() != n {
        return Err(Error::DimensionMismatch("Q0 column count must match dim Z0".into()));
    }
    let mut rows = Vec::with_capacity(n);
    let mut cur = q0.clone();
    for _ in 0..n {
        rows.push(cur.clone());
        cur = &cur * g1;
    }
    let refs: Vec<&DenseMatrix> = rows.iter().collect();
    let stacked = DenseMatrix::vstack(&refs);
    let s = numlin::svd(&stacked)?.s;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    Ok(smax > 0.0 && smin > 1e-9 * smax)
}

/// Numerical controllability of (G1, G2); the constructed layout always
/// passes, mirroring the internal-model property behind robustness.
pub fn controllability_ok(g1: &DenseMatrix, g2: &DenseMatrix) -> Result<bool> {
    let n = g1.rows();
    if n == 0 {
        return Ok(true);
    }
    let mut cols = Vec::with_capacity(n);
    let mut cur = g2.clone();
    for _ in 0..n {
        cols.push(cur.clone());
        cur = g1 * &cur;
    }
    let refs: Vec<&DenseMatrix> = cols.iter().collect();
    let stacked = DenseMatrix::hstack(&refs);
    let s = numlin::svd(&stacked)?.s;
    let smax = s.first().copied().unwrap_or(0.0);
    let smin = s.last().copied().unwrap_or(0.0);
    Ok(smax > 0.0 && smin > 1e-9 * smax)
}

/// The exact spectrum the block layout should realize, as a multiset.
pub fn expected_spectrum(im: &InternalModel) -> Vec<(f64, f64)> {
    let mut v = Vec::with_capacity(im.dim_z0);
    for &(omega, n) in &im.freqs {
        if omega == 0.0 {
            for _ in 0..im.p * n {
                v.push((0.0, 0.0));
            }
        } else {
            for _ in 0..im.p * n {
                v.push((0.0, omega));
                v.push((0.0, -omega));
            }
        }
    }
    v
}
