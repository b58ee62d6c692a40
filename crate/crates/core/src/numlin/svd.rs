//! Singular value decomposition by one-sided Jacobi rotations.
//!
//! Accurate to near machine precision at the dense sizes this crate works
//! with, with no special cases beyond a transpose for wide inputs.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub struct Svd {
    /// Left singular vectors, `m x k` with `k = min(m, n)`.
    pub u: DenseMatrix,
    /// Singular values, non-negative and non-increasing.
    pub s: Vec<f64>,
    /// Right singular vectors, `n x k`.
    pub v: DenseMatrix,
}

const MAX_SWEEPS: usize = 100;

pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    if a.rows() >= a.cols() {
        svd_tall(a)
    } else {
        let t = svd_tall(&a.transpose())?;
        Ok(Svd { u: t.v, s: t.s, v: t.u })
    }
}

fn svd_tall(a: &DenseMatrix) -> Result<Svd> {
    let m = a.rows();
    let n = a.cols();
    if n == 0 {
        return Ok(Svd { u: DenseMatrix::zeros(m, 0), s: vec![], v: DenseMatrix::zeros(0, 0) });
    }
    // Work on columns of B; V accumulates the right rotations.
    let mut b = a.clone();
    let mut v = DenseMatrix::identity(n);
    // Dimension-scaled stopping threshold, as roundoff from each rotation
    // re-correlates other pairs at this level.
    let eps = f64::EPSILON * (m as f64).sqrt();
    // Columns at roundoff level relative to the input scale carry no
    // information; rotating them against each other never converges.
    let scale0 = (0..n)
        .map(|j| (0..m).map(|i| b[(i, j)] * b[(i, j)]).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let floor2 = (scale0 * eps).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let mut app = 0.0;
                let mut aqq = 0.0;
                let mut apq = 0.0;
                for i in 0..m {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    app += bp * bp;
                    aqq += bq * bq;
                    apq += bp * bq;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || apq == 0.0 || app.min(aqq) <= floor2 {
                    continue;
                }
                rotated = true;
                // Rutishauser rotation annihilating the (p,q) Gram entry.
                let zeta = (aqq - app) / (2.0 * apq);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let bp = b[(i, p)];
                    let bq = b[(i, q)];
                    b[(i, p)] = c * bp - s * bq;
                    b[(i, q)] = s * bp + c * bq;
                }
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = c * vp - s * vq;
                    v[(i, q)] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("Jacobi SVD after {MAX_SWEEPS} sweeps")));
    }

    // Singular values are the column norms; sort descending.
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n)
        .map(|j| (0..m).map(|i| b[(i, j)] * b[(i, j)]).sum::<f64>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());
    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let v = v.select_cols(&order);
    let b = b.select_cols(&order);

    // Normalize columns into U; complete an orthonormal basis for null columns.
    let mut u = DenseMatrix::zeros(m, n);
    let cutoff = s.first().copied().unwrap_or(0.0) * eps * m as f64;
    for j in 0..n {
        if s[j] > cutoff && s[j] > 0.0 {
            for i in 0..m {
                u[(i, j)] = b[(i, j)] / s[j];
            }
        } else {
            // Gram-Schmidt a unit vector against the existing columns.
            'seed: for seed in 0..m {
                let mut cand = vec![0.0; m];
                cand[seed] = 1.0;
                for k in 0..j {
                    let dot: f64 = (0..m).map(|i| cand[i] * u[(i, k)]).sum();
                    for i in 0..m {
                        cand[i] -= dot * u[(i, k)];
                    }
                }
                let nrm: f64 = cand.iter().map(|x| x * x).sum::<f64>().sqrt();
                if nrm > 0.5 {
                    for i in 0..m {
                        u[(i, j)] = cand[i] / nrm;
                    }
                    break 'seed;
                }
            }
        }
    }
    Ok(Svd { u, s, v })
}

/// Smallest singular value (0 for an empty matrix).
pub fn sigma_min(a: &DenseMatrix) -> Result<f64> {
    Ok(svd(a)?.s.last().copied().unwrap_or(0.0))
}

/// Columns spanning the numerical kernel: right singular vectors whose
/// singular value is at most `tol` times the largest one. Returns an
/// `n x 0` matrix when A has full column rank.
pub fn null_space(a: &DenseMatrix, tol: f64) -> Result<DenseMatrix> {
    let d = svd(a)?;
    let n = a.cols();
    let smax = d.s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        // Zero (or empty) matrix: the kernel is everything.
        return Ok(DenseMatrix::identity(n));
    }
    let keep: Vec<usize> = (0..d.s.len()).filter(|&j| d.s[j] <= tol * smax).collect();
    let mut cols = keep;
    // A wide matrix has n - k implicit zero singular values; those right
    // directions are not in the thin V, so fall back to a full Gram kernel.
    if a.rows() < a.cols() {
        let gram = &a.transpose() * a;
        let (vals, vecs) = super::sym::sym_eigen(&gram)?;
        let gmax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let keep: Vec<usize> = (0..vals.len())
            .filter(|&j| vals[j].abs().sqrt() <= tol * gmax.sqrt().max(f64::MIN_POSITIVE))
            .collect();
        return Ok(vecs.select_cols(&keep));
    }
    cols.sort_unstable();
    Ok(d.v.select_cols(&cols))
}

/// Real 2n x 2n embedding [[Re, -Im], [Im, Re]] of a complex matrix.
/// Singular values of the embedding are those of the complex matrix, doubled
/// in multiplicity, so extrema match.
pub fn complex_embedding(re: &DenseMatrix, im: &DenseMatrix) -> DenseMatrix {
    assert_eq!((re.rows(), re.cols()), (im.rows(), im.cols()));
    let neg_im = -im;
    let top = DenseMatrix::hstack(&[re, &neg_im]);
    let bot = DenseMatrix::hstack(&[im, re]);
    DenseMatrix::vstack(&[&top, &bot])
}

pub fn sigma_min_complex(re: &DenseMatrix, im: &DenseMatrix) -> Result<f64> {
    sigma_min(&complex_embedding(re, im))
}

pub fn sigma_max_complex(re: &DenseMatrix, im: &DenseMatrix) -> Result<f64> {
    Ok(svd(&complex_embedding(re, im))?.s.first().copied().unwrap_or(0.0))
}
