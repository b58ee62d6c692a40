//! Symmetric eigenvalue decomposition (cyclic Jacobi) and Cholesky.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition of a symmetric matrix: ascending eigenvalues and the
/// matrix of eigenvectors as columns.
pub fn sym_eigen(a: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("sym_eigen needs a square matrix".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok((vec![], DenseMatrix::zeros(0, 0)));
    }
    let mut m = a.symmetrize();
    let mut v = DenseMatrix::identity(n);
    let eps = f64::EPSILON;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        let scale = (0..n).map(|i| m[(i, i)].abs()).fold(0.0f64, f64::max).max(off);
        if off <= eps * scale.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq.abs() <= 0.25 * eps * (m[(p, p)].abs() + m[(q, q)].abs()).max(f64::MIN_POSITIVE) {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = c * mip - s * miq;
                    m[(i, q)] = s * mip + c * miq;
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = c * mpj - s * mqj;
                    m[(q, j)] = s * mpj + c * mqj;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence(format!("Jacobi eigen after {MAX_SWEEPS} sweeps")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    Ok((vals, v.select_cols(&order)))
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("cholesky needs a square matrix".into()));
    }
    let n = a.rows();
    let mut l = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if acc <= 0.0 {
                    return Err(Error::SingularMatrix(format!(
                        "cholesky pivot {acc:.3e} at index {i}: matrix not positive definite"
                    )));
                }
                l[(i, i)] = acc.sqrt();
            } else {
                l[(i, j)] = acc / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Symmetric PSD square root factor: A = F F^T with F = V max(D, 0)^(1/2).
/// Tolerates slightly negative eigenvalues from roundoff (clipped to zero).
pub fn psd_sqrt_factor(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (vals, vecs) = sym_eigen(a)?;
    let n = a.rows();
    let mut f = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let s = vals[j].max(0.0).sqrt();
        for i in 0..n {
            f[(i, j)] = vecs[(i, j)] * s;
        }
    }
    Ok(f)
}

/// Generalized symmetric eigenvalues of (A, B) with B symmetric positive
/// definite: eigenvalues of L^{-1} A L^{-T} where B = L L^T.
pub fn sym_eigen_generalized(a: &DenseMatrix, b: &DenseMatrix) -> Result<Vec<f64>> {
    let l = cholesky(b)?;
    let n = a.rows();
    // Solve L Y = A, then L Z = Y^T; Z is L^{-1} A L^{-T}.
    let mut y = a.symmetrize();
    for j in 0..n {
        let mut col = y.col(j);
        forward_solve(&l, &mut col);
        for i in 0..n {
            y[(i, j)] = col[i];
        }
    }
    let mut z = y.transpose();
    for j in 0..n {
        let mut col = z.col(j);
        forward_solve(&l, &mut col);
        for i in 0..n {
            z[(i, j)] = col[i];
        }
    }
    let (vals, _) = sym_eigen(&z.symmetrize())?;
    Ok(vals)
}

fn forward_solve(l: &DenseMatrix, x: &mut [f64]) {
    let n = l.rows();
    for i in 0..n {
        let mut acc = x[i];
        for j in 0..i {
            acc -= l[(i, j)] * x[j];
        }
        x[i] = acc / l[(i, i)];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_diagonal() {
        let a = DenseMatrix::from_diag(&[3.0, -1.0, 2.0]);
        let (vals, _) = sym_eigen(&a).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 2.0).abs() < 1e-14);
        assert!((vals[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_reconstruction() {
        let a = DenseMatrix::from_rows(&[&[2.0, 1.0, 0.0], &[1.0, 3.0, 0.5], &[0.0, 0.5, 1.0]]);
        let (vals, vecs) = sym_eigen(&a).unwrap();
        let rec = &(&vecs * &DenseMatrix::from_diag(&vals)) * &vecs.transpose();
        assert!((&rec - &a).norm_fro() < 1e-13);
    }

    #[test]
    fn cholesky_round_trip() {
        let a = DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        let rec = &l * &l.transpose();
        assert!((&rec - &a).norm_fro() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 1.0]]);
        assert!(cholesky(&a).is_err());
    }
}
