//! Bartels-Stewart solver for the continuous Lyapunov equation
//! A X + X A^T + W = 0 with A Hurwitz and W symmetric.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::schur::{real_schur, schur_blocks, solve_small_sylvester, spectral_abscissa};

pub fn lyapunov_solve(a: &DenseMatrix, w: &DenseMatrix) -> Result<DenseMatrix> {
    if !a.is_square() || a.rows() != w.rows() || !w.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "lyapunov_solve: A {}x{}, W {}x{}",
            a.rows(),
            a.cols(),
            w.rows(),
            w.cols()
        )));
    }
    let abscissa = spectral_abscissa(a)?;
    if abscissa >= -1e-12 {
        return Err(Error::NotHurwitz { abscissa });
    }
    let (q, t) = real_schur(a)?;
    let solve_transformed = |rhs: &DenseMatrix| -> Result<DenseMatrix> {
        let w_t = &(&q.transpose() * rhs) * &q;
        let y = solve_quasi_lyapunov(&t, &w_t.scale(-1.0))?;
        Ok((&(&q * &y) * &q.transpose()).symmetrize())
    };
    let mut x = solve_transformed(w)?;
    // Iterative refinement against the original data: stiff spectra leave
    // back-substitution residuals well above roundoff otherwise. The Schur
    // factorization is reused, so each pass is one back-substitution.
    for _ in 0..3 {
        let res = (&(&(a * &x) + &(&x * &a.transpose())) + w).symmetrize();
        if res.norm_fro() <= 1e-12 * w.norm_fro().max(f64::MIN_POSITIVE) {
            break;
        }
        let dx = solve_transformed(&res)?;
        x = (&x + &dx).symmetrize();
    }
    Ok(x)
}

/// Solve T Y + Y T^T = C for quasi-upper-triangular T by block
/// back-substitution from the trailing corner.
fn solve_quasi_lyapunov(t: &DenseMatrix, c: &DenseMatrix) -> Result<DenseMatrix> {
    let n = t.rows();
    let blocks = schur_blocks(t);
    let nb = blocks.len();
    let mut y = DenseMatrix::zeros(n, n);
    for bj in (0..nb).rev() {
        let (js, jw) = blocks[bj];
        for bi in (0..nb).rev() {
            let (is, iw) = blocks[bi];
            let mut rhs = c.block(is, js, iw, jw);
            // Couplings to already-solved blocks.
            for bk in bi + 1..nb {
                let (ks, kw) = blocks[bk];
                let t_ik = t.block(is, ks, iw, kw);
                let y_kj = y.block(ks, js, kw, jw);
                rhs = &rhs - &(&t_ik * &y_kj);
            }
            for bk in bj + 1..nb {
                let (ks, kw) = blocks[bk];
                let y_ik = y.block(is, ks, iw, kw);
                let t_jk = t.block(js, ks, jw, kw);
                rhs = &rhs - &(&y_ik * &t_jk.transpose());
            }
            let t_ii = t.block(is, is, iw, iw);
            let t_jj = t.block(js, js, jw, jw);
            let y_ij = solve_small_sylvester(&t_ii, &t_jj.transpose(), &rhs).map_err(|_| {
                Error::SingularMatrix("Lyapunov back-substitution: eigenvalue pair sums to zero".into())
            })?;
            y.set_block(is, js, &y_ij);
        }
    }
    Ok(y)
}

pub fn lyapunov_residual(a: &DenseMatrix, w: &DenseMatrix, x: &DenseMatrix) -> f64 {
    let r = &(&(a * x) + &(x * &a.transpose())) + w;
    r.norm_fro() / w.norm_fro().max(1e-300)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_case() {
        // -2x + 2 = 0 -> x = 1.
        let a = DenseMatrix::from_rows(&[&[-1.0]]);
        let w = DenseMatrix::from_rows(&[&[2.0]]);
        let x = lyapunov_solve(&a, &w).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn minus_identity_gives_half_w() {
        let w = DenseMatrix::from_rows(&[&[2.0, 1.0], &[1.0, 4.0]]);
        let a = DenseMatrix::scaled_identity(2, -1.0);
        let x = lyapunov_solve(&a, &w).unwrap();
        assert!((&x - &w.scale(0.5)).norm_fro() < 1e-14);
    }

    #[test]
    fn rejects_unstable() {
        let a = DenseMatrix::from_rows(&[&[0.0]]);
        let w = DenseMatrix::from_rows(&[&[1.0]]);
        assert!(matches!(lyapunov_solve(&a, &w), Err(Error::NotHurwitz { .. })));
    }

    #[test]
    fn random_stable_residual() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 20;
        // Shifted random matrix is comfortably Hurwitz.
        let mut a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        for i in 0..n {
            a[(i, i)] -= n as f64;
        }
        let g = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let w = (&g + &g.transpose()).scale(0.5);
        let x = lyapunov_solve(&a, &w).unwrap();
        assert!(lyapunov_residual(&a, &w, &x) < 1e-9);
        assert!((&x - &x.transpose()).norm_fro() < 1e-12 * x.norm_fro().max(1.0));
    }
}
