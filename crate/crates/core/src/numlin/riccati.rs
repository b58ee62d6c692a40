//! Continuous algebraic Riccati equation
//! A^T P + P A - P B R^{-1} B^T P + Q = 0
//! solved by the Hamiltonian ordered-Schur method with Newton-Kleinman
//! refinement (each refinement step is one Lyapunov solve).

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::lu::{inverse, solve_linear};
use super::lyapunov::lyapunov_solve;
use super::schur::{order_schur, real_schur, spectral_abscissa};

const NEWTON_MAX_ITERS: usize = 20;
const NEWTON_TOL: f64 = 1e-10;
/// A result whose residual stalls above this is reported as non-converged.
const ACCEPT_TOL: f64 = 1e-8;

pub fn care_solve(
    a: &DenseMatrix,
    b: &DenseMatrix,
    q: &DenseMatrix,
    r: &DenseMatrix,
) -> Result<DenseMatrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n || !q.is_square() || q.rows() != n {
        return Err(Error::DimensionMismatch("care_solve: A/B/Q sizes inconsistent".into()));
    }
    let m = b.cols();
    if r.rows() != m || r.cols() != m {
        return Err(Error::DimensionMismatch("care_solve: R must be m x m".into()));
    }
    let r_inv = inverse(r)?;
    // S = B R^{-1} B^T, symmetrized against roundoff.
    let s = (&(b * &r_inv) * &b.transpose()).symmetrize();

    let mut p = hamiltonian_initial_guess(a, &s, q)?;
    // Newton-Kleinman: P_{k+1} solves (A - S P_k)^T X + X (A - S P_k) + Q + P_k S P_k = 0.
    // Stiff systems plateau near the attainable accuracy and can then
    // wander; keep the best iterate seen.
    let mut best = p.clone();
    let mut best_res = care_residual(a, &s, q, &p);
    for _ in 0..NEWTON_MAX_ITERS {
        if best_res <= NEWTON_TOL {
            break;
        }
        let a_cl = &a.transpose() - &(&p * &s);
        let w = (q + &(&(&p * &s) * &p)).symmetrize();
        match lyapunov_solve(&a_cl, &w) {
            Ok(next) => p = next.symmetrize(),
            Err(Error::NotHurwitz { .. }) => break,
            Err(e) => return Err(e),
        }
        let res = care_residual(a, &s, q, &p);
        if res < best_res {
            best_res = res;
            best = p.clone();
        } else if res > 10.0 * best_res {
            break;
        }
    }
    let p = best;
    let res = best_res;
    if res > ACCEPT_TOL {
        return Err(Error::NoConvergence(format!("CARE residual stalled at {res:.3e}")));
    }
    // The stabilizing solution leaves A - S P Hurwitz.
    let a_cl = a - &(&s * &p);
    let cl_abscissa = spectral_abscissa(&a_cl)?;
    if cl_abscissa >= 1e-10 {
        return Err(Error::NotStabilizable(format!(
            "CARE closed loop has spectral abscissa {cl_abscissa:.3e}"
        )));
    }
    Ok(p)
}

/// Stable-subspace extraction from the 2n x 2n Hamiltonian matrix.
fn hamiltonian_initial_guess(
    a: &DenseMatrix,
    s: &DenseMatrix,
    q: &DenseMatrix,
) -> Result<DenseMatrix> {
    let n = a.rows();
    if n == 0 {
        return Ok(DenseMatrix::zeros(0, 0));
    }
    let mut ham = DenseMatrix::zeros(2 * n, 2 * n);
    ham.set_block(0, 0, a);
    ham.set_block(0, n, &s.scale(-1.0));
    ham.set_block(n, 0, &q.scale(-1.0));
    ham.set_block(n, n, &a.transpose().scale(-1.0));

    let (mut z, mut t) = real_schur(&ham)?;
    let stable_dim = order_schur(&mut z, &mut t, |re| re < 0.0)?;
    if stable_dim != n {
        return Err(Error::NotStabilizable(format!(
            "Hamiltonian stable subspace has dimension {stable_dim}, expected {n}"
        )));
    }
    let x1 = z.block(0, 0, n, n);
    let x2 = z.block(n, 0, n, n);
    // P = X2 X1^{-1}, computed as the solution of X1^T P^T = X2^T.
    let pt = solve_linear(&x1.transpose(), &x2.transpose())
        .map_err(|_| Error::NotStabilizable("Hamiltonian basis X1 is singular".into()))?;
    Ok(pt.transpose().symmetrize())
}

/// Relative residual of the Riccati equation at P.
pub fn care_residual(a: &DenseMatrix, s: &DenseMatrix, q: &DenseMatrix, p: &DenseMatrix) -> f64 {
    let atp = &a.transpose() * p;
    let pa = p * a;
    let psp = &(p * s) * p;
    let res = &(&(&atp + &pa) - &psp) + q;
    let denom = atp.norm_fro() + pa.norm_fro() + psp.norm_fro() + q.norm_fro();
    res.norm_fro() / denom.max(1.0)
}

/// Residual helper matching `care_solve`'s notion of S.
pub fn care_residual_brq(
    a: &DenseMatrix,
    b: &DenseMatrix,
    q: &DenseMatrix,
    r: &DenseMatrix,
    p: &DenseMatrix,
) -> Result<f64> {
    let s = (&(b * &inverse(r)?) * &b.transpose()).symmetrize();
    Ok(care_residual(a, &s, q, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numlin::sym::sym_eigen;

    #[test]
    fn scalar_integrator() {
        // -P^2 + 1 = 0, PSD root P = 1.
        let one = DenseMatrix::from_rows(&[&[1.0]]);
        let a = DenseMatrix::from_rows(&[&[0.0]]);
        let p = care_solve(&a, &one, &one, &one).unwrap();
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn stable_no_cost_gives_zero() {
        let a = DenseMatrix::from_rows(&[&[-1.0]]);
        let b = DenseMatrix::from_rows(&[&[0.0]]);
        let q = DenseMatrix::from_rows(&[&[0.0]]);
        let r = DenseMatrix::from_rows(&[&[1.0]]);
        let p = care_solve(&a, &b, &q, &r).unwrap();
        assert!(p[(0, 0)].abs() < 1e-12);
    }

    #[test]
    fn scalar_unstable_picks_stabilizing_root() {
        // 2P - P^2 = 0 has roots {0, 2}; only P = 2 stabilizes (A - P = -1).
        let a = DenseMatrix::from_rows(&[&[1.0]]);
        let b = DenseMatrix::from_rows(&[&[1.0]]);
        let q = DenseMatrix::from_rows(&[&[0.0]]);
        let r = DenseMatrix::from_rows(&[&[1.0]]);
        let p = care_solve(&a, &b, &q, &r).unwrap();
        assert!((p[(0, 0)] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn random_system_residual_and_psd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let m = 2;
        let a = DenseMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let b = DenseMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..1.0));
        let q = DenseMatrix::identity(n);
        let r = DenseMatrix::identity(m);
        let p = care_solve(&a, &b, &q, &r).unwrap();
        assert!(care_residual_brq(&a, &b, &q, &r, &p).unwrap() < 1e-10);
        let (vals, _) = sym_eigen(&p).unwrap();
        assert!(vals[0] > -1e-10, "P not PSD: min eig {}", vals[0]);
        // Closed loop stable.
        let s = &(&b * &inverse(&r).unwrap()) * &b.transpose();
        let acl = &a - &(&s * &p);
        assert!(spectral_abscissa(&acl).unwrap() < 0.0);
    }
}
