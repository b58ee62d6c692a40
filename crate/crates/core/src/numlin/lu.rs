//! Partial-pivoted LU factorization and linear solves.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

/// LU factors of a square matrix with row pivoting, reusable across solves.
pub struct LuFactors {
    lu: DenseMatrix,
    perm: Vec<usize>,
    n: usize,
}

/// Pivot threshold relative to the largest entry of the input.
const PIVOT_REL_TOL: f64 = 1e-14;

pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactors> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "lu_factor needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let mut lu = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = a.norm_max().max(f64::MIN_POSITIVE);
    for k in 0..n {
        // Pick the largest pivot in column k.
        let mut p = k;
        let mut pmax = lu[(k, k)].abs();
        for i in k + 1..n {
            let v = lu[(i, k)].abs();
            if v > pmax {
                pmax = v;
                p = i;
            }
        }
        if pmax < PIVOT_REL_TOL * scale {
            return Err(Error::SingularMatrix(format!(
                "pivot {pmax:.3e} below {PIVOT_REL_TOL:.0e} * max entry {scale:.3e} at step {k}"
            )));
        }
        lu.swap_rows(k, p);
        perm.swap(k, p);
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let m = lu[(i, k)] / pivot;
            lu[(i, k)] = m;
            if m != 0.0 {
                for j in k + 1..n {
                    let v = lu[(k, j)];
                    lu[(i, j)] -= m * v;
                }
            }
        }
    }
    Ok(LuFactors { lu, perm, n })
}

impl LuFactors {
    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // Forward substitution with unit lower factor.
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        // Back substitution.
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    pub fn solve_mat(&self, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(b.rows(), self.n);
        let mut x = DenseMatrix::zeros(self.n, b.cols());
        for j in 0..b.cols() {
            let col = self.solve_vec(&b.col(j));
            for i in 0..self.n {
                x[(i, j)] = col[i];
            }
        }
        x
    }
}

/// Solve A X = B with partial pivoting.
pub fn solve_linear(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if b.rows() != a.rows() {
        return Err(Error::DimensionMismatch(format!(
            "solve_linear: A is {}x{} but B has {} rows",
            a.rows(),
            a.cols(),
            b.rows()
        )));
    }
    Ok(lu_factor(a)?.solve_mat(b))
}

/// Inverse via LU; intended for small, well-conditioned matrices (R weights).
pub fn inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    solve_linear(a, &DenseMatrix::identity(a.rows()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_returns_rhs() {
        let b = DenseMatrix::from_rows(&[&[1.0, -2.0], &[0.5, 3.0], &[7.0, 0.0]]);
        let x = solve_linear(&DenseMatrix::identity(3), &b).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn diagonal_solve() {
        let a = DenseMatrix::from_rows(&[&[2.0, 0.0], &[0.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[&[2.0], &[8.0]]);
        let x = solve_linear(&a, &b).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((x[(1, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_rejected() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[&[1.0], &[1.0]]);
        assert!(matches!(solve_linear(&a, &b), Err(Error::SingularMatrix(_))));
    }
}
