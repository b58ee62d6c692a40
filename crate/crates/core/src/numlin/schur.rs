//! Real Schur decomposition: Hessenberg reduction followed by Francis
//! double-shift QR with accumulation, plus invariant-subspace reordering
//! by adjacent block swaps.
//!
//! The form returned is A = Q T Q^T with Q orthogonal and T quasi-upper
//! triangular whose 2x2 diagonal blocks carry complex-conjugate pairs only
//! (real-eigenvalue 2x2 blocks are split in a post-pass).

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

use super::lu::solve_linear;
use super::ComplexSpectrum;

/// Francis-step budget, in sweeps, relative to the matrix dimension.
const MAX_SWEEPS_PER_DIM: usize = 100;

pub fn real_schur(a: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("real_schur needs a square matrix".into()));
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("real_schur input".into()));
    }
    let n = a.rows();
    if n == 0 {
        return Ok((DenseMatrix::zeros(0, 0), DenseMatrix::zeros(0, 0)));
    }
    let (mut q, mut t) = hessenberg(a);
    francis_iterate(&mut t, &mut q)?;
    split_real_two_blocks(&mut t, &mut q);
    clean_lower_triangle(&mut t);
    Ok((q, t))
}

pub fn eigenvalues(a: &DenseMatrix) -> Result<ComplexSpectrum> {
    let (_, t) = real_schur(a)?;
    Ok(eigenvalues_from_schur(&t))
}

pub fn spectral_abscissa(a: &DenseMatrix) -> Result<f64> {
    Ok(eigenvalues(a)?.abscissa())
}

pub fn eigenvalues_from_schur(t: &DenseMatrix) -> ComplexSpectrum {
    let n = t.rows();
    let mut values = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let tr = a + d;
            let disc = (a - d) * (a - d) + 4.0 * b * c;
            if disc < 0.0 {
                let im = (-disc).sqrt() / 2.0;
                values.push((tr / 2.0, im));
                values.push((tr / 2.0, -im));
            } else {
                // Should not survive the split pass; fall back to real roots.
                let s = disc.sqrt() / 2.0;
                values.push((tr / 2.0 + s, 0.0));
                values.push((tr / 2.0 - s, 0.0));
            }
            i += 2;
        } else {
            values.push((t[(i, i)], 0.0));
            i += 1;
        }
    }
    ComplexSpectrum { values }
}

/// Householder reduction to upper Hessenberg form: A = Q H Q^T.
fn hessenberg(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let n = a.rows();
    let mut h = a.clone();
    let mut q = DenseMatrix::identity(n);
    if n < 3 {
        return (q, h);
    }
    for k in 0..n - 2 {
        let m = n - k - 1;
        let mut v = vec![0.0; m];
        for i in 0..m {
            v[i] = h[(k + 1 + i, k)];
        }
        let alpha = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if alpha == 0.0 {
            continue;
        }
        let alpha = if v[0] >= 0.0 { -alpha } else { alpha };
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // Left: H[k+1.., k..] -= beta v (v^T H)
        for j in k..n {
            let mut dot = 0.0;
            for i in 0..m {
                dot += v[i] * h[(k + 1 + i, j)];
            }
            let f = beta * dot;
            for i in 0..m {
                h[(k + 1 + i, j)] -= f * v[i];
            }
        }
        // Right: H[.., k+1..] -= beta (H v) v^T
        for i in 0..n {
            let mut dot = 0.0;
            for j in 0..m {
                dot += h[(i, k + 1 + j)] * v[j];
            }
            let f = beta * dot;
            for j in 0..m {
                h[(i, k + 1 + j)] -= f * v[j];
            }
        }
        // Accumulate Q.
        for i in 0..n {
            let mut dot = 0.0;
            for j in 0..m {
                dot += q[(i, k + 1 + j)] * v[j];
            }
            let f = beta * dot;
            for j in 0..m {
                q[(i, k + 1 + j)] -= f * v[j];
            }
        }
        for i in 1..m {
            h[(k + 1 + i, k)] = 0.0;
        }
        h[(k + 1, k)] = alpha;
    }
    (q, h)
}

fn subdiag_negligible(h: &DenseMatrix, i: usize, norm_scale: f64) -> bool {
    let s = h[(i - 1, i - 1)].abs() + h[(i, i)].abs();
    let s = if s == 0.0 { norm_scale } else { s };
    h[(i, i - 1)].abs() <= f64::EPSILON * s
}

fn francis_iterate(h: &mut DenseMatrix, q: &mut DenseMatrix) -> Result<()> {
    let n = h.rows();
    if n < 3 {
        // 1x1 and 2x2 are already quasi-triangular.
        return Ok(());
    }
    let norm_scale = h.norm_fro().max(f64::MIN_POSITIVE);
    let budget = MAX_SWEEPS_PER_DIM * n;
    let mut sweeps = 0usize;
    let mut hi = n - 1;
    let mut stall = 0usize;
    loop {
        // Deflate converged subdiagonals from the bottom.
        while hi > 0 {
            if subdiag_negligible(h, hi, norm_scale) {
                h[(hi, hi - 1)] = 0.0;
                hi -= 1;
                stall = 0;
            } else if hi >= 2 && subdiag_negligible(h, hi - 1, norm_scale) {
                h[(hi - 1, hi - 2)] = 0.0;
                hi -= 2;
                stall = 0;
            } else {
                break;
            }
        }
        if hi == 0 {
            return Ok(());
        }
        if hi == 1 {
            // Trailing 2x2 at the top; nothing left to iterate.
            return Ok(());
        }
        // Active window [lo, hi].
        let mut lo = hi;
        while lo > 0 && !subdiag_negligible(h, lo, norm_scale) {
            lo -= 1;
        }
        if lo > 0 {
            h[(lo, lo - 1)] = 0.0;
        }
        if hi - lo == 1 {
            hi = lo.saturating_sub(1);
            if lo == 0 {
                return Ok(());
            }
            stall = 0;
            continue;
        }
        if sweeps >= budget {
            return Err(Error::NoConvergence(format!(
                "QR iteration exceeded {budget} sweeps at window [{lo}, {hi}]"
            )));
        }
        sweeps += 1;
        stall += 1;

        // Double-shift coefficients from the trailing 2x2, or an ad-hoc
        // exceptional shift when progress stalls.
        let (s, t) = if stall % 11 == 0 {
            let w = h[(hi, hi - 1)].abs() + h[(hi - 1, hi - 2)].abs();
            (1.5 * w, w * w)
        } else {
            let a = h[(hi - 1, hi - 1)];
            let b = h[(hi - 1, hi)];
            let c = h[(hi, hi - 1)];
            let d = h[(hi, hi)];
            (a + d, a * d - b * c)
        };
        let x = h[(lo, lo)] * h[(lo, lo)] + h[(lo, lo + 1)] * h[(lo + 1, lo)] - s * h[(lo, lo)] + t;
        let y = h[(lo + 1, lo)] * (h[(lo, lo)] + h[(lo + 1, lo + 1)] - s);
        let z = h[(lo + 1, lo)] * h[(lo + 2, lo + 1)];

        // Chase the bulge down the window; the Householder at step k acts on
        // rows k..k+len and is derived from column k-1 (or the shift
        // polynomial at the first step).
        for k in lo..hi {
            let len = if k + 2 <= hi { 3 } else { 2 };
            let mut seed = [0.0; 3];
            if k == lo {
                seed[0] = x;
                seed[1] = y;
                seed[2] = if len == 3 { z } else { 0.0 };
            } else {
                for i in 0..len {
                    seed[i] = h[(k + i, k - 1)];
                }
            }
            let Some((v, beta)) = householder_small(&seed[..len]) else {
                continue;
            };
            let col0 = if k > lo { k - 1 } else { lo };
            // Left application to rows k..k+len.
            for j in col0..h.cols() {
                let mut dot = 0.0;
                for i in 0..len {
                    dot += v[i] * h[(k + i, j)];
                }
                let f = beta * dot;
                for i in 0..len {
                    h[(k + i, j)] -= f * v[i];
                }
            }
            // Right application to columns k..k+len (rows above and inside
            // the bulge; rows further down are structurally zero there).
            let row_end = (k + len + 1).min(hi + 1);
            for i in 0..row_end {
                let mut dot = 0.0;
                for j in 0..len {
                    dot += h[(i, k + j)] * v[j];
                }
                let f = beta * dot;
                for j in 0..len {
                    h[(i, k + j)] -= f * v[j];
                }
            }
            for i in 0..q.rows() {
                let mut dot = 0.0;
                for j in 0..len {
                    dot += q[(i, k + j)] * v[j];
                }
                let f = beta * dot;
                for j in 0..len {
                    q[(i, k + j)] -= f * v[j];
                }
            }
            if k > lo {
                // The Householder annihilated the bulge below (k, k-1).
                for i in 1..len {
                    h[(k + i, k - 1)] = 0.0;
                }
            }
        }
    }
}

/// Householder vector and scaling for a length-2 or length-3 column.
fn householder_small(x: &[f64]) -> Option<(Vec<f64>, f64)> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return None;
    }
    let mut v = x.to_vec();
    let alpha = if v[0] >= 0.0 { -norm } else { norm };
    v[0] -= alpha;
    let vnorm2: f64 = v.iter().map(|a| a * a).sum();
    if vnorm2 == 0.0 {
        return None;
    }
    Some((v, 2.0 / vnorm2))
}

/// Split 2x2 diagonal blocks with real eigenvalues into 1x1 pairs.
fn split_real_two_blocks(t: &mut DenseMatrix, q: &mut DenseMatrix) {
    let n = t.rows();
    let mut i = 0;
    while i + 1 < n {
        if t[(i + 1, i)] == 0.0 {
            i += 1;
            continue;
        }
        let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
        let disc = (a - d) * (a - d) + 4.0 * b * c;
        if disc < 0.0 {
            i += 2;
            continue;
        }
        // Real eigenvalues: rotate so the block becomes upper triangular.
        let sq = disc.sqrt();
        let half_tr = (a + d) / 2.0;
        let lam = if half_tr >= 0.0 { half_tr + sq / 2.0 } else { half_tr - sq / 2.0 };
        // Eigenvector of the block for lam.
        let (vx, vy) = if b.abs() > c.abs() {
            (b, lam - a)
        } else {
            (lam - d, c)
        };
        let nrm = (vx * vx + vy * vy).sqrt();
        if nrm == 0.0 {
            i += 2;
            continue;
        }
        let (cs, sn) = (vx / nrm, vy / nrm);
        // Givens G = [[cs, -sn], [sn, cs]]; apply T <- G^T T G, Q <- Q G.
        for j in 0..n {
            let t0 = t[(i, j)];
            let t1 = t[(i + 1, j)];
            t[(i, j)] = cs * t0 + sn * t1;
            t[(i + 1, j)] = -sn * t0 + cs * t1;
        }
        for r in 0..n {
            let t0 = t[(r, i)];
            let t1 = t[(r, i + 1)];
            t[(r, i)] = cs * t0 + sn * t1;
            t[(r, i + 1)] = -sn * t0 + cs * t1;
        }
        for r in 0..q.rows() {
            let q0 = q[(r, i)];
            let q1 = q[(r, i + 1)];
            q[(r, i)] = cs * q0 + sn * q1;
            q[(r, i + 1)] = -sn * q0 + cs * q1;
        }
        t[(i + 1, i)] = 0.0;
        i += 2;
    }
}

/// Zero everything below the quasi-triangular profile (roundoff dust).
fn clean_lower_triangle(t: &mut DenseMatrix) {
    let n = t.rows();
    let mut block_start = vec![false; n];
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            block_start[i] = true;
            i += 2;
        } else {
            i += 1;
        }
    }
    for r in 0..n {
        for c in 0..r {
            let in_block = r == c + 1 && block_start[c];
            if !in_block {
                t[(r, c)] = 0.0;
            }
        }
    }
}

/// Diagonal block layout of a quasi-triangular matrix: (start, size) pairs.
pub fn schur_blocks(t: &DenseMatrix) -> Vec<(usize, usize)> {
    let n = t.rows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            blocks.push((i, 2));
            i += 2;
        } else {
            blocks.push((i, 1));
            i += 1;
        }
    }
    blocks
}

fn block_eig_re(t: &DenseMatrix, start: usize, size: usize) -> f64 {
    if size == 1 {
        t[(start, start)]
    } else {
        (t[(start, start)] + t[(start + 1, start + 1)]) / 2.0
    }
}

/// Reorder the Schur form so all blocks satisfying `select` (on the
/// eigenvalue real part) come first. Returns the dimension of the leading
/// invariant subspace.
pub fn order_schur(
    q: &mut DenseMatrix,
    t: &mut DenseMatrix,
    select: impl Fn(f64) -> bool,
) -> Result<usize> {
    let mut target = 0usize; // block index
    loop {
        let blocks = schur_blocks(t);
        let found = blocks
            .iter()
            .enumerate()
            .skip(target)
            .find(|(_, &(s, sz))| select(block_eig_re(t, s, sz)))
            .map(|(k, _)| k);
        let Some(mut k) = found else {
            let blocks = schur_blocks(t);
            let dim = blocks.iter().take(target).map(|&(_, sz)| sz).sum();
            return Ok(dim);
        };
        while k > target {
            let blocks = schur_blocks(t);
            let (s1, p) = blocks[k - 1];
            let (_, r) = blocks[k];
            swap_adjacent_blocks(q, t, s1, p, r)?;
            k -= 1;
        }
        target += 1;
    }
}

/// Swap adjacent diagonal blocks T11 (p x p, at `start`) and T22 (r x r)
/// via a Sylvester solve and a small orthogonal transformation.
fn swap_adjacent_blocks(
    q: &mut DenseMatrix,
    t: &mut DenseMatrix,
    start: usize,
    p: usize,
    r: usize,
) -> Result<()> {
    let n = t.rows();
    let a11 = t.block(start, start, p, p);
    let a12 = t.block(start, start + p, p, r);
    let a22 = t.block(start + p, start + p, r, r);
    // Solve A11 X - X A22 = -A12 so [X; I] spans the A22-invariant subspace.
    let x = solve_small_sylvester(&a11, &a22.scale(-1.0), &a12.scale(-1.0)).map_err(|_| {
        Error::SingularMatrix("Schur block swap: eigenvalues too close to separate".into())
    })?;
    let m = p + r;
    let mut v = DenseMatrix::zeros(m, r);
    v.set_block(0, 0, &x);
    v.set_block(p, 0, &DenseMatrix::identity(r));
    let w = full_qr_q(&v);
    // Similarity on the window rows/columns, accumulated into Q.
    let wt = w.transpose();
    let rows = t.block(start, 0, m, n);
    t.set_block(start, 0, &(&wt * &rows));
    let cols = t.block(0, start, n, m);
    t.set_block(0, start, &(&cols * &w));
    let qc = q.block(0, start, q.rows(), m);
    q.set_block(0, start, &(&qc * &w));
    // Enforce the swapped zero structure.
    for i in 0..p {
        for j in 0..r {
            t[(start + r + i, start + j)] = 0.0;
        }
    }
    // Re-triangularize inside the swapped blocks (split real 2x2 remnants).
    split_real_two_blocks_window(t, q, start, m);
    Ok(())
}

fn split_real_two_blocks_window(t: &mut DenseMatrix, q: &mut DenseMatrix, start: usize, len: usize) {
    // Cheap: run the global pass but only indices inside the window change.
    let _ = (start, len);
    split_real_two_blocks(t, q);
}

/// Full orthogonal factor of a tall m x r matrix via Householder QR.
fn full_qr_q(v: &DenseMatrix) -> DenseMatrix {
    let m = v.rows();
    let r = v.cols();
    let mut a = v.clone();
    let mut q = DenseMatrix::identity(m);
    for k in 0..r.min(m.saturating_sub(1)) {
        let len = m - k;
        let mut h = vec![0.0; len];
        for i in 0..len {
            h[i] = a[(k + i, k)];
        }
        let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if h[0] >= 0.0 { -norm } else { norm };
        h[0] -= alpha;
        let vn2: f64 = h.iter().map(|x| x * x).sum();
        if vn2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vn2;
        for j in k..r {
            let mut dot = 0.0;
            for i in 0..len {
                dot += h[i] * a[(k + i, j)];
            }
            let f = beta * dot;
            for i in 0..len {
                a[(k + i, j)] -= f * h[i];
            }
        }
        for row in 0..m {
            let mut dot = 0.0;
            for i in 0..len {
                dot += q[(row, k + i)] * h[i];
            }
            let f = beta * dot;
            for i in 0..len {
                q[(row, k + i)] -= f * h[i];
            }
        }
    }
    q
}

/// Solve A Y + Y B = C for small dense blocks via the Kronecker system.
pub(crate) fn solve_small_sylvester(
    a: &DenseMatrix,
    b: &DenseMatrix,
    c: &DenseMatrix,
) -> Result<DenseMatrix> {
    let p = a.rows();
    let r = b.rows();
    debug_assert_eq!(c.rows(), p);
    debug_assert_eq!(c.cols(), r);
    let m = p * r;
    // Column-stacked vec convention: (I_r (x) A + B^T (x) I_p) vec(Y) = vec(C).
    let mut k = DenseMatrix::zeros(m, m);
    for j in 0..r {
        for i in 0..p {
            let row = j * p + i;
            for jj in 0..p {
                k[(row, j * p + jj)] += a[(i, jj)];
            }
            for jj in 0..r {
                k[(row, jj * p + i)] += b[(jj, j)];
            }
        }
    }
    let mut cv = DenseMatrix::zeros(m, 1);
    for j in 0..r {
        for i in 0..p {
            cv[(j * p + i, 0)] = c[(i, j)];
        }
    }
    let y = solve_linear(&k, &cv)?;
    let mut out = DenseMatrix::zeros(p, r);
    for j in 0..r {
        for i in 0..p {
            out[(i, j)] = y[(j * p + i, 0)];
        }
    }
    Ok(out)
}
