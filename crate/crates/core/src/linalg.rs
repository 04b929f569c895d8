//! Small dense helpers shared by the filters and the weight solver.
//!
//! Every covariance-like result is symmetrized before it leaves a routine, and
//! SPD inverses go through a Cholesky factorization rather than LU.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Replaces `m` with `(m + mᵀ) / 2`.
pub fn symmetrize_mut(m: &mut Mat) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn symmetrize(mut m: Mat) -> Mat {
    symmetrize_mut(&mut m);
    m
}

/// `dst += w · src` without allocating.
pub fn add_scaled(dst: &mut Mat, w: f64, src: &Mat) {
    debug_assert_eq!(dst.shape(), src.shape());
    for (d, s) in dst.iter_mut().zip(src.iter()) {
        *d += w * s;
    }
}

/// Cholesky factorization without any regularization.
pub fn cholesky(m: &Mat) -> Option<Cholesky<f64, Dyn>> {
    Cholesky::new(m.clone())
}

/// Cholesky factorization that retries once with a jitter of
/// `1e-12 · tr(m) / n · I` if the plain factorization fails.
pub fn cholesky_jittered(m: &Mat) -> Option<Cholesky<f64, Dyn>> {
    if let Some(c) = Cholesky::new(m.clone()) {
        return Some(c);
    }
    let n = m.nrows().max(1);
    let jitter = 1e-12 * (m.trace().abs() / n as f64).max(f64::MIN_POSITIVE);
    let shifted = m + Mat::identity(m.nrows(), m.ncols()) * jitter;
    let out = Cholesky::new(shifted);
    if out.is_some() {
        log::warn!("cholesky needed a jitter of {jitter:e}");
    }
    out
}

/// Inverse of a symmetric positive-definite matrix, symmetrized.
pub fn spd_inverse(m: &Mat) -> Option<Mat> {
    cholesky_jittered(m).map(|c| symmetrize(c.inverse()))
}

/// True when `m - tol·I` admits a Cholesky factorization.
pub fn is_positive_definite(m: &Mat, tol: f64) -> bool {
    let shifted = m - Mat::identity(m.nrows(), m.ncols()) * tol;
    Cholesky::new(shifted).is_some()
}

/// `|det m| ≤ 1e-12 · ‖m‖_F^n`.
pub fn is_numerically_singular(m: &Mat) -> bool {
    let n = m.nrows() as i32;
    let scale = m.norm().max(f64::MIN_POSITIVE).powi(n);
    m.determinant().abs() <= 1e-12 * scale
}

/// Eigenvalues of the symmetric part of `m`, ascending.
pub fn sym_eigenvalues(m: &Mat) -> Vec<f64> {
    let s = symmetrize(m.clone());
    let mut ev: Vec<f64> = s.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn min_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m).first().copied().unwrap_or(0.0)
}

pub fn max_eigenvalue(m: &Mat) -> f64 {
    sym_eigenvalues(m).last().copied().unwrap_or(0.0)
}

/// Minimum eigenvalue and its unit eigenvector for a symmetric matrix.
pub fn min_eigenpair(m: &Mat) -> (f64, Vector) {
    let eig = symmetrize(m.clone()).symmetric_eigen();
    let (idx, val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, v)| (i, *v))
        .unwrap_or((0, 0.0));
    (val, eig.eigenvectors.column(idx).into_owned())
}

/// Block-diagonal assembly.
pub fn block_diag(blocks: &[Mat]) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Stacks matrices with a common column count on top of each other.
pub fn vstack(blocks: &[Mat], cols: usize) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

pub fn vstack_vectors(parts: &[Vector]) -> Vector {
    let len: usize = parts.iter().map(|p| p.len()).sum();
    let mut out = Vector::zeros(len);
    let mut r = 0;
    for p in parts {
        out.rows_mut(r, p.len()).copy_from(p);
        r += p.len();
    }
    out
}

/// Builds a matrix from nested rows. Returns `None` on ragged input.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<Mat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return None;
    }
    Some(Mat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
