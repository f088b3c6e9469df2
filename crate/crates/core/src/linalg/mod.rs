//! Dense complex linear-algebra kernels shared by every module.
//!
//! Singular values and LU solves are delegated to `nalgebra`; the Hermitian
//! eigensolver and the matrix exponential live in the submodules.

mod expm;
mod jacobi;

pub use expm::{expm, squarings_for};
pub use jacobi::{hermitian_eig, HermitianEig};

use num_complex::Complex64;

use crate::error::{PhsError, Result};
use crate::CMatrix;

/// Builds a matrix from row-major entries.
pub fn cm(rows: usize, cols: usize, entries: &[Complex64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_row_slice(rows, cols, entries)
}

/// Real-valued convenience constructor.
pub fn rm(rows: usize, cols: usize, entries: &[f64]) -> CMatrix {
    assert_eq!(entries.len(), rows * cols);
    CMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| Complex64::new(x, 0.0)))
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum.
pub fn norm_1(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn all_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Singular values in descending order. Empty for a matrix with a zero dimension.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Spectral norm (largest singular value).
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// `σ_min / σ_max` over the `min(rows, cols)` singular values; 0 for a zero matrix.
pub fn sigma_ratio(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

/// 2-norm condition number; infinite when singular.
pub fn cond(m: &CMatrix) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Number of singular values above `ratio · σ_max`.
pub fn numerical_rank(m: &CMatrix, ratio: f64) -> usize {
    let sv = singular_values(m);
    let Some(&hi) = sv.first() else { return 0 };
    if hi == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > ratio * hi).count()
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Orthonormal basis (as columns) of `ker M`, treating singular values at or
/// below `ratio · σ_max` as zero.
pub fn null_space(m: &CMatrix, ratio: f64) -> CMatrix {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return CMatrix::zeros(0, 0);
    }
    if rows == 0 {
        return identity(cols);
    }
    // Pad to at least square so the SVD returns a full right basis.
    let padded = if rows < cols {
        let mut p = CMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let hi = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| hi == 0.0 || svd.singular_values[i] <= ratio * hi)
        .collect();
    let mut basis = CMatrix::zeros(cols, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        for k in 0..cols {
            basis[(k, j)] = v_t[(i, k)].conj();
        }
    }
    basis
}

/// Solves `A X = B` by partially pivoted LU.
pub fn solve(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(PhsError::Dimension {
            matrix: "linear system".into(),
            expected_rows: a.ncols(),
            expected_cols: b.ncols(),
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    a.clone().lu().solve(b).ok_or_else(|| PhsError::Singular {
        what: "linear system matrix".into(),
        ratio: 0.0,
    })
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    solve(a, &identity(a.nrows()))
}

/// Hermitian positive-definite square root `S` with `S S = H`.
pub fn sqrt_pd(h: &CMatrix) -> Result<CMatrix> {
    let eig = positive_eig(h)?;
    Ok(hermitian_part(&eig.map_values(f64::sqrt)))
}

/// `H^{-1/2}` for Hermitian positive-definite `H`.
pub fn inv_sqrt_pd(h: &CMatrix) -> Result<CMatrix> {
    let eig = positive_eig(h)?;
    Ok(hermitian_part(&eig.map_values(|x| 1.0 / x.sqrt())))
}

fn positive_eig(h: &CMatrix) -> Result<HermitianEig> {
    let eig = hermitian_eig(h)?;
    let min = eig.min();
    if eig.values.is_empty() || min <= 0.0 {
        return Err(PhsError::NotPositiveDefinite { min_eigenvalue: min });
    }
    Ok(eig)
}

/// Block-diagonal matrix with the given blocks.
pub fn block_diag(blocks: &[&CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Stacks matrices with equal column counts on top of each other.
pub fn vstack(blocks: &[&CMatrix]) -> CMatrix {
    let cols = blocks.iter().map(|b| b.ncols()).max().unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        if b.nrows() > 0 {
            assert_eq!(b.ncols(), cols, "vstack column mismatch");
            out.view_mut((r, 0), b.shape()).copy_from(*b);
        }
        r += b.nrows();
    }
    out
}
