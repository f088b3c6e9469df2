//! Cyclic Jacobi eigensolver for complex Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot element and then
//! applies a real plane rotation, so the transformation stays unitary:
//!
//! ```text
//!   G = [ c          s e^{iφ} ]      a_pq = |a_pq| e^{iφ}
//!       [ -s e^{-iφ}  c       ]
//! ```
//!
//! Sweeps continue until the off-diagonal Frobenius mass falls below
//! `1e-15 ‖A‖_F`. For the dimensions used here (≤ 16) convergence takes a
//! handful of sweeps.

use num_complex::Complex64;

use super::{frobenius, identity};
use crate::error::{PhsError, Result};
use crate::CMatrix;

const MAX_SWEEPS: usize = 64;
const OFF_TOL: f64 = 1e-15;

/// Eigen-decomposition `M = U Λ U*` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Eigenvalues, descending.
    pub values: Vec<f64>,
    /// Unitary matrix whose columns are the eigenvectors, in the order of `values`.
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Rebuilds `U f(Λ) U*`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for i in 0..n {
                scaled[(i, j)] *= w;
            }
        }
        &scaled * self.vectors.adjoint()
    }
}

/// Eigenvalues (descending) and a unitary eigenvector matrix of a Hermitian
/// matrix.
///
/// Input that deviates from Hermitian by more than `1e-10 (1 + ‖M‖_F)` is
/// rejected. Each eigenvector is normalised so that its largest-magnitude
/// component (lowest index on exact ties) is real and positive, which makes
/// the output deterministic.
pub fn hermitian_eig(m: &CMatrix) -> Result<HermitianEig> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(PhsError::Dimension {
            matrix: "hermitian_eig input".into(),
            expected_rows: n,
            expected_cols: n,
            rows: n,
            cols: m.ncols(),
        });
    }
    let scale = frobenius(m);
    let residual = frobenius(&(m - m.adjoint()));
    if residual > 1e-10 * (1.0 + scale) {
        return Err(PhsError::NotHermitian { residual });
    }

    let mut a: CMatrix = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v = identity(n);

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal(&a) <= OFF_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal(&a) > OFF_TOL * scale {
        return Err(PhsError::NoConvergence(MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));

    let values: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0;
        let mut best = -1.0;
        for i in 0..n {
            let mag = v[(i, src)].norm();
            if mag > best {
                best = mag;
                pivot = i;
            }
        }
        let phase = if best > 0.0 {
            v[(pivot, src)].conj() / best
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..n {
            vectors[(i, dst)] = v[(i, src)] * phase;
        }
    }
    Ok(HermitianEig { values, vectors })
}

fn off_diagonal(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)].norm_sqr();
            }
        }
    }
    sum.sqrt()
}

fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let n = a.nrows();
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let zeta = (aqq - app) / (2.0 * mag);
    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let sp = phase * s;
    let spc = sp.conj();

    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c - akq * spc;
        a[(k, q)] = akp * sp + akq * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c - aqk * sp;
        a[(q, k)] = apk * spc + aqk * c;
    }
    a[(p, q)] = Complex64::new(0.0, 0.0);
    a[(q, p)] = Complex64::new(0.0, 0.0);
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * spc;
        v[(k, q)] = vkp * sp + vkq * c;
    }
}
