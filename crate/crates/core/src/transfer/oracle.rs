//! Transfer function from the stationary boundary value problem, without
//! diagonalisation or feedback algebra.
//!
//! `s x = P₂(ℋx)'' + P₀ℋx` with `v = ℋx` reads `w' = A w` for
//! `w = (v, v')`, `A = [0 I; M 0]`, `M = P₂⁻¹(sℋ⁻¹ − P₀)`. The interval is
//! split into `K` shooting segments with continuity conditions so that no
//! single propagator grows beyond a few e-foldings.

use num_complex::Complex64;

use crate::error::{PhsError, Result};
use crate::linalg::{expm, identity, inverse, op_norm};
use crate::spec::PhsSpec;
use crate::CMatrix;

/// Segments needed so each propagates over at most about two e-foldings.
pub fn shooting_segments(length: f64, m_norm: f64) -> usize {
    ((length * m_norm.sqrt() / 2.0).ceil() as usize).clamp(1, 4096)
}

/// Boundary value solution for every column of `inputs` (`m × k`); returns `W_C ℋτ(x)` (`m × k`).
fn solve_bvp(spec: &PhsSpec, s: Complex64, inputs: &CMatrix) -> Result<CMatrix> {
    if !(s.re > 0.0) {
        return Err(PhsError::InvalidParameter(format!("need Re s > 0, got s = {s}")));
    }
    let n = spec.n;
    let w = 2 * n;
    let m_mat = inverse(&spec.p2)? * (inverse(&spec.h)? * s - &spec.p0);
    let length = spec.length();
    let segments = shooting_segments(length, op_norm(&m_mat));

    let mut a = CMatrix::zeros(w, w);
    a.view_mut((0, n), (n, n)).copy_from(&identity(n));
    a.view_mut((n, 0), (n, n)).copy_from(&m_mat);
    let step = expm(&(a * Complex64::new(length / segments as f64, 0.0)))?;

    // Unknowns w_0 (at a), …, w_K (at b).
    let unknowns = (segments + 1) * w;
    let mut sys = CMatrix::zeros(unknowns, unknowns);
    for j in 0..segments {
        let r = j * w;
        sys.view_mut((r, j * w), (w, w)).copy_from(&(-&step));
        sys.view_mut((r, (j + 1) * w), (w, w)).copy_from(&identity(w));
    }
    // Trace z = (w_K, w_0).
    let wb = spec.extended_input_map();
    let r = segments * w;
    sys.view_mut((r, segments * w), (w, w)).copy_from(&wb.columns(0, w));
    sys.view_mut((r, 0), (w, w)).copy_from(&wb.columns(w, w));

    let mut rhs = CMatrix::zeros(unknowns, inputs.ncols());
    rhs.view_mut((r, 0), (spec.m, inputs.ncols())).copy_from(inputs);

    let sol = sys.lu().solve(&rhs).filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
    let Some(sol) = sol else {
        return Err(PhsError::NotInResolvent { s, ratio: 0.0 });
    };
    let mut z = CMatrix::zeros(2 * w, inputs.ncols());
    z.view_mut((0, 0), (w, inputs.ncols())).copy_from(&sol.rows(segments * w, w));
    z.view_mut((w, 0), (w, inputs.ncols())).copy_from(&sol.rows(0, w));
    Ok(&spec.wc * z)
}

/// `G(s) u₀` from the boundary value problem.
pub fn bvp_transfer_oracle(spec: &PhsSpec, s: Complex64, u0: &[Complex64]) -> Result<Vec<Complex64>> {
    if u0.len() != spec.m {
        return Err(PhsError::Dimension {
            matrix: "u0".into(),
            expected_rows: spec.m,
            expected_cols: 1,
            rows: u0.len(),
            cols: 1,
        });
    }
    let y = solve_bvp(spec, s, &CMatrix::from_column_slice(spec.m, 1, u0))?;
    Ok(y.iter().copied().collect())
}

/// The full `m × m` matrix `G(s)`.
pub fn bvp_transfer_matrix(spec: &PhsSpec, s: Complex64) -> Result<CMatrix> {
    solve_bvp(spec, s, &identity(spec.m))
}
