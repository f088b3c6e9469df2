//! Frequency-domain evaluation.
//!
//! In diagonal coordinates every eigen-channel `k` is the scalar system
//! `∂x/∂t = i μ_k ∂²x/∂ξ²` with a closed-form transfer function; the system
//! transfer function follows from the feedback identity
//! `G(s) = (C̃₁ + C̃₂G_s(s)) (B̃₁ + B̃₂G_s(s))⁻¹`.

mod oracle;
mod scan;

pub use oracle::{bvp_transfer_matrix, bvp_transfer_oracle, shooting_segments};
pub use scan::{
    omega_grid, vertical_line_scan, vertical_line_scan_with, Assessment, FrequencyPoint, ScanConfig, TransferScan,
};

use num_complex::Complex64;

use crate::boundary::BoundaryDecomposition;
use crate::error::{PhsError, Result};
use crate::linalg::cond;
use crate::CMatrix;

/// Above this `Re(γL)` the hyperbolic functions are replaced by their asymptotic forms.
const ASYMPTOTIC_RE: f64 = 30.0;
/// Loop matrices with a larger 2-norm condition number count as singular.
pub const LOOP_SINGULAR_COND: f64 = 1e12;

/// `γ` with `γ² = −is/μ` and `Re γ > 0`.
pub fn gamma(mu: f64, s: Complex64) -> Complex64 {
    let g = (Complex64::new(0.0, -1.0) * s / mu).sqrt();
    if g.re < 0.0 {
        -g
    } else {
        g
    }
}

/// `(coth w, 1/sinh w)` for `Re w ≠ 0` without overflow.
pub fn coth_csch(w: Complex64) -> (Complex64, Complex64) {
    if w.re < 0.0 {
        let (c, s) = coth_csch(-w);
        return (-c, -s);
    }
    let one = Complex64::new(1.0, 0.0);
    if w.re > ASYMPTOTIC_RE {
        return (one, 2.0 * (-w).exp());
    }
    if w.norm() < 1.0 {
        let sh = w.sinh();
        return (w.cosh() / sh, one / sh);
    }
    let e = (-2.0 * w).exp();
    let denom = one - e;
    ((one + e) / denom, 2.0 * (-w).exp() / denom)
}

fn check_frequency(s: Complex64) -> Result<()> {
    if !(s.re > 0.0 && s.re.is_finite() && s.im.is_finite()) {
        return Err(PhsError::InvalidParameter(format!("need Re s > 0, got s = {s}")));
    }
    Ok(())
}

/// Transfer function of the scalar channel with flux inputs `(i μ x'(b), i μ x'(a))`
/// and outputs `(μx(b), −μx(a))` on an interval of length `L`.
pub fn scalar_transfer(mu: f64, length: f64, s: Complex64) -> Result<CMatrix> {
    check_frequency(s)?;
    if mu == 0.0 || !mu.is_finite() || !(length > 0.0) {
        return Err(PhsError::InvalidParameter(format!("need mu != 0 and L > 0, got mu = {mu}, L = {length}")));
    }
    Ok(scalar_transfer_with_root(gamma(mu, s), length))
}

/// Evaluates the closed form for an arbitrary square root `γ` of `−is/μ`.
pub fn scalar_transfer_with_root(gamma: Complex64, length: f64) -> CMatrix {
    let (coth, csch) = coth_csch(gamma * length);
    let f = Complex64::new(0.0, 1.0) / gamma;
    CMatrix::from_row_slice(2, 2, &[-f * coth, f * csch, f * csch, -f * coth])
}

/// `min_x |α(x) sinh α(x)| / r` with `α(x) = r/x + ix`.
pub fn sinh_lower_bound_check(r: f64, xs: &[f64]) -> f64 {
    xs.iter()
        .map(|&x| {
            let a = r / x;
            // |sinh(a + ib)|² = sinh²a + sin²b
            let sinh_abs = (a.sinh().powi(2) + x.sin().powi(2)).sqrt();
            a.hypot(x) * sinh_abs / r
        })
        .fold(f64::INFINITY, f64::min)
}

/// Block transfer function of the decoupled diagonal system; channel `k`
/// occupies rows and columns `k` (end `b`) and `n + k` (end `a`).
pub fn assemble_gs(decomp: &BoundaryDecomposition, length: f64, s: Complex64) -> Result<CMatrix> {
    let n = decomp.n;
    let mut g = CMatrix::zeros(2 * n, 2 * n);
    for (k, &mu) in decomp.mu.iter().enumerate() {
        let block = scalar_transfer(mu, length, s)?;
        let idx = [k, n + k];
        for (i, &p) in idx.iter().enumerate() {
            for (j, &q) in idx.iter().enumerate() {
                g[(p, q)] = block[(i, j)];
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone)]
pub struct ClosedLoop {
    /// `m × m` transfer matrix.
    pub g: CMatrix,
    /// 2-norm condition number of `B̃₁ + B̃₂G_s(s)`.
    pub cond_loop: f64,
}

/// `G(s)` by the feedback identity, solved against the loop matrix.
///
/// For `m < 2n` the extended inputs carry the homogeneous constraints, so
/// only the first `m` columns are kept. The diagonal channels ignore `P₀`,
/// so this is the transfer function of the system with `P₀ = 0`; a bounded
/// `P₀ℋ` does not change well-posedness.
pub fn closed_loop_transfer(decomp: &BoundaryDecomposition, length: f64, s: Complex64) -> Result<ClosedLoop> {
    let gs = assemble_gs(decomp, length, s)?;
    let loop_matrix = &decomp.b1t + &decomp.b2t * &gs;
    let output = &decomp.c1t + &decomp.c2t * &gs;
    let cond_loop = cond(&loop_matrix);
    // X · L = R  ⟺  Lᵀ Xᵀ = Rᵀ
    let xt = loop_matrix
        .transpose()
        .lu()
        .solve(&output.transpose())
        .filter(|x| x.iter().all(|z| z.re.is_finite() && z.im.is_finite()))
        .ok_or(PhsError::Singular { what: format!("loop matrix at s = {s}"), ratio: 1.0 / cond_loop })?;
    let g = xt.transpose().columns(0, decomp.m).into_owned();
    Ok(ClosedLoop { g, cond_loop })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::decompose;
    use crate::linalg::op_norm;
    use crate::registry;
    use crate::validate::Tolerances;

    #[test]
    fn scalar_transfer_symmetric() {
        for &(mu, l, s) in &[(1.0, 1.0, Complex64::new(1.0, 2.0)), (-0.3, 2.5, Complex64::new(0.1, -7.0))] {
            let g = scalar_transfer(mu, l, s).unwrap();
            assert_eq!(g[(0, 0)], g[(1, 1)]);
            assert_eq!(g[(0, 1)], g[(1, 0)]);
        }
    }

    #[test]
    fn branch_invariance() {
        let s = Complex64::new(2.0, 3.0);
        let g = gamma(0.7, s);
        let a = scalar_transfer_with_root(g, 1.3);
        let b = scalar_transfer_with_root(-g, 1.3);
        assert!(op_norm(&(a - b)) < 1e-14);
    }

    #[test]
    fn large_argument_is_finite() {
        let g = scalar_transfer(1.0, 1.0, Complex64::new(1e8, 1e8)).unwrap();
        assert!(g.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!(g[(0, 1)].norm() == 0.0 || g[(0, 1)].norm() < 1e-300);
    }

    #[test]
    fn coth_identity() {
        for w in [Complex64::new(0.01, 0.3), Complex64::new(2.0, -5.0), Complex64::new(25.0, 1.0)] {
            let (c, s) = coth_csch(w);
            assert!((c * c - s * s - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn decays_along_real_axis() {
        assert!(op_norm(&scalar_transfer(1.0, 1.0, Complex64::new(1e4, 0.0)).unwrap()) < 0.02);
    }

    #[test]
    fn rejects_left_half_plane() {
        assert!(scalar_transfer(1.0, 1.0, Complex64::new(-1.0, 0.0)).is_err());
        assert!(scalar_transfer(0.0, 1.0, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn sinh_bound_grid_holds() {
        let xs: Vec<f64> = (0..400)
            .map(|i| {
                let x = 10f64.powf(-3.0 + 6.0 * (i / 2) as f64 / 199.0);
                if i % 2 == 0 {
                    x
                } else {
                    -x
                }
            })
            .collect();
        assert!(sinh_lower_bound_check(1.0, &xs) >= 1.0 - 1e-12);
        assert!(sinh_lower_bound_check(1e-6, &xs) >= 1.0 - 1e-12);
        let kpi: Vec<f64> = (1..200).map(|k| k as f64 * std::f64::consts::PI).collect();
        let tight = sinh_lower_bound_check(1.0, &kpi);
        assert!(tight >= 1.0 - 1e-12 && tight < 1.0 + 1e-4);
    }

    #[test]
    fn gs_layout() {
        let dec = decompose(&registry::eb_generic(1.0, 1.0), &Tolerances::default()).unwrap();
        let s = Complex64::new(1.0, 1.0);
        let g = assemble_gs(&dec, 1.0, s).unwrap();
        for (i, j) in [(0, 1), (0, 3), (1, 0), (1, 2), (2, 1), (3, 0)] {
            assert_eq!(g[(i, j)], Complex64::new(0.0, 0.0));
        }
        let g0 = scalar_transfer(dec.mu[0], 1.0, s).unwrap();
        assert_eq!(g[(0, 2)], g0[(0, 1)]);
    }

    #[test]
    fn scalar_spec_closed_loop_is_scalar_transfer() {
        let spec = registry::scalar_channel(1.0);
        let dec = decompose(&spec, &Tolerances::default()).unwrap();
        let s = Complex64::new(1.0, 1.0);
        let cl = closed_loop_transfer(&dec, 1.0, s).unwrap();
        let direct = scalar_transfer(1.0, 1.0, s).unwrap();
        assert!(op_norm(&(cl.g - direct)) < 1e-14);
        assert!((cl.cond_loop - 1.0).abs() < 1e-12);
    }
}
