//! Impedance passivity of the boundary port choice.
//!
//! For `v = ℋx` with `x ∈ H²`, integration by parts and skew-adjointness of
//! `P₂` give `Re⟨P₂v'', v⟩ = q(z)` with
//! `q(z) = Re[v(b)* P₂ v'(b) − v(a)* P₂ v'(a)]` on the trace vector `z`.
//! The energy balance `dH/dt ≤ Re u*y` therefore holds iff the Hermitian form
//! `q(z) − Re (W_B,1 z)* W_C z` is negative semidefinite on `ker W_B,2`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{
    block_diag, hermitian_eig, hermitian_part, identity, inverse, null_space, op_norm, sigma_ratio, solve, vstack,
};
use crate::spec::PhsSpec;
use crate::validate::Tolerances;
use crate::CMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PassivityMode {
    /// `m = 2n`: the form is tested on all traces.
    Full,
    /// `m < 2n`: the form is restricted to `ker W_B,2`.
    Constrained,
}

/// Inverse-Gram reformulation, available when `m = 2n`.
#[derive(Debug, Clone, Serialize)]
pub struct GramCheck {
    /// `M⁻¹`, or `None` when `M` is numerically singular.
    #[serde(skip)]
    pub gram_inverse: Option<CMatrix>,
    /// Smallest eigenvalue of `Σ − M⁻¹`.
    pub min_eigenvalue: f64,
    /// `‖M⁻¹ − Σ‖`; zero for a lossless port choice.
    pub equality_residual: f64,
    pub passed: bool,
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PassivityCertificate {
    pub mode: PassivityMode,
    /// The Hermitian form that was tested, in kernel coordinates when constrained.
    #[serde(skip)]
    pub witness: CMatrix,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Largest eigenvalue allowed for a pass.
    pub threshold: f64,
    pub passed: bool,
    pub gram: Option<GramCheck>,
    /// Whether the Gram condition and the form agree (always true when absent).
    pub agrees: bool,
}

/// Hermitian `4n × 4n` matrix of the boundary form `q`.
pub fn boundary_form(p2: &CMatrix) -> CMatrix {
    let n = p2.nrows();
    let half = Complex64::new(0.5, 0.0);
    let mut k = CMatrix::zeros(2 * n, 2 * n);
    k.view_mut((0, n), (n, n)).copy_from(&(p2 * half));
    k.view_mut((n, 0), (n, n)).copy_from(&(p2 * -half));
    block_diag(&[&k, &(-&k)])
}

/// `R = [0 −P₂⁻¹; P₂⁻¹ 0]`.
pub fn r_matrix(p2: &CMatrix) -> Result<CMatrix> {
    let n = p2.nrows();
    let p2_inv = inverse(p2)?;
    let mut r = CMatrix::zeros(2 * n, 2 * n);
    r.view_mut((0, n), (n, n)).copy_from(&(-&p2_inv));
    r.view_mut((n, 0), (n, n)).copy_from(&p2_inv);
    Ok(r)
}

/// `[0 I; I 0]` with `k × k` blocks.
pub fn sigma(k: usize) -> CMatrix {
    let mut s = CMatrix::zeros(2 * k, 2 * k);
    s.view_mut((0, k), (k, k)).copy_from(&identity(k));
    s.view_mut((k, 0), (k, k)).copy_from(&identity(k));
    s
}

/// The `m = 2n` Gram matrix `M = W̃ Σ W̃*` with `W̃ = [W̃_B; W̃_C]`.
pub fn gram_matrix(spec: &PhsSpec) -> Result<CMatrix> {
    let n = spec.n;
    let r = r_matrix(&spec.p2)?;
    let mut phi = CMatrix::zeros(4 * n, 4 * n);
    phi.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&r);
    phi.view_mut((0, 2 * n), (2 * n, 2 * n)).copy_from(&identity(2 * n));
    phi.view_mut((2 * n, 0), (2 * n, 2 * n)).copy_from(&(-&r));
    phi.view_mut((2 * n, 2 * n), (2 * n, 2 * n)).copy_from(&identity(2 * n));
    phi *= Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let w = vstack(&[&spec.extended_input_map(), &spec.wc]) * phi;
    Ok(&w * sigma(2 * n) * w.adjoint())
}

fn gram_check(spec: &PhsSpec, tol: &Tolerances) -> Result<GramCheck> {
    let m = gram_matrix(spec)?;
    let ratio = sigma_ratio(&m);
    if ratio <= tol.singular_ratio {
        return Ok(GramCheck {
            gram_inverse: None,
            min_eigenvalue: f64::NAN,
            equality_residual: f64::NAN,
            passed: false,
            diagnostic: Some(format!("Gram matrix singular (sigma_min/sigma_max = {ratio:.3e})")),
        });
    }
    let m_inv = inverse(&m)?;
    let sig = sigma(spec.m);
    let diff = hermitian_part(&(&sig - &m_inv));
    let eig = hermitian_eig(&diff)?;
    let scale = 1.0 + op_norm(&m_inv);
    Ok(GramCheck {
        equality_residual: op_norm(&(&m_inv - &sig)),
        gram_inverse: Some(m_inv),
        min_eigenvalue: eig.min(),
        passed: eig.min() >= -tol.semidefinite * scale,
        diagnostic: None,
    })
}

pub fn check_passivity(spec: &PhsSpec, tol: &Tolerances) -> Result<PassivityCertificate> {
    spec.check_dimensions()?;
    let supply = &spec.wb1.adjoint() * &spec.wc;
    let form = hermitian_part(&(boundary_form(&spec.p2) - hermitian_part(&supply)));
    let scale = 1.0 + op_norm(&spec.p2) + op_norm(&spec.wb1) * op_norm(&spec.wc);

    let (mode, witness) = if spec.is_full_port() {
        (PassivityMode::Full, form)
    } else {
        let basis = null_space(&spec.wb2, tol.singular_ratio);
        (PassivityMode::Constrained, hermitian_part(&(basis.adjoint() * form * &basis)))
    };
    let (min_eigenvalue, max_eigenvalue) = if witness.nrows() == 0 {
        (0.0, 0.0)
    } else {
        let eig = hermitian_eig(&witness)?;
        (eig.min(), eig.max())
    };
    let threshold = tol.semidefinite * scale;
    let form_passed = max_eigenvalue <= threshold;

    let gram = if spec.is_full_port() { Some(gram_check(spec, tol)?) } else { None };
    let (passed, agrees) = match &gram {
        Some(g) => (form_passed && g.passed, g.passed == form_passed),
        None => (form_passed, true),
    };
    Ok(PassivityCertificate { mode, witness, min_eigenvalue, max_eigenvalue, threshold, passed, gram, agrees })
}

/// `Re∫ v* P₂ v'' − Re u*y` for the polynomial `v` with trace vector `z`
/// plus the bubble `(ξ−a)²(ξ−b)²(c₀ + c₁ t)`, `t = (ξ−a)/(b−a)`, per component.
///
/// The integral uses composite Simpson with 1000 panels.
pub fn energy_gap(spec: &PhsSpec, z: &CMatrix, bubble: &[[Complex64; 2]]) -> f64 {
    const PANELS: usize = 1000;
    let n = spec.n;
    let (a, b) = (spec.a, spec.b);
    let len = b - a;
    let second = |xi: f64, k: usize| -> (Complex64, Complex64) {
        let t = (xi - a) / len;
        let (h00, h10, h01, h11) = (
            2.0 * t.powi(3) - 3.0 * t * t + 1.0,
            t.powi(3) - 2.0 * t * t + t,
            -2.0 * t.powi(3) + 3.0 * t * t,
            t.powi(3) - t * t,
        );
        let l2 = len * len;
        let (d00, d10, d01, d11) =
            ((12.0 * t - 6.0) / l2, (6.0 * t - 4.0) / l2, (6.0 - 12.0 * t) / l2, (6.0 * t - 2.0) / l2);
        let (vb, sb, va, sa) = (z[k], z[n + k], z[2 * n + k], z[3 * n + k]);
        let base = va * h00 + sa * (len * h10) + vb * h01 + sb * (len * h11);
        let base_pp = va * d00 + sa * (len * d10) + vb * d01 + sb * (len * d11);

        let (p, q) = ((xi - a).powi(2), (xi - b).powi(2));
        let (dp, dq) = (2.0 * (xi - a), 2.0 * (xi - b));
        let pq_p = dp * q + p * dq;
        let pq_pp = 2.0 * q + 2.0 * dp * dq + 2.0 * p;
        let c = &bubble[k];
        let lin = c[0] + c[1] * t;
        let dlin = c[1] / len;
        (base + lin * (p * q), base_pp + lin * pq_pp + dlin * (2.0 * pq_p))
    };

    let h = len / PANELS as f64;
    let mut integral = 0.0;
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut vpp = v.clone();
    for i in 0..=PANELS {
        let w = if i == 0 || i == PANELS { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
        let xi = a + i as f64 * h;
        for k in 0..n {
            (v[k], vpp[k]) = second(xi, k);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..n {
            let p2v: Complex64 = (0..n).map(|c| spec.p2[(r, c)] * vpp[c]).sum();
            acc += v[r].conj() * p2v;
        }
        integral += w * acc.re;
    }
    let lhs = integral * h / 3.0;
    let rhs = (&spec.wb1 * z).dotc(&(&spec.wc * z)).re;
    lhs - rhs
}

/// Quadrature check of the energy inequality on random polynomial states.
///
/// Each trial draws a unit trace vector in `ker W_B,2` and a random bubble,
/// so `v = ℋx` has degree at most five. Returns the largest
/// [`energy_gap`] observed; `≤ 0` up to quadrature error for passive ports.
pub fn dissipation_form_oracle(spec: &PhsSpec, trials: usize, seed: u64) -> Result<f64> {
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    };

    // Projector onto ker W_B,2 through the normal equations.
    let projector = if spec.wb2.nrows() == 0 {
        identity(4 * n)
    } else {
        let w = &spec.wb2;
        identity(4 * n) - w.adjoint() * solve(&(w * w.adjoint()), w)?
    };

    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let raw = CMatrix::from_fn(4 * n, 1, |_, _| normal());
        let mut z = &projector * raw;
        let norm = z.norm();
        if norm > 0.0 {
            z /= Complex64::new(norm, 0.0);
        }
        let bubble: Vec<[Complex64; 2]> = (0..n).map(|_| [normal(), normal()]).collect();
        worst = worst.max(energy_gap(spec, &z, &bubble));
    }
    Ok(if trials == 0 { 0.0 } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry;

    #[test]
    fn boundary_form_reproduces_q() {
        let spec = registry::eb_generic(1.0, 1.0);
        let qb = boundary_form(&spec.p2);
        let z = CMatrix::from_fn(8, 1, |i, _| Complex64::new(i as f64 * 0.3 - 1.0, (i * i) as f64 * 0.1));
        let direct = {
            let tc = spec.trace();
            let col = |blk, k| z[tc.index(blk, k)];
            use crate::trace::TraceBlock::*;
            let vb = CMatrix::from_fn(2, 1, |k, _| col(ValueAtB, k));
            let sb = CMatrix::from_fn(2, 1, |k, _| col(SlopeAtB, k));
            let va = CMatrix::from_fn(2, 1, |k, _| col(ValueAtA, k));
            let sa = CMatrix::from_fn(2, 1, |k, _| col(SlopeAtA, k));
            (vb.adjoint() * &spec.p2 * sb - va.adjoint() * &spec.p2 * sa)[(0, 0)].re
        };
        assert!(((z.adjoint() * qb * &z)[(0, 0)].re - direct).abs() < 1e-13);
    }

    #[test]
    fn scalar_channel_gram_equality() {
        let cert = check_passivity(&registry::scalar_channel(1.0), &Tolerances::default()).unwrap();
        assert!(cert.passed && cert.agrees);
        let gram = cert.gram.unwrap();
        assert!(gram.equality_residual < 1e-12, "{}", gram.equality_residual);
        assert!(cert.max_eigenvalue.abs() < 1e-12);
    }

    #[test]
    fn scalar_channel_negative_mu_supplies_reversed_power() {
        let spec = registry::scalar_channel(-1.0);
        let tol = Tolerances::default();
        assert!(!check_passivity(&spec, &tol).unwrap().passed);
        let flipped = crate::sampling::negate_outputs(&spec);
        let cert = check_passivity(&flipped, &tol).unwrap();
        assert!(cert.passed && cert.agrees);
    }

    #[test]
    fn every_example_is_passive() {
        for e in registry::entries() {
            let cert = check_passivity(&e.default_spec(), &Tolerances::default()).unwrap();
            assert!(cert.passed, "{}", e.key);
            assert!(cert.agrees, "{}", e.key);
        }
    }

    #[test]
    fn roller_beam_uses_constrained_mode() {
        let cert = check_passivity(&registry::roller_beam(1.0, 1.0), &Tolerances::default()).unwrap();
        assert_eq!(cert.mode, PassivityMode::Constrained);
        assert_eq!(cert.witness.nrows(), 5);
        assert!(cert.gram.is_none());
    }

    #[test]
    fn flipped_outputs_fail_both_tests() {
        let mut spec = registry::eb_generic(2.0, 0.5);
        spec.wc = -spec.wc;
        let cert = check_passivity(&spec, &Tolerances::default()).unwrap();
        assert!(!cert.passed);
        assert!(cert.agrees);
        assert!(dissipation_form_oracle(&spec, 50, 3).unwrap() > 1e-3);
    }

    #[test]
    fn oracle_on_passing_spec() {
        let v = dissipation_form_oracle(&registry::schrodinger(1.0), 200, 1).unwrap();
        assert!(v <= 1e-8, "{v}");
    }

    #[test]
    fn zero_state_has_zero_gap() {
        let spec = registry::eb_generic(1.0, 1.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(energy_gap(&spec, &CMatrix::zeros(8, 1), &[[zero; 2]; 2]), 0.0);
    }

    #[test]
    fn quadrature_matches_integration_by_parts() {
        // With no bubble the gap must equal z*(Q - Re W_B1* W_C)z.
        let spec = registry::eb_illposed(1.0, 1.0);
        let z = CMatrix::from_fn(8, 1, |i, _| Complex64::new((i as f64).sin(), (i as f64).cos()));
        let zero = Complex64::new(0.0, 0.0);
        let gap = energy_gap(&spec, &z, &[[zero; 2]; 2]);
        let form = boundary_form(&spec.p2) - hermitian_part(&(spec.wb1.adjoint() * &spec.wc));
        let expected = (z.adjoint() * form * &z)[(0, 0)].re;
        assert!((gap - expected).abs() < 1e-10, "{gap} vs {expected}");
    }
}
