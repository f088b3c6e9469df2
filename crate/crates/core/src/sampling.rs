//! Random admissible systems for property tests.
//!
//! With `Φ = (1/√2)[R I; −R I]` the boundary form is `q(Φφ) = ½ φ*Σφ`, and
//! `Re u*y = ½ w*Σw` for `w = (u, y)`. Ports `[W_B; W_C] = G Φ⁻¹` with a
//! Σ-unitary `G` (`G*ΣG = Σ`) are therefore lossless, and adding `D u` with
//! `D ≽ 0` to the outputs makes them dissipative.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::boundary::extract_interconnection;
use crate::linalg::{identity, inverse, sigma_ratio, vstack};
use crate::passivity::r_matrix;
use crate::spec::PhsSpec;
use crate::CMatrix;

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// Haar-distributed unitary matrix (QR of a Gaussian with phase-corrected diagonal).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = gaussian(rng, n, n).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

pub fn random_skew<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    let g = gaussian(rng, n, n);
    (&g - g.adjoint()) * Complex64::new(0.5 * scale, 0.0)
}

fn hermitian_with_spectrum(u: &CMatrix, values: &[Complex64]) -> CMatrix {
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values));
    u * d * u.adjoint()
}

#[derive(Debug, Clone, Copy)]
pub struct SampleOptions {
    pub n: usize,
    pub m: usize,
    pub dissipative: bool,
}

/// A spec satisfying every structural assumption with passive ports.
pub fn random_admissible<R: Rng + ?Sized>(rng: &mut R, opts: SampleOptions) -> PhsSpec {
    let SampleOptions { n, m, dissipative } = opts;
    assert!(n > 0 && m > 0 && m <= 2 * n);

    // P₂ = U diag(±iσ) U*, σ ∈ [0.5, 2]
    let u = random_unitary(rng, n);
    let p2_spec: Vec<Complex64> = (0..n)
        .map(|_| {
            let sigma = rng.random_range(0.5..2.0);
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Complex64::new(0.0, sign * sigma)
        })
        .collect();
    let p2 = hermitian_with_spectrum(&u, &p2_spec);
    let p2 = (&p2 - p2.adjoint()) * Complex64::new(0.5, 0.0);
    let p0 = random_skew(rng, n, 0.5);

    // ℋ with eigenvalues log-uniform in [0.1, 10]
    let v = random_unitary(rng, n);
    let h_spec: Vec<Complex64> =
        (0..n).map(|_| Complex64::new(10f64.powf(rng.random_range(-1.0..1.0)), 0.0)).collect();
    let h = hermitian_with_spectrum(&v, &h_spec);
    let h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);

    // Σ-unitary G as a product of elementary factors
    let k = 2 * n;
    let half = Complex64::new(0.5, 0.0);
    let a = identity(k) + gaussian(rng, k, k) * half;
    let a_inv_adj = inverse(&a).expect("perturbed identity is invertible").adjoint();
    let s_lower = random_skew(rng, k, 0.5);
    let s_upper = random_skew(rng, k, 0.5);
    let block = |tl: &CMatrix, tr: &CMatrix, bl: &CMatrix, br: &CMatrix| {
        let mut g = CMatrix::zeros(2 * k, 2 * k);
        g.view_mut((0, 0), (k, k)).copy_from(tl);
        g.view_mut((0, k), (k, k)).copy_from(tr);
        g.view_mut((k, 0), (k, k)).copy_from(bl);
        g.view_mut((k, k), (k, k)).copy_from(br);
        g
    };
    let (eye, zero) = (identity(k), CMatrix::zeros(k, k));
    let g = block(&a, &zero, &zero, &a_inv_adj) * block(&eye, &zero, &s_lower, &eye) * block(&eye, &s_upper, &zero, &eye);

    let r = r_matrix(&p2).expect("P2 invertible by construction");
    let phi = block(&r, &eye, &(-&r), &eye) * Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let w = g * inverse(&phi).expect("phi invertible");
    let wb = w.rows(0, k).into_owned();
    let mut wc = w.rows(k, k).into_owned();
    if dissipative {
        let kk = gaussian(rng, k, k) * Complex64::new(0.3, 0.0);
        wc += &kk * kk.adjoint() * &wb;
    }

    PhsSpec::new(
        format!("random-n{n}-m{m}"),
        0.0,
        rng.random_range(0.5..2.0),
        p2,
        p0,
        h,
        wb.rows(0, m).into_owned(),
        wb.rows(m, k - m).into_owned(),
        wc.rows(0, m).into_owned(),
    )
    .expect("sampled dimensions are consistent")
}

/// Rejection-samples until the extended `B₁` is comfortably invertible.
pub fn random_well_posed<R: Rng + ?Sized>(rng: &mut R, opts: SampleOptions) -> PhsSpec {
    loop {
        let spec = random_admissible(rng, opts);
        if sigma_ratio(&extract_interconnection(&spec).b1) > 1e-3 {
            return spec;
        }
    }
}

/// The same system with `W_C ↦ −W_C`; fails passivity unless the supply vanishes.
pub fn negate_outputs(spec: &PhsSpec) -> PhsSpec {
    let mut out = spec.clone();
    out.wc = -&out.wc;
    out.name = format!("{}-negated", spec.name);
    out
}

/// `[W_B,1; W_B,2; W_C]`, used to check the full-rank assumption on samples.
pub fn port_stack(spec: &PhsSpec) -> CMatrix {
    vstack(&[&spec.wb1, &spec.wb2, &spec.wc])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::passivity::{check_passivity, sigma};
    use crate::validate::{validate_spec, Tolerances};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(&mut rng, 5);
        assert!(crate::linalg::op_norm(&(u.adjoint() * &u - identity(5))) < 1e-13);
    }

    #[test]
    fn samples_validate_and_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=3 {
            for m in 1..=2 * n {
                for dissipative in [false, true] {
                    let spec = random_admissible(&mut rng, SampleOptions { n, m, dissipative });
                    let tol = Tolerances::default();
                    assert!(validate_spec(&spec, &tol).unwrap().passed(), "n={n} m={m}");
                    let cert = check_passivity(&spec, &tol).unwrap();
                    assert!(cert.passed && cert.agrees, "n={n} m={m} {cert:?}");
                }
            }
        }
    }

    #[test]
    fn lossless_full_port_gram_is_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let spec = random_admissible(&mut rng, SampleOptions { n: 2, m: 4, dissipative: false });
        let m_inv = inverse(&crate::passivity::gram_matrix(&spec).unwrap()).unwrap();
        assert!(crate::linalg::op_norm(&(m_inv - sigma(4))) < 1e-8);
    }

    #[test]
    fn negated_outputs_fail() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = negate_outputs(&random_admissible(&mut rng, SampleOptions { n: 2, m: 3, dissipative: true }));
        assert!(!check_passivity(&spec, &Tolerances::default()).unwrap().passed);
    }
}
