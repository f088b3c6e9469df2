use num_complex::Complex64;
use phs_core::boundary::{decompose, port_map_for};
use phs_core::linalg::{hermitian_eig, identity, inverse, op_norm, sqrt_pd};
use phs_core::passivity::{check_passivity, dissipation_form_oracle};
use phs_core::sampling::{gaussian, negate_outputs, random_admissible, random_unitary, SampleOptions};
use phs_core::transfer::{coth_csch, gamma, scalar_transfer, scalar_transfer_with_root};
use phs_core::{validate_spec, CMatrix, Tolerances};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn hermitian(seed: u64, dim: usize) -> CMatrix {
    let g = gaussian(&mut rng(seed), dim, dim);
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

fn options(seed: u64, max_n: usize) -> SampleOptions {
    let n = 1 + (seed % max_n as u64) as usize;
    let m = 1 + ((seed / 7) % (2 * n) as u64) as usize;
    SampleOptions { n, m, dissipative: seed % 3 == 0 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), dim in 1usize..=16) {
        let m = hermitian(seed, dim);
        let eig = hermitian_eig(&m).unwrap();
        let u = &eig.vectors;
        prop_assert!(op_norm(&(u.adjoint() * u - identity(dim))) < 1e-12);
        let lambda = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            eig.values.iter().map(|&v| Complex64::new(v, 0.0)),
        ));
        let scale = op_norm(&m);
        prop_assert!(op_norm(&(&m * u - u * lambda)) <= 1e-12 * scale.max(1.0));
        prop_assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn sqrt_squares_back(seed in any::<u64>(), dim in 1usize..=8) {
        let mut r = rng(seed);
        let u = random_unitary(&mut r, dim);
        let spectrum: Vec<Complex64> = (0..dim).map(|k| Complex64::new(0.1 + k as f64 * 1.3, 0.0)).collect();
        let h = &u * CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&spectrum)) * u.adjoint();
        let s = sqrt_pd(&h).unwrap();
        prop_assert!(op_norm(&(&s * &s - &h)) <= 1e-12 * op_norm(&h));
        prop_assert!(op_norm(&(&s - s.adjoint())) < 1e-13);
    }

    #[test]
    fn port_map_round_trips(n in 1usize..=4) {
        let t = port_map_for(n);
        prop_assert!(op_norm(&(inverse(&t).unwrap() * &t - identity(4 * n))) < 1e-13);
    }

    #[test]
    fn similarity_and_spectrum(seed in any::<u64>()) {
        let spec = random_admissible(&mut rng(seed), options(seed, 4));
        let dec = decompose(&spec, &Tolerances::default()).unwrap();
        let p2h = &spec.p2 * &spec.h;
        prop_assert!(dec.similarity_residual(&spec) <= 1e-11 * op_norm(&p2h));
        // Δ has the spectrum of P₂ℋ
        let schur = nalgebra::Schur::new(p2h.clone());
        let mut ev: Vec<Complex64> = schur.unpack().1.diagonal().iter().copied().collect();
        ev.sort_by(|a, b| b.im.total_cmp(&a.im));
        let mut delta: Vec<Complex64> = dec.delta.diagonal().iter().copied().collect();
        delta.sort_by(|a, b| b.im.total_cmp(&a.im));
        for (a, b) in ev.iter().zip(&delta) {
            prop_assert!((a - b).norm() <= 1e-10 * (1.0 + op_norm(&p2h)));
        }
        prop_assert!(dec.mu[..dec.nplus].iter().all(|&m| m > 0.0));
        prop_assert!(dec.mu[dec.nplus..].iter().all(|&m| m < 0.0));
    }

    #[test]
    fn skew_form_of_symmetrised_operator(seed in any::<u64>()) {
        let spec = random_admissible(&mut rng(seed), options(seed, 4));
        let h_half = sqrt_pd(&spec.h).unwrap();
        let s = &h_half * &spec.p2 * &h_half;
        prop_assert!(op_norm(&(&s + s.adjoint())) <= 1e-10 * (1.0 + op_norm(&s)));
    }

    #[test]
    fn gram_and_form_agree(seed in any::<u64>(), flip in any::<bool>()) {
        let n = 1 + (seed % 3) as usize;
        let base = random_admissible(&mut rng(seed), SampleOptions { n, m: 2 * n, dissipative: seed % 2 == 0 });
        let spec = if flip { negate_outputs(&base) } else { base };
        let cert = check_passivity(&spec, &Tolerances::default()).unwrap();
        prop_assert!(cert.agrees);
        prop_assert_eq!(cert.passed, !flip);
    }

    #[test]
    fn coth_identity_and_branch(mu in prop_oneof![-5.0f64..-0.05, 0.05f64..5.0], len in 0.1f64..4.0,
                                r in 0.01f64..200.0, w in -500.0f64..500.0) {
        let s = Complex64::new(r, w);
        let g = gamma(mu, s);
        let (c, h) = coth_csch(g * len);
        if (g * len).re < 30.0 {
            prop_assert!((c * c - h * h - 1.0).norm() < 1e-10);
        }
        let a = scalar_transfer_with_root(g, len);
        let b = scalar_transfer_with_root(-g, len);
        prop_assert!(op_norm(&(&a - &b)) <= 1e-12 * (1.0 + op_norm(&a)));
        let direct = scalar_transfer(mu, len, s).unwrap();
        prop_assert!(op_norm(&(direct - a)) == 0.0);
    }
}

#[test]
fn dissipation_oracle_confirms_certificates() {
    let tol = Tolerances::default();
    for seed in 0..20u64 {
        let spec = random_admissible(&mut rng(seed), options(seed, 3));
        assert!(validate_spec(&spec, &tol).unwrap().passed());
        assert!(check_passivity(&spec, &tol).unwrap().passed);
        let v = dissipation_form_oracle(&spec, 500, seed).unwrap();
        assert!(v <= 1e-8, "seed {seed}: {v}");
        let bad = negate_outputs(&spec);
        if !check_passivity(&bad, &tol).unwrap().passed {
            assert!(dissipation_form_oracle(&bad, 500, seed).unwrap() > 0.0, "seed {seed}");
        }
    }
}
