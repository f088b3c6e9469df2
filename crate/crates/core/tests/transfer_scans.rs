use phs_core::registry;
use phs_core::transfer::{vertical_line_scan, Assessment};

fn assess(key: &str, r: f64) -> phs_core::transfer::TransferScan {
    let spec = registry::lookup(key).unwrap().default_spec();
    vertical_line_scan(&spec, r, 1e4, 256).unwrap()
}

#[test]
fn well_posed_examples_bounded() {
    for key in ["schrodinger", "roller-beam", "eb-generic"] {
        for r in [1.0, 10.0, 100.0] {
            let scan = assess(key, r);
            println!("{key} r={r}: sup {:.6} levels {:?} windows {:?}", scan.sup_norm, scan.level_sups, scan.window_sups);
            assert_eq!(scan.assessment, Assessment::Bounded, "{key} at r = {r}");
        }
    }
}

#[test]
fn illposed_beam_grows() {
    for r in [1.0, 10.0, 100.0] {
        let scan = assess("eb-illposed", r);
        println!("r={r}: windows {:?} max cond {:.3e}", scan.window_sups, scan.max_cond_loop);
        assert_eq!(scan.assessment, Assessment::GrowingUnbounded, "r = {r}");
        assert!(scan.window_sups[3] > 10.0 * scan.window_sups[0]);
    }
}

#[test]
fn scalar_transfer_decays_like_inverse_root() {
    use num_complex::Complex64;
    use phs_core::linalg::op_norm;
    use phs_core::transfer::scalar_transfer;
    for mu in [0.1, 1.0, -3.0] {
        let scaled: Vec<f64> = [1e2f64, 1e3, 1e4, 1e5]
            .iter()
            .map(|&r| r.sqrt() * op_norm(&scalar_transfer(mu, 1.0, Complex64::new(r, 0.0)).unwrap()))
            .collect();
        let (lo, hi) = scaled.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
        assert!(hi / lo < 1.05, "mu = {mu}: {scaled:?}");
        assert!((hi - mu.abs().sqrt()).abs() / hi < 0.05, "mu = {mu}: {scaled:?}");
    }
}

#[test]
fn random_diagonal_blocks_vanish_at_large_abscissa() {
    use num_complex::Complex64;
    use phs_core::boundary::decompose;
    use phs_core::linalg::op_norm;
    use phs_core::sampling::{random_admissible, SampleOptions};
    use phs_core::transfer::assemble_gs;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    for n in 1..=3 {
        let spec = random_admissible(&mut rng, SampleOptions { n, m: 2 * n, dissipative: false });
        let dec = decompose(&spec, &phs_core::Tolerances::default()).unwrap();
        let norms: Vec<f64> = [1e2, 1e3, 1e4]
            .iter()
            .map(|&r| op_norm(&assemble_gs(&dec, spec.length(), Complex64::new(r, 0.0)).unwrap()))
            .collect();
        assert!(norms.windows(2).all(|w| w[1] < w[0]), "{norms:?}");
        assert!(norms[2] < 0.1, "{norms:?}");
    }
}
