//! Canonical ports, interconnection matrices and the well-posedness verdict.
//!
//! The canonical ports are `u_s = (i v'(b), i v'(a))` and
//! `y_s = (v(b), −v(a))` with `v = ℋx`. Every admissible port choice is a
//! linear combination `u = B₁u_s + B₂y_s`, `y = C₁u_s + C₂y_s`, and the system
//! is well-posed iff `B₁` is invertible. For `m < 2n` the rows of `W_B,2` are
//! appended to the input map first, which gives a sufficient condition only.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;

use crate::error::{PhsError, Result};
use crate::linalg::{block_diag, hermitian_eig, inv_sqrt_pd, inverse, op_norm, singular_values, sqrt_pd};
use crate::passivity::check_passivity;
use crate::spec::{matrix_to_json, PhsSpec};
use crate::validate::{validate_spec, Tolerances};
use crate::CMatrix;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    WellPosed,
    /// `m < 2n` with invertible extended `B₁`.
    WellPosedSufficient,
    NotWellPosed,
    /// `m < 2n` with singular extended `B₁`; necessity is not established there.
    Inconclusive,
    NumericallyMarginal,
}

impl Verdict {
    pub fn is_well_posed(self) -> bool {
        matches!(self, Verdict::WellPosed | Verdict::WellPosedSufficient)
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::WellPosed => "WellPosed",
            Verdict::WellPosedSufficient => "WellPosed (sufficient)",
            Verdict::NotWellPosed => "NotWellPosed",
            Verdict::Inconclusive => "Inconclusive (necessity unproven for m < 2n)",
            Verdict::NumericallyMarginal => "NumericallyMarginal",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// `T` with `ℋτ(x) = T [u_s; y_s]`.
pub fn port_map(spec: &PhsSpec) -> CMatrix {
    port_map_for(spec.n)
}

pub fn port_map_for(n: usize) -> CMatrix {
    let mut t = CMatrix::zeros(4 * n, 4 * n);
    for k in 0..n {
        t[(k, 2 * n + k)] = Complex64::new(1.0, 0.0);
        t[(n + k, k)] = -I;
        t[(2 * n + k, 3 * n + k)] = Complex64::new(-1.0, 0.0);
        t[(3 * n + k, n + k)] = -I;
    }
    t
}

#[derive(Debug, Clone)]
pub struct Diagonalization {
    pub q: CMatrix,
    pub q_inv: CMatrix,
    /// `i · diag(mu)`.
    pub delta: CMatrix,
    /// Positive entries first, each group in descending order.
    pub mu: Vec<f64>,
    pub nplus: usize,
}

/// `Q P₂ℋ Q⁻¹ = Δ` through the Hermitian matrix `−i ℋ^{1/2} P₂ ℋ^{1/2}`.
pub fn diagonalize(spec: &PhsSpec, tol: &Tolerances) -> Result<Diagonalization> {
    let h_half = sqrt_pd(&spec.h)?;
    let h_minus_half = inv_sqrt_pd(&spec.h)?;
    let s = &h_half * &spec.p2 * &h_half;
    let herm = (&s * -I + (&s * -I).adjoint()) * Complex64::new(0.5, 0.0);
    let eig = hermitian_eig(&herm)?;

    let scale = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let smallest = eig.values.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if !(scale > 0.0 && smallest > tol.singular_ratio * scale) {
        return Err(PhsError::Singular {
            what: "P2 H (spectrum of the diagonal form)".into(),
            ratio: if scale > 0.0 { smallest / scale } else { 0.0 },
        });
    }

    // values are descending, so positives come out descending followed by negatives descending
    let mut order: Vec<usize> = (0..eig.values.len()).collect();
    order.sort_by(|&a, &b| {
        let (x, y) = (eig.values[a], eig.values[b]);
        (x < 0.0).cmp(&(y < 0.0)).then(y.total_cmp(&x))
    });
    let n = spec.n;
    let mut u = CMatrix::zeros(n, n);
    let mut mu = Vec::with_capacity(n);
    for (j, &k) in order.iter().enumerate() {
        u.set_column(j, &eig.vectors.column(k));
        mu.push(eig.values[k]);
    }
    let nplus = mu.iter().filter(|&&m| m > 0.0).count();
    let delta = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, mu.iter().map(|&m| I * m)));
    Ok(Diagonalization { q: u.adjoint() * &h_half, q_inv: h_minus_half * u, delta, mu, nplus })
}

#[derive(Debug, Clone)]
pub struct Interconnection {
    pub b1: CMatrix,
    pub b2: CMatrix,
    pub c1: CMatrix,
    pub c2: CMatrix,
}

/// `[B₁ B₂] = [W_B,1; W_B,2] T` and `[C₁ C₂] = W_C T`.
pub fn extract_interconnection(spec: &PhsSpec) -> Interconnection {
    let n = spec.n;
    let t = port_map(spec);
    let bb = spec.extended_input_map() * &t;
    let cc = &spec.wc * &t;
    Interconnection {
        b1: bb.columns(0, 2 * n).into_owned(),
        b2: bb.columns(2 * n, 2 * n).into_owned(),
        c1: cc.columns(0, 2 * n).into_owned(),
        c2: cc.columns(2 * n, 2 * n).into_owned(),
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryDecomposition {
    pub n: usize,
    pub m: usize,
    pub length: f64,
    pub q: CMatrix,
    pub q_inv: CMatrix,
    pub delta: CMatrix,
    pub nplus: usize,
    pub mu: Vec<f64>,
    pub t: CMatrix,
    /// Interconnection matrices of the extended (square) input map.
    pub b1: CMatrix,
    pub b2: CMatrix,
    pub c1: CMatrix,
    pub c2: CMatrix,
    pub b1t: CMatrix,
    pub b2t: CMatrix,
    pub c1t: CMatrix,
    pub c2t: CMatrix,
    pub verdict: Verdict,
    pub sigma_min_b1: f64,
    pub sigma_max_b1: f64,
}

impl BoundaryDecomposition {
    pub fn sigma_ratio_b1(&self) -> f64 {
        if self.sigma_max_b1 > 0.0 {
            self.sigma_min_b1 / self.sigma_max_b1
        } else {
            0.0
        }
    }

    pub fn is_full_port(&self) -> bool {
        self.m == 2 * self.n
    }

    /// `‖Q P₂ℋ Q⁻¹ − Δ‖`.
    pub fn similarity_residual(&self, spec: &PhsSpec) -> f64 {
        op_norm(&(&self.q * &spec.p2 * &spec.h * &self.q_inv - &self.delta))
    }

    pub fn text_report(&self, name: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("system: {name}  (n = {}, m = {})\n", self.n, self.m));
        if !self.is_full_port() {
            out.push_str("input map extended by the W_B,2 rows\n");
        }
        out.push_str(&format!("diagonal form: mu = {:?}, nplus = {}\n", self.mu, self.nplus));
        out.push_str("B1 =\n");
        out.push_str(&format_matrix(&self.b1));
        out.push_str(&format!(
            "sigma_min(B1) = {:.6e}, sigma_max(B1) = {:.6e}, ratio = {:.6e}\n",
            self.sigma_min_b1,
            self.sigma_max_b1,
            self.sigma_ratio_b1()
        ));
        out.push_str(&format!("verdict: {}\n", self.verdict));
        out
    }

    pub fn to_json(&self, name: &str) -> serde_json::Value {
        json!({
            "name": name,
            "n": self.n,
            "m": self.m,
            "verdict": self.verdict,
            "verdict_label": self.verdict.label(),
            "sigma_min_B1": self.sigma_min_b1,
            "sigma_max_B1": self.sigma_max_b1,
            "sigma_ratio_B1": self.sigma_ratio_b1(),
            "mu": self.mu,
            "nplus": self.nplus,
            "Q": matrix_to_json(&self.q),
            "Qinv": matrix_to_json(&self.q_inv),
            "Delta": matrix_to_json(&self.delta),
            "T": matrix_to_json(&self.t),
            "B1": matrix_to_json(&self.b1),
            "B2": matrix_to_json(&self.b2),
            "C1": matrix_to_json(&self.c1),
            "C2": matrix_to_json(&self.c2),
            "B1t": matrix_to_json(&self.b1t),
            "B2t": matrix_to_json(&self.b2t),
            "C1t": matrix_to_json(&self.c1t),
            "C2t": matrix_to_json(&self.c2t),
        })
    }
}

pub fn format_matrix(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        out.push_str("  [");
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let clean = |x: f64| if x.abs() < 5e-16 { 0.0 } else { x };
            out.push_str(&format!(" {:>8.4}{:+8.4}i", clean(z.re), clean(z.im)));
        }
        out.push_str(" ]\n");
    }
    out
}

/// Classifies `σ_min/σ_max` of the (extended) `B₁`.
pub fn classify(ratio: f64, full_port: bool, tol: &Tolerances) -> Verdict {
    if ratio > tol.singular_ratio {
        if full_port {
            Verdict::WellPosed
        } else {
            Verdict::WellPosedSufficient
        }
    } else if ratio < tol.marginal_ratio {
        if full_port {
            Verdict::NotWellPosed
        } else {
            Verdict::Inconclusive
        }
    } else {
        Verdict::NumericallyMarginal
    }
}

/// Assembles every matrix without checking the structural hypotheses.
pub fn decompose(spec: &PhsSpec, tol: &Tolerances) -> Result<BoundaryDecomposition> {
    spec.check_dimensions()?;
    let diag = diagonalize(spec, tol)?;
    let ic = extract_interconnection(spec);
    let right = {
        let block = inverse(&spec.p2)? * &diag.q_inv;
        block_diag(&[&block, &block])
    };
    let sv = singular_values(&ic.b1);
    let sigma_max_b1 = sv.first().copied().unwrap_or(0.0);
    let sigma_min_b1 = sv.last().copied().unwrap_or(0.0);
    let ratio = if sigma_max_b1 > 0.0 { sigma_min_b1 / sigma_max_b1 } else { 0.0 };
    Ok(BoundaryDecomposition {
        n: spec.n,
        m: spec.m,
        length: spec.length(),
        t: port_map(spec),
        b1t: &ic.b1 * &right,
        b2t: &ic.b2 * &right,
        c1t: &ic.c1 * &right,
        c2t: &ic.c2 * &right,
        b1: ic.b1,
        b2: ic.b2,
        c1: ic.c1,
        c2: ic.c2,
        q: diag.q,
        q_inv: diag.q_inv,
        delta: diag.delta,
        nplus: diag.nplus,
        mu: diag.mu,
        verdict: classify(ratio, spec.is_full_port(), tol),
        sigma_min_b1,
        sigma_max_b1,
    })
}

/// Validates, certifies passivity, then decides well-posedness from `B₁`.
pub fn wellposedness_verdict(spec: &PhsSpec, tol: &Tolerances) -> Result<BoundaryDecomposition> {
    let report = validate_spec(spec, tol)?;
    if !report.passed() {
        let names: Vec<&str> = report.failures().iter().map(|c| c.name.as_str()).collect();
        return Err(PhsError::Validation(format!("failed checks: {}", names.join(", "))));
    }
    let cert = check_passivity(spec, tol)?;
    if !cert.passed {
        let detail = cert
            .gram
            .as_ref()
            .and_then(|g| g.diagnostic.clone())
            .unwrap_or_else(|| format!("largest eigenvalue {:.3e} > {:.3e}", cert.max_eigenvalue, cert.threshold));
        return Err(PhsError::NotPassive(detail));
    }
    decompose(spec, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, rm};
    use crate::registry;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn port_map_scalar_entries() {
        let t = port_map_for(1);
        let nz: Vec<(usize, usize, Complex64)> = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .filter(|&(i, j)| t[(i, j)].norm() > 0.0)
            .map(|(i, j)| (i, j, t[(i, j)]))
            .collect();
        assert_eq!(
            nz,
            vec![
                (0, 2, Complex64::new(1.0, 0.0)),
                (1, 0, -I),
                (2, 3, Complex64::new(-1.0, 0.0)),
                (3, 1, -I),
            ]
        );
    }

    #[test]
    fn port_map_inverts() {
        for n in 1..=3 {
            let t = port_map_for(n);
            let ti = inverse(&t).unwrap();
            assert!(op_norm(&(&t * ti - identity(4 * n))) < 1e-15);
        }
    }

    #[test]
    fn rotation_generator_spectrum() {
        let mut spec = registry::eb_generic(1.0, 1.0);
        spec.h = identity(2);
        let d = diagonalize(&spec, &tol()).unwrap();
        assert_eq!(d.nplus, 1);
        assert!((d.mu[0] - 1.0).abs() < 1e-14 && (d.mu[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_case_diagonal() {
        let spec = registry::schrodinger(2.5);
        let d = diagonalize(&spec, &tol()).unwrap();
        assert!((d.delta[(0, 0)] - I * 2.5).norm() < 1e-14);
        assert_eq!(d.nplus, 1);
    }

    #[test]
    fn schrodinger_b1() {
        let dec = wellposedness_verdict(&registry::schrodinger(1.0), &tol()).unwrap();
        assert_eq!(dec.verdict, Verdict::WellPosed);
        // u = (ψ'(1), iψ'(0)) = (i u_s,b, −u_s,a)
        let expected = crate::linalg::cm(2, 2, &[I * -1.0, 0.0.into(), 0.0.into(), Complex64::new(1.0, 0.0)]);
        assert!(op_norm(&(&dec.b1 - expected)) < 1e-15, "{}", format_matrix(&dec.b1));
    }

    #[test]
    fn illposed_beam_has_rank_two() {
        let dec = wellposedness_verdict(&registry::eb_illposed(1.0, 1.0), &tol()).unwrap();
        assert_eq!(dec.verdict, Verdict::NotWellPosed);
        assert_eq!(crate::linalg::numerical_rank(&dec.b1, 1e-9), 2);
        assert!(dec.sigma_ratio_b1() < 1e-12);
        let mut expected = CMatrix::zeros(4, 4);
        expected[(0, 2)] = -I;
        expected[(3, 1)] = -I;
        assert!(op_norm(&(&dec.b1 - expected)) < 1e-15);
    }

    #[test]
    fn roller_beam_sufficient() {
        let dec = wellposedness_verdict(&registry::roller_beam(1.0, 1.0), &tol()).unwrap();
        assert_eq!(dec.verdict, Verdict::WellPosedSufficient);
        // −i times a permutation
        let scaled = &dec.b1 * I;
        for i in 0..4 {
            let ones = (0..4).filter(|&j| (scaled[(i, j)] - Complex64::new(1.0, 0.0)).norm() < 1e-15).count();
            assert_eq!(ones, 1);
        }
    }

    #[test]
    fn stacked_interconnection_invertible_for_full_ports() {
        let dec = decompose(&registry::eb_generic(1.0, 1.0), &tol()).unwrap();
        let mut stack = CMatrix::zeros(8, 8);
        stack.view_mut((0, 0), (4, 4)).copy_from(&dec.b1);
        stack.view_mut((0, 4), (4, 4)).copy_from(&dec.b2);
        stack.view_mut((4, 0), (4, 4)).copy_from(&dec.c1);
        stack.view_mut((4, 4), (4, 4)).copy_from(&dec.c2);
        assert!(crate::linalg::sigma_ratio(&stack) > 1e-3);
    }

    #[test]
    fn hypotheses_enforced() {
        let mut spec = registry::schrodinger(1.0);
        spec.wc = -spec.wc;
        assert!(matches!(wellposedness_verdict(&spec, &tol()), Err(PhsError::NotPassive(_))));
        spec.p2 = rm(1, 1, &[1.0]);
        assert!(matches!(wellposedness_verdict(&spec, &tol()), Err(PhsError::Validation(_))));
    }

    #[test]
    fn classification_thresholds() {
        let t = tol();
        assert_eq!(classify(1e-3, true, &t), Verdict::WellPosed);
        assert_eq!(classify(1e-10, true, &t), Verdict::NumericallyMarginal);
        assert_eq!(classify(1e-13, true, &t), Verdict::NotWellPosed);
        assert_eq!(classify(1e-13, false, &t), Verdict::Inconclusive);
        assert_eq!(classify(0.5, false, &t), Verdict::WellPosedSufficient);
    }

    #[test]
    fn json_report_has_verdict() {
        let dec = decompose(&registry::schrodinger(1.0), &tol()).unwrap();
        let v = dec.to_json("schrodinger");
        assert_eq!(v["verdict"], "WellPosed");
        assert_eq!(v["B1"].as_array().unwrap().len(), 2);
    }
}
