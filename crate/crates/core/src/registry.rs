//! Built-in systems: the Schrödinger equation, three Euler-Bernoulli beam
//! port choices, and the scalar channel that every diagonalised system is
//! built from.
//!
//! All examples live on `[0, 1]`. Output maps are chosen co-located with
//! the inputs, so each system satisfies the energy balance with equality.

use num_complex::Complex64;

use crate::boundary::Verdict;
use crate::error::{PhsError, Result};
use crate::linalg::{rm, vstack};
use crate::spec::PhsSpec;
use crate::trace::{TraceBlock, TraceConvention};
use crate::CMatrix;

use TraceBlock::{SlopeAtA, SlopeAtB, ValueAtA, ValueAtB};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub struct ExampleEntry {
    pub key: &'static str,
    pub expected: Verdict,
    pub provenance: &'static str,
    /// Overridable physical parameters and their defaults.
    pub params: &'static [(&'static str, f64)],
    build: fn(&[f64]) -> Result<PhsSpec>,
}

impl ExampleEntry {
    pub fn default_spec(&self) -> PhsSpec {
        self.build_with(&[]).expect("defaults are valid")
    }

    /// Builds the system with `name=value` overrides. Every parameter must be positive.
    pub fn build_with(&self, overrides: &[(String, f64)]) -> Result<PhsSpec> {
        let mut values: Vec<f64> = self.params.iter().map(|&(_, v)| v).collect();
        for (name, value) in overrides {
            let Some(idx) = self.params.iter().position(|&(p, _)| p == name) else {
                let known: Vec<&str> = self.params.iter().map(|&(p, _)| p).collect();
                return Err(PhsError::InvalidParameter(format!(
                    "example '{}' has no parameter '{name}' (known: {})",
                    self.key,
                    known.join(", ")
                )));
            };
            if !(value.is_finite() && *value > 0.0) {
                return Err(PhsError::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
            values[idx] = *value;
        }
        (self.build)(&values)
    }
}

static ENTRIES: [ExampleEntry; 5] = [
    ExampleEntry {
        key: "schrodinger",
        expected: Verdict::WellPosed,
        provenance: "free Schrödinger particle on [0,1], Neumann-type inputs at both ends",
        params: &[("hbar_2m", 1.0)],
        build: |p| Ok(schrodinger(p[0])),
    },
    ExampleEntry {
        key: "eb-illposed",
        expected: Verdict::NotWellPosed,
        provenance: "Euler-Bernoulli beam, velocity and angular velocity at 0, moment and shear at 1",
        params: &[("rho", 1.0), ("EI", 1.0)],
        build: |p| Ok(eb_illposed(p[0], p[1])),
    },
    ExampleEntry {
        key: "roller-beam",
        expected: Verdict::WellPosedSufficient,
        provenance: "Euler-Bernoulli beam, roller support at 0, angular-velocity control at the free end",
        params: &[("rho", 1.0), ("EI", 1.0)],
        build: |p| Ok(roller_beam(p[0], p[1])),
    },
    ExampleEntry {
        key: "eb-generic",
        expected: Verdict::WellPosed,
        provenance: "Euler-Bernoulli beam, all four slope traces as inputs",
        params: &[("rho", 1.0), ("EI", 1.0)],
        build: |p| Ok(eb_generic(p[0], p[1])),
    },
    ExampleEntry {
        key: "scalar",
        expected: Verdict::WellPosed,
        provenance: "scalar channel dx/dt = i mu x'' with flux inputs and value outputs",
        params: &[("mu", 1.0)],
        build: |p| Ok(scalar_channel(p[0])),
    },
];

pub fn entries() -> &'static [ExampleEntry] {
    &ENTRIES
}

pub fn lookup(key: &str) -> Option<&'static ExampleEntry> {
    ENTRIES.iter().find(|e| e.key == key)
}

pub fn build(key: &str, overrides: &[(String, f64)]) -> Result<PhsSpec> {
    lookup(key)
        .ok_or_else(|| PhsError::InvalidParameter(format!("unknown example '{key}'")))?
        .build_with(overrides)
}

fn rows(tc: &TraceConvention, picks: &[(TraceBlock, usize, Complex64)]) -> CMatrix {
    let rows: Vec<CMatrix> = picks.iter().map(|&(b, k, c)| tc.unit_row(b, k, c)).collect();
    let refs: Vec<&CMatrix> = rows.iter().collect();
    if refs.is_empty() {
        CMatrix::zeros(0, tc.len())
    } else {
        vstack(&refs)
    }
}

/// `i ∂ψ/∂t = -c ∂²ψ/∂ξ²` with `c = ħ/2m`, i.e. `P₂ = i`, `ℋ = c`.
///
/// Inputs `(ψ'(1), i c ψ'(0))`; outputs `(-i c² ψ(1), -c ψ(0))`.
pub fn schrodinger(c: f64) -> PhsSpec {
    let tc = TraceConvention::new(1);
    let wb1 = rows(&tc, &[(SlopeAtB, 0, ONE / c), (SlopeAtA, 0, I)]);
    let wc = rows(&tc, &[(ValueAtB, 0, -I * c), (ValueAtA, 0, -ONE)]);
    PhsSpec::new(
        "schrodinger",
        0.0,
        1.0,
        CMatrix::from_element(1, 1, I),
        CMatrix::zeros(1, 1),
        rm(1, 1, &[c]),
        wb1,
        CMatrix::zeros(0, 4),
        wc,
    )
    .expect("schrodinger dimensions")
}

fn beam_operators(rho: f64, ei: f64) -> (CMatrix, CMatrix) {
    (rm(2, 2, &[0.0, -1.0, 1.0, 0.0]), rm(2, 2, &[1.0 / rho, 0.0, 0.0, ei]))
}

/// State `(ρ w_t, w_ξξ)`, so `ℋx = (w_t, EI w_ξξ)`.
///
/// Inputs: velocity slope and velocity at 0, moment and shear at 1.
pub fn eb_illposed(rho: f64, ei: f64) -> PhsSpec {
    let tc = TraceConvention::new(2);
    let (p2, h) = beam_operators(rho, ei);
    let wb1 = rows(&tc, &[(SlopeAtA, 0, ONE), (ValueAtA, 0, ONE), (ValueAtB, 1, ONE), (SlopeAtB, 1, ONE)]);
    let wc = rows(&tc, &[(ValueAtA, 1, -ONE), (SlopeAtA, 1, ONE), (SlopeAtB, 0, ONE), (ValueAtB, 0, -ONE)]);
    PhsSpec::new("eb-illposed", 0.0, 1.0, p2, CMatrix::zeros(2, 2), h, wb1, CMatrix::zeros(0, 8), wc)
        .expect("eb-illposed dimensions")
}

/// Roller support at 0 (`w_tξ = 0`, shear `= 0`), zero shear at 1 and the
/// angular velocity at 1 as the single input; output is the moment at 1.
pub fn roller_beam(rho: f64, ei: f64) -> PhsSpec {
    let tc = TraceConvention::new(2);
    let (p2, h) = beam_operators(rho, ei);
    let wb1 = rows(&tc, &[(SlopeAtB, 0, ONE)]);
    let wb2 = rows(&tc, &[(SlopeAtA, 0, ONE), (SlopeAtA, 1, ONE), (SlopeAtB, 1, ONE)]);
    let wc = rows(&tc, &[(ValueAtB, 1, ONE)]);
    PhsSpec::new("roller-beam", 0.0, 1.0, p2, CMatrix::zeros(2, 2), h, wb1, wb2, wc)
        .expect("roller-beam dimensions")
}

/// All four slope traces as inputs with co-located value outputs.
pub fn eb_generic(rho: f64, ei: f64) -> PhsSpec {
    let tc = TraceConvention::new(2);
    let (p2, h) = beam_operators(rho, ei);
    let wb1 = rows(&tc, &[(SlopeAtB, 0, ONE), (SlopeAtB, 1, ONE), (SlopeAtA, 0, ONE), (SlopeAtA, 1, ONE)]);
    let wc = rows(&tc, &[(ValueAtB, 1, ONE), (ValueAtB, 0, -ONE), (ValueAtA, 1, -ONE), (ValueAtA, 0, ONE)]);
    PhsSpec::new("eb-generic", 0.0, 1.0, p2, CMatrix::zeros(2, 2), h, wb1, CMatrix::zeros(0, 8), wc)
        .expect("eb-generic dimensions")
}

/// `∂x/∂t = i μ ∂²x/∂ξ²` written with `P₂ = i sgn μ`, `ℋ = |μ|`.
///
/// With these port maps the energy balance holds with equality for `μ > 0`;
/// for `μ < 0` the sign of the supplied power flips.
pub fn scalar_channel(mu: f64) -> PhsSpec {
    let tc = TraceConvention::new(1);
    let wb1 = rows(&tc, &[(SlopeAtB, 0, I), (SlopeAtA, 0, I)]);
    let wc = rows(&tc, &[(ValueAtB, 0, ONE), (ValueAtA, 0, -ONE)]);
    PhsSpec::new(
        "scalar",
        0.0,
        1.0,
        CMatrix::from_element(1, 1, I * mu.signum()),
        CMatrix::zeros(1, 1),
        rm(1, 1, &[mu.abs()]),
        wb1,
        CMatrix::zeros(0, 4),
        wc,
    )
    .expect("scalar dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{validate_spec, Tolerances};

    #[test]
    fn keys_unique_and_required_present() {
        let mut keys: Vec<&str> = entries().iter().map(|e| e.key).collect();
        for k in ["schrodinger", "eb-illposed", "roller-beam", "eb-generic"] {
            assert!(keys.contains(&k));
        }
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), entries().len());
    }

    #[test]
    fn every_entry_validates() {
        for e in entries() {
            let report = validate_spec(&e.default_spec(), &Tolerances::default()).unwrap();
            assert!(report.passed(), "{}: {report}", e.key);
        }
    }

    #[test]
    fn overrides() {
        let spec = build("roller-beam", &[("rho".into(), 2.0)]).unwrap();
        assert!((spec.h[(0, 0)].re - 0.5).abs() < 1e-15);
        assert!(build("roller-beam", &[("mass".into(), 2.0)]).is_err());
        assert!(build("roller-beam", &[("rho".into(), -2.0)]).is_err());
        assert!(build("nosuch", &[]).is_err());
    }
}
