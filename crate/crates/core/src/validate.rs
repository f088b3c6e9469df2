//! Structural assumptions on a system description.

use std::fmt;

use serde::Serialize;

use crate::error::Result;
use crate::linalg::{hermitian_eig, hermitian_part, op_norm, sigma_ratio};
use crate::spec::PhsSpec;
use crate::CMatrix;

/// Numerical thresholds used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    /// Structural residuals must satisfy `r ≤ structural · (1 + ‖M‖)`.
    pub structural: f64,
    /// Semidefiniteness allows eigenvalues of the wrong sign up to `semidefinite · scale`.
    pub semidefinite: f64,
    /// A matrix is invertible when `σ_min / σ_max > singular_ratio`.
    pub singular_ratio: f64,
    /// Ratios in `[marginal_ratio, singular_ratio]` are reported as marginal.
    pub marginal_ratio: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { structural: 1e-10, semidefinite: 1e-9, singular_ratio: 1e-9, marginal_ratio: 1e-12 }
    }
}

impl Tolerances {
    pub fn with_structural(structural: f64) -> Self {
        Self { structural, ..Self::default() }
    }
}

/// Direction of the comparison between residual and threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    /// Passes when `residual ≤ threshold`.
    AtMost,
    /// Passes when `residual > threshold`.
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub residual: f64,
    pub threshold: f64,
    pub bound: Bound,
}

impl Check {
    fn new(name: &str, residual: f64, threshold: f64, bound: Bound) -> Self {
        let passed = match bound {
            Bound::AtMost => residual <= threshold,
            Bound::Above => residual > threshold,
        };
        Self { name: name.into(), passed, residual, threshold, bound }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let op = match c.bound {
                Bound::AtMost => "<=",
                Bound::Above => ">",
            };
            writeln!(
                f,
                "  [{}] {:<16} residual {:>12.4e}  (needs {op} {:.3e})",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.residual,
                c.threshold
            )?;
        }
        write!(f, "  overall: {}", if self.passed() { "pass" } else { "FAIL" })
    }
}

pub const SKEW_P2: &str = "skew(P2)";
pub const SKEW_P0: &str = "skew(P0)";
pub const INVERTIBLE_P2: &str = "invertible(P2)";
pub const HERMITIAN_H: &str = "hermitian(H)";
pub const POSITIVE_H: &str = "positive(H)";
pub const FULL_ROW_RANK: &str = "rank(WB1;WB2;WC)";

/// Runs every structural check. Shape problems are returned as errors;
/// numerical violations show up as failed checks in the report.
pub fn validate_spec(spec: &PhsSpec, tol: &Tolerances) -> Result<ValidationReport> {
    spec.check_dimensions()?;
    let mut checks = Vec::with_capacity(6);

    let skew = |m: &CMatrix| op_norm(&(m + m.adjoint()));
    let scaled = |m: &CMatrix| tol.structural * (1.0 + op_norm(m));

    checks.push(Check::new(SKEW_P2, skew(&spec.p2), scaled(&spec.p2), Bound::AtMost));
    checks.push(Check::new(SKEW_P0, skew(&spec.p0), scaled(&spec.p0), Bound::AtMost));
    checks.push(Check::new(INVERTIBLE_P2, sigma_ratio(&spec.p2), tol.singular_ratio, Bound::Above));

    let h_asym = op_norm(&(&spec.h - spec.h.adjoint()));
    checks.push(Check::new(HERMITIAN_H, h_asym, scaled(&spec.h), Bound::AtMost));

    let eig = hermitian_eig(&hermitian_part(&spec.h))?;
    let h_norm = eig.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let positivity = if h_norm > 0.0 { eig.min() / h_norm } else { 0.0 };
    checks.push(Check::new(POSITIVE_H, positivity, tol.singular_ratio, Bound::Above));

    let stacked = spec.stacked_ports();
    checks.push(Check::new(FULL_ROW_RANK, sigma_ratio(&stacked), tol.singular_ratio, Bound::Above));

    Ok(ValidationReport { checks })
}
