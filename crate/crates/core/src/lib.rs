//! Well-posedness analysis for linear second-order port-Hamiltonian
//! boundary control and observation systems on a bounded interval,
//!
//! ```text
//! ∂x/∂t = P₂ ∂²(ℋx)/∂ξ² + P₀ ℋx,
//! u = W_B,1 ℋτ(x),  0 = W_B,2 ℋτ(x),  y = W_C ℋτ(x),
//! ```
//!
//! where `τ(v) = (v(b), v'(b), v(a), v'(a))`. The system is well-posed iff
//! the interconnection matrix `B₁` of [`boundary`] is invertible; the
//! [`transfer`] and [`simulator`] modules provide independent corroboration.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub mod boundary;
pub mod error;
pub mod linalg;
pub mod passivity;
pub mod registry;
pub mod sampling;
pub mod simulator;
pub mod spec;
pub mod trace;
pub mod transfer;
pub mod validate;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub use boundary::{wellposedness_verdict, BoundaryDecomposition, Verdict};
pub use error::{PhsError, Result};
pub use passivity::{check_passivity, dissipation_form_oracle, PassivityCertificate};
pub use spec::PhsSpec;
pub use validate::{validate_spec, Tolerances, ValidationReport};
