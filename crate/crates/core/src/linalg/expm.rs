//! Matrix exponential by scaling and squaring with the diagonal Padé(13)
//! approximant (Higham 2005 coefficients, θ₁₃ = 5.37).

use num_complex::Complex64;

use super::{identity, norm_1, solve};
use crate::error::Result;
use crate::CMatrix;

const THETA_13: f64 = 5.37;

const PADE_13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Number of squarings so that `‖A‖₁ / 2^k ≤ θ₁₃`.
pub fn squarings_for(norm: f64) -> u32 {
    if norm <= THETA_13 {
        0
    } else {
        (norm / THETA_13).log2().ceil() as u32
    }
}

pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let k = squarings_for(norm_1(a));
    let scaled = a * Complex64::new(0.5f64.powi(k as i32), 0.0);

    let b = |i: usize| Complex64::new(PADE_13[i], 0.0);
    let eye = identity(n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u = &scaled * (&a6 * inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &eye * b(1));
    let inner_v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = &a6 * inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &eye * b(0);

    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..k {
        r = &r * &r;
    }
    Ok(r)
}
