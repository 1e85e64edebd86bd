// SPDX-License-Identifier: Apache-2.0

//! Matrix exponential via scaling-and-squaring with the diagonal Padé(13)
//! approximant (Higham 2005).

use super::decomp::solve;
use super::Matrix;
use crate::error::Result;
use crate::scalar::Scalar;

/// Padé(13) numerator coefficients; the denominator uses the same values
/// with alternating sign.
const PADE13: [f64; 14] = [
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

/// 1-norm bound below which Padé(13) is accurate to unit roundoff in f64.
const THETA13: f64 = 5.371_920_351_148_152;

/// `e^M` for a square matrix with finite entries.
pub fn expm<T: Scalar>(m: &Matrix<T>) -> Result<Matrix<T>> {
    m.require_square()?;
    m.check_finite()?;
    let n = m.rows();
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    if n == 1 {
        return Ok(Matrix::from_diag(&[m[(0, 0)].exp()]));
    }

    let norm = m.norm_one().as_f64();
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = m.scale(T::lit(2f64.powi(-squarings)));

    let b = |k: usize| T::lit(PADE13[k]);
    let id = Matrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a2.matmul(&a4);

    let u_inner = a6.scale(b(13)) + a4.scale(b(11)) + a2.scale(b(9));
    let u_inner = a6.matmul(&u_inner) + a6.scale(b(7)) + a4.scale(b(5)) + a2.scale(b(3)) + id.scale(b(1));
    let u = a.matmul(&u_inner);

    let v_inner = a6.scale(b(12)) + a4.scale(b(10)) + a2.scale(b(8));
    let v = a6.matmul(&v_inner) + a6.scale(b(6)) + a4.scale(b(4)) + a2.scale(b(2)) + id.scale(b(0));

    let mut r = solve(&(&v - &u), &(&v + &u))?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    Ok(r)
}
