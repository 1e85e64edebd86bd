// SPDX-License-Identifier: Apache-2.0

//! Closed-form inverse of the factorial Hankel matrix
//! `V_ij = (−1)^{j+1}/(i+j−1)!` of the iterated Kolmogorov diffusion.

use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::scalar::Scalar;

use super::v_inverse;

/// Largest dimension for which the closed form is used.
pub const HANKEL_MAX_DIM: usize = 8;

fn binom(n: i128, k: i128) -> i128 {
    if k < 0 || k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn factorial(n: i128) -> i128 {
    (1..=n).product()
}

/// Exact integer entries of `V⁻¹` for dimension `d`.
pub fn hankel_inverse_table(d: usize) -> Vec<Vec<i128>> {
    let dd = d as i128;
    (1..=dd)
        .map(|i| {
            (1..=dd)
                .map(|j| {
                    let sign = if (dd + j) % 2 == 0 { 1 } else { -1 };
                    let sum: i128 = (0..i).map(|k| binom(dd - i + k, j - 1) * binom(dd + k - 1, k)).sum();
                    sign * factorial(i - 1) * factorial(j) * binom(dd - 1, i - 1) * binom(dd + j - 1, j) * sum
                })
                .collect()
        })
        .collect()
}

/// `V` for the iterated Kolmogorov diffusion of dimension `d`.
pub fn hankel_v<T: Scalar>(d: usize) -> Matrix<T> {
    let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
    Matrix::from_fn(d, d, |i, j| {
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        T::lit(sign / fact(i + j + 1))
    })
}

/// `V⁻¹` for the iterated Kolmogorov diffusion. Exact for `d ≤ 8`; larger
/// dimensions fall back to the generic inverse.
pub fn hankel_v_inverse<T: Scalar>(d: usize) -> Result<Matrix<T>> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    if d > HANKEL_MAX_DIM {
        log::warn!("closed-form Hankel inverse limited to d <= {HANKEL_MAX_DIM}; using a linear solve for d = {d}");
        return Ok(v_inverse(&hankel_v::<T>(d))?.matrix);
    }
    let exact = hankel_inverse_table(d);
    Ok(Matrix::from_fn(d, d, |i, j| T::lit(exact[i][j] as f64)))
}
