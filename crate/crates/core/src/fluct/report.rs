// SPDX-License-Identifier: Apache-2.0

//! Empirical convergence of the rescaled bridge to its Gaussian limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FluctuationLaw;
use crate::error::{Error, Result};
use crate::gramian::{validate_grid, ScaledFrame};
use crate::matcore::{equilibrated_inverse, op_norm, Matrix};
use crate::model::{u_blocks, ModelSpec};
use crate::scalar::Scalar;

/// Times at which the expansion of `α_t` in ε is extracted.
pub const RICHARDSON_TIMES: [f64; 3] = [0.25, 0.5, 0.75];

const RICHARDSON_START: f64 = 0.1;
const RICHARDSON_LEVELS: usize = 6;

/// Errors below this are treated as roundoff when fitting slopes.
const SLOPE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsRow {
    pub eps: f64,
    /// `sup ‖rescaled_cov(s, t) − limit_cov(s, t)‖₂` over grid pairs.
    pub cov_error: f64,
    /// `sup ‖D_ε⁻¹Qᵀα_tQD_ε − M(t)‖₂` over the grid.
    pub alpha_error: f64,
    /// Largest mean of the fluctuation process, which vanishes in exact
    /// arithmetic (bridge from 0 to the all-ones vector).
    pub mean_error: f64,
}

/// Grid × grid table of covariance errors at one ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub eps: f64,
    pub errors: Vec<Vec<f64>>,
}

/// `D_ε⁻¹Qᵀα_tQD_ε = leading + ε·correction + O(ε²)` in adapted coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaExpansion {
    pub t: f64,
    pub levels: Vec<usize>,
    pub leading: Vec<Vec<f64>>,
    pub correction: Vec<Vec<f64>>,
}

impl AlphaExpansion {
    /// Coefficient of `ε^power` in the adapted-basis entry `(i, j)` of `α_t`,
    /// when it is one of the two extracted orders.
    pub fn coefficient(&self, i: usize, j: usize, power: i32) -> Option<f64> {
        let shift = self.levels[i] as i32 - self.levels[j] as i32;
        match power - shift {
            0 => Some(self.leading[i][j]),
            1 => Some(self.correction[i][j]),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub dim: usize,
    pub levels: Vec<usize>,
    pub grid: Vec<f64>,
    pub rows: Vec<EpsRow>,
    /// Least-squares slope of `log cov_error` against `log ε`; absent when
    /// the errors sit at the roundoff floor.
    pub cov_slope: Option<f64>,
    pub alpha_slope: Option<f64>,
    pub tables: Vec<ErrorTable>,
    pub alpha_expansion: Vec<AlphaExpansion>,
}

fn to_rows<T: Scalar>(m: &Matrix<T>) -> Vec<Vec<f64>> {
    m.to_rows().into_iter().map(|r| r.into_iter().map(T::as_f64).collect()).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 || y.iter().any(|&v| !(v > SLOPE_FLOOR)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Neville extrapolation to `h = 0` of values sampled at `hs`.
fn extrapolate_to_zero<T: Scalar>(hs: &[T], mut vals: Vec<Matrix<T>>) -> Matrix<T> {
    let n = hs.len();
    for m in 1..n {
        for i in 0..n - m {
            let (hi, hj) = (hs[i], hs[i + m]);
            vals[i] = (&vals[i + 1].scale(hi) - &vals[i].scale(hj)).scale(T::one() / (hi - hj));
        }
    }
    vals.swap_remove(0)
}

fn alpha_expansion<T: Scalar>(spec: &ModelSpec<T>, law: &FluctuationLaw<T>) -> Result<Vec<AlphaExpansion>> {
    let hs: Vec<T> = (0..RICHARDSON_LEVELS).map(|k| T::lit(RICHARDSON_START / 2f64.powi(k as i32))).collect();
    let frames: Vec<ScaledFrame<T>> = hs.par_iter().map(|&h| ScaledFrame::new(spec, h)).collect::<Result<_>>()?;
    RICHARDSON_TIMES
        .iter()
        .map(|&tf| {
            let t = T::lit(tf);
            let m = law.mean_map(t);
            let s: Vec<Matrix<T>> = frames.iter().map(|f| f.scaled_alpha(t)).collect::<Result<_>>()?;
            let slopes: Vec<Matrix<T>> = s.iter().zip(&hs).map(|(si, &h)| (si - &m).scale(T::one() / h)).collect();
            Ok(AlphaExpansion {
                t: tf,
                levels: law.scaling.levels().to_vec(),
                leading: to_rows(&extrapolate_to_zero(&hs, s)),
                correction: to_rows(&extrapolate_to_zero(&hs, slopes)),
            })
        })
        .collect()
}

struct EpsResult {
    row: EpsRow,
    table: ErrorTable,
}

fn eps_errors<T: Scalar>(
    spec: &ModelSpec<T>,
    law: &FluctuationLaw<T>,
    limit: &Matrix<T>,
    eps: T,
    grid: &[T],
) -> Result<EpsResult> {
    let frame = ScaledFrame::new(spec, eps)?;
    let d = spec.dim();
    let n = grid.len();
    let scaled = frame.rescaled_cov_grid(grid)?;
    let diff = &scaled - limit;
    let errors: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| op_norm(&diff.block(i * d, j * d, d, d)).as_f64()).collect()).collect();
    let cov_error = errors.iter().flatten().fold(0.0f64, |a, &b| a.max(b));

    let one = T::one();
    let k11_inv = equilibrated_inverse(&frame.kernel(one, one)?)?.matrix;
    let dd = frame.d_eps();
    let ones = vec![T::one(); d];
    let gap: Vec<T> = frame.filtration().basis().transpose().mul_vec(&ones).iter().zip(&dd).map(|(&g, &s)| g / s).collect();
    let mut alpha_error = 0.0f64;
    let mut mean_error = 0.0f64;
    for &t in grid {
        let s = frame.scaled_alpha(t)?;
        alpha_error = alpha_error.max(op_norm(&(&s - &law.mean_map(t))).as_f64());
        let conditioned = frame.kernel(t, one)?.matmul(&k11_inv);
        let offset = (&conditioned - &s).mul_vec(&gap);
        let norm = offset.iter().zip(&dd).map(|(&o, &s)| (o * s) * (o * s)).sum::<T>().sqrt() / eps.sqrt();
        mean_error = mean_error.max(norm.as_f64());
    }
    Ok(EpsResult {
        row: EpsRow { eps: eps.as_f64(), cov_error, alpha_error, mean_error },
        table: ErrorTable { eps: eps.as_f64(), errors },
    })
}

/// Covariance, conditioning-matrix and mean errors for each ε (strictly
/// decreasing, at least three values), fitted slopes, and the first two
/// orders of the ε-expansion of `α_t`.
pub fn convergence_report<T: Scalar>(spec: &ModelSpec<T>, eps_list: &[T], grid: &[T]) -> Result<ConvergenceReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 eps values, got {}", eps_list.len())));
    }
    if eps_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::InvalidArgument("eps values must be strictly decreasing".into()));
    }
    validate_grid(grid, true)?;
    let filt = spec.filtration()?;
    let law = FluctuationLaw::new(u_blocks(spec, &filt))?;
    let limit = law.cov_grid(grid)?;
    let results: Vec<EpsResult> =
        eps_list.par_iter().map(|&eps| eps_errors(spec, &law, &limit, eps, grid)).collect::<Result<_>>()?;
    let eps: Vec<f64> = results.iter().map(|r| r.row.eps).collect();
    let cov: Vec<f64> = results.iter().map(|r| r.row.cov_error).collect();
    let alpha: Vec<f64> = results.iter().map(|r| r.row.alpha_error).collect();
    let (rows, tables) = results.into_iter().map(|r| (r.row, r.table)).unzip();
    Ok(ConvergenceReport {
        dim: spec.dim(),
        levels: law.scaling.levels().to_vec(),
        grid: grid.iter().map(|t| t.as_f64()).collect(),
        rows,
        cov_slope: log_log_slope(&eps, &cov),
        alpha_slope: log_log_slope(&eps, &alpha),
        tables,
        alpha_expansion: alpha_expansion(spec, &law)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x = [0.1, 0.05, 0.025];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() - 1.5).abs() < 1e-12);
        assert_eq!(log_log_slope(&x, &[1e-16, 1e-16, 1e-16]), None);
    }

    #[test]
    fn neville_recovers_polynomial_limit() {
        let hs = [0.1, 0.05, 0.025, 0.0125];
        let vals = hs.iter().map(|&h: &f64| Matrix::from_diag(&[2.0 + 3.0 * h - h * h * h])).collect();
        let v = extrapolate_to_zero(&hs, vals);
        assert!((v[(0, 0)] - 2.0).abs() < 1e-13);
    }
}
