// SPDX-License-Identifier: Apache-2.0

//! Small-time fluctuations of the bridge: the scaling matrices `D_ε`, `J_t`,
//! the matrix `V`, the Gaussian limit loop and the convergence harness.

mod hankel;
mod report;

pub use hankel::{hankel_inverse_table, hankel_v, hankel_v_inverse, HANKEL_MAX_DIM};
pub use report::{convergence_report, log_log_slope, AlphaExpansion, ConvergenceReport, EpsRow, ErrorTable, RICHARDSON_TIMES};

use crate::bridge::{sample_gaussian, PathSet};
use crate::error::{Error, Result};
use crate::gramian::{validate_grid, ScaledFrame};
use crate::matcore::{equilibrated_inverse, symmetric_blocks, Inverse, Matrix};
use crate::model::{ModelSpec, UBlocks};
use crate::quad::GaussLegendre;
use crate::scalar::Scalar;

/// Condition number above which `V` is reported as ill-conditioned.
pub const V_COND_LIMIT: f64 = 1e12;

/// Level-wise scalings `D(ε) = diag(ε^{k−1})` and `J(t) = diag(t^{k−1/2})`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingPair {
    levels: Vec<usize>,
}

impl ScalingPair {
    /// From the dimension ladder `d_1 < … < d_n`.
    pub fn from_dims(dims: &[usize]) -> Self {
        let mut levels = Vec::new();
        let mut prev = 0;
        for (k, &dk) in dims.iter().enumerate() {
            levels.extend(std::iter::repeat_n(k, dk - prev));
            prev = dk;
        }
        Self { levels }
    }

    pub fn from_ublocks<T: Scalar>(u: &UBlocks<T>) -> Self {
        Self::from_dims(&u.dims())
    }

    /// Zero-based level of each coordinate.
    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn d_diag<T: Scalar>(&self, eps: T) -> Vec<T> {
        self.levels.iter().map(|&l| eps.powi(l as i32)).collect()
    }

    pub fn j_diag<T: Scalar>(&self, t: T) -> Vec<T> {
        self.levels.iter().map(|&l| t.powf(T::lit(l as f64 + 0.5))).collect()
    }

    pub fn d<T: Scalar>(&self, eps: T) -> Matrix<T> {
        Matrix::from_diag(&self.d_diag(eps))
    }

    pub fn j<T: Scalar>(&self, t: T) -> Matrix<T> {
        Matrix::from_diag(&self.j_diag(t))
    }
}

/// `Û(r)`: block `k` is `r^{k−1}u_k`.
pub fn u_hat<T: Scalar>(u: &UBlocks<T>, r: T) -> Matrix<T> {
    let m = u.inputs();
    let mut out = Matrix::zeros(u.dim(), m);
    let mut row = 0;
    for (k, blk) in u.blocks().iter().enumerate() {
        out.set_block(row, 0, &blk.scale(r.powi(k as i32)));
        row += blk.rows();
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `V_kl = (−1)^{l+1}·u_k u_lᵀ·(k−1)!(l−1)!/(k+l−1)!` (1-based levels).
pub fn v_matrix<T: Scalar>(u: &UBlocks<T>) -> Matrix<T> {
    let offsets = u.level_offsets();
    let mut v = Matrix::zeros(u.dim(), u.dim());
    for (k, uk) in u.blocks().iter().enumerate() {
        for (l, ul) in u.blocks().iter().enumerate() {
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let c = T::lit(sign * factorial(k) * factorial(l) / factorial(k + l + 1));
            v.set_block(offsets[k], offsets[l], &uk.matmul_t(ul).scale(c));
        }
    }
    v
}

/// `∫₀¹ Û(1−s)Û(−s)ᵀ ds` by Gauss–Legendre quadrature.
pub fn v_from_integral<T: Scalar>(u: &UBlocks<T>, quad_order: usize) -> Result<Matrix<T>> {
    if quad_order < 20 {
        return Err(Error::InvalidArgument(format!("quadrature order must be at least 20, got {quad_order}")));
    }
    let gl = GaussLegendre::new(quad_order);
    let mut acc = Matrix::zeros(u.dim(), u.dim());
    for (s, w) in gl.points(T::zero(), T::one()) {
        acc += &u_hat(u, T::one() - s).matmul_t(&u_hat(u, -s)).scale(w);
    }
    Ok(acc)
}

/// Inverse of `V` with equilibration; fails when the equilibrated condition
/// number exceeds [`V_COND_LIMIT`].
pub fn v_inverse<T: Scalar>(v: &Matrix<T>) -> Result<Inverse<T>> {
    let inv = equilibrated_inverse(v)?;
    if !(inv.cond <= V_COND_LIMIT) {
        return Err(Error::IllConditioned { cond: inv.cond });
    }
    Ok(inv)
}

/// `M(t) = J_t V J_t V⁻¹`, with `M(0) = 0` and `M(1) = I`.
pub fn limit_mean_map<T: Scalar>(scaling: &ScalingPair, v: &Matrix<T>, v_inv: &Matrix<T>, t: T) -> Matrix<T> {
    let d = scaling.dim();
    if t == T::one() {
        return Matrix::identity(d);
    }
    let j = scaling.j_diag(t);
    let jvj = Matrix::from_fn(d, d, |a, b| j[a] * v[(a, b)] * j[b]);
    jvj.matmul(v_inv)
}

/// `∫₀^a w^k (w + c)^l dw` for integers `k, l ≥ 0`, `a, c ≥ 0`.
fn shifted_moment<T: Scalar>(a: T, c: T, k: usize, l: usize) -> T {
    let mut binom = T::one();
    let mut sum = T::zero();
    for j in 0..=l {
        sum += binom * c.powi((l - j) as i32) * a.powi((k + j + 1) as i32) / T::lit((k + j + 1) as f64);
        binom = binom * T::lit((l - j) as f64) / T::lit((j + 1) as f64);
    }
    sum
}

/// Law of the limit loop `F_t = ∫₀ᵗÛ(t−s)dW − M(t)∫₀¹Û(1−s)dW`.
#[derive(Clone, Debug)]
pub struct FluctuationLaw<T> {
    pub ublocks: UBlocks<T>,
    pub scaling: ScalingPair,
    pub v: Matrix<T>,
    pub v_inv: Matrix<T>,
    /// Equilibrated 1-norm condition number of `V`.
    pub v_cond: f64,
    /// 1-norm condition number of `V` as given.
    pub v_raw_cond: f64,
}

impl<T: Scalar> FluctuationLaw<T> {
    pub fn new(ublocks: UBlocks<T>) -> Result<Self> {
        let scaling = ScalingPair::from_ublocks(&ublocks);
        let v = v_matrix(&ublocks);
        let inv = v_inverse(&v)?;
        Ok(Self { ublocks, scaling, v, v_inv: inv.matrix, v_cond: inv.cond, v_raw_cond: inv.raw_cond })
    }

    pub fn dim(&self) -> usize {
        self.scaling.dim()
    }

    pub fn mean_map(&self, t: T) -> Matrix<T> {
        limit_mean_map(&self.scaling, &self.v, &self.v_inv, t)
    }

    /// `K(a, b) = ∫₀^{min(a,b)} Û(a−s)Û(b−s)ᵀ ds` in closed form.
    pub fn kernel(&self, a: T, b: T) -> Matrix<T> {
        if a > b {
            return self.kernel(b, a).transpose();
        }
        let u = &self.ublocks;
        let offsets = u.level_offsets();
        let mut out = Matrix::zeros(u.dim(), u.dim());
        for (k, uk) in u.blocks().iter().enumerate() {
            for (l, ul) in u.blocks().iter().enumerate() {
                let w = shifted_moment(a, b - a, k, l);
                out.set_block(offsets[k], offsets[l], &uk.matmul_t(ul).scale(w));
            }
        }
        out
    }

    /// `Cov(F_{t1}, F_{t2})` for any `t1, t2 ∈ [0, 1]`.
    pub fn cov(&self, t1: T, t2: T) -> Matrix<T> {
        let one = T::one();
        let (m1, m2) = (self.mean_map(t1), self.mean_map(t2));
        self.kernel(t1, t2) - self.kernel(t1, one).matmul_t(&m2) - m1.matmul(&self.kernel(one, t2))
            + m1.matmul(&self.kernel(one, one)).matmul_t(&m2)
    }

    /// Joint covariance of `F` on a grid, time-major blocks.
    pub fn cov_grid(&self, grid: &[T]) -> Result<Matrix<T>> {
        let per_point: Vec<(Matrix<T>, Matrix<T>)> =
            grid.iter().map(|&t| (self.mean_map(t), self.kernel(t, T::one()))).collect();
        let k11 = self.kernel(T::one(), T::one());
        symmetric_blocks(grid.len(), self.dim(), |i, j| {
            let (m_i, k_i1) = &per_point[i];
            let (m_j, k_j1) = &per_point[j];
            Ok(self.kernel(grid[i], grid[j]) - k_i1.matmul_t(m_j) - m_i.matmul_t(k_j1) + m_i.matmul(&k11).matmul_t(m_j))
        })
    }
}

/// `Cov(F_{t1}, F_{t2})` for `0 ≤ t1 ≤ t2 ≤ 1`.
pub fn limit_cov<T: Scalar>(law: &FluctuationLaw<T>, t1: T, t2: T) -> Result<Matrix<T>> {
    if !(t1 >= T::zero() && t1 <= t2 && t2 <= T::one()) {
        return Err(Error::BadTimeOrder { t1: t1.as_f64(), t2: t2.as_f64() });
    }
    Ok(law.cov(t1, t2))
}

/// Covariance of `ε^{−1/2}D_ε⁻¹Qᵀ(z_t − φ_t)` at `(t1, t2)` in adapted
/// coordinates.
pub fn rescaled_cov<T: Scalar>(spec: &ModelSpec<T>, eps: T, t1: T, t2: T) -> Result<Matrix<T>> {
    for t in [t1, t2] {
        if !(t >= T::zero() && t <= T::one()) {
            return Err(Error::BadTimeOrder { t1: t1.as_f64(), t2: t2.as_f64() });
        }
    }
    ScaledFrame::new(spec, eps)?.rescaled_cov(t1, t2)
}

/// Exact samples of the limit loop on a grid in `[0, 1]`.
pub fn sample_limit<T: Scalar>(
    law: &FluctuationLaw<T>,
    grid: &[T],
    n_paths: usize,
    seed: u64,
    jitter: T,
) -> Result<PathSet<T>> {
    validate_grid(grid, true)?;
    let cov = law.cov_grid(grid)?;
    let mean = vec![T::zero(); cov.rows()];
    let data = sample_gaussian(&mean, &cov, n_paths, seed, jitter)?;
    Ok(PathSet { grid: grid.to_vec(), dim: law.dim(), n_paths, data })
}

/// `n` equally spaced times from 0 to 1 inclusive.
pub fn uniform_grid<T: Scalar>(n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![T::one()],
        _ => (0..n).map(|k| T::lit(k as f64 / (n - 1) as f64)).collect(),
    }
}
