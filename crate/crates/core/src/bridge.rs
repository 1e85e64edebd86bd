// SPDX-License-Identifier: Apache-2.0

//! Gaussian law of the diffusion and of its bridge to a fixed endpoint, with
//! exact sampling on finite time grids.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gramian::{check_endpoints, check_eps, gramian, phi_with, validate_grid, ScaledFrame};
use crate::matcore::{chol_psd, expm, Matrix};
use crate::model::ModelSpec;
use crate::scalar::Scalar;

fn check_order<T: Scalar>(t1: T, t2: T) -> Result<()> {
    if t1 >= T::zero() && t1 <= t2 && t2 <= T::one() {
        Ok(())
    } else {
        Err(Error::BadTimeOrder { t1: t1.as_f64(), t2: t2.as_f64() })
    }
}

/// `Cov(x_{t1}, x_{t2}) = ε·e^{εt1A}Γ_{t1}e^{εt2Aᵀ}` for `0 ≤ t1 ≤ t2 ≤ 1`.
pub fn process_cov<T: Scalar>(spec: &ModelSpec<T>, eps: T, t1: T, t2: T) -> Result<Matrix<T>> {
    check_order(t1, t2)?;
    let g = gramian(spec, eps, t1)?;
    let right = expm(&spec.a().scale(eps * t2))?;
    Ok(g.exp_gamma().matmul_t(&right).scale(eps))
}

/// Law of the unconditioned process started from `x`.
#[derive(Clone, Debug)]
pub struct ProcessLaw<T> {
    pub spec: ModelSpec<T>,
    pub eps: T,
    pub x: Vec<T>,
}

impl<T: Scalar> ProcessLaw<T> {
    pub fn new(spec: ModelSpec<T>, eps: T, x: Vec<T>) -> Result<Self> {
        check_eps(eps)?;
        check_endpoints(&spec, &x, &x)?;
        Ok(Self { spec, eps, x })
    }

    /// `e^{εtA}x`.
    pub fn mean(&self, t: T) -> Result<Vec<T>> {
        check_order(t, t)?;
        Ok(expm(&self.spec.a().scale(self.eps * t))?.mul_vec(&self.x))
    }

    /// Cross-covariance in either time order.
    pub fn cov(&self, t1: T, t2: T) -> Result<Matrix<T>> {
        if t1 <= t2 {
            process_cov(&self.spec, self.eps, t1, t2)
        } else {
            Ok(process_cov(&self.spec, self.eps, t2, t1)?.transpose())
        }
    }
}

/// Finite-grid law of the bridge from `x` to `y`.
#[derive(Clone, Debug)]
pub struct BridgeLaw<T> {
    pub eps: T,
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub grid: Vec<T>,
    /// `φ_t` at each grid time.
    pub mean_path: Vec<Vec<T>>,
    /// `(N·d) × (N·d)` covariance, time-major blocks.
    pub joint_cov: Matrix<T>,
}

impl<T: Scalar> BridgeLaw<T> {
    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Covariance block between grid indices `i` and `j`.
    pub fn cov_block(&self, i: usize, j: usize) -> Matrix<T> {
        let d = self.dim();
        self.joint_cov.block(i * d, j * d, d, d)
    }

    /// Mean path flattened in the same order as `joint_cov`.
    pub fn flat_mean(&self) -> Vec<T> {
        self.mean_path.iter().flatten().copied().collect()
    }
}

/// Mean `φ_t` and covariance of `x_t − α_t(x_1 − y)` on a grid in `(0, 1]`.
pub fn bridge_law<T: Scalar>(spec: &ModelSpec<T>, eps: T, x: &[T], y: &[T], grid: &[T]) -> Result<BridgeLaw<T>> {
    check_endpoints(spec, x, y)?;
    validate_grid(grid, false)?;
    let frame = ScaledFrame::new(spec, eps)?;
    let mean_path = phi_with(&frame, spec, x, y, grid)?;
    let scaled = frame.rescaled_cov_grid(grid)?;
    let d = spec.dim();
    let back = frame.unscale();
    let n = grid.len();
    let mut joint_cov = Matrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in i..n {
            let blk = back.matmul(&scaled.block(i * d, j * d, d, d)).matmul_t(&back).scale(eps);
            joint_cov.set_block(i * d, j * d, &blk);
            if i != j {
                joint_cov.set_block(j * d, i * d, &blk.transpose());
            }
        }
    }
    Ok(BridgeLaw { eps, x: x.to_vec(), y: y.to_vec(), grid: grid.to_vec(), mean_path, joint_cov })
}

/// Sampled paths, stored path-major then time-major then coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSet<T> {
    pub grid: Vec<T>,
    pub dim: usize,
    pub n_paths: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> PathSet<T> {
    pub fn path(&self, k: usize) -> &[T] {
        let len = self.grid.len() * self.dim;
        &self.data[k * len..(k + 1) * len]
    }

    /// State of path `k` at grid index `j`.
    pub fn state(&self, k: usize, j: usize) -> &[T] {
        let start = (k * self.grid.len() + j) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Sample covariance between grid indices `i` and `j`.
    pub fn sample_cov(&self, i: usize, j: usize) -> Matrix<T> {
        let d = self.dim;
        let n = T::lit(self.n_paths as f64);
        let mean = |j: usize| -> Vec<T> {
            (0..d).map(|c| (0..self.n_paths).map(|k| self.state(k, j)[c]).sum::<T>() / n).collect()
        };
        let (mi, mj) = (mean(i), mean(j));
        Matrix::from_fn(d, d, |a, b| {
            (0..self.n_paths).map(|k| (self.state(k, i)[a] - mi[a]) * (self.state(k, j)[b] - mj[b])).sum::<T>()
                / (n - T::one())
        })
    }
}

/// Random stream for path `k`: the seed selects the key, the path index the
/// ChaCha stream, so results do not depend on thread scheduling.
pub fn path_rng(seed: u64, k: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    rng
}

/// Exact draws from `N(mean, cov)` using `chol_psd(cov, jitter)`.
pub fn sample_gaussian<T: Scalar>(
    mean: &[T],
    cov: &Matrix<T>,
    n_paths: usize,
    seed: u64,
    jitter: T,
) -> Result<Vec<T>> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    if cov.rows() != mean.len() {
        return Err(Error::ShapeMismatch(format!("mean has length {}, covariance is {}x{}", mean.len(), cov.rows(), cov.cols())));
    }
    let l = chol_psd(cov, jitter)?;
    let len = mean.len();
    let mut data = vec![T::zero(); n_paths * len];
    data.par_chunks_mut(len.max(1)).enumerate().for_each(|(k, out)| {
        let mut rng = path_rng(seed, k);
        let xi: Vec<T> = (0..len).map(|_| T::standard_normal(&mut rng)).collect();
        for i in 0..len {
            let mut s = mean[i];
            for j in 0..=i {
                s += l[(i, j)] * xi[j];
            }
            out[i] = s;
        }
    });
    Ok(data)
}

/// `n_paths` exact samples of the bridge law on its grid.
pub fn sample_bridge<T: Scalar>(law: &BridgeLaw<T>, n_paths: usize, seed: u64, jitter: T) -> Result<PathSet<T>> {
    let data = sample_gaussian(&law.flat_mean(), &law.joint_cov, n_paths, seed, jitter)?;
    Ok(PathSet { grid: law.grid.clone(), dim: law.dim(), n_paths, data })
}

/// Exact samples of the process from `x` using the Gaussian transition
/// between consecutive grid times (the first step starts at `t = 0`).
pub fn sample_unconditioned<T: Scalar>(
    spec: &ModelSpec<T>,
    eps: T,
    x: &[T],
    grid: &[T],
    n_paths: usize,
    seed: u64,
) -> Result<PathSet<T>> {
    check_eps(eps)?;
    check_endpoints(spec, x, x)?;
    validate_grid(grid, true)?;
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    let d = spec.dim();
    let steps: Vec<(Matrix<T>, Matrix<T>)> = grid
        .iter()
        .scan(T::zero(), |prev, &t| {
            let delta = t - *prev;
            *prev = t;
            Some(delta)
        })
        .map(|delta| {
            let flow = expm(&spec.a().scale(eps * delta))?;
            let noise = process_cov(spec, eps, delta, delta)?.symmetrize();
            Ok((flow, chol_psd(&noise, T::zero())?))
        })
        .collect::<Result<_>>()?;
    let len = grid.len() * d;
    let mut data = vec![T::zero(); n_paths * len];
    data.par_chunks_mut(len).enumerate().for_each(|(k, out)| {
        let mut rng = path_rng(seed, k);
        let mut state = x.to_vec();
        for (j, (flow, l)) in steps.iter().enumerate() {
            let xi: Vec<T> = (0..d).map(|_| T::standard_normal(&mut rng)).collect();
            let noise = l.mul_vec(&xi);
            state = flow.mul_vec(&state).iter().zip(&noise).map(|(&a, &b)| a + b).collect();
            out[j * d..(j + 1) * d].copy_from_slice(&state);
        }
    });
    Ok(PathSet { grid: grid.to_vec(), dim: d, n_paths, data })
}
