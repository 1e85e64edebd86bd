// SPDX-License-Identifier: Apache-2.0

//! Controllability Gramian, the conditioning matrix `α_t`, the minimal-like
//! path `φ_t` and its Hamiltonian characterisation.

mod frame;

pub use frame::ScaledFrame;
pub(crate) use frame::{check_eps, van_loan};

use crate::error::{Error, Result};
use crate::matcore::Matrix;
use crate::model::ModelSpec;
use crate::scalar::Scalar;

/// `Γ_t = ∫₀ᵗ e^{−εsA}BBᵀe^{−εsAᵀ} ds` together with `e^{εtA}`.
#[derive(Clone, Debug)]
pub struct GramianSet<T> {
    pub eps: T,
    pub t: T,
    pub gamma: Matrix<T>,
    pub exp_ta: Matrix<T>,
}

impl<T: Scalar> GramianSet<T> {
    /// `e^{εtA}Γ_t`.
    pub fn exp_gamma(&self) -> Matrix<T> {
        self.exp_ta.matmul(&self.gamma)
    }
}

pub(crate) fn check_time<T: Scalar>(t: T) -> Result<()> {
    if t >= T::zero() && t <= T::one() {
        Ok(())
    } else {
        Err(Error::BadTimeOrder { t1: t.as_f64(), t2: t.as_f64() })
    }
}

/// Gramian at `(ε, t)` by one `2d × 2d` block exponential, evaluated in the
/// rescaled adapted frame so that every entry keeps its relative accuracy
/// however small ε is.
pub fn gramian<T: Scalar>(spec: &ModelSpec<T>, eps: T, t: T) -> Result<GramianSet<T>> {
    check_eps(eps)?;
    check_time(t)?;
    let frame = ScaledFrame::new(spec, eps)?;
    let u = frame.unscale();
    let gamma = u.matmul(&frame.gramian(t)?).matmul_t(&u).symmetrize();
    let exp_ta = crate::matcore::expm(&spec.a().scale(eps * t))?;
    Ok(GramianSet { eps, t, gamma, exp_ta })
}

/// Gramian by the block exponential of `[[εA, BBᵀ], [0, −εAᵀ]]·t` in the
/// original coordinates. Accurate to roundoff relative to `‖Γ_t‖`.
pub fn gramian_direct<T: Scalar>(spec: &ModelSpec<T>, eps: T, t: T) -> Result<Matrix<T>> {
    check_eps(eps)?;
    check_time(t)?;
    let q = spec.b().matmul_t(spec.b());
    Ok(van_loan(&spec.a().scale(-eps), &q, t)?.0)
}

/// `α_t = e^{εtA}Γ_tΓ_1⁻¹e^{−εA}`, with `α_0 = 0`.
pub fn alpha<T: Scalar>(spec: &ModelSpec<T>, eps: T, t: T) -> Result<Matrix<T>> {
    check_time(t)?;
    ScaledFrame::new(spec, eps)?.alpha(t)
}

fn check_grid<T: Scalar>(grid: &[T], open_at_zero: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::BadGrid("grid is empty".into()));
    }
    for (k, &t) in grid.iter().enumerate() {
        if !t.is_finite() || t < T::zero() || t > T::one() || (open_at_zero && t == T::zero()) {
            return Err(Error::BadGrid(format!("time {t} at position {k} is outside the allowed range")));
        }
        if k > 0 && grid[k - 1] >= t {
            return Err(Error::BadGrid(format!("grid is not strictly increasing at position {k}")));
        }
    }
    Ok(())
}

/// Validates a grid inside `(0, 1]` (or `[0, 1]` when `allow_zero`).
pub fn validate_grid<T: Scalar>(grid: &[T], allow_zero: bool) -> Result<()> {
    check_grid(grid, !allow_zero)
}

fn check_vec<T: Scalar>(name: &str, v: &[T], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::ShapeMismatch(format!("{name} has length {}, expected {d}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!("{name} has non-finite entries")));
    }
    Ok(())
}

pub(crate) fn check_endpoints<T: Scalar>(spec: &ModelSpec<T>, x: &[T], y: &[T]) -> Result<()> {
    check_vec("x", x, spec.dim())?;
    check_vec("y", y, spec.dim())
}

/// `φ_t = e^{εtA}x + α_t(y − e^{εA}x)` at each grid time.
pub fn phi_path<T: Scalar>(spec: &ModelSpec<T>, eps: T, x: &[T], y: &[T], grid: &[T]) -> Result<Vec<Vec<T>>> {
    check_endpoints(spec, x, y)?;
    check_grid(grid, false)?;
    let frame = ScaledFrame::new(spec, eps)?;
    phi_with(&frame, spec, x, y, grid)
}

pub(crate) fn phi_with<T: Scalar>(
    frame: &ScaledFrame<T>,
    spec: &ModelSpec<T>,
    x: &[T],
    y: &[T],
    grid: &[T],
) -> Result<Vec<Vec<T>>> {
    let eps = frame.eps();
    let free_end = crate::matcore::expm(&spec.a().scale(eps))?.mul_vec(x);
    let gap: Vec<T> = y.iter().zip(&free_end).map(|(&a, &b)| a - b).collect();
    grid.iter()
        .map(|&t| {
            if t == T::one() {
                return Ok(y.to_vec());
            }
            let drift = crate::matcore::expm(&spec.a().scale(eps * t))?.mul_vec(x);
            let pull = frame.alpha(t)?.mul_vec(&gap);
            Ok(drift.iter().zip(&pull).map(|(&a, &b)| a + b).collect())
        })
        .collect()
}

/// Integrates `q' = εAq + BBᵀp`, `p' = −εAᵀp` from `q_0 = x` with
/// `p_0 = Γ_1⁻¹(e^{−εA}y − x)` by classical RK4 on `steps` uniform steps
/// and returns `max_t |q_t − φ_t|`.
pub fn hamiltonian_verify<T: Scalar>(spec: &ModelSpec<T>, eps: T, x: &[T], y: &[T], steps: usize) -> Result<T> {
    if steps < 100 {
        return Err(Error::InvalidArgument(format!("need at least 100 steps, got {steps}")));
    }
    check_endpoints(spec, x, y)?;
    let frame = ScaledFrame::new(spec, eps)?;
    let d = spec.dim();

    let back = crate::matcore::expm(&spec.a().scale(-eps))?.mul_vec(y);
    let rhs: Vec<T> = back.iter().zip(x).map(|(&a, &b)| a - b).collect();
    let p0 = frame.gramian_solve(&rhs)?;

    let mut h = Matrix::zeros(2 * d, 2 * d);
    h.set_block(0, 0, &spec.a().scale(eps));
    h.set_block(0, d, &spec.b().matmul_t(spec.b()));
    h.set_block(d, d, &spec.a().transpose().scale(-eps));

    let dt = T::one() / T::lit(steps as f64);
    let grid: Vec<T> = (0..=steps).map(|k| T::lit(k as f64) * dt).collect();
    let phi = phi_with(&frame, spec, x, y, &grid)?;

    let mut z: Vec<T> = x.iter().chain(&p0).copied().collect();
    let mut worst = distance(&z[..d], &phi[0]);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for target in &phi[1..] {
        let k1 = h.mul_vec(&z);
        let k2 = h.mul_vec(&axpy(&z, half * dt, &k1));
        let k3 = h.mul_vec(&axpy(&z, half * dt, &k2));
        let k4 = h.mul_vec(&axpy(&z, dt, &k3));
        for i in 0..2 * d {
            z[i] += dt * sixth * (k1[i] + (k2[i] + k3[i]) * T::lit(2.0) + k4[i]);
        }
        worst = worst.max(distance(&z[..d], target));
    }
    Ok(worst)
}

fn axpy<T: Scalar>(z: &[T], s: T, k: &[T]) -> Vec<T> {
    z.iter().zip(k).map(|(&a, &b)| a + s * b).collect()
}

fn distance<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&u, &v)| (u - v) * (u - v)).sum::<T>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kolmogorov() -> ModelSpec<f64> {
        ModelSpec::new(
            Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap(),
            Matrix::from_rows(&[[1.0], [0.0]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn kolmogorov_gramian_closed_form() {
        let g = gramian(&kolmogorov(), 0.5, 1.0).unwrap().gamma;
        let expected = Matrix::from_rows(&[[1.0, -0.25], [-0.25, 1.0 / 12.0]]).unwrap();
        assert!(g.max_abs_diff(&expected) < 1e-14, "{g:?}");
        let zero = gramian(&kolmogorov(), 0.5, 0.0).unwrap().gamma;
        assert_eq!(zero.max_abs(), 0.0);
        let direct = gramian_direct(&kolmogorov(), 0.5, 1.0).unwrap();
        assert!(direct.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn kolmogorov_alpha_at_half() {
        let a = alpha(&kolmogorov(), 1.0, 0.5).unwrap();
        let expected = Matrix::from_rows(&[[-0.25, 1.5], [-0.125, 0.5]]).unwrap();
        assert!(a.max_abs_diff(&expected) < 1e-13, "{a:?}");
        assert_eq!(alpha(&kolmogorov(), 1.0, 1.0).unwrap(), Matrix::identity(2));
        assert_eq!(alpha(&kolmogorov(), 1.0, 0.0).unwrap(), Matrix::zeros(2, 2));
    }

    #[test]
    fn phi_endpoints() {
        let p = phi_path(&kolmogorov(), 0.3, &[1.0, -1.0], &[2.0, 0.5], &[0.0, 0.5, 1.0]).unwrap();
        assert!((p[0][0] - 1.0).abs() < 1e-12 && (p[0][1] + 1.0).abs() < 1e-12);
        assert_eq!(p[2], vec![2.0, 0.5]);
    }

    #[test]
    fn hamiltonian_flow_hits_target() {
        let dev = hamiltonian_verify(&kolmogorov(), 1.0, &[0.0, 0.0], &[1.0, 1.0], 1000).unwrap();
        assert!(dev < 1e-8, "{dev}");
        assert!(hamiltonian_verify(&kolmogorov(), 1.0, &[0.0; 2], &[0.0; 2], 50).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(gramian(&kolmogorov(), 0.0, 0.5), Err(Error::InvalidArgument(_))));
        assert!(matches!(gramian(&kolmogorov(), 1.0, 1.5), Err(Error::BadTimeOrder { .. })));
        assert!(matches!(phi_path(&kolmogorov(), 1.0, &[0.0; 2], &[0.0; 2], &[0.5, 0.2]), Err(Error::BadGrid(_))));
    }
}
