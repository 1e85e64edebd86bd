// SPDX-License-Identifier: Apache-2.0

//! The model seen in adapted coordinates with the anisotropic rescaling
//! `D_ε` divided out.
//!
//! With `Ã = QᵀAQ` and `B̃ = QᵀB`, the matrix `Ã_ε = ε·D_ε⁻¹ÃD_ε` has entries
//! `ε^{1 + lvl(j) − lvl(i)}·Ã_ij`. Blocks two or more levels below the
//! diagonal vanish exactly (A maps `E_k` into `E_{k+1}`), so `Ã_ε` is
//! polynomial in ε and tends to the principal part `Â`. Everything the
//! small-time analysis needs is well-scaled here:
//!
//! * `D_ε⁻¹QᵀU^ε(r) = e^{rÃ_ε}B̃`,
//! * `D_ε⁻¹Qᵀ(e^{εtA}Γ_t)QD_ε⁻¹ = ∫₀ᵗ e^{(t−s)Ã_ε}B̃B̃ᵀe^{−sÃ_εᵀ} ds`,
//! * `D_ε⁻¹QᵀαQD_ε = G̃_t·G̃_1⁻¹`.

use crate::error::{Error, Result};
use crate::matcore::{equilibrated_inverse, expm, Matrix};
use crate::model::{Filtration, ModelSpec};
use crate::scalar::Scalar;

/// Van Loan block exponential: returns `(∫₀ᵗ e^{sF}·Q·e^{sFᵀ} ds, e^{tF})`.
pub(crate) fn van_loan<T: Scalar>(f: &Matrix<T>, q: &Matrix<T>, t: T) -> Result<(Matrix<T>, Matrix<T>)> {
    let d = f.rows();
    let mut big = Matrix::zeros(2 * d, 2 * d);
    big.set_block(0, 0, &(-f).scale(t));
    big.set_block(0, d, &q.scale(t));
    big.set_block(d, d, &f.transpose().scale(t));
    let e = expm(&big)?;
    let top_right = e.block(0, d, d, d);
    let e22 = e.block(d, d, d, d);
    let integral = e22.transpose().matmul(&top_right).symmetrize();
    Ok((integral, e22.transpose()))
}

#[derive(Clone, Debug)]
pub struct ScaledFrame<T> {
    filt: Filtration<T>,
    eps: T,
    levels: Vec<usize>,
    drift: Matrix<T>,
    input: Matrix<T>,
    noise: Matrix<T>,
    g1_inv: Matrix<T>,
}

impl<T: Scalar> ScaledFrame<T> {
    pub fn new(spec: &ModelSpec<T>, eps: T) -> Result<Self> {
        let filt = spec.filtration()?;
        Self::with_filtration(spec, filt, eps)
    }

    pub fn with_filtration(spec: &ModelSpec<T>, filt: Filtration<T>, eps: T) -> Result<Self> {
        check_eps(eps)?;
        let levels = filt.coordinate_levels();
        let adapted = filt.to_adapted(spec.a());
        let drift = Matrix::from_fn(spec.dim(), spec.dim(), |i, j| {
            let (li, lj) = (levels[i] as i32, levels[j] as i32);
            if li >= lj + 2 {
                T::zero()
            } else {
                eps.powi(1 + lj - li) * adapted[(i, j)]
            }
        });
        let b = filt.rows_to_adapted(spec.b());
        let input = Matrix::from_fn(b.rows(), b.cols(), |i, j| if levels[i] == 0 { b[(i, j)] } else { T::zero() });
        let noise = input.matmul_t(&input);
        let mut frame = Self { filt, eps, levels, drift, input, noise, g1_inv: Matrix::zeros(0, 0) };
        let g1 = frame.exp_gamma(T::one())?;
        frame.g1_inv = equilibrated_inverse(&g1).map_err(|_| Error::SingularGramian { t: 1.0 })?.matrix;
        Ok(frame)
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn filtration(&self) -> &Filtration<T> {
        &self.filt
    }

    /// `ε·D_ε⁻¹ÃD_ε`.
    pub fn scaled_drift(&self) -> &Matrix<T> {
        &self.drift
    }

    /// `B̃` with rows above level one cleared.
    pub fn scaled_input(&self) -> &Matrix<T> {
        &self.input
    }

    /// Diagonal of `D_ε` in adapted coordinates.
    pub fn d_eps(&self) -> Vec<T> {
        self.levels.iter().map(|&l| self.eps.powi(l as i32)).collect()
    }

    /// `D_ε⁻¹QᵀU^ε(r)`.
    pub fn flow(&self, r: T) -> Result<Matrix<T>> {
        Ok(expm(&self.drift.scale(r))?.matmul(&self.input))
    }

    /// `∫₀ᵃ e^{uÃ_ε}B̃B̃ᵀe^{uÃ_εᵀ} du` and `e^{aÃ_ε}`.
    fn reach(&self, a: T) -> Result<(Matrix<T>, Matrix<T>)> {
        van_loan(&self.drift, &self.noise, a)
    }

    /// `K_ε(a, b) = ∫₀^{min(a,b)} Ũ(a−s)Ũ(b−s)ᵀ ds` with `Ũ(r) = e^{rÃ_ε}B̃`.
    pub fn kernel(&self, a: T, b: T) -> Result<Matrix<T>> {
        if a <= b {
            let (p, _) = self.reach(a)?;
            Ok(p.matmul_t(&expm(&self.drift.scale(b - a))?))
        } else {
            Ok(self.kernel(b, a)?.transpose())
        }
    }

    /// `G̃_t = D_ε⁻¹Qᵀ·e^{εtA}Γ_t·QD_ε⁻¹`.
    pub fn exp_gamma(&self, t: T) -> Result<Matrix<T>> {
        let (p, _) = self.reach(t)?;
        Ok(p.matmul_t(&expm(&self.drift.scale(-t))?))
    }

    /// `D_ε⁻¹QᵀΓ_tQD_ε⁻¹ = ∫₀ᵗ e^{−sÃ_ε}B̃B̃ᵀe^{−sÃ_εᵀ} ds`.
    pub fn gramian(&self, t: T) -> Result<Matrix<T>> {
        Ok(van_loan(&(-&self.drift), &self.noise, t)?.0)
    }

    /// `D_ε⁻¹Qᵀ·α_t·QD_ε`; zero at `t = 0`, identity at `t = 1`.
    pub fn scaled_alpha(&self, t: T) -> Result<Matrix<T>> {
        let d = self.levels.len();
        if t == T::zero() {
            return Ok(Matrix::zeros(d, d));
        }
        if t == T::one() {
            return Ok(Matrix::identity(d));
        }
        Ok(self.exp_gamma(t)?.matmul(&self.g1_inv))
    }

    /// `α_t` in original coordinates.
    pub fn alpha(&self, t: T) -> Result<Matrix<T>> {
        let s = self.scaled_alpha(t)?;
        let dd = self.d_eps();
        let unscaled = Matrix::from_fn(s.rows(), s.cols(), |i, j| dd[i] * s[(i, j)] / dd[j]);
        Ok(self.filt.from_adapted(&unscaled))
    }

    /// `Γ_1⁻¹·v` in original coordinates.
    pub fn gramian_solve(&self, v: &[T]) -> Result<Vec<T>> {
        let q = self.filt.basis();
        let dd = self.d_eps();
        let w: Vec<T> = q.transpose().mul_vec(v).iter().zip(&dd).map(|(&x, &s)| x / s).collect();
        let g = self.gramian(T::one())?;
        let sol = crate::matcore::solve(&g, &Matrix::column(&w)).map_err(|_| Error::SingularGramian { t: 1.0 })?;
        let z: Vec<T> = sol.col(0).iter().zip(&dd).map(|(&x, &s)| x / s).collect();
        Ok(q.mul_vec(&z))
    }

    /// Covariance of the rescaled fluctuations `ε^{−1/2}D_ε⁻¹Qᵀ(z_t − φ_t)`
    /// at `(t1, t2)`, in either order.
    pub fn rescaled_cov(&self, t1: T, t2: T) -> Result<Matrix<T>> {
        let s1 = self.scaled_alpha(t1)?;
        let s2 = self.scaled_alpha(t2)?;
        let one = T::one();
        let k12 = self.kernel(t1, t2)?;
        let k1_one = self.kernel(t1, one)?;
        let k_one2 = self.kernel(one, t2)?;
        let k11 = self.kernel(one, one)?;
        Ok(k12 - k1_one.matmul_t(&s2) - s1.matmul(&k_one2) + s1.matmul(&k11).matmul_t(&s2))
    }
}

impl<T: Scalar> ScaledFrame<T> {
    /// `rescaled_cov` for every pair of grid times, as one block matrix.
    pub fn rescaled_cov_grid(&self, grid: &[T]) -> Result<Matrix<T>> {
        let one = T::one();
        let k11 = self.kernel(one, one)?;
        let per_point: Vec<(Matrix<T>, Matrix<T>)> = grid
            .iter()
            .map(|&t| Ok((self.scaled_alpha(t)?, self.kernel(t, one)?)))
            .collect::<Result<_>>()?;
        crate::matcore::symmetric_blocks(grid.len(), self.levels.len(), |i, j| {
            let (s_i, k_i1) = &per_point[i];
            let (s_j, k_j1) = &per_point[j];
            Ok(self.kernel(grid[i], grid[j])? - k_i1.matmul_t(s_j) - s_i.matmul_t(k_j1)
                + s_i.matmul(&k11).matmul_t(s_j))
        })
    }

    /// `Q·D_ε`, mapping rescaled adapted coordinates back to the original ones.
    pub fn unscale(&self) -> Matrix<T> {
        let dd = self.d_eps();
        let q = self.filt.basis();
        Matrix::from_fn(q.rows(), q.cols(), |i, j| q[(i, j)] * dd[j])
    }
}

pub(crate) fn check_eps<T: Scalar>(eps: T) -> Result<()> {
    if eps > T::zero() && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must be positive and finite, got {eps}")))
    }
}
