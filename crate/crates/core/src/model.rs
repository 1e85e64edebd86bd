// SPDX-License-Identifier: Apache-2.0

//! The linear model `dx = εAx dt + √ε B dW`: controllability checks, the
//! Krylov filtration `E_1 ⊂ … ⊂ E_n = ℝᵈ`, an adapted orthonormal basis, and
//! the leading-order blocks `u_k` of `e^{εrA}B` in that basis.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::matcore::{expm, numerical_rank, orthonormal_extension, Matrix};
use crate::scalar::Scalar;

/// Drift `A` (d×d) and diffusion `B` (d×m) of a controllable model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec<T> {
    a: Matrix<T>,
    b: Matrix<T>,
    rank_tol: T,
}

impl<T: Scalar> ModelSpec<T> {
    /// Validates `(A, B)` with the default rank tolerance.
    pub fn new(a: Matrix<T>, b: Matrix<T>) -> Result<Self> {
        Self::with_rank_tol(a, b, T::lit(T::RANK_TOL))
    }

    pub fn with_rank_tol(a: Matrix<T>, b: Matrix<T>, rank_tol: T) -> Result<Self> {
        a.require_square()?;
        a.check_finite()?;
        b.check_finite()?;
        let d = a.rows();
        if d == 0 || b.cols() == 0 {
            return Err(Error::ShapeMismatch("A and B must be non-empty".into()));
        }
        if b.rows() != d {
            return Err(Error::ShapeMismatch(format!("B has {} rows but A is {d}x{d}", b.rows())));
        }
        let spec = Self { a, b, rank_tol };
        let rank = numerical_rank(&spec.controllability_matrix(d), rank_tol)?.rank;
        if rank < d {
            return Err(Error::NotControllable { rank, dim: d });
        }
        Ok(spec)
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    /// State dimension `d`.
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Noise dimension `m`.
    pub fn inputs(&self) -> usize {
        self.b.cols()
    }

    pub fn rank_tol(&self) -> T {
        self.rank_tol
    }

    /// `[A⁰B, A¹B, …, A^{k−1}B]` as separate blocks.
    pub fn krylov_blocks(&self, k: usize) -> Vec<Matrix<T>> {
        let mut out = Vec::with_capacity(k);
        let mut p = self.b.clone();
        for _ in 0..k {
            let next = self.a.matmul(&p);
            out.push(p);
            p = next;
        }
        out
    }

    /// `[B, AB, …, A^{k−1}B]`.
    pub fn controllability_matrix(&self, k: usize) -> Matrix<T> {
        let blocks = self.krylov_blocks(k);
        let refs: Vec<&Matrix<T>> = blocks.iter().collect();
        Matrix::hstack(&refs).expect("blocks share row count")
    }

    /// Filtration with the model's own rank tolerance.
    pub fn filtration(&self) -> Result<Filtration<T>> {
        filtration(self, self.rank_tol)
    }
}

/// Validating constructor, `ModelSpec::new` under another name.
pub fn build_model<T: Scalar>(a: Matrix<T>, b: Matrix<T>) -> Result<ModelSpec<T>> {
    ModelSpec::new(a, b)
}

/// Dimension ladder and adapted orthonormal basis of the Krylov filtration.
#[derive(Clone, Debug, PartialEq)]
pub struct Filtration<T> {
    n: usize,
    dims: Vec<usize>,
    basis: Matrix<T>,
}

impl<T: Scalar> Filtration<T> {
    /// Minimal number of Krylov levels needed to span ℝᵈ.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `d_1 < d_2 < … < d_n = d`.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Orthogonal matrix whose first `d_k` columns span `E_k`.
    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    /// Index range of level `k` (zero-based) in adapted coordinates.
    pub fn level_range(&self, k: usize) -> Range<usize> {
        let lo = if k == 0 { 0 } else { self.dims[k - 1] };
        lo..self.dims[k]
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        (0..self.n).map(|k| self.level_range(k).len()).collect()
    }

    /// Zero-based level of every adapted coordinate.
    pub fn coordinate_levels(&self) -> Vec<usize> {
        (0..self.n).flat_map(|k| self.level_range(k).map(move |_| k)).collect()
    }

    /// True when the adapted basis is the standard one.
    pub fn is_standard(&self) -> bool {
        self.basis == Matrix::identity(self.dim())
    }

    /// `Qᵀ·M·Q`: a d×d operator expressed in the adapted basis.
    pub fn to_adapted(&self, m: &Matrix<T>) -> Matrix<T> {
        self.basis.transpose().matmul(m).matmul(&self.basis)
    }

    /// `Qᵀ·M` for d-row matrices.
    pub fn rows_to_adapted(&self, m: &Matrix<T>) -> Matrix<T> {
        self.basis.transpose().matmul(m)
    }

    /// `Q·M·Qᵀ`: back to original coordinates.
    pub fn from_adapted(&self, m: &Matrix<T>) -> Matrix<T> {
        self.basis.matmul(m).matmul_t(&self.basis)
    }
}

/// Builds the filtration `E_k = span{A^l B v : l < k}` and an adapted basis.
///
/// Level-k directions are taken from the columns of `A^{k−1}B` after
/// projecting out `E_{k−1}`, pivoting on the largest residual. When every
/// `E_k` is already spanned by the first `d_k` coordinate vectors the
/// standard basis is returned.
pub fn filtration<T: Scalar>(spec: &ModelSpec<T>, rel_tol: T) -> Result<Filtration<T>> {
    let d = spec.dim();
    let mut vecs: Vec<Vec<T>> = Vec::with_capacity(d);
    let mut dims = Vec::new();
    let mut scales = Vec::new();
    let mut scale = T::zero();
    let krylov = spec.krylov_blocks(d);
    for power in &krylov {
        scale = scale.max(power.max_col_norm());
        let (new, _) = orthonormal_extension(&vecs, power, rel_tol * scale);
        if new.is_empty() {
            break;
        }
        vecs.extend(new);
        dims.push(vecs.len());
        scales.push(scale);
        if vecs.len() == d {
            break;
        }
    }
    let reached = dims.last().copied().unwrap_or(0);
    if reached < d {
        return Err(Error::NotControllable { rank: reached, dim: d });
    }
    let n = dims.len();

    let standard_adapted = (0..n).all(|k| {
        let tol = rel_tol * scales[k];
        krylov[..=k]
            .iter()
            .all(|p| (dims[k]..d).all(|i| (0..p.cols()).all(|j| p[(i, j)].abs() <= tol)))
    });
    let basis = if standard_adapted {
        Matrix::identity(d)
    } else {
        Matrix::from_fn(d, d, |i, j| vecs[j][i])
    };
    Ok(Filtration { n, dims, basis })
}

/// Leading coefficients `u_1, …, u_n` of `e^{εrA}B` in the adapted basis.
#[derive(Clone, Debug, PartialEq)]
pub struct UBlocks<T> {
    blocks: Vec<Matrix<T>>,
}

impl<T: Scalar> UBlocks<T> {
    /// Wraps explicit blocks; all must share the column count `m`.
    pub fn new(blocks: Vec<Matrix<T>>) -> Result<Self> {
        let Some(first) = blocks.first() else {
            return Err(Error::InvalidArgument("at least one u-block is required".into()));
        };
        let m = first.cols();
        if blocks.iter().any(|b| b.cols() != m || b.rows() == 0) {
            return Err(Error::ShapeMismatch("u-blocks must be non-empty with equal column counts".into()));
        }
        Ok(Self { blocks })
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn inputs(&self) -> usize {
        self.blocks[0].cols()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Matrix::rows).sum()
    }

    pub fn blocks(&self) -> &[Matrix<T>] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &Matrix<T> {
        &self.blocks[k]
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(Matrix::rows).collect()
    }

    /// Cumulative dimensions `d_1 < … < d_n`.
    pub fn dims(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .scan(0, |acc, b| {
                *acc += b.rows();
                Some(*acc)
            })
            .collect()
    }

    pub fn level_offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        off.extend(self.dims());
        off.pop();
        off
    }

    pub fn coordinate_levels(&self) -> Vec<usize> {
        self.blocks.iter().enumerate().flat_map(|(k, b)| (0..b.rows()).map(move |_| k)).collect()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `u_k = (level-k rows of Qᵀ A^{k−1} B) / (k−1)!`.
pub fn u_blocks<T: Scalar>(spec: &ModelSpec<T>, filt: &Filtration<T>) -> UBlocks<T> {
    let krylov = spec.krylov_blocks(filt.n());
    let blocks = krylov
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let adapted = filt.rows_to_adapted(p);
            let r = filt.level_range(k);
            adapted.block(r.start, 0, r.len(), spec.inputs()).scale(T::one() / T::lit(factorial(k)))
        })
        .collect();
    UBlocks { blocks }
}

/// Principal part `Â` in the adapted basis: only the subdiagonal blocks
/// `(l+1, l)` of `QᵀAQ` are kept.
pub fn principal_part<T: Scalar>(spec: &ModelSpec<T>, filt: &Filtration<T>) -> Matrix<T> {
    let adapted = filt.to_adapted(spec.a());
    let levels = filt.coordinate_levels();
    Matrix::from_fn(spec.dim(), spec.dim(), |i, j| {
        if levels[i] == levels[j] + 1 {
            adapted[(i, j)]
        } else {
            T::zero()
        }
    })
}

/// `(−1)^k A^k B`: coefficient columns of `ad_{X_0}^k(X_i)`, `i = 1..m`.
pub fn adjoint_power<T: Scalar>(spec: &ModelSpec<T>, k: usize) -> Matrix<T> {
    let p = spec.a().powi(k).matmul(spec.b());
    if k % 2 == 1 {
        -p
    } else {
        p
    }
}

/// `Û(r) = e^{rÂ}B̃` evaluated through the principal part.
pub fn principal_flow<T: Scalar>(spec: &ModelSpec<T>, filt: &Filtration<T>, r: T) -> Result<Matrix<T>> {
    let a_hat = principal_part(spec, filt);
    let b_adapted = filt.rows_to_adapted(spec.b());
    Ok(expm(&a_hat.scale(r))?.matmul(&b_adapted))
}
