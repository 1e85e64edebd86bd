// SPDX-License-Identifier: Apache-2.0

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// LU factorisation with partial pivoting, `P·A = L·U` packed in one matrix.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self> {
        a.require_square()?;
        a.check_finite()?;
        let n = a.rows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[(k, k)].abs();
            for i in k + 1..n {
                let v = lu[(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f != T::zero() {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= f * u;
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &Matrix<T>) -> Matrix<T> {
        let n = self.lu.rows();
        assert_eq!(b.rows(), n, "LU solve shape mismatch");
        let mut x = Matrix::from_fn(n, b.cols(), |i, j| b[(self.perm[i], j)]);
        for c in 0..b.cols() {
            for i in 0..n {
                let mut s = x[(i, c)];
                for k in 0..i {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s;
            }
            for i in (0..n).rev() {
                let mut s = x[(i, c)];
                for k in i + 1..n {
                    s -= self.lu[(i, k)] * x[(k, c)];
                }
                x[(i, c)] = s / self.lu[(i, i)];
            }
        }
        x
    }

    pub fn inverse(&self) -> Matrix<T> {
        self.solve(&Matrix::identity(self.lu.rows()))
    }
}

/// Solves `A·X = B`.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(Lu::factor(a)?.solve(b))
}

pub fn inverse<T: Scalar>(a: &Matrix<T>) -> Result<Matrix<T>> {
    Ok(Lu::factor(a)?.inverse())
}

/// 1-norm condition number `‖A‖₁·‖A⁻¹‖₁`; infinite for singular input.
pub fn cond_one<T: Scalar>(a: &Matrix<T>) -> Result<f64> {
    match inverse(a) {
        Ok(inv) => Ok(a.norm_one().as_f64() * inv.norm_one().as_f64()),
        Err(Error::Singular) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Inverse together with the conditioning information used to accept it.
#[derive(Clone, Debug)]
pub struct Inverse<T> {
    pub matrix: Matrix<T>,
    /// 1-norm condition number after row/column equilibration.
    pub cond: f64,
    /// 1-norm condition number of the matrix as given.
    pub raw_cond: f64,
}

/// Inverse computed on the row/column equilibrated matrix `R·A·C`, with three
/// steps of iterative refinement on a residual evaluated in doubled precision. Scaling factors are powers of two, so the
/// equilibration itself is exact.
pub fn equilibrated_inverse<T: Scalar>(a: &Matrix<T>) -> Result<Inverse<T>> {
    a.require_square()?;
    a.check_finite()?;
    let n = a.rows();
    let mut w = a.clone();
    let mut r = vec![T::one(); n];
    let mut c = vec![T::one(); n];
    let pow2 = |x: T| T::lit(2f64.powi(-(x.as_f64().log2().round() as i32)));
    for _ in 0..8 {
        for i in 0..n {
            let m = (0..n).fold(T::zero(), |m, j| m.max(w[(i, j)].abs()));
            if m == T::zero() {
                return Err(Error::Singular);
            }
            let s = pow2(m);
            r[i] *= s;
            for j in 0..n {
                w[(i, j)] *= s;
            }
        }
        for j in 0..n {
            let m = (0..n).fold(T::zero(), |m, i| m.max(w[(i, j)].abs()));
            if m == T::zero() {
                return Err(Error::Singular);
            }
            let s = pow2(m);
            c[j] *= s;
            for i in 0..n {
                w[(i, j)] *= s;
            }
        }
    }
    let lu = Lu::factor(&w)?;
    let mut winv = lu.inverse();
    for _ in 0..3 {
        let resid = Matrix::from_fn(n, n, |i, j| {
            let delta = if i == j { T::one() } else { T::zero() };
            compensated_residual(delta, (0..n).map(|k| (w[(i, k)], winv[(k, j)])))
        });
        winv += &lu.solve(&resid);
    }
    let cond = w.norm_one().as_f64() * winv.norm_one().as_f64();
    let matrix = Matrix::from_fn(n, n, |i, j| c[i] * winv[(i, j)] * r[j]);
    let raw_cond = a.norm_one().as_f64() * matrix.norm_one().as_f64();
    Ok(Inverse { matrix, cond, raw_cond })
}

/// Result of a rank-revealing orthogonalisation.
#[derive(Clone, Debug)]
pub struct RankReveal<T> {
    pub rank: usize,
    /// Orthonormal basis of the column space, `rows × rank`.
    pub basis: Matrix<T>,
    /// Column index chosen at each step.
    pub pivots: Vec<usize>,
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn project_out<T: Scalar>(v: &mut [T], basis: &[Vec<T>]) {
    for q in basis {
        let c = dot(q, v);
        for (x, &qi) in v.iter_mut().zip(q) {
            *x -= c * qi;
        }
    }
}

/// Extends the orthonormal set `prior` by directions from the columns of
/// `cands`. Columns are chosen by largest residual norm (ties go to the lowest
/// index) until no residual exceeds `threshold`. Returns the new vectors and
/// the column indices they came from.
pub fn orthonormal_extension<T: Scalar>(
    prior: &[Vec<T>],
    cands: &Matrix<T>,
    threshold: T,
) -> (Vec<Vec<T>>, Vec<usize>) {
    let mut resid: Vec<Vec<T>> = (0..cands.cols()).map(|j| cands.col(j)).collect();
    for r in resid.iter_mut() {
        project_out(r, prior);
        project_out(r, prior);
    }
    let mut chosen = Vec::new();
    let mut pivots = Vec::new();
    let mut used = vec![false; resid.len()];
    let room = cands.rows().saturating_sub(prior.len());
    while chosen.len() < room {
        let mut best: Option<(usize, T)> = None;
        for (j, r) in resid.iter().enumerate() {
            if used[j] {
                continue;
            }
            let nrm = dot(r, r).sqrt();
            if best.is_none_or(|(_, b)| nrm > b) {
                best = Some((j, nrm));
            }
        }
        let Some((j, nrm)) = best else { break };
        if !(nrm > threshold) {
            break;
        }
        used[j] = true;
        let mut q: Vec<T> = resid[j].iter().map(|&x| x / nrm).collect();
        project_out(&mut q, prior);
        project_out(&mut q, &chosen);
        let qn = dot(&q, &q).sqrt();
        q.iter_mut().for_each(|x| *x /= qn);
        for (k, r) in resid.iter_mut().enumerate() {
            if !used[k] {
                let c = dot(&q, r);
                for (x, &qi) in r.iter_mut().zip(&q) {
                    *x -= c * qi;
                }
            }
        }
        chosen.push(q);
        pivots.push(j);
    }
    (chosen, pivots)
}

pub(crate) fn columns_to_matrix<T: Scalar>(rows: usize, cols: &[Vec<T>]) -> Matrix<T> {
    Matrix::from_fn(rows, cols.len(), |i, j| cols[j][i])
}

/// Numerical rank with threshold `rel_tol × (largest column norm)`, plus an
/// orthonormal basis of the column space in pivot order.
pub fn numerical_rank<T: Scalar>(m: &Matrix<T>, rel_tol: T) -> Result<RankReveal<T>> {
    m.check_finite()?;
    if !(rel_tol > T::zero() && rel_tol < T::one()) {
        return Err(Error::InvalidArgument(format!("rank tolerance {rel_tol} not in (0, 1)")));
    }
    let threshold = rel_tol * m.max_col_norm();
    let (basis, pivots) = orthonormal_extension(&[], m, threshold);
    Ok(RankReveal { rank: basis.len(), basis: columns_to_matrix(m.rows(), &basis), pivots })
}

/// Lower-triangular `L` with `L·Lᵀ = M + jitter·(tr M / n)·I`.
///
/// Pivots within `1e-12 × max diagonal` of zero are treated as exact zeros
/// (their column of `L` is cleared); more negative pivots are rejected.
pub fn chol_psd<T: Scalar>(m: &Matrix<T>, jitter: T) -> Result<Matrix<T>> {
    m.require_square()?;
    m.check_finite()?;
    if jitter < T::zero() {
        return Err(Error::InvalidArgument("negative jitter".into()));
    }
    let n = m.rows();
    let scale = m.max_abs();
    let asym = m.asymmetry();
    if asym > T::lit(1e-10) * scale {
        return Err(Error::Asymmetric { deviation: asym.as_f64() });
    }
    let mut a = m.symmetrize();
    if jitter > T::zero() && n > 0 {
        let shift = jitter * m.trace() / T::lit(n as f64);
        for i in 0..n {
            a[(i, i)] += shift;
        }
    }
    let max_diag = a.diag().into_iter().fold(T::zero(), T::max);
    let tol = T::lit(1e-12) * max_diag.max(T::min_positive_value());
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d < -tol {
            return Err(Error::NotPsd { index: j, pivot: d.as_f64() });
        }
        if d <= tol {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn sym_eigenvalues<T: Scalar>(m: &Matrix<T>) -> Result<Vec<T>> {
    m.require_square()?;
    m.check_finite()?;
    let n = m.rows();
    let mut a = m.symmetrize();
    let two = T::lit(2.0);
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        if off <= T::epsilon() * T::epsilon() * a.norm_fro().powi(2) || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (two * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev = a.diag();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap_or(std::cmp::Ordering::Equal));
    Ok(ev)
}

/// Spectral norm (largest singular value).
pub fn op_norm<T: Scalar>(m: &Matrix<T>) -> T {
    if m.rows() == 0 || m.cols() == 0 {
        return T::zero();
    }
    let gram = m.transpose().matmul(m);
    sym_eigenvalues(&gram)
        .ok()
        .and_then(|ev| ev.last().copied())
        .unwrap_or_else(T::nan)
        .max(T::zero())
        .sqrt()
}

/// `c − Σ aₖbₖ` evaluated with error-free products and sums, then rounded once.
fn compensated_residual<T: Scalar>(c: T, terms: impl Iterator<Item = (T, T)>) -> T {
    let (mut hi, mut lo) = (c, T::zero());
    for (a, b) in terms {
        let p = -(a * b);
        let p_err = (-a).mul_add(b, -p);
        let s = hi + p;
        let bv = s - hi;
        let s_err = (hi - (s - bv)) + (p - bv);
        hi = s;
        lo += s_err + p_err;
    }
    hi + lo
}
