// SPDX-License-Identifier: Apache-2.0

//! Independent oracles shared by the integration tests. Nothing here calls
//! the block-exponential, scaled-frame or closed-form kernel code paths of
//! the library.

#![allow(dead_code)]

use hypobridge::matcore::{inverse, Matrix};
use hypobridge::model::ModelSpec;
use hypobridge::quad::GaussLegendre;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M = Matrix<f64>;

/// Taylor series with scaling and squaring, plain f64.
pub fn taylor_expm(m: &M) -> M {
    let norm = m.norm_one();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let a = m.scale(2f64.powi(-squarings));
    let n = m.rows();
    let mut term = Matrix::identity(n);
    let mut sum = Matrix::identity(n);
    for k in 1..30 {
        term = term.matmul(&a).scale(1.0 / k as f64);
        sum += &term;
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
    }
    sum
}

/// Composite Gauss–Legendre on `[a, b]`, refined until two successive
/// panel counts agree.
pub fn adaptive_integral(a: f64, b: f64, rel_tol: f64, f: impl Fn(f64) -> M) -> M {
    let gl = GaussLegendre::new(20);
    let panel_sum = |panels: usize| -> M {
        let h = (b - a) / panels as f64;
        let mut acc: Option<M> = None;
        for p in 0..panels {
            let lo = a + p as f64 * h;
            for (s, w) in gl.points(lo, lo + h) {
                let term = f(s).scale(w);
                acc = Some(match acc {
                    None => term,
                    Some(x) => &x + &term,
                });
            }
        }
        acc.expect("at least one node")
    };
    let mut panels = 1;
    let mut prev = panel_sum(panels);
    loop {
        panels *= 2;
        let next = panel_sum(panels);
        let scale = next.max_abs().max(f64::MIN_POSITIVE);
        if next.max_abs_diff(&prev) <= rel_tol * scale || panels >= 256 {
            return next;
        }
        prev = next;
    }
}

/// `Γ_t` by quadrature of its defining integral.
pub fn gramian_quadrature(spec: &ModelSpec<f64>, eps: f64, t: f64) -> M {
    let bbt = spec.b().matmul_t(spec.b());
    let d = spec.dim();
    if t == 0.0 {
        return Matrix::zeros(d, d);
    }
    adaptive_integral(0.0, t, 1e-14, |s| {
        let e = taylor_expm(&spec.a().scale(-eps * s));
        e.matmul(&bbt).matmul_t(&e)
    })
}

/// `Cov(x_s, x_t) = ε∫₀^{min(s,t)} e^{ε(s−u)A}BBᵀe^{ε(t−u)Aᵀ} du` by quadrature.
pub fn process_cov_quadrature(spec: &ModelSpec<f64>, eps: f64, s: f64, t: f64) -> M {
    let d = spec.dim();
    let lo = s.min(t);
    if lo == 0.0 {
        return Matrix::zeros(d, d);
    }
    let bbt = spec.b().matmul_t(spec.b());
    adaptive_integral(0.0, lo, 1e-14, |u| {
        let left = taylor_expm(&spec.a().scale(eps * (s - u)));
        let right = taylor_expm(&spec.a().scale(eps * (t - u)));
        left.matmul(&bbt).matmul_t(&right).scale(eps)
    })
}

/// Bridge covariance on `grid` by classical Gaussian conditioning of the
/// joint law of `(x_{t_1}, …, x_{t_N}, x_1)` on `x_1`:
/// `Σ₁₁ − Σ₁₂Σ₂₂⁻¹Σ₂₁`.
pub fn schur_bridge_cov(spec: &ModelSpec<f64>, eps: f64, grid: &[f64]) -> M {
    let d = spec.dim();
    let n = grid.len();
    let mut s11 = Matrix::zeros(n * d, n * d);
    let mut s12 = Matrix::zeros(n * d, d);
    for (i, &ti) in grid.iter().enumerate() {
        for (j, &tj) in grid.iter().enumerate() {
            s11.set_block(i * d, j * d, &process_cov_quadrature(spec, eps, ti, tj));
        }
        s12.set_block(i * d, 0, &process_cov_quadrature(spec, eps, ti, 1.0));
    }
    let s22 = process_cov_quadrature(spec, eps, 1.0, 1.0);
    let gain = s12.matmul(&inverse(&s22).expect("invertible terminal covariance"));
    &s11 - &gain.matmul_t(&s12)
}

/// Random controllable pair with entries uniform in `[−1, 1]`.
pub fn random_spec(rng: &mut ChaCha8Rng, d: usize, m: usize) -> ModelSpec<f64> {
    loop {
        let a = Matrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let b = Matrix::from_fn(d, m, |_, _| rng.random_range(-1.0..1.0));
        if let Ok(spec) = ModelSpec::new(a, b) {
            return spec;
        }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Largest `|a_ij − b_ij| / max(|b_ij|, floor)`.
pub fn max_rel_err(a: &M, b: &M, floor: f64) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs() / b[(i, j)].abs().max(floor));
        }
    }
    worst
}

/// Standard error of the sample covariance of entries `(i, j)` of a
/// Gaussian vector with covariance `cov`, from `n` draws.
pub fn cov_standard_error(cov: &M, i: usize, j: usize, n: usize) -> f64 {
    ((cov[(i, i)] * cov[(j, j)] + cov[(i, j)] * cov[(i, j)]) / n as f64).sqrt()
}

/// Sample covariance of flat samples (`n` rows of length `len`).
pub fn sample_cov(data: &[f64], len: usize) -> M {
    let n = data.len() / len;
    let mut mean = vec![0.0; len];
    for row in data.chunks(len) {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x / n as f64;
        }
    }
    let mut cov = Matrix::zeros(len, len);
    for row in data.chunks(len) {
        for a in 0..len {
            for b in 0..len {
                cov[(a, b)] += (row[a] - mean[a]) * (row[b] - mean[b]) / (n - 1) as f64;
            }
        }
    }
    cov
}

/// Number of covariance entries whose sample estimate is more than
/// `sigmas` standard errors from `cov`.
pub fn mc_outliers(data: &[f64], cov: &M, sigmas: f64) -> (usize, f64) {
    let len = cov.rows();
    let n = data.len() / len;
    let sample = sample_cov(data, len);
    let mut bad = 0;
    let mut worst: f64 = 0.0;
    for i in 0..len {
        for j in i..len {
            let se = cov_standard_error(cov, i, j, n);
            let z = if se > 0.0 { (sample[(i, j)] - cov[(i, j)]).abs() / se } else { 0.0 };
            worst = worst.max(z);
            if z > sigmas {
                bad += 1;
            }
        }
    }
    (bad, worst)
}

/// Orthonormal Krylov basis of `(A, B)` by block Arnoldi with two passes of
/// modified Gram–Schmidt, together with the Krylov level of each column.
pub fn arnoldi_basis(spec: &ModelSpec<f64>) -> (M, Vec<usize>) {
    let d = spec.dim();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut levels = Vec::new();
    let mut frontier: Vec<Vec<f64>> = (0..spec.b().cols()).map(|j| spec.b().col(j)).collect();
    let mut level = 0;
    while cols.len() < d && !frontier.is_empty() {
        let mut added = Vec::new();
        for v in frontier {
            let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let mut w = v;
            for _ in 0..2 {
                for q in &cols {
                    let dot: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                    w.iter_mut().zip(q).for_each(|(x, qi)| *x -= dot * qi);
                }
            }
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-10 * norm0.max(f64::MIN_POSITIVE) {
                w.iter_mut().for_each(|x| *x /= norm);
                cols.push(w.clone());
                levels.push(level);
                added.push(w);
            }
        }
        frontier = added.iter().map(|q| spec.a().mul_vec(q)).collect();
        level += 1;
    }
    (Matrix::from_fn(d, cols.len(), |i, j| cols[j][i]), levels)
}

/// `e^{sÃ}B̃` in the Krylov basis by a plain Taylor sum, so that entries on
/// deep levels keep their relative accuracy.
fn graded_flow(a_t: &M, b_t: &M, s: f64) -> M {
    let mut term = b_t.clone();
    let mut sum = b_t.clone();
    for k in 1..80 {
        term = a_t.matmul(&term).scale(s / k as f64);
        sum += &term;
    }
    sum
}

/// Same conditioning as [`schur_bridge_cov`] but with the terminal state
/// expressed in a Krylov basis and equilibrated before inversion. Needed
/// when `Σ₂₂` is too ill-conditioned for the plain formula to reach 1e-9.
pub fn schur_bridge_cov_graded(spec: &ModelSpec<f64>, eps: f64, grid: &[f64]) -> M {
    let d = spec.dim();
    let n = grid.len();
    let (q, lv) = arnoldi_basis(spec);
    let mut a_t = q.transpose().matmul(spec.a()).matmul(&q);
    for i in 0..d {
        for j in 0..d {
            if lv[i] >= lv[j] + 2 {
                a_t[(i, j)] = 0.0;
            }
        }
    }
    let mut b_t = q.transpose().matmul(spec.b());
    for i in 0..d {
        if lv[i] > 0 {
            for j in 0..b_t.cols() {
                b_t[(i, j)] = 0.0;
            }
        }
    }
    let terminal = |u: f64| graded_flow(&a_t, &b_t, eps * (1.0 - u));
    let s22 = adaptive_integral(0.0, 1.0, 1e-15, |u| {
        let v = terminal(u);
        v.matmul_t(&v).scale(eps)
    });
    let mut s11 = Matrix::zeros(n * d, n * d);
    let mut s12 = Matrix::zeros(n * d, d);
    for (i, &ti) in grid.iter().enumerate() {
        for (j, &tj) in grid.iter().enumerate() {
            s11.set_block(i * d, j * d, &process_cov_quadrature(spec, eps, ti, tj));
        }
        let block = adaptive_integral(0.0, ti, 1e-15, |u| {
            taylor_expm(&spec.a().scale(eps * (ti - u))).matmul(spec.b()).matmul_t(&terminal(u)).scale(eps)
        });
        s12.set_block(i * d, 0, &block);
    }
    let scale: Vec<f64> = s22.diag().iter().map(|x| 1.0 / x.sqrt()).collect();
    let sd = Matrix::from_diag(&scale);
    let c = sd.matmul(&s22).matmul(&sd);
    let w = s12.matmul(&sd);
    let gain = w.matmul(&inverse(&c).expect("invertible terminal covariance"));
    &s11 - &gain.matmul_t(&w)
}
