// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{mc_outliers, process_cov_quadrature, random_spec, rng, schur_bridge_cov, schur_bridge_cov_graded};
use hypobridge::bridge::{bridge_law, path_rng, process_cov, sample_bridge, sample_unconditioned, ProcessLaw};
use hypobridge::gramian::alpha;
use hypobridge::matcore::{sym_eigenvalues, Matrix};
use hypobridge::model::ModelSpec;
use hypobridge::presets::{Preset, PresetName};
use hypobridge::{Error, Scalar};
use proptest::prelude::*;

fn kolmogorov() -> ModelSpec<f64> {
    Preset::new(PresetName::Kolmogorov).into_spec()
}

#[test]
fn process_cov_examples() {
    let spec = kolmogorov();
    assert_eq!(process_cov(&spec, 0.4, 0.0, 0.7).unwrap(), Matrix::zeros(2, 2));
    let (eps, t) = (0.4, 0.9);
    let expected = Matrix::from_rows(&[[t, eps * t * t / 2.0], [eps * t * t / 2.0, eps * eps * t * t * t / 3.0]])
        .unwrap()
        .scale(eps);
    assert!(process_cov(&spec, eps, t, t).unwrap().max_abs_diff(&expected) < 1e-15);
    assert!(matches!(process_cov(&spec, eps, 0.8, 0.2), Err(Error::BadTimeOrder { .. })));
    let law = ProcessLaw::new(spec, eps, vec![1.0, 2.0]).unwrap();
    assert_eq!(law.mean(0.5).unwrap(), vec![1.0, 2.0 + eps * 0.5]);
    assert_eq!(law.cov(0.7, 0.3).unwrap(), law.cov(0.3, 0.7).unwrap().transpose());
}

#[test]
fn bridge_examples() {
    let spec = kolmogorov();
    let end = bridge_law(&spec, 0.6, &[1.0, -1.0], &[0.3, 0.2], &[1.0]).unwrap();
    assert_eq!(end.mean_path, vec![vec![0.3, 0.2]]);
    assert!(end.joint_cov.max_abs() <= 1e-10);

    let half = bridge_law(&spec, 1.0, &[0.0, 0.0], &[0.0, 0.0], &[0.5]).unwrap();
    assert_eq!(half.mean_path, vec![vec![0.0, 0.0]]);
    assert!(half.joint_cov.max_abs_diff(&schur_bridge_cov(&spec, 1.0, &[0.5])) <= 1e-10);

    let early = bridge_law(&spec, 1.0, &[0.0, 0.0], &[0.0, 0.0], &[1e-6, 1e-3, 0.5]).unwrap();
    assert!(early.cov_block(0, 0).max_abs() < 2e-6);
    assert!(early.cov_block(0, 0).max_abs() < early.cov_block(1, 1).max_abs());

    assert!(matches!(bridge_law(&spec, 1.0, &[0.0; 2], &[0.0; 2], &[0.5, 0.5]), Err(Error::BadGrid(_))));
    assert!(matches!(bridge_law(&spec, 1.0, &[0.0; 2], &[0.0; 2], &[0.0, 0.5]), Err(Error::BadGrid(_))));
}

#[test]
fn bridge_covariance_is_psd_and_pinned() {
    let mut r = rng(3);
    for d in 1..=4 {
        let spec = random_spec(&mut r, d, 1);
        let grid: Vec<f64> = (1..=8).map(|k| k as f64 / 8.0).collect();
        let law = bridge_law(&spec, 0.7, &vec![0.5; d], &vec![-0.5; d], &grid).unwrap();
        let scale = law.joint_cov.max_abs();
        assert!(sym_eigenvalues(&law.joint_cov).unwrap().iter().all(|&l| l >= -1e-12 * scale));
        assert!(law.cov_block(7, 7).max_abs() <= 1e-10 && law.cov_block(2, 7).max_abs() <= 1e-10);
        assert!(law.mean_path[7].iter().zip(vec![-0.5; d]).all(|(a, b)| (a - b).abs() <= 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn process_cov_matches_quadrature(seed in any::<u64>(), d in 1usize..=4, eps in 0.1..1.0f64, s in 0.05..1.0f64, t in 0.05..1.0f64) {
        let spec = random_spec(&mut rng(seed), d, 1);
        let (t1, t2) = (s.min(t), s.max(t));
        let oracle = process_cov_quadrature(&spec, eps, t1, t2);
        let got = process_cov(&spec, eps, t1, t2).unwrap();
        prop_assert!(got.max_abs_diff(&oracle) <= 1e-9 * oracle.max_abs());
    }

    #[test]
    fn bridge_equals_gaussian_conditioning(seed in any::<u64>(), d in 1usize..=4, m_in in 1usize..=2, eps in 0.3..1.0f64) {
        let spec = random_spec(&mut rng(seed), d, m_in.min(d));
        let grid = [0.2, 0.5, 0.9];
        let law = bridge_law(&spec, eps, &vec![0.0; d], &vec![0.0; d], &grid).unwrap();
        let oracle = schur_bridge_cov_graded(&spec, eps, &grid);
        prop_assert!(law.joint_cov.max_abs_diff(&oracle) <= 1e-9 * oracle.max_abs().max(1.0));
    }

    #[test]
    fn bridge_independent_of_terminal_state(seed in any::<u64>(), d in 1usize..=4, eps in 0.1..1.0f64,
                                            x in prop::collection::vec(-2.0..2.0f64, 4), y in prop::collection::vec(-2.0..2.0f64, 4)) {
        let spec = random_spec(&mut rng(seed), d, 1);
        let grid: Vec<f64> = (1..=5).map(|k| k as f64 / 5.0).collect();
        let a = bridge_law(&spec, eps, &vec![0.0; d], &vec![0.0; d], &grid).unwrap();
        let b = bridge_law(&spec, eps, &x[..d], &y[..d], &grid).unwrap();
        prop_assert!(a.joint_cov.max_abs_diff(&b.joint_cov) <= 1e-12);
    }

    #[test]
    fn bridge_decorrelated_from_endpoint(seed in any::<u64>(), d in 1usize..=4, eps in 0.2..1.0f64, t in 0.05..0.95f64) {
        // Cov(x_t − α_t x_1, x_1) = Cov(x_t, x_1) − α_t Cov(x_1, x_1).
        let spec = random_spec(&mut rng(seed), d, 1);
        let c = &process_cov(&spec, eps, t, 1.0).unwrap() - &alpha(&spec, eps, t).unwrap().matmul(&process_cov(&spec, eps, 1.0, 1.0).unwrap());
        prop_assert!(c.norm_fro() <= 1e-10);
    }
}

#[test]
fn sampling_is_reproducible_and_exact_at_endpoint() {
    let spec = kolmogorov();
    let law = bridge_law(&spec, 1.0, &[0.0, 0.0], &[0.4, -0.2], &[0.25, 0.5, 1.0]).unwrap();
    let a = sample_bridge(&law, 500, 9, 0.0).unwrap();
    let b = sample_bridge(&law, 500, 9, 0.0).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, sample_bridge(&law, 500, 10, 0.0).unwrap());
    for k in 0..a.n_paths {
        let end = a.state(k, 2);
        assert!((end[0] - 0.4).abs() <= 1e-8 && (end[1] + 0.2).abs() <= 1e-8);
    }
    // A prefix of the paths does not depend on how many are drawn.
    let fewer = sample_bridge(&law, 7, 9, 0.0).unwrap();
    assert_eq!(fewer.data[..], a.data[..fewer.data.len()]);

    let point = bridge_law(&spec, 1.0, &[0.0, 0.0], &[0.4, -0.2], &[1.0]).unwrap();
    let one = sample_bridge(&point, 1, 1, 0.0).unwrap();
    assert_eq!(one.data, vec![0.4, -0.2]);
}

#[test]
fn kolmogorov_bridge_monte_carlo() {
    let spec = kolmogorov();
    let law = bridge_law(&spec, 1.0, &[0.0, 0.0], &[0.0, 0.0], &[0.25, 0.5, 0.75]).unwrap();
    let paths = sample_bridge(&law, 20_000, 2024, 0.0).unwrap();
    let (bad, worst) = mc_outliers(&paths.data, &law.joint_cov, 3.0);
    assert_eq!(bad, 0, "max z {worst}");
}

#[test]
fn unconditioned_monte_carlo() {
    let spec = kolmogorov();
    let grid = [0.5, 1.0];
    let paths = sample_unconditioned(&spec, 1.0, &[1.0, 2.0], &grid, 40_000, 5).unwrap();
    let end: Matrix<f64> = Matrix::from_rows(&[[1.0, 0.5], [0.5, 1.0 / 3.0]]).unwrap();
    let c = paths.sample_cov(1, 1);
    let n = paths.n_paths as f64;
    for i in 0..2 {
        for j in 0..2 {
            let se = ((end[(i, i)] * end[(j, j)] + end[(i, j)].powi(2)) / n).sqrt();
            assert!((c[(i, j)] - end[(i, j)]).abs() <= 3.0 * se, "({i},{j}): {} vs {}", c[(i, j)], end[(i, j)]);
        }
    }
    let mean_end = [1.0, 2.0 + 1.0];
    for (c, expected) in mean_end.iter().enumerate() {
        let avg = (0..paths.n_paths).map(|k| paths.state(k, 1)[c]).sum::<f64>() / n;
        assert!((avg - expected).abs() <= 3.0 * (end[(c, c)] / n).sqrt());
    }
    let cross = paths.sample_cov(0, 1);
    let expected = process_cov(&spec, 1.0, 0.5, 1.0).unwrap();
    assert!(cross.max_abs_diff(&expected) < 0.03);
}

#[test]
fn iterated_integral_identity() {
    // ∫₀¹(1−s)^k dW_s against k! times the k-fold iterated Riemann integral of W.
    const STEPS: usize = 2000;
    const PATHS: usize = 400;
    let dt = 1.0 / STEPS as f64;
    for k in 1..=3usize {
        let mut direct = Vec::with_capacity(PATHS);
        let mut iterated = Vec::with_capacity(PATHS);
        for p in 0..PATHS {
            let mut rng = path_rng(k as u64, p);
            let dw: Vec<f64> = (0..STEPS).map(|_| f64::standard_normal(&mut rng) * dt.sqrt()).collect();
            direct.push(dw.iter().enumerate().map(|(i, w)| (1.0 - i as f64 * dt).powi(k as i32) * w).sum::<f64>());
            let mut level: Vec<f64> = dw
                .iter()
                .scan(0.0, |acc, w| {
                    *acc += w;
                    Some(*acc)
                })
                .collect();
            for _ in 0..k {
                level = level
                    .iter()
                    .scan(0.0, |acc, v| {
                        *acc += v * dt;
                        Some(*acc)
                    })
                    .collect();
            }
            let fact: f64 = (1..=k).map(|j| j as f64).product();
            iterated.push(fact * level[STEPS - 1]);
        }
        let corr = correlation(&direct, &iterated);
        assert!(corr >= 0.999, "k = {k}: correlation {corr}");
    }
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}
