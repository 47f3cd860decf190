mod common;

use common::*;
use rand::Rng;
use scaffold_gait::gp::{
    hyperparameter_grid, kernel_matrix, log_marginal_likelihood, select_hyperparameters, Dataset, GpModel, KernelParams,
};

#[test]
fn ten_point_posterior_matches_dense_inverse() {
    let mut r = rng(1);
    let data = random_dataset(&mut r, 10);
    let kp = KernelParams::default();
    let model = GpModel::fit(data.clone(), kp).unwrap();
    for _ in 0..20 {
        let q = random_point(&mut r);
        let (m, v) = model.predict(&q);
        let (om, ov) = dense_posterior(data.inputs(), data.targets(), &kp, &q);
        assert!(rel_close(m, om, 1e-8), "{m} vs {om}");
        assert!(rel_close(v, ov, 1e-8), "{v} vs {ov}");
    }
}

#[test]
fn random_datasets_match_oracle() {
    let mut r = rng(2);
    for _ in 0..50 {
        let n = r.random_range(1..=12);
        let data = random_dataset(&mut r, n);
        let kp = random_kernel(&mut r);
        let model = GpModel::fit(data.clone(), kp).unwrap();
        let q = random_point(&mut r);
        let (m, v) = model.predict(&q);
        let (om, ov) = dense_posterior(data.inputs(), data.targets(), &kp, &q);
        assert!(rel_close(m, om, 1e-8) && rel_close(v, ov, 1e-8), "n={n}: ({m},{v}) vs ({om},{ov})");
        let lml = log_marginal_likelihood(&data, &kp).unwrap();
        assert!(rel_close(lml, dense_lml(data.inputs(), data.targets(), &kp), 1e-6));
    }
}

#[test]
fn cholesky_reconstructs_matrix() {
    let mut r = rng(3);
    let data = random_dataset(&mut r, 9);
    let kp = KernelParams::default();
    let model = GpModel::fit(data.clone(), kp).unwrap();
    let l = model.cholesky_factor().unwrap();
    let mut k = kernel_matrix(data.inputs(), &kp);
    for i in 0..k.nrows() {
        k[(i, i)] += kp.noise_variance + model.jitter();
    }
    assert!((&l * l.transpose() - &k).norm() <= 1e-8 * k.norm());
}

#[test]
fn adding_a_point_never_increases_variance() {
    let mut r = rng(4);
    for _ in 0..30 {
        let n = r.random_range(1..10);
        let data = random_dataset(&mut r, n + 1);
        let kp = random_kernel(&mut r);
        let smaller = Dataset::new(data.inputs()[..n].to_vec(), data.targets()[..n].to_vec()).unwrap();
        let q = random_point(&mut r);
        // Compare in standardized units: raw variance also rescales with the target std.
        let (_, v_small) = GpModel::fit(smaller, kp).unwrap().predict_standardized(&q);
        let (_, v_big) = GpModel::fit(data, kp).unwrap().predict_standardized(&q);
        assert!(v_big <= v_small + 1e-9, "{v_big} > {v_small}");
    }
}

#[test]
fn kernel_matrix_is_symmetric_psd() {
    let mut r = rng(5);
    for _ in 0..20 {
        let xs: Vec<_> = (0..10).map(|_| random_point(&mut r)).collect();
        let kp = random_kernel(&mut r);
        let k = kernel_matrix(&xs, &kp);
        assert_eq!(k, k.transpose());
        let min_eig = k.symmetric_eigenvalues().min();
        assert!(min_eig >= -1e-9, "{min_eig}");
    }
}

#[test]
fn noiseless_fit_interpolates() {
    let mut r = rng(6);
    let data = random_dataset(&mut r, 8);
    let kp = KernelParams { noise_variance: 0.0, ..KernelParams::default() };
    let model = GpModel::fit(data.clone(), kp).unwrap();
    for (x, y) in data.inputs().iter().zip(data.targets()) {
        let (m, v) = model.predict(x);
        assert!((m - y).abs() <= 1e-6);
        assert!(v <= 1e-8);
    }
}

#[test]
fn grid_choice_invariant_to_target_scaling() {
    let mut r = rng(7);
    let grid = hyperparameter_grid();
    for _ in 0..5 {
        let data = random_dataset(&mut r, 10);
        let std = data.target_std();
        let scaled = Dataset::new(data.inputs().to_vec(), data.targets().iter().map(|y| y / std).collect()).unwrap();
        let a = select_hyperparameters(&data, &grid, KernelParams::default());
        let b = select_hyperparameters(&scaled, &grid, KernelParams::default());
        assert_eq!(a, b);
    }
}
