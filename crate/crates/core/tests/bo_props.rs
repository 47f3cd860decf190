mod common;

use common::*;
use rand::Rng;
use scaffold_gait::bo::{argmax_ucb, candidate_set, propose_next, run_bo_loop, BoConfig, OptimizationHistory};
use scaffold_gait::csvio::history_csv;
use scaffold_gait::gp::{Dataset, GpModel, KernelParams};
use scaffold_gait::params::{Bounds, ParamVector};

fn brute_force(model: &GpModel, cands: &[[f64; 5]], score: impl Fn(f64, f64) -> f64) -> usize {
    let mut best = 0;
    let mut best_s = f64::NEG_INFINITY;
    for (i, c) in cands.iter().enumerate() {
        let (m, v) = model.predict(c);
        let s = score(m, v);
        if s > best_s {
            best_s = s;
            best = i;
        }
    }
    best
}

#[test]
fn pure_exploitation_picks_max_mean() {
    let mut r = rng(31);
    let data = Dataset::new(vec![random_point(&mut r)], vec![0.7]).unwrap();
    let model = GpModel::fit(data, KernelParams::default()).unwrap();
    let cfg = BoConfig::default();
    let cands = candidate_set(&model, 9, &cfg);
    assert_eq!(cands.len(), cfg.n_candidates + cfg.n_local);
    assert_eq!(argmax_ucb(&model, &cands, 0.0), Some(brute_force(&model, &cands, |m, _| m)));
    let bounds = Bounds::default();
    let p = propose_next(&model, &bounds, 0.0, 9, &cfg);
    let expect = bounds.denormalize(&cands[brute_force(&model, &cands, |m, _| m)]);
    assert!((p.hop_height_mm - expect.hop_height_mm).abs() < 1e-9);
}

#[test]
fn huge_kappa_picks_max_variance() {
    let mut r = rng(32);
    let data = random_dataset(&mut r, 6);
    let model = GpModel::fit(data, KernelParams::default()).unwrap();
    let cands = candidate_set(&model, 4, &BoConfig::default());
    assert_eq!(argmax_ucb(&model, &cands, 1e6), Some(brute_force(&model, &cands, |_, v| v)));
}

fn bumpy(p: &ParamVector) -> f64 {
    -(p.hop_height_mm - 75.0).powi(2) / 100.0 - (p.pitch_kp - 0.3).powi(2) + (5.0 * p.roll_kv).sin()
}

#[test]
fn proposals_stay_in_bounds_and_best_is_monotone() {
    let bounds = Bounds::default();
    let mut r = rng(33);
    for _ in 0..3 {
        let seed = r.random();
        let h = run_bo_loop(|p: &ParamVector, _| Ok::<_, std::convert::Infallible>(bumpy(p)), 20, &bounds, &BoConfig::default(), seed).unwrap();
        assert!(h.records.iter().all(|rec| bounds.contains(&rec.params)));
        assert!(h.best_so_far().windows(2).all(|w| w[1] >= w[0]));
        let iters: Vec<usize> = h.records.iter().map(|rec| rec.iteration).collect();
        assert_eq!(iters, (1..=20).collect::<Vec<_>>());
    }
}

#[test]
fn same_seed_gives_identical_csv() {
    let bounds = Bounds::default();
    let run = || -> OptimizationHistory {
        run_bo_loop(|p: &ParamVector, _| Ok::<_, std::convert::Infallible>(bumpy(p)), 15, &bounds, &BoConfig::default(), 5).unwrap()
    };
    assert_eq!(history_csv(&run()), history_csv(&run()));
}
