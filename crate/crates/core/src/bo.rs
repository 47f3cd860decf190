//! Sequential Bayesian optimization with a GP surrogate and UCB acquisition.
//!
//! The acquisition is maximized by scoring a finite, seed-determined
//! candidate set: a shifted Halton sequence over the whole box plus Gaussian
//! perturbations of the incumbent. Ties go to the lowest candidate index so
//! that a proposal is a pure function of (model, bounds, kappa, seed).

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::gp::{self, Dataset, GpError, GpModel, KernelParams, Point};
use crate::params::{Bounds, ParamVector, DIM};

const HALTON_PRIMES: [u32; DIM] = [2, 3, 5, 7, 11];

/// How the initial design is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DesignKind {
    /// Halton sequence with a seeded Cranley-Patterson rotation.
    #[default]
    Halton,
    Uniform,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoConfig {
    pub n_init: usize,
    pub kappa: f64,
    pub n_candidates: usize,
    pub n_local: usize,
    /// Standard deviation of local perturbations as a fraction of each range.
    pub local_sigma_frac: f64,
    pub kernel: KernelParams,
    /// Re-select kernel hyperparameters on the evidence grid after each evaluation.
    pub refit_hyperparams: bool,
    pub design: DesignKind,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            n_init: 5,
            kappa: 2.0,
            n_candidates: 2048,
            n_local: 256,
            local_sigma_frac: 0.05,
            kernel: KernelParams::default(),
            refit_hyperparams: false,
            design: DesignKind::Halton,
        }
    }
}

/// Radical inverse of `index` in base `base`.
fn radical_inverse(mut index: u64, base: u32) -> f64 {
    let b = base as u64;
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % b) as f64;
        index /= b;
        f *= inv;
    }
    r
}

/// `n` points of a Halton sequence in the unit cube, starting at `start`,
/// rotated by `shift` modulo 1.
fn shifted_halton(n: usize, start: u64, shift: &[f64; DIM]) -> Vec<Point> {
    (0..n as u64)
        .map(|i| {
            std::array::from_fn(|d| {
                let v = radical_inverse(start + i, HALTON_PRIMES[d]) + shift[d];
                v - v.floor()
            })
        })
        .collect()
}

fn random_unit_point(rng: &mut ChaCha8Rng) -> Point {
    std::array::from_fn(|_| rng.random::<f64>())
}

pub fn initial_design(n: usize, bounds: &Bounds, seed: u64, kind: DesignKind) -> Vec<ParamVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit: Vec<Point> = match kind {
        DesignKind::Halton => {
            let shift = random_unit_point(&mut rng);
            shifted_halton(n, 1, &shift)
        }
        DesignKind::Uniform => (0..n).map(|_| random_unit_point(&mut rng)).collect(),
    };
    unit.iter().map(|u| bounds.denormalize(u)).map(|p| bounds.clip(&p)).collect()
}

pub fn ucb_score(mean: f64, variance: f64, kappa: f64) -> f64 {
    mean + kappa * variance.max(0.0).sqrt()
}

/// Index of the training point with the largest target; first wins ties.
fn incumbent(data: &Dataset) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &y) in data.targets().iter().enumerate() {
        if best.is_none_or(|(_, b)| y > b) {
            best = Some((i, y));
        }
    }
    best.map(|(i, _)| i)
}

/// The deterministic candidate set scored by [`propose_next`], in unit-cube
/// coordinates: `n_candidates` shifted-Halton points followed by `n_local`
/// clipped Gaussian perturbations of the incumbent (none when the model has
/// no data).
pub fn candidate_set(model: &GpModel, seed: u64, cfg: &BoConfig) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = random_unit_point(&mut rng);
    let mut cands = shifted_halton(cfg.n_candidates, 1, &shift);
    if let Some(best) = incumbent(model.data()) {
        let centre = model.data().inputs()[best];
        let normal = Normal::new(0.0, cfg.local_sigma_frac).expect("finite perturbation scale");
        for _ in 0..cfg.n_local {
            cands.push(std::array::from_fn(|d| (centre[d] + normal.sample(&mut rng)).clamp(0.0, 1.0)));
        }
    }
    cands
}

/// Argmax of the UCB score over a candidate set. Returns the winning index.
pub fn argmax_ucb(model: &GpModel, candidates: &[Point], kappa: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let (m, v) = model.predict(c);
        let s = ucb_score(m, v, kappa);
        let s = if s.is_nan() { f64::NEG_INFINITY } else { s };
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
}

/// Next point to evaluate. An unfitted model yields one uniform random point.
pub fn propose_next(model: &GpModel, bounds: &Bounds, kappa: f64, seed: u64, cfg: &BoConfig) -> ParamVector {
    if model.data().is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return bounds.clip(&bounds.denormalize(&random_unit_point(&mut rng)));
    }
    let cands = candidate_set(model, seed, cfg);
    let idx = argmax_ucb(model, &cands, kappa).expect("candidate set is non-empty");
    bounds.clip(&bounds.denormalize(&cands[idx]))
}

/// One objective evaluation as seen by the loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub fitness: f64,
    /// Scaffold height in meters, `None` when no support was used.
    pub support_height_m: Option<f64>,
}

impl From<f64> for Observation {
    fn from(fitness: f64) -> Self {
        Self { fitness, support_height_m: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRecord {
    /// 1-based.
    pub iteration: usize,
    pub params: ParamVector,
    pub support_height_m: Option<f64>,
    pub fitness: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizationHistory {
    pub records: Vec<HistoryRecord>,
}

impl OptimizationHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Running maximum of fitness.
    pub fn best_so_far(&self) -> Vec<f64> {
        self.records
            .iter()
            .scan(f64::NEG_INFINITY, |acc, r| {
                *acc = acc.max(r.fitness);
                Some(*acc)
            })
            .collect()
    }

    /// Best record among iterations `1..=last`; first wins ties.
    pub fn best_through(&self, last: usize) -> Option<&HistoryRecord> {
        let mut best: Option<&HistoryRecord> = None;
        for r in self.records.iter().filter(|r| r.iteration <= last) {
            if best.is_none_or(|b| r.fitness > b.fitness) {
                best = Some(r);
            }
        }
        best
    }

    pub fn best(&self) -> Option<&HistoryRecord> {
        self.best_through(usize::MAX)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BoError {
    #[error("objective failed at iteration {iteration}: {source}")]
    Objective {
        iteration: usize,
        history: OptimizationHistory,
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("surrogate fit failed after iteration {iteration}: {source}")]
    Surrogate {
        iteration: usize,
        history: OptimizationHistory,
        source: GpError,
    },
    #[error("n_iter ({n_iter}) must be at least n_init ({n_init}) and n_init at least 1")]
    Budget { n_iter: usize, n_init: usize },
}

impl BoError {
    /// Records collected before the failure.
    pub fn partial_history(&self) -> Option<&OptimizationHistory> {
        match self {
            BoError::Objective { history, .. } | BoError::Surrogate { history, .. } => Some(history),
            BoError::Budget { .. } => None,
        }
    }
}

/// Runs `n_iter` evaluations of `objective(params, iteration)`.
///
/// The first `cfg.n_init` points come from [`initial_design`], the rest from
/// [`propose_next`] on a surrogate refitted after every evaluation.
pub fn run_bo_loop<F, O, E>(
    mut objective: F,
    n_iter: usize,
    bounds: &Bounds,
    cfg: &BoConfig,
    seed: u64,
) -> Result<OptimizationHistory, BoError>
where
    F: FnMut(&ParamVector, usize) -> Result<O, E>,
    O: Into<Observation>,
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    if cfg.n_init == 0 || n_iter < cfg.n_init {
        return Err(BoError::Budget { n_iter, n_init: cfg.n_init });
    }
    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
    let design = initial_design(cfg.n_init, bounds, seeds.random(), cfg.design);
    let mut history = OptimizationHistory::default();
    let mut data = Dataset::empty();
    let mut model = GpModel::prior(cfg.kernel);
    let grid = if cfg.refit_hyperparams { gp::hyperparameter_grid() } else { Vec::new() };

    for iteration in 1..=n_iter {
        let proposal_seed: u64 = seeds.random();
        let params = if iteration <= cfg.n_init {
            design[iteration - 1]
        } else {
            propose_next(&model, bounds, cfg.kappa, proposal_seed, cfg)
        };
        let started = Instant::now();
        let obs: Observation = match objective(&params, iteration) {
            Ok(o) => o.into(),
            Err(e) => return Err(BoError::Objective { iteration, history, source: e.into() }),
        };
        history.records.push(HistoryRecord {
            iteration,
            params,
            support_height_m: obs.support_height_m,
            fitness: obs.fitness,
            wall_time_s: started.elapsed().as_secs_f64(),
        });

        let refit = data
            .push(bounds.normalize(&params), obs.fitness)
            .and_then(|_| {
                let kernel = if cfg.refit_hyperparams {
                    gp::select_hyperparameters(&data, &grid, cfg.kernel)
                } else {
                    cfg.kernel
                };
                GpModel::fit(data.clone(), kernel)
            });
        match refit {
            Ok(m) => model = m,
            Err(source) => return Err(BoError::Surrogate { iteration, history, source }),
        }
    }
    Ok(history)
}

/// Uniform random search under the same evaluation budget, for comparison.
pub fn random_search<F>(mut objective: F, n_iter: usize, bounds: &Bounds, seed: u64) -> OptimizationHistory
where
    F: FnMut(&ParamVector) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records = (1..=n_iter)
        .map(|iteration| {
            let params = bounds.clip(&bounds.denormalize(&random_unit_point(&mut rng)));
            let started = Instant::now();
            let fitness = objective(&params);
            HistoryRecord {
                iteration,
                params,
                support_height_m: None,
                fitness,
                wall_time_s: started.elapsed().as_secs_f64(),
            }
        })
        .collect();
    OptimizationHistory { records }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn radical_inverse_base2() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn initial_design_is_bounded_and_deterministic() {
        let b = Bounds::default();
        for kind in [DesignKind::Halton, DesignKind::Uniform] {
            let a = initial_design(5, &b, 11, kind);
            assert_eq!(a.len(), 5);
            assert!(a.iter().all(|p| b.contains(p)));
            assert_eq!(a, initial_design(5, &b, 11, kind));
            assert_ne!(a, initial_design(5, &b, 12, kind));
        }
    }

    #[test]
    fn initial_design_covers_the_box() {
        let b = Bounds::default();
        for kind in [DesignKind::Halton, DesignKind::Uniform] {
            let pts = initial_design(100, &b, 3, kind);
            for d in 0..DIM {
                let col: Vec<f64> = pts.iter().map(|p| p.to_array()[d]).collect();
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                assert!(lo < b.lower()[d] + 0.1 * b.range(d), "{kind:?} dim {d} min {lo}");
                assert!(hi > b.upper()[d] - 0.1 * b.range(d), "{kind:?} dim {d} max {hi}");
            }
        }
    }

    #[test]
    fn ucb_arithmetic() {
        assert_eq!(ucb_score(1.5, 9.0, 0.0), 1.5);
        assert_eq!(ucb_score(1.0, 4.0, 2.0), 5.0);
        assert!(ucb_score(1.0, 0.5, 1.0) < ucb_score(1.0, 0.5, 1.1));
    }

    #[test]
    fn empty_model_proposal_in_bounds() {
        let b = Bounds::default();
        let model = GpModel::prior(KernelParams::default());
        let p = propose_next(&model, &b, 2.0, 5, &BoConfig::default());
        assert!(b.contains(&p));
    }

    #[test]
    fn budget_checked() {
        let cfg = BoConfig::default();
        let err = run_bo_loop(|_, _| Ok::<f64, Infallible>(0.0), 3, &Bounds::default(), &cfg, 1).unwrap_err();
        assert!(matches!(err, BoError::Budget { n_iter: 3, n_init: 5 }));
    }

    #[test]
    fn n_iter_equal_to_n_init_uses_design_only() {
        let b = Bounds::default();
        let cfg = BoConfig::default();
        let h = run_bo_loop(|p, _| Ok::<f64, Infallible>(p.hop_height_mm), 5, &b, &cfg, 9).unwrap();
        let mut seeds = ChaCha8Rng::seed_from_u64(9);
        let design = initial_design(5, &b, seeds.random(), cfg.design);
        let got: Vec<ParamVector> = h.records.iter().map(|r| r.params).collect();
        assert_eq!(got, design);
        assert_eq!(h.records.iter().map(|r| r.iteration).collect::<Vec<_>>(), vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn objective_error_keeps_partial_history() {
        let b = Bounds::default();
        let cfg = BoConfig { n_candidates: 64, n_local: 8, ..Default::default() };
        let err = run_bo_loop(
            |_, it| if it == 7 { Err("boom") } else { Ok(1.0) },
            10,
            &b,
            &cfg,
            1,
        )
        .unwrap_err();
        match &err {
            BoError::Objective { iteration, history, .. } => {
                assert_eq!(*iteration, 7);
                assert_eq!(history.len(), 6);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(err.partial_history().unwrap().len(), 6);
    }

    #[test]
    fn best_through_prefers_first_on_ties() {
        let rec = |iteration, fitness| HistoryRecord {
            iteration,
            params: ParamVector::new(60.0 + iteration as f64, 0.0, 0.0, 0.0, 0.0),
            support_height_m: None,
            fitness,
            wall_time_s: 0.0,
        };
        let h = OptimizationHistory { records: vec![rec(1, 0.2), rec(2, 0.5), rec(3, 0.5), rec(4, 0.9)] };
        assert_eq!(h.best_through(3).unwrap().iteration, 2);
        assert_eq!(h.best().unwrap().iteration, 4);
        assert_eq!(h.best_so_far(), vec![0.2, 0.5, 0.5, 0.9]);
    }
}
