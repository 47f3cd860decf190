//! Scaffolded learning protocol: support schedules, fitness, and the
//! 60-iteration experiment runner.

use std::fmt;
use std::str::FromStr;

use crate::bo::{run_bo_loop, BoConfig, BoError, Observation, OptimizationHistory};
use crate::params::{Bounds, ParamVector};
use crate::sim::{run_trial, RobotModel, SimConfig, SupportConfig, TrialTrace, DEFAULT_ROPE_DAMPING, DEFAULT_ROPE_STIFFNESS};

/// Last iteration covered by the schedules.
pub const SCHEDULE_LENGTH: usize = 60;
/// Height used for the final ten iterations and for the P3 probe.
pub const FINAL_HEIGHT_M: f64 = 0.325;
/// The P3 probe re-runs the best of iterations `1..=PROBE_SOURCE_LAST`.
pub const PROBE_SOURCE_LAST: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    Minimum,
    Reducing,
    None,
}

impl Condition {
    pub const ALL: [Condition; 3] = [Condition::Minimum, Condition::Reducing, Condition::None];

    pub fn label(self) -> &'static str {
        match self {
            Condition::Minimum => "min",
            Condition::Reducing => "red",
            Condition::None => "none",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("unknown condition {0:?} (expected min, red or none)")]
pub struct UnknownCondition(pub String);

impl FromStr for Condition {
    type Err = UnknownCondition;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" | "minimum" => Ok(Condition::Minimum),
            "red" | "reducing" => Ok(Condition::Reducing),
            "none" | "no" => Ok(Condition::None),
            _ => Err(UnknownCondition(s.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("iteration {0} is outside the schedule (1..={SCHEDULE_LENGTH})")]
pub struct OutOfRange(pub usize);

/// Rope height for `iteration` (1-based), `None` when unsupported.
pub fn schedule_height(condition: Condition, iteration: usize) -> Result<Option<f64>, OutOfRange> {
    if !(1..=SCHEDULE_LENGTH).contains(&iteration) {
        return Err(OutOfRange(iteration));
    }
    let h = match condition {
        Condition::None => return Ok(None),
        Condition::Minimum => match iteration {
            1..=50 => 0.39,
            _ => FINAL_HEIGHT_M,
        },
        Condition::Reducing => match iteration {
            1..=10 => 0.475,
            11..=20 => 0.45,
            21..=30 => 0.42,
            31..=50 => 0.39,
            _ => FINAL_HEIGHT_M,
        },
    };
    Ok(Some(h))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportSchedule {
    pub condition: Condition,
}

impl SupportSchedule {
    pub fn new(condition: Condition) -> Self {
        Self { condition }
    }

    pub fn height(&self, iteration: usize) -> Result<Option<f64>, OutOfRange> {
        schedule_height(self.condition, iteration)
    }

    /// Full table for iterations `1..=SCHEDULE_LENGTH`.
    pub fn heights(&self) -> Vec<Option<f64>> {
        (1..=SCHEDULE_LENGTH).map(|i| schedule_height(self.condition, i).unwrap()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitnessMetric {
    /// Mean fraction of body weight carried by the robot.
    #[default]
    SelfSupport,
    /// Mean of `mg / (mg + T)`: an inverse-force score, bounded in (0, 1].
    InverseForce,
}

/// Mean self-supported weight fraction over the trial.
///
/// Samples missing after an early termination count as zero.
pub fn compute_fitness(trace: &TrialTrace, model: &RobotModel) -> f64 {
    fitness_with(trace, model, FitnessMetric::SelfSupport)
}

pub fn fitness_with(trace: &TrialTrace, model: &RobotModel, metric: FitnessMetric) -> f64 {
    let w = model.weight();
    let n = trace.expected_samples().max(trace.samples.len());
    if n == 0 {
        return 0.0;
    }
    let sum: f64 = trace
        .samples
        .iter()
        .map(|s| {
            let t = s.sensors.rope_tension.max(0.0);
            match metric {
                FitnessMetric::SelfSupport => (1.0 - t / w).clamp(0.0, 1.0),
                FitnessMetric::InverseForce => w / (w + t),
            }
        })
        .sum();
    sum / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub condition: Condition,
    pub n_iter: usize,
    pub trial_duration: f64,
    pub bo: BoConfig,
    pub bounds: Bounds,
    pub sim: SimConfig,
    pub rope_stiffness: f64,
    pub rope_damping: f64,
    pub metric: FitnessMetric,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            condition: Condition::Reducing,
            n_iter: SCHEDULE_LENGTH,
            trial_duration: 15.0,
            bo: BoConfig::default(),
            bounds: Bounds::default(),
            sim: SimConfig::default(),
            rope_stiffness: DEFAULT_ROPE_STIFFNESS,
            rope_damping: DEFAULT_ROPE_DAMPING,
            metric: FitnessMetric::SelfSupport,
            seed: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn for_condition(condition: Condition, seed: u64) -> Self {
        Self { condition, seed, ..Self::default() }
    }

    pub fn support_at(&self, height: Option<f64>) -> SupportConfig {
        match height {
            Some(h) => SupportConfig::at_height(h).with_rope(self.rope_stiffness, self.rope_damping),
            None => SupportConfig::disabled(),
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if !(1..=SCHEDULE_LENGTH).contains(&self.n_iter) {
            return Err(ExperimentError::Config(format!("n_iter must be in 1..={SCHEDULE_LENGTH}, got {}", self.n_iter)));
        }
        if !(self.trial_duration > 0.0 && self.trial_duration.is_finite()) {
            return Err(ExperimentError::Config(format!("trial duration must be positive, got {}", self.trial_duration)));
        }
        if !(self.rope_stiffness >= 0.0 && self.rope_damping >= 0.0) {
            return Err(ExperimentError::Config("rope stiffness and damping must be non-negative".into()));
        }
        if let Err(e) = self.sim.controller.validate() {
            return Err(ExperimentError::Config(e.to_string()));
        }
        Ok(())
    }
}

/// Seed for the physics trial at `iteration`.
pub fn trial_seed(seed: u64, iteration: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (iteration as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

#[derive(Debug, Clone)]
pub struct ProbeResult {
    /// Iteration whose parameters were re-run.
    pub source_iteration: usize,
    pub params: ParamVector,
    pub height_m: f64,
    pub fitness: f64,
    pub trace: TrialTrace,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub history: OptimizationHistory,
    /// One trace per iteration, in order.
    pub traces: Vec<TrialTrace>,
    pub probe: Option<ProbeResult>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Schedule(#[from] OutOfRange),
    #[error(transparent)]
    Optimizer(#[from] BoError),
}

impl ExperimentError {
    pub fn partial_history(&self) -> Option<&OptimizationHistory> {
        match self {
            ExperimentError::Optimizer(e) => e.partial_history(),
            _ => None,
        }
    }
}

/// Runs one BO experiment under the configured support schedule.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate()?;
    let mut traces = Vec::with_capacity(cfg.n_iter);
    let objective = |p: &ParamVector, iteration: usize| -> Result<Observation, OutOfRange> {
        let height = schedule_height(cfg.condition, iteration)?;
        let trace = run_trial(p, &cfg.support_at(height), cfg.trial_duration, trial_seed(cfg.seed, iteration), &cfg.sim);
        let fitness = fitness_with(&trace, &cfg.sim.robot, cfg.metric);
        traces.push(trace);
        Ok(Observation { fitness, support_height_m: height })
    };
    let history = run_bo_loop(objective, cfg.n_iter, &cfg.bounds, &cfg.bo, cfg.seed)?;

    let probe = history.best_through(PROBE_SOURCE_LAST).map(|best| {
        let trace = run_trial(
            &best.params,
            &cfg.support_at(Some(FINAL_HEIGHT_M)),
            cfg.trial_duration,
            trial_seed(cfg.seed, 0),
            &cfg.sim,
        );
        ProbeResult {
            source_iteration: best.iteration,
            params: best.params,
            height_m: FINAL_HEIGHT_M,
            fitness: fitness_with(&trace, &cfg.sim.robot, cfg.metric),
            trace,
        }
    });
    Ok(ExperimentResult { history, traces, probe })
}
