//! Synthetic objectives for checking the optimizer without the simulator.

use std::fmt;
use std::str::FromStr;

use crate::bo::{random_search, run_bo_loop, BoConfig, OptimizationHistory};
use crate::params::{Bounds, ParamVector, DIM};

/// Optimum of [`Benchmark::Quad1d`] along x0, mm.
pub const QUAD1D_OPTIMUM_MM: f64 = 90.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Benchmark {
    /// `-(x0 - 90)^2`; the gains are ignored.
    Quad1d,
    /// Negative squared normalized distance to the hardware optimum.
    Sphere5d,
}

impl Benchmark {
    pub fn label(self) -> &'static str {
        match self {
            Benchmark::Quad1d => "quad1d",
            Benchmark::Sphere5d => "sphere5d",
        }
    }

    pub fn optimum(self) -> ParamVector {
        match self {
            Benchmark::Quad1d => ParamVector::new(QUAD1D_OPTIMUM_MM, 0.0, 0.0, 0.0, 0.0),
            Benchmark::Sphere5d => ParamVector::hardware_optimum(),
        }
    }

    pub fn eval(self, p: &ParamVector, bounds: &Bounds) -> f64 {
        match self {
            Benchmark::Quad1d => -(p.hop_height_mm - QUAD1D_OPTIMUM_MM).powi(2),
            Benchmark::Sphere5d => {
                let (x, c) = (p.to_array(), self.optimum().to_array());
                -(0..DIM).map(|d| ((x[d] - c[d]) / bounds.range(d)).powi(2)).sum::<f64>()
            }
        }
    }

    /// Distance from `p` to the optimum: |x0 - 90| mm for `Quad1d`,
    /// normalized Euclidean distance for `Sphere5d`.
    pub fn error(self, p: &ParamVector, bounds: &Bounds) -> f64 {
        match self {
            Benchmark::Quad1d => (p.hop_height_mm - QUAD1D_OPTIMUM_MM).abs(),
            Benchmark::Sphere5d => (-self.eval(p, bounds)).sqrt(),
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Benchmark {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "quad1d" => Ok(Benchmark::Quad1d),
            "sphere5d" => Ok(Benchmark::Sphere5d),
            _ => Err(format!("unknown objective {s:?} (expected quad1d or sphere5d)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub seed: u64,
    pub bo: OptimizationHistory,
    pub random: OptimizationHistory,
}

impl BenchRun {
    /// Error of the best point found in the first `evals` evaluations.
    pub fn bo_error(&self, bench: Benchmark, bounds: &Bounds, evals: usize) -> f64 {
        bench.error(&self.bo.best_through(evals).expect("non-empty history").params, bounds)
    }

    pub fn random_error(&self, bench: Benchmark, bounds: &Bounds, evals: usize) -> f64 {
        bench.error(&self.random.best_through(evals).expect("non-empty history").params, bounds)
    }
}

/// Runs BO and random search on `bench` with the same budget and seed.
pub fn run_bench(bench: Benchmark, n_iter: usize, seed: u64, cfg: &BoConfig, bounds: &Bounds) -> BenchRun {
    let bo = run_bo_loop(|p: &ParamVector, _| Ok::<_, std::convert::Infallible>(bench.eval(p, bounds)), n_iter, bounds, cfg, seed)
        .expect("synthetic objective cannot fail");
    let random = random_search(|p| bench.eval(p, bounds), n_iter, bounds, seed);
    BenchRun { seed, bo, random }
}

/// First evaluation count at which the best point is within `tol`, if any.
pub fn evals_to_reach(history: &OptimizationHistory, bench: Benchmark, bounds: &Bounds, tol: f64) -> Option<usize> {
    let mut best: Option<&ParamVector> = None;
    let mut best_f = f64::NEG_INFINITY;
    for r in &history.records {
        if r.fitness > best_f {
            best_f = r.fitness;
            best = Some(&r.params);
        }
        if best.is_some_and(|p| bench.error(p, bounds) <= tol) {
            return Some(r.iteration);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objectives_peak_at_optimum() {
        let b = Bounds::default();
        for bench in [Benchmark::Quad1d, Benchmark::Sphere5d] {
            assert_eq!(bench.eval(&bench.optimum(), &b), 0.0);
            assert_eq!(bench.error(&bench.optimum(), &b), 0.0);
            assert!(bench.eval(&ParamVector::new(60.0, 1.0, 1.0, 1.0, 1.0), &b) < 0.0);
        }
        assert_eq!(Benchmark::Quad1d.eval(&ParamVector::new(100.0, 0.3, 0.0, 0.0, 0.0), &b), -100.0);
    }

    #[test]
    fn parse_labels() {
        assert_eq!("quad1d".parse::<Benchmark>(), Ok(Benchmark::Quad1d));
        assert!("rosenbrock".parse::<Benchmark>().is_err());
    }
}
