//! Command-line front end.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use crate::analysis::TraceMetrics;
use crate::bench::{evals_to_reach, run_bench, Benchmark};
use crate::bo::BoConfig;
use crate::config::load_config;
use crate::csvio::{self, format_float};
use crate::experiment::{run_experiment, trial_seed, Condition, ExperimentConfig, ExperimentResult};
use crate::params::{Bounds, ParamVector};
use crate::sim::{run_trial, RobotModel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "scaffold-gait", version, about = "Scaffolded Bayesian gait tuning for a simulated quadruped")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one BO experiment under a support schedule.
    Run {
        #[arg(long, value_parser = parse_condition)]
        condition: Condition,
        #[arg(long, default_value_t = 60)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Flat `key = value` settings file; command-line flags take precedence.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Re-run one parameter vector at a fixed rope height.
    Replay {
        #[arg(long)]
        params: PathBuf,
        /// Rope height in meters; 0 or negative disables the rope.
        #[arg(long, allow_negative_numbers = true)]
        height: f64,
        #[arg(long, default_value_t = 15.0)]
        duration: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print metrics for an exported trace.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
    },
    /// Compare BO with random search on a synthetic objective.
    BoBench {
        #[arg(long, value_parser = parse_benchmark)]
        objective: Benchmark,
        #[arg(long, default_value_t = 30)]
        iters: usize,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    s.parse().map_err(|e: crate::experiment::UnknownCondition| e.to_string())
}

fn parse_benchmark(s: &str) -> Result<Benchmark, String> {
    s.parse()
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn dispatch(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Run { condition, iters, seed, out, config } => cmd_run(condition, iters, seed, &out, config.as_deref()),
        Command::Replay { params, height, duration, seed, out } => cmd_replay(&params, height, duration, seed, &out),
        Command::Analyze { trace } => cmd_analyze(&trace),
        Command::BoBench { objective, iters, seeds } => cmd_bench(objective, iters, seeds),
    }
}

fn create_dir(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn cmd_run(condition: Condition, iters: usize, seed: u64, out: &Path, config: Option<&Path>) -> anyhow::Result<()> {
    let base = ExperimentConfig::default();
    let mut cfg = match config {
        Some(path) => load_config(path, base)?,
        None => base,
    };
    cfg.condition = condition;
    cfg.n_iter = iters;
    cfg.seed = seed;
    create_dir(out)?;
    let result = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => {
            if let Some(h) = e.partial_history() {
                csvio::write_history(h, &out.join("history.csv"))?;
            }
            return Err(e.into());
        }
    };
    write_run_outputs(&cfg, &result, out)?;
    let best = result.history.best().expect("non-empty history");
    println!(
        "{condition}: {} iterations, best fitness {} at iteration {}",
        result.history.len(),
        format_float(best.fitness),
        best.iteration
    );
    if let Some(p) = &result.probe {
        println!("probe at {} m: fitness {} (params of iteration {})", p.height_m, format_float(p.fitness), p.source_iteration);
    }
    Ok(())
}

fn write_run_outputs(cfg: &ExperimentConfig, r: &ExperimentResult, out: &Path) -> anyhow::Result<()> {
    csvio::write_history(&r.history, &out.join("history.csv"))?;
    for (k, trace) in r.traces.iter().enumerate() {
        csvio::write_trace(trace, &out.join(format!("trace_iter_{}.csv", k + 1)))?;
    }
    let model = &cfg.sim.robot;
    let mut m = String::new();
    writeln!(m, "condition = {}", cfg.condition)?;
    writeln!(m, "seed = {}", cfg.seed)?;
    writeln!(m, "iterations = {}", r.history.len())?;
    let best = r.history.best().expect("non-empty history");
    writeln!(m, "best_iteration = {}", best.iteration)?;
    writeln!(m, "best_fitness = {}", format_float(best.fitness))?;
    writeln!(m, "best_params = {}", best.params)?;
    let tail_start = r.history.len().saturating_sub(10);
    let tail_best = r.history.records[tail_start..].iter().map(|x| x.fitness).fold(f64::NEG_INFINITY, f64::max);
    writeln!(m, "final10_best_fitness = {}", format_float(tail_best))?;
    writeln!(m, "\n[best_iteration_trace]")?;
    writeln!(m, "{}", TraceMetrics::from_trace(&r.traces[best.iteration - 1], model)?)?;
    if let Some(p) = &r.probe {
        fs::write(out.join("p3_probe.csv"), csvio::probe_csv(p)).with_context(|| format!("writing {}", out.display()))?;
        csvio::write_trace(&p.trace, &out.join("trace_p3.csv"))?;
        writeln!(m, "\n[p3_probe]")?;
        writeln!(m, "source_iteration = {}", p.source_iteration)?;
        writeln!(m, "height_m = {}", p.height_m)?;
        writeln!(m, "{}", TraceMetrics::from_trace(&p.trace, model)?)?;
    }
    csvio::write_file(&out.join("metrics.txt"), &m)?;
    Ok(())
}

fn cmd_replay(params: &Path, height: f64, duration: f64, seed: u64, out: &Path) -> anyhow::Result<()> {
    let text = fs::read_to_string(params).with_context(|| format!("reading {}", params.display()))?;
    let p: ParamVector = csvio::parse_params(&text).map_err(anyhow::Error::msg).with_context(|| params.display().to_string())?;
    if !Bounds::default().contains(&p) {
        eprintln!("warning: {p} lies outside the default search box");
    }
    if !(duration > 0.0 && duration.is_finite()) {
        bail!("duration must be positive, got {duration}");
    }
    let cfg = ExperimentConfig::default();
    let sup = cfg.support_at((height > 0.0).then_some(height));
    let trace = run_trial(&p, &sup, duration, trial_seed(seed, 0), &cfg.sim);
    create_dir(out)?;
    csvio::write_trace(&trace, &out.join("trace.csv"))?;
    let metrics = TraceMetrics::from_trace(&trace, &cfg.sim.robot)?;
    csvio::write_file(&out.join("metrics.txt"), &format!("params = {p}\nheight_m = {height}\n{metrics}\n"))?;
    println!("{metrics}");
    Ok(())
}

fn cmd_analyze(path: &Path) -> anyhow::Result<()> {
    let table = csvio::read_trace(path)?;
    let Some(dt) = table.sample_interval() else {
        bail!("{}: need at least two samples", path.display());
    };
    let metrics = TraceMetrics::from_columns(dt, &table.z, &table.rope_n, RobotModel::default().weight())?;
    println!("{metrics}");
    Ok(())
}

fn cmd_bench(bench: Benchmark, iters: usize, seeds: u64) -> anyhow::Result<()> {
    let cfg = BoConfig::default();
    if iters < cfg.n_init {
        bail!("--iters must be at least {}", cfg.n_init);
    }
    let bounds = Bounds::default();
    let tol = match bench {
        Benchmark::Quad1d => 5.0,
        Benchmark::Sphere5d => 0.05,
    };
    println!("objective = {bench}, iters = {iters}, tolerance = {tol}");
    println!("seed,bo_best,bo_error,bo_evals_to_tol,random_best,random_error,random_evals_to_tol");
    let (mut bo_hits, mut rs_hits) = (0, 0);
    for seed in 0..seeds {
        let run = run_bench(bench, iters, seed, &cfg, &bounds);
        let bo_err = run.bo_error(bench, &bounds, iters);
        let rs_err = run.random_error(bench, &bounds, iters);
        bo_hits += usize::from(bo_err <= tol);
        rs_hits += usize::from(rs_err <= tol);
        let show = |e: Option<usize>| e.map_or("-".to_string(), |n| n.to_string());
        println!(
            "{seed},{},{},{},{},{},{}",
            format_float(*run.bo.best_so_far().last().unwrap()),
            format_float(bo_err),
            show(evals_to_reach(&run.bo, bench, &bounds, tol)),
            format_float(*run.random.best_so_far().last().unwrap()),
            format_float(rs_err),
            show(evals_to_reach(&run.random, bench, &bounds, tol)),
        );
    }
    println!("bo_within_tol = {bo_hits}/{seeds}");
    println!("random_within_tol = {rs_hits}/{seeds}");
    Ok(())
}
