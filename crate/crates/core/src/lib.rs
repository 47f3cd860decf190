//! Scaffolded gait learning for a simulated quadruped.
//!
//! A Bayesian optimizer ([`bo`], [`gp`]) tunes the five parameters of an
//! in-place trot controller ([`controller`]) on a reduced-order quadruped
//! ([`sim`]) hanging from a rope scaffold whose height follows a per-iteration
//! schedule ([`experiment`]). Fitness is the fraction of body weight the
//! robot carries itself.

pub mod analysis;
pub mod bench;
pub mod bo;
pub mod cli;
pub mod config;
pub mod controller;
pub mod csvio;
pub mod experiment;
pub mod gp;
pub mod kinematics;
pub mod params;
pub mod sim;
