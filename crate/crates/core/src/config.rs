//! Flat `key = value` experiment configuration files.

use std::path::Path;

use crate::bo::DesignKind;
use crate::experiment::{ExperimentConfig, FitnessMetric};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for {key}")]
    BadValue { line: usize, key: String, value: String },
    #[error("{path}: {msg}")]
    Read { path: String, msg: String },
}

/// Keys accepted by [`apply_config`].
pub const KEYS: &[&str] = &[
    "condition",
    "n_iter",
    "seed",
    "trial_duration",
    "fitness_metric",
    "rope_stiffness",
    "rope_damping",
    "n_init",
    "kappa",
    "n_candidates",
    "n_local",
    "local_sigma_frac",
    "length_scale",
    "signal_variance",
    "noise_variance",
    "refit_hyperparams",
    "design",
    "gait_period",
    "duty_factor",
    "stand_height",
    "correction_limit",
    "servo_time_constant",
    "physics_dt",
    "control_dt",
    "imu_noise",
    "gyro_filter_time_constant",
    "contact_stiffness",
    "contact_damping",
    "friction_coeff",
];

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

fn set(cfg: &mut ExperimentConfig, key: &str, v: &str) -> Option<()> {
    let num = || v.parse::<f64>().ok().filter(|x| x.is_finite());
    let int = || v.parse::<usize>().ok();
    match key {
        "condition" => cfg.condition = v.parse().ok()?,
        "n_iter" => cfg.n_iter = int()?,
        "seed" => cfg.seed = v.parse().ok()?,
        "trial_duration" => cfg.trial_duration = num()?,
        "fitness_metric" => {
            cfg.metric = match v {
                "self_support" => FitnessMetric::SelfSupport,
                "inverse_force" => FitnessMetric::InverseForce,
                _ => return None,
            }
        }
        "rope_stiffness" => cfg.rope_stiffness = num()?,
        "rope_damping" => cfg.rope_damping = num()?,
        "n_init" => cfg.bo.n_init = int()?,
        "kappa" => cfg.bo.kappa = num().filter(|k| *k >= 0.0)?,
        "n_candidates" => cfg.bo.n_candidates = int()?,
        "n_local" => cfg.bo.n_local = int()?,
        "local_sigma_frac" => cfg.bo.local_sigma_frac = num()?,
        "length_scale" => cfg.bo.kernel.length_scales = [num().filter(|l| *l > 0.0)?; 5],
        "signal_variance" => cfg.bo.kernel.signal_variance = num().filter(|s| *s > 0.0)?,
        "noise_variance" => cfg.bo.kernel.noise_variance = num().filter(|s| *s >= 0.0)?,
        "refit_hyperparams" => cfg.bo.refit_hyperparams = parse_bool(v)?,
        "design" => {
            cfg.bo.design = match v {
                "halton" => DesignKind::Halton,
                "uniform" => DesignKind::Uniform,
                _ => return None,
            }
        }
        "gait_period" => cfg.sim.controller.gait_period = num()?,
        "duty_factor" => cfg.sim.controller.duty_factor = num()?,
        "stand_height" => cfg.sim.controller.nominal_stand_height = num()?,
        "correction_limit" => cfg.sim.controller.correction_limit = num()?,
        "servo_time_constant" => cfg.sim.servo_time_constant = num()?,
        "physics_dt" => cfg.sim.physics_dt = num()?,
        "control_dt" => cfg.sim.control_dt = num()?,
        "imu_noise" => cfg.sim.imu_noise.enabled = parse_bool(v)?,
        "gyro_filter_time_constant" => cfg.sim.gyro_filter_time_constant = num().filter(|t| *t >= 0.0)?,
        "contact_stiffness" => cfg.sim.contact.stiffness = num()?,
        "contact_damping" => cfg.sim.contact.damping = num()?,
        "friction_coeff" => cfg.sim.contact.friction_coeff = num()?,
        _ => return None,
    }
    Some(())
}

/// Applies the settings in `text` on top of `cfg`. `#` starts a comment.
pub fn apply_config(cfg: &mut ExperimentConfig, text: &str) -> Result<(), ConfigError> {
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        if l.is_empty() {
            continue;
        }
        let (k, v) = l.split_once('=').ok_or_else(|| ConfigError::Syntax { line, msg: format!("expected key = value, got {l:?}") })?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(ConfigError::UnknownKey { line, key: k.to_string() });
        }
        set(cfg, k, v).ok_or_else(|| ConfigError::BadValue { line, key: k.to_string(), value: v.to_string() })?;
    }
    Ok(())
}

pub fn load_config(path: &Path, base: ExperimentConfig) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Read { path: path.display().to_string(), msg: e.to_string() })?;
    let mut cfg = base;
    apply_config(&mut cfg, &text)?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::Condition;

    #[test]
    fn parses_and_overrides() {
        let mut cfg = ExperimentConfig::default();
        apply_config(&mut cfg, "# demo\ncondition = min\nkappa = 1.5\n\nrefit_hyperparams = yes  # grid\nlength_scale=0.2\n").unwrap();
        assert_eq!(cfg.condition, Condition::Minimum);
        assert_eq!(cfg.bo.kappa, 1.5);
        assert!(cfg.bo.refit_hyperparams);
        assert_eq!(cfg.bo.kernel.length_scales, [0.2; 5]);
    }

    #[test]
    fn every_documented_key_is_settable() {
        let samples = [("condition", "none"), ("fitness_metric", "inverse_force"), ("design", "uniform"), ("refit_hyperparams", "true"), ("imu_noise", "on")];
        for k in KEYS {
            let v = samples.iter().find(|(s, _)| s == k).map_or("1", |(_, v)| v);
            let mut cfg = ExperimentConfig::default();
            assert!(set(&mut cfg, k, v).is_some(), "{k}");
        }
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(
            apply_config(&mut cfg, "seed = 1\nbogus = 2"),
            Err(ConfigError::UnknownKey { line: 2, key: "bogus".into() })
        );
        assert!(matches!(apply_config(&mut cfg, "kappa = -1"), Err(ConfigError::BadValue { line: 1, .. })));
        assert!(matches!(apply_config(&mut cfg, "kappa"), Err(ConfigError::Syntax { line: 1, .. })));
    }
}
