//! In-place trot controller.
//!
//! Diagonal leg pairs alternate half a period apart and each pair is driven
//! as one virtual leg. Swing feet follow a half-sine lift whose peak is the
//! hopping height; stance feet sit at the nominal stand height with their
//! hip-to-foot vectors rotated by the attitude corrections
//!
//! ```text
//! θ_pitch = -k_p1 (φ_P - φ_Pd) - k_v1 φ̇_y
//! θ_roll  = -k_p2 (φ_R - φ_Rd) - k_v2 φ̇_x
//! ```

use std::f64::consts::PI;

use nalgebra::{Rotation3, Vector3};

use crate::kinematics::{leg_inverse_kinematics, Leg, LegAngles, LegGeometry, OutOfReach, LEG_COUNT};
use crate::params::ParamVector;

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerConfig {
    /// Gait period in seconds.
    pub gait_period: f64,
    /// Fraction of the period each pair spends in stance.
    pub duty_factor: f64,
    pub desired_pitch: f64,
    pub desired_roll: f64,
    /// Hip-to-foot vertical distance of a stance foot, meters.
    pub nominal_stand_height: f64,
    /// Symmetric clamp on each attitude correction, radians.
    pub correction_limit: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            gait_period: 0.6,
            duty_factor: 0.6,
            desired_pitch: 0.0,
            desired_roll: 0.0,
            nominal_stand_height: 0.35,
            correction_limit: 0.5,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("gait period must be positive, got {0}")]
    Period(f64),
    #[error("duty factor must lie in (0, 1), got {0}")]
    DutyFactor(f64),
    #[error("nominal stand height must be positive, got {0}")]
    StandHeight(f64),
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gait_period > 0.0 && self.gait_period.is_finite()) {
            return Err(ConfigError::Period(self.gait_period));
        }
        if !(self.duty_factor > 0.0 && self.duty_factor < 1.0) {
            return Err(ConfigError::DutyFactor(self.duty_factor));
        }
        if !(self.nominal_stand_height > 0.0) {
            return Err(ConfigError::StandHeight(self.nominal_stand_height));
        }
        Ok(())
    }
}

/// Trunk attitude as read by the IMU.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImuReading {
    pub pitch: f64,
    pub roll: f64,
    /// Angular rate about the body y axis.
    pub pitch_rate: f64,
    /// Angular rate about the body x axis.
    pub roll_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairPhase {
    /// In `[0, 1)`.
    pub phase: f64,
    pub stance: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaitPhase {
    /// FL + RR.
    pub pair_a: PairPhase,
    /// FR + RL.
    pub pair_b: PairPhase,
}

impl GaitPhase {
    pub fn for_leg(&self, leg: Leg) -> PairPhase {
        if leg.in_pair_a() {
            self.pair_a
        } else {
            self.pair_b
        }
    }
}

fn wrap_unit(x: f64) -> f64 {
    let w = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs.
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

pub fn gait_phase(t: f64, cfg: &ControllerConfig) -> GaitPhase {
    let cycles = t / cfg.gait_period;
    let make = |phase: f64| PairPhase { phase, stance: phase < cfg.duty_factor };
    GaitPhase { pair_a: make(wrap_unit(cycles)), pair_b: make(wrap_unit(cycles + 0.5)) }
}

/// Vertical foot lift in meters for a pair at `phase`; `hop_height_mm` is
/// the peak lift at mid-swing.
pub fn swing_foot_height(phase: f64, cfg: &ControllerConfig, hop_height_mm: f64) -> f64 {
    if phase < cfg.duty_factor {
        return 0.0;
    }
    let s = (phase - cfg.duty_factor) / (1.0 - cfg.duty_factor);
    hop_height_mm / 1000.0 * (PI * s).sin()
}

/// Unclamped attitude corrections `(θ_pitch, θ_roll)`.
pub fn raw_stance_correction(imu: &ImuReading, p: &ParamVector, cfg: &ControllerConfig) -> (f64, f64) {
    let pitch = -p.pitch_kp * (imu.pitch - cfg.desired_pitch) - p.pitch_kv * imu.pitch_rate;
    let roll = -p.roll_kp * (imu.roll - cfg.desired_roll) - p.roll_kv * imu.roll_rate;
    (pitch, roll)
}

/// Attitude corrections `(θ_pitch, θ_roll)`, each clamped to the configured limit.
pub fn stance_correction(imu: &ImuReading, p: &ParamVector, cfg: &ControllerConfig) -> (f64, f64) {
    let (pitch, roll) = raw_stance_correction(imu, p, cfg);
    let lim = cfg.correction_limit;
    (pitch.clamp(-lim, lim), roll.clamp(-lim, lim))
}

/// Stance foot target in the hip frame: the nominal vertical leg rotated by
/// `θ_pitch` about the lateral axis and `θ_roll` about the longitudinal axis.
pub fn stance_foot_target(theta_pitch: f64, theta_roll: f64, cfg: &ControllerConfig) -> Vector3<f64> {
    let rot = Rotation3::from_axis_angle(&Vector3::y_axis(), theta_pitch)
        * Rotation3::from_axis_angle(&Vector3::x_axis(), theta_roll);
    rot * Vector3::new(0.0, 0.0, -cfg.nominal_stand_height)
}

pub fn swing_foot_target(lift: f64, cfg: &ControllerConfig) -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -cfg.nominal_stand_height + lift)
}

/// Commanded joint angles for all four legs, indexed by [`Leg::index`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JointTargets {
    pub legs: [LegAngles; LEG_COUNT],
}

impl JointTargets {
    pub fn uniform(angles: LegAngles) -> Self {
        Self { legs: [angles; LEG_COUNT] }
    }

    /// Feet folded up towards the trunk.
    pub fn retracted() -> Self {
        Self::uniform(LegAngles::new(0.0, 0.0, 2.6))
    }

    pub fn leg(&self, leg: Leg) -> &LegAngles {
        &self.legs[leg.index()]
    }

    pub fn within_actuator_limits(&self) -> bool {
        self.legs.iter().all(|q| {
            q.abduction.abs() <= PI / 2.0 && q.flexion.abs() <= PI && q.knee.abs() <= PI
        })
    }
}

/// Full output of one controller evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub targets: JointTargets,
    pub phase: GaitPhase,
    /// `(θ_pitch, θ_roll)` after clamping.
    pub correction: (f64, f64),
}

pub fn controller_output(
    t: f64,
    imu: &ImuReading,
    p: &ParamVector,
    cfg: &ControllerConfig,
    geom: &LegGeometry,
) -> Result<ControlOutput, OutOfReach> {
    let phase = gait_phase(t, cfg);
    let correction = stance_correction(imu, p, cfg);
    let pair_angles = |pp: PairPhase| -> Result<LegAngles, OutOfReach> {
        let target = if pp.stance {
            stance_foot_target(correction.0, correction.1, cfg)
        } else {
            swing_foot_target(swing_foot_height(pp.phase, cfg, p.hop_height_mm), cfg)
        };
        leg_inverse_kinematics(&target, geom)
    };
    let a = pair_angles(phase.pair_a)?;
    let b = pair_angles(phase.pair_b)?;
    let legs = Leg::ALL.map(|leg| if leg.in_pair_a() { a } else { b });
    Ok(ControlOutput { targets: JointTargets { legs }, phase, correction })
}

pub fn controller_step(
    t: f64,
    imu: &ImuReading,
    p: &ParamVector,
    cfg: &ControllerConfig,
    geom: &LegGeometry,
) -> Result<JointTargets, OutOfReach> {
    controller_output(t, imu, p, cfg, geom).map(|o| o.targets)
}
