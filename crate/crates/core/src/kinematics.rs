//! Three-joint leg kinematics (abduction, hip flexion, knee).
//!
//! Hip frame: x forward, y left, z up, origin at the hip. Abduction rotates
//! the leg plane about x; flexion and knee act inside that plane. Zero angles
//! put the foot straight below the hip with the leg fully extended. Positive
//! flexion swings the thigh forward; positive knee flexion swings the shank
//! forward relative to the thigh, so the knee sits behind the hip-foot line.

use nalgebra::Vector3;

pub const LEG_COUNT: usize = 4;

/// Minimum distance kept from the workspace boundary.
pub const REACH_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leg {
    FrontLeft,
    FrontRight,
    RearLeft,
    RearRight,
}

impl Leg {
    pub const ALL: [Leg; LEG_COUNT] = [Leg::FrontLeft, Leg::FrontRight, Leg::RearLeft, Leg::RearRight];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Leg::FrontLeft => "FL",
            Leg::FrontRight => "FR",
            Leg::RearLeft => "RL",
            Leg::RearRight => "RR",
        }
    }

    /// Trot pair: `FL+RR` is pair A, `FR+RL` is pair B.
    pub fn in_pair_a(self) -> bool {
        matches!(self, Leg::FrontLeft | Leg::RearRight)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LegAngles {
    pub abduction: f64,
    pub flexion: f64,
    pub knee: f64,
}

impl LegAngles {
    pub fn new(abduction: f64, flexion: f64, knee: f64) -> Self {
        Self { abduction, flexion, knee }
    }

    pub fn is_finite(&self) -> bool {
        self.abduction.is_finite() && self.flexion.is_finite() && self.knee.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LegGeometry {
    pub thigh_length: f64,
    pub shank_length: f64,
    /// Hip positions relative to the trunk center, indexed by [`Leg::index`].
    pub hip_offsets: [Vector3<f64>; LEG_COUNT],
}

impl Default for LegGeometry {
    fn default() -> Self {
        Self::with_lengths(0.21, 0.21)
    }
}

impl LegGeometry {
    /// Hips at the corners of the 48.5 cm × 42 cm body outline.
    pub fn with_lengths(thigh_length: f64, shank_length: f64) -> Self {
        let (hx, hy) = (0.485 / 2.0, 0.42 / 2.0);
        Self {
            thigh_length,
            shank_length,
            hip_offsets: [
                Vector3::new(hx, hy, 0.0),
                Vector3::new(hx, -hy, 0.0),
                Vector3::new(-hx, hy, 0.0),
                Vector3::new(-hx, -hy, 0.0),
            ],
        }
    }

    pub fn max_reach(&self) -> f64 {
        self.thigh_length + self.shank_length - REACH_MARGIN
    }

    pub fn min_reach(&self) -> f64 {
        (self.thigh_length - self.shank_length).abs() + REACH_MARGIN
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("foot target at distance {distance:.6} m is outside the reachable band [{min:.6}, {max:.6}] m")]
pub struct OutOfReach {
    pub distance: f64,
    pub min: f64,
    pub max: f64,
}

/// Foot position in the hip frame.
pub fn forward_kinematics(q: &LegAngles, geom: &LegGeometry) -> Vector3<f64> {
    let (l1, l2) = (geom.thigh_length, geom.shank_length);
    let shank = q.flexion + q.knee;
    let px = l1 * q.flexion.sin() + l2 * shank.sin();
    let pz = -l1 * q.flexion.cos() - l2 * shank.cos();
    let (sa, ca) = q.abduction.sin_cos();
    Vector3::new(px, -pz * sa, pz * ca)
}

/// Foot velocity in the hip frame for joint rates `qd`.
pub fn foot_velocity(q: &LegAngles, qd: &LegAngles, geom: &LegGeometry) -> Vector3<f64> {
    let (l1, l2) = (geom.thigh_length, geom.shank_length);
    let shank = q.flexion + q.knee;
    let shank_rate = qd.flexion + qd.knee;
    let pz = -l1 * q.flexion.cos() - l2 * shank.cos();
    let dpx = l1 * q.flexion.cos() * qd.flexion + l2 * shank.cos() * shank_rate;
    let dpz = l1 * q.flexion.sin() * qd.flexion + l2 * shank.sin() * shank_rate;
    let (sa, ca) = q.abduction.sin_cos();
    Vector3::new(
        dpx,
        -dpz * sa - pz * ca * qd.abduction,
        dpz * ca - pz * sa * qd.abduction,
    )
}

/// Joint angles that place the foot at `target` (hip frame).
pub fn leg_inverse_kinematics(target: &Vector3<f64>, geom: &LegGeometry) -> Result<LegAngles, OutOfReach> {
    let distance = target.norm();
    let (min, max) = (geom.min_reach(), geom.max_reach());
    if !(distance >= min && distance <= max) {
        return Err(OutOfReach { distance, min, max });
    }
    let (l1, l2) = (geom.thigh_length, geom.shank_length);
    let abduction = target.y.atan2(-target.z);
    // Downward extent inside the rotated leg plane.
    let depth = target.y.hypot(target.z);
    let cos_knee = (distance * distance - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    let knee = cos_knee.clamp(-1.0, 1.0).acos();
    let gamma = target.x.atan2(depth);
    let flexion = gamma - (l2 * knee.sin()).atan2(l1 + l2 * knee.cos());
    Ok(LegAngles { abduction, flexion, knee })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, SQRT_2};

    #[test]
    fn full_extension_straight_down() {
        let g = LegGeometry::default();
        let q = leg_inverse_kinematics(&Vector3::new(0.0, 0.0, -g.max_reach()), &g).unwrap();
        assert!(q.abduction.abs() < 1e-12);
        assert!(q.flexion.abs() < 1e-2, "flexion {}", q.flexion);
        assert!(q.knee.abs() < 1e-2, "knee {}", q.knee);
    }

    #[test]
    fn right_angle_knee_from_law_of_cosines() {
        let g = LegGeometry::with_lengths(0.25, 0.25);
        let q = leg_inverse_kinematics(&Vector3::new(0.0, 0.0, -0.25 * SQRT_2), &g).unwrap();
        assert!((q.knee - FRAC_PI_2).abs() < 1e-12);
        // Knee sits behind the hip-foot line.
        assert!(q.flexion < 0.0);
    }

    #[test]
    fn unreachable_targets() {
        let g = LegGeometry::default();
        let far = Vector3::new(0.0, 0.0, -0.42 * 1.01);
        assert!(matches!(leg_inverse_kinematics(&far, &g), Err(OutOfReach { .. })));
        let g2 = LegGeometry::with_lengths(0.3, 0.1);
        let near = Vector3::new(0.0, 0.0, -0.1);
        assert!(leg_inverse_kinematics(&near, &g2).is_err());
        assert!(leg_inverse_kinematics(&Vector3::new(f64::NAN, 0.0, -0.3), &g).is_err());
    }

    #[test]
    fn foot_velocity_matches_finite_difference() {
        let g = LegGeometry::default();
        let q = LegAngles::new(0.1, -0.4, 0.9);
        let qd = LegAngles::new(0.3, -1.1, 2.0);
        let h = 1e-7;
        let q2 = LegAngles::new(q.abduction + h * qd.abduction, q.flexion + h * qd.flexion, q.knee + h * qd.knee);
        let fd = (forward_kinematics(&q2, &g) - forward_kinematics(&q, &g)) / h;
        assert!((fd - foot_velocity(&q, &qd, &g)).norm() < 1e-6);
    }

    fn reachable_target() -> impl Strategy<Value = Vector3<f64>> {
        let g = LegGeometry::default();
        let (lo, hi) = (g.min_reach() + 1e-4, g.max_reach() - 1e-4);
        (lo..hi, -1.2f64..1.2, -1.4f64..1.4).prop_map(|(r, yaw, tilt)| {
            // Lower half-space only; the leg cannot point above the hip.
            let dir = Vector3::new(tilt.sin() * yaw.cos(), tilt.sin() * yaw.sin(), -tilt.cos());
            dir * r
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn ik_then_fk_reproduces_target(t in reachable_target()) {
            let g = LegGeometry::default();
            let q = leg_inverse_kinematics(&t, &g).unwrap();
            let back = forward_kinematics(&q, &g);
            prop_assert!((back - t).norm() < 1e-9, "target {t:?} back {back:?}");
            prop_assert!(q.knee >= 0.0);
        }
    }
}
