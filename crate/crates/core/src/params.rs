//! Controller parameter vector and the box it is searched over.

use std::fmt;

/// Number of searched controller parameters.
pub const DIM: usize = 5;

/// The five gait-controller parameters searched by the optimizer.
///
/// | index | field            | unit | default range |
/// |-------|------------------|------|---------------|
/// | x0    | `hop_height_mm`  | mm   | [60, 120]     |
/// | x1    | `pitch_kp`       | -    | [-1, 1]       |
/// | x2    | `pitch_kv`       | -    | [-1, 1]       |
/// | x3    | `roll_kp`        | -    | [-1, 1]       |
/// | x4    | `roll_kv`        | -    | [-1, 1]       |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamVector {
    pub hop_height_mm: f64,
    pub pitch_kp: f64,
    pub pitch_kv: f64,
    pub roll_kp: f64,
    pub roll_kv: f64,
}

impl ParamVector {
    pub const fn new(hop_height_mm: f64, pitch_kp: f64, pitch_kv: f64, roll_kp: f64, roll_kv: f64) -> Self {
        Self { hop_height_mm, pitch_kp, pitch_kv, roll_kp, roll_kv }
    }

    /// Best parameters found on the hardware robot (identical for the
    /// minimum- and reducing-support runs).
    pub const fn hardware_optimum() -> Self {
        Self::new(
            77.99391797172291,
            -0.08307456005155922,
            0.17227550937265934,
            0.4861753588049966,
            -0.05160482932681609,
        )
    }

    pub fn from_array(x: [f64; DIM]) -> Self {
        Self::new(x[0], x[1], x[2], x[3], x[4])
    }

    pub fn to_array(&self) -> [f64; DIM] {
        [self.hop_height_mm, self.pitch_kp, self.pitch_kv, self.roll_kp, self.roll_kv]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

impl fmt::Display for ParamVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let x = self.to_array();
        write!(f, "[h={:.3}mm kp1={:.4} kv1={:.4} kp2={:.4} kv2={:.4}]", x[0], x[1], x[2], x[3], x[4])
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BoundsError {
    #[error("lower bound {lower} is not below upper bound {upper} in dimension {dim}")]
    Inverted { dim: usize, lower: f64, upper: f64 },
}

/// Axis-aligned search box in raw parameter units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    lower: [f64; DIM],
    upper: [f64; DIM],
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lower: [60.0, -1.0, -1.0, -1.0, -1.0],
            upper: [120.0, 1.0, 1.0, 1.0, 1.0],
        }
    }
}

impl Bounds {
    pub fn new(lower: [f64; DIM], upper: [f64; DIM]) -> Result<Self, BoundsError> {
        for d in 0..DIM {
            if !(lower[d] < upper[d]) {
                return Err(BoundsError::Inverted { dim: d, lower: lower[d], upper: upper[d] });
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn lower(&self) -> [f64; DIM] {
        self.lower
    }

    pub fn upper(&self) -> [f64; DIM] {
        self.upper
    }

    pub fn range(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    pub fn contains(&self, p: &ParamVector) -> bool {
        p.to_array()
            .iter()
            .enumerate()
            .all(|(d, &v)| v >= self.lower[d] && v <= self.upper[d])
    }

    /// Maps raw parameters into the unit cube.
    pub fn normalize(&self, p: &ParamVector) -> [f64; DIM] {
        let x = p.to_array();
        std::array::from_fn(|d| (x[d] - self.lower[d]) / self.range(d))
    }

    /// Inverse of [`Bounds::normalize`].
    pub fn denormalize(&self, u: &[f64; DIM]) -> ParamVector {
        ParamVector::from_array(std::array::from_fn(|d| self.lower[d] + u[d] * self.range(d)))
    }

    pub fn clip(&self, p: &ParamVector) -> ParamVector {
        let x = p.to_array();
        ParamVector::from_array(std::array::from_fn(|d| x[d].clamp(self.lower[d], self.upper[d])))
    }
}
