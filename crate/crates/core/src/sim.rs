//! Reduced-order quadruped physics.
//!
//! A single rigid trunk carries all of the mass. Legs are massless and
//! position controlled: each joint tracks its command through a first-order
//! lag, and the resulting foot points interact with the ground through
//! spring-damper contacts with regularized Coulomb friction. The scaffold
//! is a unilateral vertical spring-damper harness; its summed tension is the
//! strain-gauge signal. The controller sees the gyro rates through a
//! first-order low-pass filter.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::controller::{controller_step, ControllerConfig, ImuReading, JointTargets};
use crate::kinematics::{foot_velocity, forward_kinematics, LegAngles, LegGeometry, LEG_COUNT};
use crate::params::ParamVector;

#[derive(Debug, Clone, PartialEq)]
pub struct RobotModel {
    pub mass: f64,
    /// Principal moments of the trunk, kg·m².
    pub inertia: Vector3<f64>,
    pub geometry: LegGeometry,
    pub gravity: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        let mass = 2.1;
        // Solid box 48.5 cm × 42 cm × 10 cm.
        let (l, w, h): (f64, f64, f64) = (0.485, 0.42, 0.10);
        let inertia = Vector3::new(
            mass / 12.0 * (w * w + h * h),
            mass / 12.0 * (l * l + h * h),
            mass / 12.0 * (l * l + w * w),
        );
        Self { mass, inertia, geometry: LegGeometry::default(), gravity: 9.81 }
    }
}

impl RobotModel {
    pub fn weight(&self) -> f64 {
        self.mass * self.gravity
    }
}

/// Ground contact parameters, per foot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactParams {
    pub stiffness: f64,
    pub damping: f64,
    pub friction_coeff: f64,
    /// Viscous slope of the regularized friction law, N·s/m.
    pub viscous_friction: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self { stiffness: 1e4, damping: 100.0, friction_coeff: 0.8, viscous_friction: 200.0 }
    }
}

/// Rope scaffold. The harness holds the trunk at four anchors placed
/// symmetrically about the CoG in the trunk's horizontal plane; each anchor
/// carries a quarter of the rope stiffness and damping, so at level attitude
/// the summed tension equals [`rope_force`] evaluated at the CoG. Zero half
/// spans reduce the harness to a single attachment at the CoG.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportConfig {
    /// CoG height at which the rope just becomes taut, meters.
    pub height: f64,
    pub stiffness: f64,
    pub damping: f64,
    pub enabled: bool,
    /// Anchor offsets along the trunk x and y axes, meters.
    pub anchor_half_length: f64,
    pub anchor_half_width: f64,
}

pub const DEFAULT_ROPE_STIFFNESS: f64 = 150.0;
pub const DEFAULT_ROPE_DAMPING: f64 = 50.0;

impl SupportConfig {
    pub fn at_height(height: f64) -> Self {
        Self {
            height,
            stiffness: DEFAULT_ROPE_STIFFNESS,
            damping: DEFAULT_ROPE_DAMPING,
            enabled: true,
            anchor_half_length: 0.485 / 2.0,
            anchor_half_width: 0.42 / 2.0,
        }
    }

    pub fn disabled() -> Self {
        Self { enabled: false, ..Self::at_height(0.0) }
    }

    pub fn with_rope(mut self, stiffness: f64, damping: f64) -> Self {
        self.stiffness = stiffness;
        self.damping = damping;
        self
    }

    /// Single attachment at the CoG.
    pub fn point_attachment(mut self) -> Self {
        self.anchor_half_length = 0.0;
        self.anchor_half_width = 0.0;
        self
    }

    pub fn is_valid(&self) -> bool {
        self.stiffness >= 0.0 && self.damping >= 0.0 && (!self.enabled || self.height > 0.0)
    }

    /// Anchor points relative to the CoG, body frame.
    pub fn anchors(&self) -> [Vector3<f64>; 4] {
        let (a, b) = (self.anchor_half_length, self.anchor_half_width);
        [Vector3::new(a, b, 0.0), Vector3::new(a, -b, 0.0), Vector3::new(-a, b, 0.0), Vector3::new(-a, -b, 0.0)]
    }
}

/// Rope tension in newtons. Zero when slack or disabled; never negative.
pub fn rope_force(z: f64, z_rate: f64, sup: &SupportConfig) -> f64 {
    if !sup.enabled || z >= sup.height {
        return 0.0;
    }
    (sup.stiffness * (sup.height - z) - sup.damping * z_rate).max(0.0)
}

/// Vertical tension at each harness anchor, in [`SupportConfig::anchors`] order.
pub fn harness_tensions(body: &BodyState, sup: &SupportConfig) -> [f64; 4] {
    if !sup.enabled {
        return [0.0; 4];
    }
    let quarter = SupportConfig { stiffness: sup.stiffness / 4.0, damping: sup.damping / 4.0, ..*sup };
    let rot = body.orientation.to_quaternion();
    let omega_world = rot * body.angular_velocity;
    sup.anchors().map(|a| {
        let r = rot * a;
        let z = body.position.z + r.z;
        let z_rate = body.linear_velocity.z + omega_world.cross(&r).z;
        rope_force(z, z_rate, &quarter)
    })
}

/// Ground reaction on a point foot, world frame.
pub fn contact_force(foot_z: f64, foot_z_rate: f64, tangential_velocity: [f64; 2], params: &ContactParams) -> Vector3<f64> {
    if foot_z >= 0.0 {
        return Vector3::zeros();
    }
    let normal = (params.stiffness * -foot_z - params.damping * foot_z_rate).max(0.0);
    let mut fx = -params.viscous_friction * tangential_velocity[0];
    let mut fy = -params.viscous_friction * tangential_velocity[1];
    let limit = params.friction_coeff * normal;
    let mag = fx.hypot(fy);
    if mag > limit {
        let s = if mag > 0.0 { limit / mag } else { 0.0 };
        fx *= s;
        fy *= s;
    }
    Vector3::new(fx, fy, normal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub roll: f64,
    pub pitch: f64,
    pub yaw: f64,
}

impl Orientation {
    pub const LEVEL: Orientation = Orientation { roll: 0.0, pitch: 0.0, yaw: 0.0 };

    pub fn to_quaternion(self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_euler_angles(self.roll, self.pitch, self.yaw)
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        let (roll, pitch, yaw) = q.euler_angles();
        Self { roll, pitch, yaw }
    }
}

/// Trunk state. `angular_velocity` is expressed in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyState {
    pub position: Vector3<f64>,
    pub orientation: Orientation,
    pub linear_velocity: Vector3<f64>,
    pub angular_velocity: Vector3<f64>,
}

impl BodyState {
    pub fn at_rest(height: f64) -> Self {
        Self {
            position: Vector3::new(0.0, 0.0, height),
            orientation: Orientation::LEVEL,
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
        }
    }

    /// Noise-free IMU view of the trunk.
    pub fn imu(&self) -> ImuReading {
        ImuReading {
            pitch: self.orientation.pitch,
            roll: self.orientation.roll,
            pitch_rate: self.angular_velocity.y,
            roll_rate: self.angular_velocity.x,
        }
    }
}

/// Trunk plus the lagged joint angles actually reached by the servos.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimState {
    pub body: BodyState,
    pub joints: [LegAngles; LEG_COUNT],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorReadings {
    pub imu: ImuReading,
    /// Strain-gauge tension, N.
    pub rope_tension: f64,
    /// Ground normal force per foot, N.
    pub contact_normals: [f64; LEG_COUNT],
}

/// Optional zero-mean Gaussian IMU noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuNoise {
    pub enabled: bool,
    pub angle_std: f64,
    pub rate_std: f64,
}

impl Default for ImuNoise {
    fn default() -> Self {
        Self { enabled: false, angle_std: 0.5f64.to_radians(), rate_std: 2.0f64.to_radians() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub robot: RobotModel,
    pub contact: ContactParams,
    pub controller: ControllerConfig,
    /// Servo first-order time constant, s.
    pub servo_time_constant: f64,
    pub physics_dt: f64,
    pub control_dt: f64,
    pub imu_noise: ImuNoise,
    /// Tilt beyond which an unsupported trial counts as a fall, radians.
    pub fall_angle: f64,
    /// Trunk attitude at the start of a trial.
    pub initial_attitude: Orientation,
    /// First-order low-pass time constant on the gyro rates fed to the
    /// controller, s. Zero disables the filter.
    pub gyro_filter_time_constant: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            robot: RobotModel::default(),
            contact: ContactParams::default(),
            controller: ControllerConfig::default(),
            servo_time_constant: 0.03,
            physics_dt: 1e-3,
            control_dt: 1e-2,
            imu_noise: ImuNoise::default(),
            fall_angle: 60f64.to_radians(),
            initial_attitude: Orientation { roll: 0.05, pitch: 0.03, yaw: 0.0 },
            gyro_filter_time_constant: 0.05,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SimError {
    #[error("integration diverged: {0}")]
    NumericalDivergence(String),
    #[error("physics time step {0} s is outside (0, 0.005]")]
    InvalidTimeStep(f64),
}

const MAX_HEIGHT: f64 = 10.0;
const MAX_SPEED: f64 = 100.0;

/// Per-foot kinematic quantities in the world frame.
struct FootKinematics {
    /// Foot position relative to the CoG, body frame.
    offset_body: [Vector3<f64>; LEG_COUNT],
    position: [Vector3<f64>; LEG_COUNT],
    velocity: [Vector3<f64>; LEG_COUNT],
}

fn joint_rates(q: &LegAngles, target: &LegAngles, tau: f64) -> LegAngles {
    LegAngles::new(
        (target.abduction - q.abduction) / tau,
        (target.flexion - q.flexion) / tau,
        (target.knee - q.knee) / tau,
    )
}

fn foot_kinematics(state: &SimState, targets: &JointTargets, cfg: &SimConfig) -> FootKinematics {
    let geom = &cfg.robot.geometry;
    let rot = state.body.orientation.to_quaternion();
    let omega_world = rot * state.body.angular_velocity;
    let mut fk = FootKinematics {
        offset_body: [Vector3::zeros(); LEG_COUNT],
        position: [Vector3::zeros(); LEG_COUNT],
        velocity: [Vector3::zeros(); LEG_COUNT],
    };
    for i in 0..LEG_COUNT {
        let q = &state.joints[i];
        let qd = joint_rates(q, &targets.legs[i], cfg.servo_time_constant);
        let r_body = geom.hip_offsets[i] + forward_kinematics(q, geom);
        let r_world = rot * r_body;
        fk.offset_body[i] = r_body;
        fk.position[i] = state.body.position + r_world;
        fk.velocity[i] = state.body.linear_velocity + omega_world.cross(&r_world) + rot * foot_velocity(q, &qd, geom);
    }
    fk
}

struct Loads {
    force: Vector3<f64>,
    torque_body: Vector3<f64>,
    rope_tension: f64,
    contact_normals: [f64; LEG_COUNT],
}

fn external_loads(state: &SimState, targets: &JointTargets, cfg: &SimConfig, sup: &SupportConfig) -> Loads {
    let fk = foot_kinematics(state, targets, cfg);
    let rot = state.body.orientation.to_quaternion();
    let mut force = Vector3::new(0.0, 0.0, -cfg.robot.weight());
    let mut torque_body = Vector3::zeros();
    let mut contact_normals = [0.0; LEG_COUNT];
    for i in 0..LEG_COUNT {
        let (p, v) = (fk.position[i], fk.velocity[i]);
        let f = contact_force(p.z, v.z, [v.x, v.y], &cfg.contact);
        contact_normals[i] = f.z;
        force += f;
        torque_body += fk.offset_body[i].cross(&rot.inverse_transform_vector(&f));
    }
    let tensions = harness_tensions(&state.body, sup);
    for (anchor, tension) in sup.anchors().iter().zip(tensions) {
        let f = Vector3::new(0.0, 0.0, tension);
        torque_body += anchor.cross(&rot.inverse_transform_vector(&f));
    }
    let rope_tension: f64 = tensions.iter().sum();
    force.z += rope_tension;
    Loads { force, torque_body, rope_tension, contact_normals }
}

/// Sensor view of a state under the given commands.
pub fn read_sensors(state: &SimState, targets: &JointTargets, cfg: &SimConfig, sup: &SupportConfig) -> SensorReadings {
    let loads = external_loads(state, targets, cfg, sup);
    SensorReadings {
        imu: state.body.imu(),
        rope_tension: loads.rope_tension,
        contact_normals: loads.contact_normals,
    }
}

/// One semi-implicit Euler step of length `dt`.
pub fn step_dynamics(
    state: &SimState,
    targets: &JointTargets,
    cfg: &SimConfig,
    sup: &SupportConfig,
    dt: f64,
) -> Result<(SimState, SensorReadings), SimError> {
    if !(dt > 0.0 && dt <= 0.005) {
        return Err(SimError::InvalidTimeStep(dt));
    }
    let loads = external_loads(state, targets, cfg, sup);
    let body = &state.body;
    let inertia = Matrix3::from_diagonal(&cfg.robot.inertia);
    let omega = body.angular_velocity;

    let linear_velocity = body.linear_velocity + loads.force * (dt / cfg.robot.mass);
    let gyro = omega.cross(&(inertia * omega));
    let angular_accel = (loads.torque_body - gyro).component_div(&cfg.robot.inertia);
    let angular_velocity = omega + angular_accel * dt;

    let position = body.position + linear_velocity * dt;
    let rot = body.orientation.to_quaternion() * UnitQuaternion::from_scaled_axis(angular_velocity * dt);

    let blend = 1.0 - (-dt / cfg.servo_time_constant).exp();
    let joints = std::array::from_fn(|i| {
        let (q, t) = (&state.joints[i], &targets.legs[i]);
        LegAngles::new(
            q.abduction + blend * (t.abduction - q.abduction),
            q.flexion + blend * (t.flexion - q.flexion),
            q.knee + blend * (t.knee - q.knee),
        )
    });

    let next = SimState {
        body: BodyState {
            position,
            orientation: Orientation::from_quaternion(&rot),
            linear_velocity,
            angular_velocity,
        },
        joints,
    };
    check_sane(&next.body)?;
    let sensors = read_sensors(&next, targets, cfg, sup);
    Ok((next, sensors))
}

fn check_sane(b: &BodyState) -> Result<(), SimError> {
    let finite = b.position.iter().chain(b.linear_velocity.iter()).chain(b.angular_velocity.iter()).all(|v| v.is_finite())
        && b.orientation.roll.is_finite()
        && b.orientation.pitch.is_finite()
        && b.orientation.yaw.is_finite();
    if !finite {
        return Err(SimError::NumericalDivergence("non-finite state".into()));
    }
    if b.position.z.abs() > MAX_HEIGHT {
        return Err(SimError::NumericalDivergence(format!("height {:.3} m", b.position.z)));
    }
    let speed = b.linear_velocity.norm().max(b.angular_velocity.norm());
    if speed > MAX_SPEED {
        return Err(SimError::NumericalDivergence(format!("speed {speed:.1}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    Fell,
    IkFailure,
    Diverged,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Completed => "completed",
            Termination::Fell => "fell",
            Termination::IkFailure => "ik_failure",
            Termination::Diverged => "diverged",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub body: BodyState,
    pub targets: JointTargets,
    pub sensors: SensorReadings,
}

/// A recorded trial, sampled at the control rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialTrace {
    /// Sample interval, s.
    pub dt: f64,
    /// Requested duration, s.
    pub duration: f64,
    pub samples: Vec<TraceSample>,
    pub termination: Termination,
}

impl TrialTrace {
    /// Samples a full-length trial would contain.
    pub fn expected_samples(&self) -> usize {
        (self.duration / self.dt).round() as usize + 1
    }

    pub fn cog_heights(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.body.position.z).collect()
    }
}

/// Initial CoG height: the lowest foot just touching the ground at the
/// configured initial attitude, or hanging in rope equilibrium when that is
/// higher.
pub fn initial_height(sup: &SupportConfig, cfg: &SimConfig, joints: &[LegAngles; LEG_COUNT]) -> f64 {
    let geom = &cfg.robot.geometry;
    let rot = cfg.initial_attitude.to_quaternion();
    let touch = (0..LEG_COUNT)
        .map(|i| -(rot * (geom.hip_offsets[i] + forward_kinematics(&joints[i], geom))).z)
        .fold(f64::NEG_INFINITY, f64::max);
    if sup.enabled && sup.stiffness > 0.0 {
        touch.max(sup.height - cfg.robot.weight() / sup.stiffness)
    } else {
        touch
    }
}

/// Closed-loop trial: controller at `control_dt`, physics at `physics_dt`.
/// Failures end the trial early and are reported through `termination`.
pub fn run_trial(p: &ParamVector, sup: &SupportConfig, duration: f64, seed: u64, cfg: &SimConfig) -> TrialTrace {
    let substeps = ((cfg.control_dt / cfg.physics_dt).round() as usize).max(1);
    let dt = cfg.control_dt / substeps as f64;
    let ticks = (duration / cfg.control_dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let angle_noise = Normal::new(0.0, cfg.imu_noise.angle_std).expect("finite noise");
    let rate_noise = Normal::new(0.0, cfg.imu_noise.rate_std).expect("finite noise");
    let geom = &cfg.robot.geometry;

    let mut trace = TrialTrace {
        dt: cfg.control_dt,
        duration,
        samples: Vec::with_capacity(ticks + 1),
        termination: Termination::Completed,
    };

    let initial_targets = match controller_step(0.0, &ImuReading::default(), p, &cfg.controller, geom) {
        Ok(t) => t,
        Err(_) => {
            trace.termination = Termination::IkFailure;
            return trace;
        }
    };
    let mut body = BodyState::at_rest(initial_height(sup, cfg, &initial_targets.legs));
    body.orientation = cfg.initial_attitude;
    let mut state = SimState { body, joints: initial_targets.legs };
    let mut sensors = read_sensors(&state, &initial_targets, cfg, sup);

    let mut gyro_state: Option<(f64, f64)> = None;
    for tick in 0..=ticks {
        let t = tick as f64 * cfg.control_dt;
        let o = state.body.orientation;
        if o.roll.abs() > cfg.fall_angle || o.pitch.abs() > cfg.fall_angle {
            trace.termination = Termination::Fell;
            return trace;
        }
        let mut imu = sensors.imu;
        if cfg.imu_noise.enabled {
            imu.pitch += angle_noise.sample(&mut rng);
            imu.roll += angle_noise.sample(&mut rng);
            imu.pitch_rate += rate_noise.sample(&mut rng);
            imu.roll_rate += rate_noise.sample(&mut rng);
        }
        let mut filtered = imu;
        if cfg.gyro_filter_time_constant > 0.0 {
            let a = 1.0 - (-cfg.control_dt / cfg.gyro_filter_time_constant).exp();
            let (fp, fr) = gyro_state.get_or_insert((imu.pitch_rate, imu.roll_rate));
            *fp += a * (imu.pitch_rate - *fp);
            *fr += a * (imu.roll_rate - *fr);
            filtered.pitch_rate = *fp;
            filtered.roll_rate = *fr;
        }
        let targets = match controller_step(t, &filtered, p, &cfg.controller, geom) {
            Ok(targets) => targets,
            Err(_) => {
                trace.termination = Termination::IkFailure;
                return trace;
            }
        };
        trace.samples.push(TraceSample { t, body: state.body, targets, sensors: SensorReadings { imu, ..sensors } });
        if tick == ticks {
            break;
        }
        for _ in 0..substeps {
            match step_dynamics(&state, &targets, cfg, sup, dt) {
                Ok((next, s)) => {
                    state = next;
                    sensors = s;
                }
                Err(_) => {
                    trace.termination = Termination::Diverged;
                    return trace;
                }
            }
        }
    }
    trace
}
