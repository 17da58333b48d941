//! Shared domain types, world constants and elementary planar geometry.
//!
//! Units are centimeters, seconds and radians throughout. Robot identity is
//! the index into [`MRState::robots`].

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use thiserror::Error;

use crate::kinematics::WheelCommand;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite value {value} for `{what}`")]
    NonFinite { what: &'static str, value: f64 },
    #[error("invalid world parameter `{name}` = {value}")]
    InvalidWorld { name: &'static str, value: f64 },
    #[error("wheel command component {index} = {value} is outside [-1, 1]")]
    CommandOutOfRange { index: usize, value: f64 },
    #[error("a multi-robot state needs at least one robot")]
    NoRobots,
}

/// Plain 2-vector used for positions, directions and velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Unit vector at angle `theta` from the positive x-axis.
    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counter-clockwise quarter turn.
    pub fn perp(self) -> Self {
        Self { x: -self.y, y: self.x }
    }

    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            x: c * self.x - s * self.y,
            y: s * self.x + c * self.y,
        }
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        (n > 0.0 && n.is_finite()).then(|| self * (1.0 / n))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Maps a finite angle onto `[-pi, pi)`.
pub fn normalize_angle(theta: f64) -> Result<f64, GeometryError> {
    if !theta.is_finite() {
        return Err(GeometryError::NonFinite { what: "angle", value: theta });
    }
    Ok(wrap_angle(theta))
}

/// Infallible variant of [`normalize_angle`] for values already known to be finite.
pub(crate) fn wrap_angle(theta: f64) -> f64 {
    if (-PI..PI).contains(&theta) {
        return theta;
    }
    let mut wrapped = theta - TAU * ((theta + PI) / TAU).floor();
    // floor() can land one ulp on the wrong side of the interval
    if wrapped >= PI {
        wrapped -= TAU;
    }
    if wrapped < -PI {
        wrapped += TAU;
    }
    wrapped
}

/// Smallest signed difference `a - b` between two angles.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

/// Physical constants shared by all robots (e-puck defaults).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldParams {
    pub robot_radius: f64,
    pub inter_wheel: f64,
    pub v_max: f64,
    pub padding: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            robot_radius: 3.7,
            inter_wheel: 5.1,
            v_max: 12.8,
            padding: 3.7 / 20.0,
        }
    }
}

impl WorldParams {
    pub fn new(
        robot_radius: f64,
        inter_wheel: f64,
        v_max: f64,
        padding: f64,
    ) -> Result<Self, GeometryError> {
        let world = Self { robot_radius, inter_wheel, v_max, padding };
        world.validate()?;
        Ok(world)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let positive = [
            ("robot_radius", self.robot_radius),
            ("inter_wheel", self.inter_wheel),
            ("v_max", self.v_max),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(GeometryError::InvalidWorld { name, value });
            }
        }
        if !(self.padding.is_finite() && self.padding >= 0.0) {
            return Err(GeometryError::InvalidWorld { name: "padding", value: self.padding });
        }
        Ok(())
    }

    /// Same world with a different padding (e.g. zero padding for proof constructions).
    pub fn with_padding(self, padding: f64) -> Self {
        Self { padding, ..self }
    }

    /// Center distance at which two robots touch.
    pub fn contact_distance(&self) -> f64 {
        2.0 * self.robot_radius
    }

    /// Center distance up to which two padded discs are connected.
    pub fn aggregation_distance(&self) -> f64 {
        2.0 * (self.robot_radius + self.padding)
    }
}

/// Pose of one robot. The heading is kept in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    x: f64,
    y: f64,
    theta: f64,
}

impl RobotState {
    /// Panics on non-finite input; use [`RobotState::try_new`] for untrusted values.
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        match Self::try_new(x, y, theta) {
            Ok(s) => s,
            Err(e) => panic!("invalid robot state: {e}"),
        }
    }

    pub fn try_new(x: f64, y: f64, theta: f64) -> Result<Self, GeometryError> {
        if !x.is_finite() {
            return Err(GeometryError::NonFinite { what: "x", value: x });
        }
        if !y.is_finite() {
            return Err(GeometryError::NonFinite { what: "y", value: y });
        }
        Ok(Self { x, y, theta: normalize_angle(theta)? })
    }

    pub(crate) fn from_finite(x: f64, y: f64, theta: f64) -> Self {
        Self { x, y, theta: wrap_angle(theta) }
    }

    pub fn at(position: Vec2, theta: f64) -> Self {
        Self::new(position.x, position.y, theta)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    pub fn heading(&self) -> Vec2 {
        Vec2::from_angle(self.theta)
    }

    /// Applies the rigid motion "rotate about the origin by `angle`, then translate by `offset`".
    pub fn transformed(&self, angle: f64, offset: Vec2) -> Self {
        let p = self.position().rotated(angle) + offset;
        Self::from_finite(p.x, p.y, self.theta + angle)
    }

    /// Largest coordinate-wise change between two poses (heading difference wrapped).
    pub fn max_change(&self, other: &RobotState) -> f64 {
        (self.x - other.x)
            .abs()
            .max((self.y - other.y).abs())
            .max(angle_diff(self.theta, other.theta).abs())
    }
}

impl fmt::Display for RobotState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:.6}, {:.6}, {:.6})", self.x, self.y, self.theta)
    }
}

/// Euclidean distance between two robot centers.
pub fn distance(a: &RobotState, b: &RobotState) -> f64 {
    (a.position() - b.position()).norm()
}

/// Ordered collection of robot poses plus the shared world parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MRState {
    pub robots: Vec<RobotState>,
    pub world: WorldParams,
}

impl MRState {
    pub fn new(robots: Vec<RobotState>, world: WorldParams) -> Result<Self, GeometryError> {
        if robots.is_empty() {
            return Err(GeometryError::NoRobots);
        }
        world.validate()?;
        Ok(Self { robots, world })
    }

    pub fn len(&self) -> usize {
        self.robots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.robots.is_empty()
    }

    pub fn robot(&self, i: usize) -> &RobotState {
        &self.robots[i]
    }

    /// Smallest pairwise center distance, `None` for a single robot.
    pub fn min_pairwise_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for (i, a) in self.robots.iter().enumerate() {
            for b in &self.robots[i + 1..] {
                let d = distance(a, b);
                best = Some(best.map_or(d, |m| m.min(d)));
            }
        }
        best
    }

    /// True if every pair is at least `2r - tolerance` apart.
    pub fn is_free(&self, tolerance: f64) -> bool {
        self.min_pairwise_distance()
            .is_none_or(|d| d >= self.world.contact_distance() - tolerance)
    }

    pub fn transformed(&self, angle: f64, offset: Vec2) -> Self {
        Self {
            robots: self.robots.iter().map(|r| r.transformed(angle, offset)).collect(),
            world: self.world,
        }
    }

    /// Largest per-robot pose change between two states of the same size.
    pub fn max_change(&self, other: &MRState) -> f64 {
        self.robots
            .iter()
            .zip(&other.robots)
            .map(|(a, b)| a.max_change(b))
            .fold(0.0, f64::max)
    }
}

/// Normalized wheel speeds for "nothing in sight" (mode A) and "robot in sight" (mode B).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BimodalController {
    pub v_l0: f64,
    pub v_r0: f64,
    pub v_l1: f64,
    pub v_r1: f64,
}

impl BimodalController {
    pub fn new(v_l0: f64, v_r0: f64, v_l1: f64, v_r1: f64) -> Result<Self, GeometryError> {
        Self::from_array([v_l0, v_r0, v_l1, v_r1])
    }

    pub fn from_array(values: [f64; 4]) -> Result<Self, GeometryError> {
        for (index, &value) in values.iter().enumerate() {
            if !(value.is_finite() && (-1.0..=1.0).contains(&value)) {
                return Err(GeometryError::CommandOutOfRange { index, value });
            }
        }
        let [v_l0, v_r0, v_l1, v_r1] = values;
        Ok(Self { v_l0, v_r0, v_l1, v_r1 })
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.v_l0, self.v_r0, self.v_l1, self.v_r1]
    }

    /// Controller found by exhaustive search in earlier work: backward arc / spin.
    pub fn u_prev() -> Self {
        Self { v_l0: -0.7, v_r0: -1.0, v_l1: 1.0, v_r1: -1.0 }
    }

    /// Tighter-arc revision of [`BimodalController::u_prev`].
    pub fn u_prev_revised() -> Self {
        Self { v_l0: -0.18, v_r0: -1.0, v_l1: 1.0, v_r1: -1.0 }
    }

    /// Spin on the spot until another robot is in sight, then drive straight at it.
    pub fn u_star(a: f64, b: f64) -> Result<Self, GeometryError> {
        Self::new(-a, a, b, b)
    }

    pub fn mode_a(&self) -> WheelCommand {
        WheelCommand::from_normalized(self.v_l0, self.v_r0)
    }

    pub fn mode_b(&self) -> WheelCommand {
        WheelCommand::from_normalized(self.v_l1, self.v_r1)
    }

    /// Command for a given sensor value.
    pub fn command(&self, robot_in_sight: bool) -> WheelCommand {
        if robot_in_sight {
            self.mode_b()
        } else {
            self.mode_a()
        }
    }
}

impl fmt::Display for BimodalController {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {})", self.v_l0, self.v_r0, self.v_l1, self.v_r1)
    }
}
