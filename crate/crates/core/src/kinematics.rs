//! Closed-form motion of a differential-drive robot under constant wheel speeds.
//!
//! With constant `(v, omega)` the unicycle ODE has an exact solution: a straight
//! segment when `omega == 0`, otherwise an arc about the instantaneous center of
//! rotation (ICR). Integrating in closed form keeps deadlocked configurations
//! exactly stationary over arbitrarily long runs.

use crate::geometry::{GeometryError, RobotState, Vec2, WorldParams};

/// Wheel commands closer than this are treated as equal (straight motion).
pub const COMMAND_EQ_TOL: f64 = 1e-12;

/// Normalized left/right wheel speeds, each in `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WheelCommand {
    pub left: f64,
    pub right: f64,
}

impl WheelCommand {
    pub fn new(left: f64, right: f64) -> Result<Self, GeometryError> {
        for (index, value) in [left, right].into_iter().enumerate() {
            if !(value.is_finite() && (-1.0..=1.0).contains(&value)) {
                return Err(GeometryError::CommandOutOfRange { index, value });
            }
        }
        Ok(Self { left, right })
    }

    /// Builds a command from values the caller already knows to be in range.
    pub(crate) fn from_normalized(left: f64, right: f64) -> Self {
        debug_assert!((-1.0..=1.0).contains(&left) && (-1.0..=1.0).contains(&right));
        Self { left, right }
    }

    /// Adds per-wheel offsets and clamps the result back into `[-1, 1]`.
    pub fn offset_clamped(self, left: f64, right: f64) -> Self {
        Self {
            left: (self.left + left).clamp(-1.0, 1.0),
            right: (self.right + right).clamp(-1.0, 1.0),
        }
    }

    pub fn is_straight(&self) -> bool {
        (self.right - self.left).abs() <= COMMAND_EQ_TOL
    }

    pub fn is_spin(&self) -> bool {
        (self.left + self.right).abs() <= COMMAND_EQ_TOL
    }
}

/// Tangential speed (cm/s) and angular velocity (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BodyTwist {
    pub v: f64,
    pub omega: f64,
}

impl BodyTwist {
    pub const ZERO: BodyTwist = BodyTwist { v: 0.0, omega: 0.0 };

    pub fn is_zero(&self) -> bool {
        self.v == 0.0 && self.omega == 0.0
    }
}

/// Body twist produced by a wheel command; physical wheel speed is `v_max` times the command.
pub fn twist(cmd: WheelCommand, world: &WorldParams) -> BodyTwist {
    let v = if cmd.is_spin() {
        0.0
    } else {
        world.v_max * (cmd.left + cmd.right) / 2.0
    };
    let omega = if cmd.is_straight() {
        0.0
    } else {
        world.v_max * (cmd.right - cmd.left) / world.inter_wheel
    };
    BodyTwist { v, omega }
}

/// Turning radius of a constant command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IcrRadius {
    Finite(f64),
    /// Straight-line motion.
    Infinite,
    /// The robot does not move at all.
    Undefined,
}

impl IcrRadius {
    pub fn finite(self) -> Option<f64> {
        match self {
            IcrRadius::Finite(r) => Some(r),
            _ => None,
        }
    }
}

pub fn icr_radius(cmd: WheelCommand, world: &WorldParams) -> IcrRadius {
    match (cmd.is_spin(), cmd.is_straight()) {
        (true, true) => IcrRadius::Undefined,
        (true, false) => IcrRadius::Finite(0.0),
        (false, true) => IcrRadius::Infinite,
        (false, false) => IcrRadius::Finite(
            world.inter_wheel * (cmd.left + cmd.right).abs()
                / (2.0 * (cmd.right - cmd.left).abs()),
        ),
    }
}

/// Center of rotation: offset `v / omega` along the robot's left normal. `None` for straight motion
/// or standing still.
pub fn icr_center(state: &RobotState, cmd: WheelCommand, world: &WorldParams) -> Option<Vec2> {
    let tw = twist(cmd, world);
    if tw.omega == 0.0 {
        return None;
    }
    Some(state.position() + state.heading().perp() * (tw.v / tw.omega))
}

pub fn advance(state: &RobotState, cmd: WheelCommand, dt: f64, world: &WorldParams) -> RobotState {
    advance_twist(state, twist(cmd, world), dt)
}

/// Exact pose after `dt` seconds at constant twist.
///
/// Uses the chord form `v*dt*sinc(phi/2)` along `theta + phi/2`, which is the arc
/// solution rewritten so it stays accurate as `omega -> 0`.
pub fn advance_twist(state: &RobotState, tw: BodyTwist, dt: f64) -> RobotState {
    debug_assert!(dt >= 0.0);
    let phi = tw.omega * dt;
    let half = 0.5 * phi;
    let chord = tw.v * dt * sinc(half);
    let mid = state.theta() + half;
    let (s, c) = mid.sin_cos();
    RobotState::from_finite(state.x() + chord * c, state.y() + chord * s, state.theta() + phi)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        // Taylor series; error below 1e-20 in this range
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}
