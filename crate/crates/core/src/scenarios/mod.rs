//! Initial-state generators: uniform sampling, the deadlock families used as
//! non-aggregation certificates, and the perturbed ring-with-center.

pub mod theorem2;

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{distance, BimodalController, GeometryError, MRState, RobotState, Vec2, WorldParams};
use crate::sensing::sense;
use crate::simulator::{self, RunOutcome, SimConfig, SimError};

pub use theorem2::{epsilon_star, gen_theorem2, Epsilons, Perturbation, Theorem2, Theorem2Params};

pub const MAX_PLACEMENT_ATTEMPTS: usize = 1_000_000;
pub const MAX_RING_REDRAWS: usize = 10_000;
/// Ring radii are inflated by this relative factor so neighbors touch without overlapping.
const RING_INFLATION: f64 = 1.0 + 1e-12;
/// Extra clearance (cm) between the center robot's orbit and the ring.
const AUTO_RING_MARGIN: f64 = 1.0;
/// How far past tangency (rad) near-miss headings are turned outward.
pub const NEAR_MISS_OFFSET: f64 = PI / 6.0 + 0.02;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("placement failed after {attempts} attempts")]
    PlacementFailed { attempts: usize },
    #[error("validation failed: {0}")]
    ValidationFailed(String),
    #[error("geometry infeasible: {0}")]
    GeometryInfeasible(String),
    #[error("turning radius {radius} must exceed {min}")]
    RadiusTooSmall { radius: f64, min: f64 },
    #[error("arccos argument {0} is outside [-1, 1]")]
    FormulaDomain(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub initial: MRState,
    pub controller: BimodalController,
    pub sim: SimConfig,
    pub label: String,
    pub seed: u64,
}

impl Scenario {
    pub fn new(
        initial: MRState,
        controller: BimodalController,
        sim: SimConfig,
        label: impl Into<String>,
        seed: u64,
    ) -> Result<Self, ScenarioError> {
        check_free(&initial, sim.contact.tolerance)?;
        Ok(Self { initial, controller, sim, label: label.into(), seed })
    }

    pub fn run(&self) -> Result<RunOutcome, SimError> {
        simulator::run(&self.initial, &self.controller, &self.sim)
    }
}

fn check_free(state: &MRState, tolerance: f64) -> Result<(), ScenarioError> {
    if state.is_free(tolerance) {
        Ok(())
    } else {
        Err(ScenarioError::ValidationFailed(format!(
            "robots overlap: minimum center distance {:.9} < {}",
            state.min_pairwise_distance().unwrap_or(f64::INFINITY),
            state.world.contact_distance()
        )))
    }
}

fn expect_readings(state: &MRState, indices: impl IntoIterator<Item = usize>, value: bool, what: &str) -> Result<(), ScenarioError> {
    for i in indices {
        if sense(state, i).value() != value {
            return Err(ScenarioError::ValidationFailed(format!(
                "robot {i} should read {} ({what})",
                u8::from(value)
            )));
        }
    }
    Ok(())
}

/// Uniform poses in a `side x side` square centered at the origin, conditioned on free space.
pub fn sample_uniform(n: usize, side: f64, seed: u64, world: &WorldParams) -> Result<MRState, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_uniform_with(&mut rng, n, side, world)
}

pub fn sample_uniform_with<R: Rng>(rng: &mut R, n: usize, side: f64, world: &WorldParams) -> Result<MRState, ScenarioError> {
    if n == 0 {
        return Err(GeometryError::NoRobots.into());
    }
    if !(side.is_finite() && side > 0.0) {
        return Err(ScenarioError::InvalidArgument(format!("side = {side}")));
    }
    let r = world.robot_radius;
    if n as f64 * PI * r * r > side * side {
        return Err(ScenarioError::PlacementFailed { attempts: 0 });
    }
    let half = side / 2.0;
    let min_d = world.contact_distance();
    let mut robots = Vec::with_capacity(n);
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        robots.clear();
        for _ in 0..n {
            let x = rng.gen_range(-half..half);
            let y = rng.gen_range(-half..half);
            let theta = rng.gen_range(-PI..PI);
            robots.push(RobotState::new(x, y, theta));
        }
        let free = (0..n).all(|i| (i + 1..n).all(|j| distance(&robots[i], &robots[j]) >= min_d));
        if free {
            return Ok(MRState::new(robots, *world)?);
        }
    }
    Err(ScenarioError::PlacementFailed { attempts: MAX_PLACEMENT_ATTEMPTS })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Facing {
    /// Back to back, each looking away from its partner.
    Away,
    /// Face to face.
    Toward,
}

/// Touching pairs spaced `spacing` apart along the x-axis.
///
/// `Away` pairs are vertical and look along ±y so no ray meets anything;
/// `Toward` pairs are horizontal and collinear so every ray meets a partner.
pub fn gen_deadlock_pairs(n_pairs: usize, facing: Facing, spacing: f64, world: &WorldParams) -> Result<MRState, ScenarioError> {
    if n_pairs == 0 {
        return Err(ScenarioError::InvalidArgument("n_pairs must be at least 1".into()));
    }
    let r = world.robot_radius;
    if n_pairs > 1 && spacing < 2.0 * world.contact_distance() {
        return Err(ScenarioError::InvalidArgument(format!("spacing {spacing} too small for separate pairs")));
    }
    let mut robots = Vec::with_capacity(2 * n_pairs);
    for k in 0..n_pairs {
        let x = k as f64 * spacing;
        match facing {
            Facing::Away => {
                robots.push(RobotState::new(x, r, PI / 2.0));
                robots.push(RobotState::new(x, -r, -PI / 2.0));
            }
            Facing::Toward => {
                robots.push(RobotState::new(x - r, 0.0, 0.0));
                robots.push(RobotState::new(x + r, 0.0, PI));
            }
        }
    }
    let state = MRState::new(robots, *world)?;
    let n = state.len();
    match facing {
        Facing::Away => expect_readings(&state, 0..n, false, "pairs facing away")?,
        Facing::Toward => expect_readings(&state, 0..n, true, "pairs facing each other")?,
    }
    Ok(state)
}

/// Robots at `x_i = i * spacing`; even indices face +x, odd ones -x, so every
/// robot looks at its partner and a straight-backward mode B drives pairs apart.
pub fn gen_collinear_backward(n_pairs: usize, spacing: f64, world: &WorldParams) -> Result<MRState, ScenarioError> {
    if n_pairs == 0 {
        return Err(ScenarioError::InvalidArgument("n_pairs must be at least 1".into()));
    }
    if spacing < world.contact_distance() {
        return Err(ScenarioError::GeometryInfeasible(format!(
            "spacing {spacing} is below the contact distance {}",
            world.contact_distance()
        )));
    }
    let robots = (0..2 * n_pairs)
        .map(|i| RobotState::new(i as f64 * spacing, 0.0, if i % 2 == 0 { 0.0 } else { PI }))
        .collect();
    let state = MRState::new(robots, *world)?;
    expect_readings(&state, 0..state.len(), true, "collinear facing robots")?;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingHeading {
    /// Looking radially outward.
    RadialOut,
    /// Looking at the center of the next robot counter-clockwise.
    SeeRightNeighbor,
}

/// Radius at which `n` robots on a circle touch their neighbors.
pub fn contact_ring_radius(n: usize, world: &WorldParams) -> f64 {
    world.robot_radius / (PI / n as f64).sin()
}

/// Smallest contact ring that keeps a center robot orbiting with radius `orbit_radius` unaggregated.
pub fn min_ring_size(orbit_radius: f64, world: &WorldParams) -> usize {
    let required = auto_ring_radius(orbit_radius, world);
    let mut n = 3;
    while contact_ring_radius(n, world) < required {
        n += 1;
    }
    n
}

fn auto_ring_radius(orbit_radius: f64, world: &WorldParams) -> f64 {
    2.0 * orbit_radius + world.contact_distance() + world.aggregation_distance() + AUTO_RING_MARGIN
}

/// Ring angle of robot `k` of `n`.
fn ring_angle(k: usize, n: usize) -> f64 {
    TAU * k as f64 / n as f64
}

fn ring_state(n_ring: usize, radius: f64, heading: impl Fn(f64) -> f64, world: &WorldParams) -> Result<MRState, ScenarioError> {
    let mut robots = vec![RobotState::new(0.0, 0.0, 0.0)];
    for k in 0..n_ring {
        let phi = ring_angle(k, n_ring);
        robots.push(RobotState::at(Vec2::from_angle(phi) * radius, heading(phi)));
    }
    Ok(MRState::new(robots, *world)?)
}

/// A touching ring of `n_ring` robots around a center robot (index 0, at the
/// origin, heading 0). With `mode_b_radius`, the ring must also be wide enough
/// that the center robot's orbit of that radius cannot reach it.
pub fn gen_ring_center(
    n_ring: usize,
    heading: RingHeading,
    mode_b_radius: Option<f64>,
    world: &WorldParams,
) -> Result<MRState, ScenarioError> {
    if n_ring < 3 {
        return Err(ScenarioError::InvalidArgument(format!("n_ring = {n_ring}, need at least 3")));
    }
    let radius = contact_ring_radius(n_ring, world) * RING_INFLATION;
    if radius < world.contact_distance() {
        return Err(ScenarioError::GeometryInfeasible(format!(
            "ring of {n_ring} has radius {radius:.4}, too small to hold a center robot"
        )));
    }
    if let Some(orbit) = mode_b_radius {
        let required = auto_ring_radius(orbit, world);
        if radius < required {
            return Err(ScenarioError::GeometryInfeasible(format!(
                "ring of {n_ring} has radius {radius:.4} < {required:.4}; need at least {} robots",
                min_ring_size(orbit, world)
            )));
        }
    }
    let state = match heading {
        RingHeading::RadialOut => ring_state(n_ring, radius, |phi| phi, world)?,
        RingHeading::SeeRightNeighbor => {
            ring_state(n_ring, radius, |phi| phi + PI / 2.0 + PI / n_ring as f64, world)?
        }
    };
    match heading {
        RingHeading::RadialOut => expect_readings(&state, 1..=n_ring, false, "radial ring")?,
        RingHeading::SeeRightNeighbor => expect_readings(&state, 1..=n_ring, true, "ring seeing neighbors")?,
    }
    expect_readings(&state, [0], true, "center robot enclosed by the ring")?;
    Ok(state)
}

/// Touching ring whose headings are turned outward just past the next robot,
/// so every ring sensor reads '0' while forward motion runs into that robot.
/// With `with_center` a robot is added at the origin (index 0).
pub fn gen_near_miss_ring(n_ring: usize, with_center: bool, world: &WorldParams) -> Result<MRState, ScenarioError> {
    near_miss_ring(n_ring, NEAR_MISS_OFFSET, with_center, world)
}

pub fn near_miss_ring(n_ring: usize, offset: f64, with_center: bool, world: &WorldParams) -> Result<MRState, ScenarioError> {
    if n_ring < 3 {
        return Err(ScenarioError::InvalidArgument(format!("n_ring = {n_ring}, need at least 3")));
    }
    let radius = contact_ring_radius(n_ring, world) * RING_INFLATION;
    if with_center && radius < world.contact_distance() {
        return Err(ScenarioError::GeometryInfeasible(format!(
            "ring of {n_ring} has radius {radius:.4}, too small to hold a center robot"
        )));
    }
    let step = PI / n_ring as f64;
    let mut state = ring_state(n_ring, radius, |phi| phi + PI / 2.0 + step - offset, world)?;
    if !with_center {
        state.robots.remove(0);
    }
    let first = usize::from(with_center);
    expect_readings(&state, first..state.len(), false, "near-miss ring")?;
    if with_center {
        expect_readings(&state, [0], true, "center robot enclosed by the ring")?;
    }
    Ok(state)
}

/// Ring-with-center pushed `r/2` outward, then every robot jittered by up to
/// `r/4` in x and y and `pi/32` in heading. Overlapping placements are redrawn.
pub fn gen_perturbed_ring(n_ring: usize, seed: u64, world: &WorldParams) -> Result<MRState, ScenarioError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perturbed_ring_with(n_ring, world, |bound| rng.gen_range(-bound..=bound))
}

/// Same as [`gen_perturbed_ring`] with the jitter supplied by `draw(bound)`.
pub fn perturbed_ring_with(
    n_ring: usize,
    world: &WorldParams,
    mut draw: impl FnMut(f64) -> f64,
) -> Result<MRState, ScenarioError> {
    if !(6..=11).contains(&n_ring) {
        return Err(ScenarioError::InvalidArgument(format!("n_ring = {n_ring}, expected 6..=11")));
    }
    let r = world.robot_radius;
    let radius = contact_ring_radius(n_ring, world) + r / 2.0;
    let base = ring_state(n_ring, radius, |phi| phi, world)?;
    let min_d = world.contact_distance();
    let (dxy, dtheta) = (r / 4.0, PI / 32.0);
    let mut placed: Vec<RobotState> = Vec::with_capacity(base.len());
    let mut redraws = 0;
    for home in &base.robots {
        loop {
            let candidate = RobotState::new(
                home.x() + draw(dxy),
                home.y() + draw(dxy),
                home.theta() + draw(dtheta),
            );
            if placed.iter().all(|p| distance(p, &candidate) >= min_d) {
                placed.push(candidate);
                break;
            }
            redraws += 1;
            if redraws >= MAX_RING_REDRAWS {
                return Err(ScenarioError::PlacementFailed { attempts: redraws });
            }
        }
    }
    Ok(MRState::new(placed, *world)?)
}

/// Named generator with parameters, as used by batch experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioFamily {
    Uniform { n: usize, side: f64 },
    PerturbedRing { n_ring: usize },
}

impl ScenarioFamily {
    /// Square used for the two-robot comparison runs.
    pub fn default_side() -> f64 {
        200.0 / 2f64.sqrt()
    }

    pub fn generate(&self, seed: u64, world: &WorldParams) -> Result<MRState, ScenarioError> {
        match *self {
            ScenarioFamily::Uniform { n, side } => sample_uniform(n, side, seed, world),
            ScenarioFamily::PerturbedRing { n_ring } => gen_perturbed_ring(n_ring, seed, world),
        }
    }
}
