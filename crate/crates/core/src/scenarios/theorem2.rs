//! Perturbation-robust pairwise deadlocks for controllers that reverse on a
//! circle when nothing is in sight.
//!
//! Each pair starts an eighth of a circle before a head-on meeting point, so
//! the two robots back into each other before either can see anything but
//! empty plane. Poses are jittered inside the bound `eps*` and pairs are
//! spread along the diagonal far enough apart never to see one another.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ScenarioError;
use crate::geometry::{angle_diff, distance, MRState, RobotState, Vec2, WorldParams};
use crate::kinematics::{advance, icr_radius, twist, WheelCommand};
use crate::sensing::visibility_region_check;
use crate::taxonomy::{classify, MovementClass};

/// Samples per robot trajectory used by the swept visibility checks.
pub const SWEEP_SAMPLES: usize = 160;
const MAX_SHIFT_DOUBLINGS: usize = 16;
const ANGLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epsilons {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

/// Smallest admissible turning radius, `r / (2 - sqrt 2)`.
pub fn min_radius(world: &WorldParams) -> f64 {
    world.robot_radius / (2.0 - SQRT_2)
}

/// Maximal perturbation under which the construction still deadlocks.
pub fn epsilon_star(radius: f64, world: &WorldParams) -> Result<Epsilons, ScenarioError> {
    let r = world.robot_radius;
    let min = min_radius(world);
    // negated so NaN is rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(radius > min) {
        return Err(ScenarioError::RadiusTooSmall { radius, min });
    }
    let arg = 1.0 - (64.0 * r * r - r * r) / (64.0 * radius * radius * (2.0 - SQRT_2));
    if !(-1.0..=1.0).contains(&arg) {
        return Err(ScenarioError::FormulaDomain(arg));
    }
    Ok(Epsilons { x: r / 8.0, y: r / 8.0, theta: (PI / 8.0).min(arg.acos()) })
}

/// Backward-circling command `(-a, -1)` whose turning radius is `radius`.
pub fn cb_command_with_radius(radius: f64, world: &WorldParams) -> Result<WheelCommand, ScenarioError> {
    let d = world.inter_wheel;
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(radius > d / 2.0) {
        return Err(ScenarioError::InvalidArgument(format!(
            "radius {radius} needs an inner wheel speed of the opposite sign"
        )));
    }
    let a = (2.0 * radius - d) / (2.0 * radius + d);
    Ok(WheelCommand::new(-a, -1.0)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    /// Independent uniform draws from the open box `eps*`.
    Random(u64),
    /// No perturbation at all.
    Zero,
    /// Per-robot `(x, y, theta)` as fractions of `eps*` in `[-1, 1]`.
    Fixed(Vec<[f64; 3]>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Params {
    /// Even number of robots.
    pub n: usize,
    /// Command used when nothing is in sight; must circle backwards.
    pub mode_a: WheelCommand,
    /// Diagonal offset between consecutive pairs; chosen automatically if `None`.
    pub shift: Option<f64>,
    pub perturbation: Perturbation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Report {
    /// Largest in-pair distance at the meeting time, ignoring collisions. Must be below `2r`.
    pub max_meeting_distance: f64,
    /// Largest distance of any robot from its pair origin at the meeting time.
    pub max_meeting_offset: f64,
    /// Whether every robot ends within `r/2` of its pair origin.
    pub within_half_radius: bool,
    /// Every robot stays in its allotted visibility wedge.
    pub wedges_ok: bool,
    /// Sampled (robot, robot) sightings across different pairs.
    pub cross_pair_sightings: usize,
    /// Sampled sightings of a robot's own partner before the meeting.
    pub partner_sightings: usize,
}

impl Theorem2Report {
    pub fn collision_ok(&self, world: &WorldParams) -> bool {
        self.max_meeting_distance < world.contact_distance()
    }

    pub fn visibility_ok(&self) -> bool {
        self.wedges_ok && self.cross_pair_sightings == 0 && self.partner_sightings == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2 {
    pub state: MRState,
    pub radius: f64,
    pub epsilons: Epsilons,
    /// Time at which unperturbed pairs would meet, ignoring collisions.
    pub meeting_time: f64,
    pub shift: f64,
    /// The command turns counter-clockwise, so the construction is reflected.
    pub mirrored: bool,
    pub report: Theorem2Report,
}

/// Unperturbed pair in the clockwise frame: robot A upper left, B its point reflection.
fn canonical_pair(radius: f64) -> [RobotState; 2] {
    let x = -radius * (1.0 - FRAC_1_SQRT_2);
    let y = radius * FRAC_1_SQRT_2;
    [RobotState::new(x, y, 3.0 * PI / 4.0), RobotState::new(-x, -y, -PI / 4.0)]
}

fn reflect(s: &RobotState) -> RobotState {
    RobotState::new(s.x(), -s.y(), -s.theta())
}

/// `y >= max(tan(7pi/8)(x + 2r), tan(3pi/8)(x - r))` for A; B's wedge is its point reflection.
fn in_wedge(p: Vec2, heading: f64, upper: bool, r: f64) -> bool {
    let (p, heading) = if upper { (p, heading) } else { (-p, heading + PI) };
    let bound = ((7.0 * PI / 8.0).tan() * (p.x + 2.0 * r)).max((3.0 * PI / 8.0).tan() * (p.x - r));
    let rel = angle_diff(heading, 5.0 * PI / 8.0);
    p.y >= bound - ANGLE_TOL && rel.abs() <= PI / 4.0 + ANGLE_TOL
}

pub fn gen_theorem2(params: &Theorem2Params, world: &WorldParams) -> Result<Theorem2, ScenarioError> {
    let n = params.n;
    if n < 2 || !n.is_multiple_of(2) {
        return Err(ScenarioError::InvalidArgument(format!("n = {n} must be even and at least 2")));
    }
    if classify(params.mode_a) != MovementClass::CB {
        return Err(ScenarioError::InvalidArgument("mode A must circle backwards".into()));
    }
    let radius = icr_radius(params.mode_a, world)
        .finite()
        .ok_or_else(|| ScenarioError::InvalidArgument("mode A has no finite turning radius".into()))?;
    let eps = epsilon_star(radius, world)?;
    let tw = twist(params.mode_a, world);
    let mirrored = tw.omega > 0.0;
    // clockwise twin of the command, used in the canonical frame
    let canonical_cmd = if mirrored {
        WheelCommand::new(params.mode_a.right, params.mode_a.left)?
    } else {
        params.mode_a
    };
    let meeting_time = PI / 4.0 * radius / tw.v.abs();

    let draws = perturbation_fractions(&params.perturbation, n)?;
    let local: Vec<RobotState> = (0..n)
        .map(|i| {
            let base = canonical_pair(radius)[i % 2];
            let [fx, fy, ft] = draws[i];
            RobotState::new(base.x() + fx * eps.x, base.y() + fy * eps.y, base.theta() + ft * eps.theta)
        })
        .collect();

    let r = world.robot_radius;
    let trajectories: Vec<Vec<RobotState>> = local
        .iter()
        .map(|s| {
            (0..=SWEEP_SAMPLES)
                .map(|k| advance(s, canonical_cmd, meeting_time * k as f64 / SWEEP_SAMPLES as f64, world))
                .collect()
        })
        .collect();

    let mut max_meeting_distance: f64 = 0.0;
    let mut max_meeting_offset: f64 = 0.0;
    let mut wedges_ok = true;
    let mut partner_sightings = 0;
    for pair in 0..n / 2 {
        let (ta, tb) = (&trajectories[2 * pair], &trajectories[2 * pair + 1]);
        let (ea, eb) = (ta[SWEEP_SAMPLES], tb[SWEEP_SAMPLES]);
        max_meeting_distance = max_meeting_distance.max(distance(&ea, &eb));
        max_meeting_offset = max_meeting_offset.max(ea.position().norm()).max(eb.position().norm());
        for (a, b) in ta.iter().zip(tb) {
            wedges_ok &= in_wedge(a.position(), a.theta(), true, r);
            wedges_ok &= in_wedge(b.position(), b.theta(), false, r);
            // once the pair overlaps it has already collided
            if distance(a, b) >= world.contact_distance() {
                partner_sightings += usize::from(visibility_region_check(a, b.position(), world));
                partner_sightings += usize::from(visibility_region_check(b, a.position(), world));
            }
        }
    }

    let place = |shift: f64| -> Vec<Vec<RobotState>> {
        trajectories
            .iter()
            .enumerate()
            .map(|(i, traj)| {
                let offset = Vec2::new(1.0, 1.0) * ((i / 2) as f64 * shift);
                traj.iter()
                    .map(|s| {
                        let s = s.transformed(eps.theta, Vec2::ZERO);
                        let s = if mirrored { reflect(&s) } else { s };
                        RobotState::new(s.x() + offset.x, s.y() + offset.y, s.theta())
                    })
                    .collect()
            })
            .collect()
    };

    let (shift, global) = match params.shift {
        Some(shift) => (shift, place(shift)),
        None => {
            let mut shift = 10.0 * radius;
            let mut global = place(shift);
            for _ in 0..MAX_SHIFT_DOUBLINGS {
                if cross_pair_sightings(&global, world) == 0 {
                    break;
                }
                shift *= 2.0;
                global = place(shift);
            }
            (shift, global)
        }
    };
    let report = Theorem2Report {
        max_meeting_distance,
        max_meeting_offset,
        within_half_radius: max_meeting_offset <= r / 2.0,
        wedges_ok,
        cross_pair_sightings: cross_pair_sightings(&global, world),
        partner_sightings,
    };

    if !report.collision_ok(world) {
        return Err(ScenarioError::ValidationFailed(format!(
            "(a) a pair is still {:.6} apart at the meeting time",
            report.max_meeting_distance
        )));
    }
    if !report.visibility_ok() {
        return Err(ScenarioError::ValidationFailed(format!(
            "(b) visibility: wedges ok = {}, cross-pair sightings = {}, partner sightings = {}",
            report.wedges_ok, report.cross_pair_sightings, report.partner_sightings
        )));
    }
    let state = MRState::new(global.iter().map(|t| t[0]).collect(), *world)?;
    if !state.is_free(0.0) {
        return Err(ScenarioError::ValidationFailed("initial robots overlap".into()));
    }
    Ok(Theorem2 { state, radius, epsilons: eps, meeting_time, shift, mirrored, report })
}

fn perturbation_fractions(p: &Perturbation, n: usize) -> Result<Vec<[f64; 3]>, ScenarioError> {
    match p {
        Perturbation::Zero => Ok(vec![[0.0; 3]; n]),
        Perturbation::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok((0..n)
                .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
                .collect())
        }
        Perturbation::Fixed(v) => {
            if v.len() != n {
                return Err(ScenarioError::InvalidArgument(format!("{} perturbations for {n} robots", v.len())));
            }
            if v.iter().flatten().any(|f| !(-1.0..=1.0).contains(f)) {
                return Err(ScenarioError::InvalidArgument("perturbation fractions must lie in [-1, 1]".into()));
            }
            Ok(v.clone())
        }
    }
}

/// Sampled sightings of a robot in another pair, over all pairs of sample times.
fn cross_pair_sightings(trajectories: &[Vec<RobotState>], world: &WorldParams) -> usize {
    let mut count = 0;
    for (i, ti) in trajectories.iter().enumerate() {
        for (j, tj) in trajectories.iter().enumerate() {
            if i / 2 == j / 2 {
                continue;
            }
            for a in ti {
                count += tj.iter().filter(|b| visibility_region_check(a, b.position(), world)).count();
            }
        }
    }
    count
}
