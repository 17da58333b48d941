//! Fixed-step simulation loop with collision-aware substepping.
//!
//! Each step senses once at the step start, selects every robot's mode, and
//! moves all robots simultaneously on exact arcs. When a pair would overlap
//! within the step, the step is cut at the earliest contact time (bisection),
//! contacts are resolved and the remainder is integrated.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::is_aggregated;
use crate::contact::{detect_contacts, resolve_elastic, resolve_plastic, Contact, ContactConfig, ContactError};
use crate::geometry::{distance, BimodalController, GeometryError, MRState, RobotState, Vec2};
use crate::kinematics::{advance, advance_twist, twist, BodyTwist, WheelCommand};
use crate::sensing::sense;

/// Pose change below which the swarm counts as not moving.
pub const EPS_STATE: f64 = 1e-9;
/// Per-coordinate tolerance for recognizing a revisited state.
pub const EPS_CYCLE: f64 = 1e-6;
/// Cadence (s) at which states are stored for revisit detection.
pub const CYCLE_RECORD_INTERVAL: f64 = 0.5;
/// Grid cell size used to hash recorded states.
pub const CYCLE_QUANTUM: f64 = 1e-3;
pub const MAX_EVENTS_PER_STEP: usize = 32;
pub const BISECTION_ITERATIONS: usize = 60;
/// Bisection stops once the bracketing interval is this short (s).
const BISECTION_MIN_INTERVAL: f64 = 1e-12;
/// Overlap (cm) tolerated before a pair counts as penetrating.
const PENETRATION_SLOP: f64 = 1e-9;
const SEPARATION_PASSES: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("collision substepping hit the event cap on consecutive steps at t = {t}")]
    StepDiverged { t: f64 },
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Contact(#[from] ContactError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    #[default]
    None,
    Static,
}

/// Static wheel noise: one offset per robot and wheel, drawn once per run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    pub left: f64,
    pub right: f64,
    pub seed: u64,
}

impl NoiseConfig {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn fixed(left: f64, right: f64, seed: u64) -> Self {
        Self { mode: NoiseMode::Static, left, right, seed }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, m) in [("left", self.left), ("right", self.right)] {
            if !(m.is_finite() && m >= 0.0) {
                return Err(SimError::Config(format!("noise magnitude {name} = {m}")));
            }
        }
        Ok(())
    }

    /// Per-robot `(left, right)` wheel offsets, uniform in `[-m, m]`.
    pub fn offsets(&self, n: usize) -> Vec<(f64, f64)> {
        match self.mode {
            NoiseMode::None => vec![(0.0, 0.0); n],
            NoiseMode::Static => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut draw = |m: f64| if m > 0.0 { rng.gen_range(-m..=m) } else { 0.0 };
                (0..n).map(|_| (draw(self.left), draw(self.right))).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub time_budget: f64,
    pub contact: ContactConfig,
    pub noise: NoiseConfig,
    pub stationarity_window: f64,
    pub cycle_detection: bool,
    pub record_trajectory: bool,
    /// Sampling cadence (s) of the recorded trajectory.
    pub trajectory_interval: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            time_budget: 5e3,
            contact: ContactConfig::default(),
            noise: NoiseConfig::none(),
            stationarity_window: 10.0,
            cycle_detection: true,
            record_trajectory: false,
            trajectory_interval: 0.1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let positive = [
            ("dt", self.dt),
            ("stationarity_window", self.stationarity_window),
            ("trajectory_interval", self.trajectory_interval),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(SimError::Config(format!("{name} = {value}")));
            }
        }
        if !(self.time_budget.is_finite() && self.time_budget >= 0.0) {
            return Err(SimError::Config(format!("time_budget = {}", self.time_budget)));
        }
        self.contact.validate()?;
        self.noise.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Aggregated,
    Timeout,
    Stationary,
    Periodic,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Aggregated => "AGGREGATED",
            Verdict::Timeout => "TIMEOUT",
            Verdict::Stationary => "STATIONARY",
            Verdict::Periodic => "PERIODIC",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Verdict::Aggregated, Verdict::Timeout, Verdict::Stationary, Verdict::Periodic]
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| format!("unknown verdict `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub robots: Vec<RobotState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub t_end: f64,
    pub final_state: MRState,
    pub trajectory: Option<Vec<TrajectorySample>>,
    pub steps: u64,
}

/// How a robot moves during one substep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Motion {
    /// Constant twist along an exact arc (zero twist = standing still).
    Arc(BodyTwist),
    /// Sliding after an impulse exchange: straight translation, spin kept.
    Linear { velocity: Vec2, omega: f64 },
}

impl Motion {
    fn apply(&self, r: &RobotState, tau: f64) -> RobotState {
        match *self {
            Motion::Arc(tw) => advance_twist(r, tw, tau),
            Motion::Linear { velocity, omega } => {
                let p = r.position() + velocity * tau;
                RobotState::from_finite(p.x, p.y, r.theta() + omega * tau)
            }
        }
    }
}

/// What happened during one step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StepInfo {
    /// Sensor value of every robot at the step start.
    pub readings: Vec<bool>,
    /// Motions of the final substep.
    pub motions: Vec<Motion>,
    /// Contact events (cut points) inside the step.
    pub events: usize,
    /// The event cap was reached and the rest of the step dropped.
    pub capped: bool,
}

/// Robot pose after `t` seconds of `cmd`, ignoring every other robot.
pub fn simulate_unblocked(state: &RobotState, cmd: WheelCommand, t: f64, world: &crate::geometry::WorldParams) -> RobotState {
    advance(state, cmd, t, world)
}

fn commanded_twists(
    state: &MRState,
    u: &BimodalController,
    offsets: &[(f64, f64)],
    readings: &mut Vec<bool>,
) -> Vec<BodyTwist> {
    readings.clear();
    (0..state.len())
        .map(|i| {
            let seen = sense(state, i).value();
            readings.push(seen);
            let (dl, dr) = offsets[i];
            twist(u.command(seen).offset_clamped(dl, dr), &state.world)
        })
        .collect()
}

/// Resolves commanded twists against current contacts plus every pair that
/// touched earlier in the same step. Holding pairs for the whole step keeps a
/// stalled follower from re-colliding with its leader many times per step.
fn resolve_motions(
    state: &MRState,
    twists: &[BodyTwist],
    contact: &ContactConfig,
    held: &mut Vec<(usize, usize)>,
) -> Vec<Motion> {
    let mut contacts = detect_contacts(state, contact);
    for &(i, j) in held.iter() {
        if !contacts.pairs.iter().any(|c| (c.i, c.j) == (i, j)) {
            let delta = state.robots[j].position() - state.robots[i].position();
            let normal = delta.normalized().unwrap_or(Vec2::new(1.0, 0.0));
            contacts.pairs.push(Contact { i, j, normal });
        }
    }
    contacts.pairs.sort_by_key(|c| (c.i, c.j));
    held.clear();
    held.extend(contacts.pairs.iter().map(|c| (c.i, c.j)));
    if contacts.is_empty() {
        return twists.iter().map(|&tw| Motion::Arc(tw)).collect();
    }
    if contact.is_plastic() {
        return resolve_plastic(state, twists, &contacts).into_iter().map(Motion::Arc).collect();
    }
    let velocities: Vec<Vec2> =
        state.robots.iter().zip(twists).map(|(r, tw)| r.heading() * tw.v).collect();
    let resolved = resolve_elastic(&velocities, &contacts, contact.restitution);
    let involved = contacts.involved(state.len());
    twists
        .iter()
        .enumerate()
        .map(|(k, &tw)| {
            if involved[k] {
                Motion::Linear { velocity: resolved[k], omega: tw.omega }
            } else {
                Motion::Arc(tw)
            }
        })
        .collect()
}

fn propagate(state: &MRState, motions: &[Motion], tau: f64) -> MRState {
    MRState {
        robots: state.robots.iter().zip(motions).map(|(r, m)| m.apply(r, tau)).collect(),
        world: state.world,
    }
}

/// Earliest time in `(0, horizon]` at which some pair penetrates, as the last safe time.
fn earliest_penetration(start: &MRState, end: &MRState, motions: &[Motion], horizon: f64) -> Option<f64> {
    let contact = start.world.contact_distance();
    let n = start.len();
    let mut earliest: Option<f64> = None;
    for i in 0..n {
        for j in i + 1..n {
            let d0 = distance(&start.robots[i], &start.robots[j]);
            let limit = d0.min(contact) - PENETRATION_SLOP;
            if distance(&end.robots[i], &end.robots[j]) >= limit {
                continue;
            }
            let penetrates = |tau: f64| {
                let a = motions[i].apply(&start.robots[i], tau);
                let b = motions[j].apply(&start.robots[j], tau);
                distance(&a, &b) < limit
            };
            let (mut lo, mut hi) = (0.0, horizon);
            for _ in 0..BISECTION_ITERATIONS {
                if hi - lo <= BISECTION_MIN_INTERVAL {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if penetrates(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            earliest = Some(earliest.map_or(lo, |e: f64| e.min(lo)));
        }
    }
    earliest
}

/// Pushes overlapping pairs apart symmetrically to exact contact distance.
fn separate(state: &mut MRState) {
    let contact = state.world.contact_distance();
    let n = state.len();
    for _ in 0..SEPARATION_PASSES {
        let mut moved = false;
        for i in 0..n {
            for j in i + 1..n {
                let delta = state.robots[j].position() - state.robots[i].position();
                let d = delta.norm();
                if d >= contact {
                    continue;
                }
                let normal = delta.normalized().unwrap_or(Vec2::new(1.0, 0.0));
                let shift = normal * (0.5 * (contact - d));
                let (a, b) = (state.robots[i], state.robots[j]);
                state.robots[i] = RobotState::from_finite(a.x() - shift.x, a.y() - shift.y, a.theta());
                state.robots[j] = RobotState::from_finite(b.x() + shift.x, b.y() + shift.y, b.theta());
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Advances the swarm by one step of `cfg.dt`.
pub fn step(
    state: &MRState,
    u: &BimodalController,
    cfg: &SimConfig,
    offsets: &[(f64, f64)],
) -> (MRState, StepInfo) {
    let mut info = StepInfo::default();
    let twists = commanded_twists(state, u, offsets, &mut info.readings);
    let mut cur = state.clone();
    let mut remaining = cfg.dt;
    let mut held = Vec::new();
    loop {
        let motions = resolve_motions(&cur, &twists, &cfg.contact, &mut held);
        let next = propagate(&cur, &motions, remaining);
        match earliest_penetration(&cur, &next, &motions, remaining) {
            None => {
                cur = next;
                info.motions = motions;
                break;
            }
            Some(_) if info.events == MAX_EVENTS_PER_STEP => {
                info.capped = true;
                info.motions = motions;
                break;
            }
            Some(tau) => {
                cur = propagate(&cur, &motions, tau);
                remaining -= tau;
                info.events += 1;
                if remaining <= 0.0 {
                    info.motions = motions;
                    break;
                }
            }
        }
    }
    separate(&mut cur);
    (cur, info)
}

/// Per-robot motion fingerprint used to spot rigid periodic orbits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Signature {
    Still,
    Arc { v: u64, omega: u64 },
}

fn orbit_signature(info: &StepInfo) -> Option<(Vec<Signature>, f64)> {
    if info.events > 0 || info.capped {
        return None;
    }
    let mut sigs = Vec::with_capacity(info.motions.len());
    let mut rate: Option<f64> = None;
    for m in &info.motions {
        match *m {
            Motion::Linear { .. } => return None,
            Motion::Arc(tw) if tw.is_zero() => sigs.push(Signature::Still),
            Motion::Arc(tw) => {
                if tw.omega == 0.0 {
                    return None;
                }
                let w = tw.omega.abs();
                if rate.is_some_and(|r| r != w) {
                    return None;
                }
                rate = Some(w);
                sigs.push(Signature::Arc { v: tw.v.to_bits(), omega: tw.omega.to_bits() });
            }
        }
    }
    rate.map(|w| (sigs, std::f64::consts::TAU / w))
}

fn quantize(state: &MRState) -> Vec<i64> {
    state
        .robots
        .iter()
        .flat_map(|r| [r.x(), r.y(), r.theta()])
        .map(|c| (c / CYCLE_QUANTUM).round() as i64)
        .collect()
}

/// Stepwise simulation of one scenario with termination bookkeeping.
pub struct Simulator {
    state: MRState,
    controller: BimodalController,
    cfg: SimConfig,
    offsets: Vec<(f64, f64)>,
    steps: u64,
    capped_streak: u32,
    last: StepInfo,
}

impl Simulator {
    pub fn new(initial: MRState, controller: BimodalController, cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        initial.world.validate()?;
        let offsets = cfg.noise.offsets(initial.len());
        Ok(Self { state: initial, controller, cfg, offsets, steps: 0, capped_streak: 0, last: StepInfo::default() })
    }

    pub fn state(&self) -> &MRState {
        &self.state
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.cfg.dt
    }

    pub fn offsets(&self) -> &[(f64, f64)] {
        &self.offsets
    }

    pub fn last_step(&self) -> &StepInfo {
        &self.last
    }

    pub fn step(&mut self) -> Result<&StepInfo, SimError> {
        let (next, info) = step(&self.state, &self.controller, &self.cfg, &self.offsets);
        self.capped_streak = if info.capped { self.capped_streak + 1 } else { 0 };
        let diverged = self.capped_streak >= 2;
        let before = std::mem::replace(&mut self.state, next);
        self.steps += 1;
        self.last = info;
        if diverged && self.state.max_change(&before) >= EPS_STATE {
            return Err(SimError::StepDiverged { t: self.time() });
        }
        Ok(&self.last)
    }

    /// Steps until a verdict is reached.
    pub fn run(mut self) -> Result<RunOutcome, SimError> {
        let cfg = self.cfg;
        let mut trajectory = cfg.record_trajectory.then(Vec::new);
        let sample_every = ((cfg.trajectory_interval / cfg.dt).round() as u64).max(1);
        let record_every = ((CYCLE_RECORD_INTERVAL / cfg.dt).round() as u64).max(1);
        let mut history: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
        let mut records: Vec<(f64, MRState)> = Vec::new();

        let mut anchor = self.state.clone();
        let mut anchor_t = 0.0;
        let mut orbit: Option<(Vec<Signature>, f64, f64)> = None;

        let finish = |sim: Simulator, verdict, trajectory: Option<Vec<TrajectorySample>>| {
            let t_end = sim.time();
            let mut trajectory = trajectory;
            if let Some(tr) = trajectory.as_mut() {
                if tr.last().is_none_or(|s| s.t < t_end) {
                    tr.push(TrajectorySample { t: t_end, robots: sim.state.robots.clone() });
                }
            }
            Ok(RunOutcome { verdict, t_end, final_state: sim.state, trajectory, steps: sim.steps })
        };

        if let Some(tr) = trajectory.as_mut() {
            tr.push(TrajectorySample { t: 0.0, robots: self.state.robots.clone() });
        }
        if is_aggregated(&self.state) {
            return finish(self, Verdict::Aggregated, trajectory);
        }
        loop {
            let stalled_out = match self.step() {
                Ok(_) => false,
                Err(SimError::StepDiverged { .. }) => true,
                Err(e) => return Err(e),
            };
            let t = self.time();
            if let Some(tr) = trajectory.as_mut() {
                if self.steps.is_multiple_of(sample_every) {
                    tr.push(TrajectorySample { t, robots: self.state.robots.clone() });
                }
            }
            if is_aggregated(&self.state) {
                return finish(self, Verdict::Aggregated, trajectory);
            }
            if stalled_out {
                if self.state.max_change(&anchor) < EPS_STATE {
                    return finish(self, Verdict::Stationary, trajectory);
                }
                return Err(SimError::StepDiverged { t });
            }

            if self.state.max_change(&anchor) >= EPS_STATE {
                anchor = self.state.clone();
                anchor_t = t;
            } else if t - anchor_t >= cfg.stationarity_window - 0.5 * cfg.dt {
                return finish(self, Verdict::Stationary, trajectory);
            }

            if cfg.cycle_detection {
                match (orbit_signature(&self.last), orbit.as_mut()) {
                    (Some((sig, period)), Some((cur, _, since))) if *cur == sig => {
                        if t - *since >= period + 2.0 * cfg.dt {
                            return finish(self, Verdict::Periodic, trajectory);
                        }
                    }
                    (Some((sig, period)), _) => orbit = Some((sig, period, t - cfg.dt)),
                    (None, _) => orbit = None,
                }

                if self.steps.is_multiple_of(record_every) {
                    let key = quantize(&self.state);
                    let revisit = history.get(&key).is_some_and(|idx| {
                        idx.iter().any(|&k| {
                            let (rt, ref rs) = records[k];
                            // an unmoved state is left to the stationarity test
                            rt < anchor_t && rs.max_change(&self.state) <= EPS_CYCLE
                        })
                    });
                    if revisit {
                        return finish(self, Verdict::Periodic, trajectory);
                    }
                    history.entry(key).or_default().push(records.len());
                    records.push((t, self.state.clone()));
                }
            }

            if t > cfg.time_budget {
                return finish(self, Verdict::Timeout, trajectory);
            }
        }
    }
}

/// Runs one scenario to completion.
pub fn run(initial: &MRState, controller: &BimodalController, cfg: &SimConfig) -> Result<RunOutcome, SimError> {
    Simulator::new(initial.clone(), *controller, *cfg)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WorldParams;
    use std::f64::consts::PI;

    fn world() -> WorldParams {
        WorldParams::default()
    }

    fn state(robots: Vec<RobotState>) -> MRState {
        MRState::new(robots, world()).unwrap()
    }

    #[test]
    fn facing_pair_under_u_star_moves_straight() {
        let u = BimodalController::u_star(0.5, 0.8).unwrap();
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(50.0, 0.0, PI)]);
        let cfg = SimConfig::default();
        let (next, info) = step(&s, &u, &cfg, &[(0.0, 0.0); 2]);
        assert_eq!(info.readings, vec![true, true]);
        let d = 12.8 * 0.8 * cfg.dt;
        assert!((next.robot(0).x() - d).abs() < 1e-12);
        assert!((next.robot(1).x() - (50.0 - d)).abs() < 1e-12);
    }

    #[test]
    fn lone_robot_follows_mode_a() {
        let u = BimodalController::u_prev();
        let s = state(vec![RobotState::new(1.0, 2.0, 0.3)]);
        let cfg = SimConfig::default();
        let (next, info) = step(&s, &u, &cfg, &[(0.0, 0.0)]);
        assert_eq!(info.readings, vec![false]);
        assert_eq!(next.robot(0), &advance(s.robot(0), u.mode_a(), cfg.dt, &s.world));
    }

    #[test]
    fn back_to_back_pair_stays_put() {
        let u = BimodalController::u_prev();
        let s = state(vec![RobotState::new(0.0, 3.7, PI / 2.0), RobotState::new(0.0, -3.7, -PI / 2.0)]);
        let (next, info) = step(&s, &u, &SimConfig::default(), &[(0.0, 0.0); 2]);
        assert_eq!(info.readings, vec![false, false]);
        assert!(next.max_change(&s) < 1e-12);
    }

    #[test]
    fn head_on_collision_stops_at_contact() {
        let u = BimodalController::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let gap = 7.4 + 0.05;
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(gap, 0.0, PI)]);
        let (next, info) = step(&s, &u, &SimConfig::default(), &[(0.0, 0.0); 2]);
        assert_eq!(info.events, 1);
        let d = distance(next.robot(0), next.robot(1));
        assert!((d - 7.4).abs() < 1e-6, "distance {d}");
    }

    #[test]
    fn elastic_head_on_bounces() {
        let u = BimodalController::new(1.0, 1.0, 1.0, 1.0).unwrap();
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(7.4, 0.0, PI)]);
        let cfg = SimConfig { contact: ContactConfig::new(0.5, 1e-6).unwrap(), ..SimConfig::default() };
        let (next, _) = step(&s, &u, &cfg, &[(0.0, 0.0); 2]);
        assert!(distance(next.robot(0), next.robot(1)) > 7.4);
    }

    #[test]
    fn already_aggregated_at_start() {
        let u = BimodalController::u_prev();
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(7.5, 0.0, 0.0)]);
        let out = run(&s, &u, &SimConfig::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Aggregated);
        assert_eq!(out.t_end, 0.0);
    }

    #[test]
    fn facing_away_backwards_times_out() {
        // collinear facing pair under a straight-backward mode B
        let u = BimodalController::new(0.5, 0.5, -0.2, -0.2).unwrap();
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(20.0, 0.0, PI)]);
        let cfg = SimConfig { time_budget: 30.0, ..SimConfig::default() };
        let out = run(&s, &u, &cfg).unwrap();
        assert_eq!(out.verdict, Verdict::Timeout);
        assert!(distance(out.final_state.robot(0), out.final_state.robot(1)) > 20.0);
    }

    #[test]
    fn deadlock_pairs_are_stationary() {
        let u = BimodalController::u_prev();
        let s = state(vec![
            RobotState::new(0.0, 3.7, PI / 2.0),
            RobotState::new(0.0, -3.7, -PI / 2.0),
            RobotState::new(60.0, 3.7, PI / 2.0),
            RobotState::new(60.0, -3.7, -PI / 2.0),
        ]);
        let out = run(&s, &u, &SimConfig::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Stationary);
        assert!(out.t_end >= 10.0 && out.t_end < 10.1);
    }

    #[test]
    fn separated_orbits_are_periodic() {
        // same backward arc in both modes, so sensing never changes the motion
        let u = BimodalController::new(-0.7, -1.0, -0.7, -1.0).unwrap();
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(200.0, 0.0, 0.0)]);
        let out = run(&s, &u, &SimConfig::default()).unwrap();
        assert_eq!(out.verdict, Verdict::Periodic);
    }

    #[test]
    fn noise_offsets_are_seeded_and_bounded() {
        let noise = NoiseConfig::fixed(0.02, 0.01, 7);
        let a = noise.offsets(10);
        assert_eq!(a, noise.offsets(10));
        assert!(a.iter().all(|&(l, r)| l.abs() <= 0.02 && r.abs() <= 0.01));
        assert_ne!(a, NoiseConfig::fixed(0.02, 0.01, 8).offsets(10));
        assert_eq!(NoiseConfig::none().offsets(3), vec![(0.0, 0.0); 3]);
    }

    #[test]
    fn unblocked_zero_time_is_identity() {
        let r = RobotState::new(1.0, 1.0, 1.0);
        let cmd = WheelCommand::new(0.2, -0.4).unwrap();
        assert_eq!(simulate_unblocked(&r, cmd, 0.0, &world()), r);
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { dt: 0.0, ..SimConfig::default() }.validate().is_err());
        assert!(SimConfig { noise: NoiseConfig::fixed(-1.0, 0.0, 0), ..SimConfig::default() }
            .validate()
            .is_err());
    }

    #[test]
    fn trajectory_is_sampled() {
        let u = BimodalController::u_prev();
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(300.0, 0.0, 0.0)]);
        let cfg = SimConfig { time_budget: 1.0, cycle_detection: false, record_trajectory: true, ..SimConfig::default() };
        let out = run(&s, &u, &cfg).unwrap();
        let tr = out.trajectory.unwrap();
        assert_eq!(tr[0].t, 0.0);
        assert!(tr.len() >= 11);
        assert_eq!(tr.last().unwrap().robots, out.final_state.robots);
    }
}
