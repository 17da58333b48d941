//! Contact detection and velocity resolution between touching discs.
//!
//! Two laws are provided. The plastic law (restitution 0) models robots that
//! cannot push one another: a robot whose wheels drive it into a partner is held
//! in place, wheels and all. The slippage law (restitution > 0) exchanges
//! equal-mass normal impulses so part of the approach momentum is conserved.

use thiserror::Error;

use crate::geometry::{MRState, Vec2};
use crate::kinematics::BodyTwist;

/// Normal speeds (cm/s) at or below this are treated as zero.
pub const NORMAL_SPEED_TOL: f64 = 1e-12;

/// Bound on inelastic sweeps once the restitution impulse budget is spent.
const INELASTIC_SWEEPS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContactError {
    #[error("restitution {0} is outside [0, 1]")]
    Restitution(f64),
    #[error("contact tolerance {0} must be positive")]
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactConfig {
    /// Fraction of approach momentum conserved: 0 plastic, 1 elastic.
    pub restitution: f64,
    /// Extra center distance (cm) beyond `2r` at which discs count as touching.
    pub tolerance: f64,
}

impl Default for ContactConfig {
    fn default() -> Self {
        Self { restitution: 0.0, tolerance: 1e-6 }
    }
}

impl ContactConfig {
    pub fn new(restitution: f64, tolerance: f64) -> Result<Self, ContactError> {
        let cfg = Self { restitution, tolerance };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ContactError> {
        if !(0.0..=1.0).contains(&self.restitution) {
            return Err(ContactError::Restitution(self.restitution));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(ContactError::Tolerance(self.tolerance));
        }
        Ok(())
    }

    pub fn is_plastic(&self) -> bool {
        self.restitution == 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub i: usize,
    pub j: usize,
    /// Unit vector from robot `i` toward robot `j`.
    pub normal: Vec2,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContactSet {
    pub pairs: Vec<Contact>,
}

impl ContactSet {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// Which robots take part in at least one contact.
    pub fn involved(&self, n: usize) -> Vec<bool> {
        let mut flags = vec![false; n];
        for c in &self.pairs {
            flags[c.i] = true;
            flags[c.j] = true;
        }
        flags
    }
}

/// All pairs with `i < j` whose centers are within `2r + tolerance`.
pub fn detect_contacts(state: &MRState, cfg: &ContactConfig) -> ContactSet {
    let threshold = state.world.contact_distance() + cfg.tolerance;
    let mut pairs = Vec::new();
    for (i, a) in state.robots.iter().enumerate() {
        for (j, b) in state.robots.iter().enumerate().skip(i + 1) {
            let delta = b.position() - a.position();
            let d = delta.norm();
            if d <= threshold {
                // coincident centers get an arbitrary but fixed normal
                let normal = delta.normalized().unwrap_or(Vec2::new(1.0, 0.0));
                pairs.push(Contact { i, j, normal });
            }
        }
    }
    ContactSet { pairs }
}

/// Rate at which a robot driven by `tw` closes in on a partner in direction `n`.
fn push_rate(heading: Vec2, tw: BodyTwist, n: Vec2) -> f64 {
    tw.v * heading.dot(n)
}

/// Moving tangentially to the contact but curving toward the partner.
fn curves_into(heading: Vec2, tw: BodyTwist, n: Vec2) -> bool {
    tw.v != 0.0 && tw.v * tw.omega * heading.perp().dot(n) > 0.0
}

fn pushes(heading: Vec2, tw: BodyTwist, n: Vec2) -> bool {
    let rate = push_rate(heading, tw, n);
    rate > NORMAL_SPEED_TOL || (rate.abs() <= NORMAL_SPEED_TOL && curves_into(heading, tw, n))
}

/// Plastic resolution: a robot whose own commanded motion drives it into any
/// touching partner is stopped entirely (no slip, so the arc cannot be
/// followed), whatever the partner does. Spinning on the spot is never blocked.
/// Blocking depends only on a robot's own command, so one pass reaches the fixed point.
pub fn resolve_plastic(state: &MRState, twists: &[BodyTwist], contacts: &ContactSet) -> Vec<BodyTwist> {
    let mut out = twists.to_vec();
    for c in &contacts.pairs {
        for (k, n) in [(c.i, c.normal), (c.j, -c.normal)] {
            if !out[k].is_zero() && pushes(state.robots[k].heading(), twists[k], n) {
                out[k] = BodyTwist::ZERO;
            }
        }
    }
    out
}

/// Equal-mass normal impulses with restitution `e`, applied pair by pair in
/// index order until nothing approaches. After `10 * |pairs|` impulses the
/// remaining approach is removed by inelastic sweeps.
pub fn resolve_elastic(velocities: &[Vec2], contacts: &ContactSet, e: f64) -> Vec<Vec2> {
    let mut u = velocities.to_vec();
    let cap = 10 * contacts.len();
    let mut applied = 0;
    'sweeps: loop {
        let mut any = false;
        for c in &contacts.pairs {
            let s = (u[c.i] - u[c.j]).dot(c.normal);
            if s > NORMAL_SPEED_TOL {
                if applied == cap {
                    break 'sweeps;
                }
                let impulse = c.normal * (0.5 * (1.0 + e) * s);
                u[c.i] -= impulse;
                u[c.j] += impulse;
                applied += 1;
                any = true;
            }
        }
        if !any {
            return u;
        }
    }
    for _ in 0..INELASTIC_SWEEPS {
        let mut any = false;
        for c in &contacts.pairs {
            let s = (u[c.i] - u[c.j]).dot(c.normal);
            if s > 0.0 {
                let impulse = c.normal * (0.5 * s);
                u[c.i] -= impulse;
                u[c.j] += impulse;
                any |= s > NORMAL_SPEED_TOL;
            }
        }
        if !any {
            break;
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RobotState, WorldParams};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn state(robots: Vec<RobotState>) -> MRState {
        MRState::new(robots, WorldParams::default()).unwrap()
    }

    fn tw(v: f64, omega: f64) -> BodyTwist {
        BodyTwist { v, omega }
    }

    #[test]
    fn detect_examples() {
        let cfg = ContactConfig::default();
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(7.4, 0.0, 0.0)]);
        let set = detect_contacts(&s, &cfg);
        assert_eq!(set.len(), 1);
        assert!((set.pairs[0].normal - Vec2::new(1.0, 0.0)).norm() < 1e-15);

        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(8.4, 0.0, 0.0)]);
        assert!(detect_contacts(&s, &cfg).is_empty());

        let h = 7.4 * (3.0f64).sqrt() / 2.0;
        let s = state(vec![
            RobotState::new(0.0, 0.0, 0.0),
            RobotState::new(7.4, 0.0, 0.0),
            RobotState::new(3.7, h, 0.0),
        ]);
        assert_eq!(detect_contacts(&s, &cfg).len(), 3);
    }

    #[test]
    fn backward_deadlock_pair_is_held() {
        // back to back, both reversing into each other
        let s = state(vec![RobotState::new(-3.7, 0.0, PI), RobotState::new(3.7, 0.0, 0.0)]);
        let set = detect_contacts(&s, &ContactConfig::default());
        let out = resolve_plastic(&s, &[tw(-10.0, -0.7), tw(-10.0, -0.7)], &set);
        assert_eq!(out, vec![BodyTwist::ZERO, BodyTwist::ZERO]);
    }

    #[test]
    fn tangent_and_away_motion_pass() {
        let s = state(vec![RobotState::new(0.0, 0.0, PI / 2.0), RobotState::new(7.4, 0.0, PI)]);
        let set = detect_contacts(&s, &ContactConfig::default());
        let out = resolve_plastic(&s, &[tw(5.0, 0.0), tw(-5.0, 0.0)], &set);
        assert_eq!(out, vec![tw(5.0, 0.0), tw(-5.0, 0.0)]);
    }

    #[test]
    fn spinning_is_never_blocked() {
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(7.4, 0.0, 0.0)]);
        let set = detect_contacts(&s, &ContactConfig::default());
        let out = resolve_plastic(&s, &[tw(0.0, 3.0), tw(0.0, -3.0)], &set);
        assert_eq!(out, vec![tw(0.0, 3.0), tw(0.0, -3.0)]);
    }

    #[test]
    fn tangent_arc_curving_inward_is_blocked() {
        // heading +y, turning right toward the partner on +x
        let s = state(vec![RobotState::new(0.0, 0.0, PI / 2.0), RobotState::new(7.4, 0.0, 0.0)]);
        let set = detect_contacts(&s, &ContactConfig::default());
        let out = resolve_plastic(&s, &[tw(5.0, -1.0), BodyTwist::ZERO], &set);
        assert_eq!(out[0], BodyTwist::ZERO);
        let out = resolve_plastic(&s, &[tw(5.0, 1.0), BodyTwist::ZERO], &set);
        assert_eq!(out[0], tw(5.0, 1.0));
    }

    #[test]
    fn driving_into_a_leaving_partner_is_blocked() {
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(7.4, 0.0, 0.0)]);
        let set = detect_contacts(&s, &ContactConfig::default());
        let out = resolve_plastic(&s, &[tw(5.0, 0.0), tw(8.0, 0.0)], &set);
        assert_eq!(out, vec![BodyTwist::ZERO, tw(8.0, 0.0)]);
    }

    fn head_on() -> ContactSet {
        ContactSet { pairs: vec![Contact { i: 0, j: 1, normal: Vec2::new(1.0, 0.0) }] }
    }

    #[test]
    fn elastic_examples() {
        let u = [Vec2::new(3.0, 0.0), Vec2::new(-3.0, 0.0)];
        let out = resolve_elastic(&u, &head_on(), 1.0);
        assert!((out[0] - u[1]).norm() < 1e-12 && (out[1] - u[0]).norm() < 1e-12);

        let out = resolve_elastic(&u, &head_on(), 0.0);
        assert!(out[0].norm() < 1e-12 && out[1].norm() < 1e-12);

        let u = [Vec2::new(4.0, 1.0), Vec2::ZERO];
        let out = resolve_elastic(&u, &head_on(), 0.5);
        let rel_after = (out[0] - out[1]).dot(Vec2::new(1.0, 0.0));
        assert!((rel_after + 0.5 * 4.0).abs() < 1e-12);
        assert!((out[0].x + out[1].x - 4.0).abs() < 1e-12);
        assert_eq!(out[0].y, 1.0);
    }

    #[test]
    fn elastic_zero_matches_plastic_on_symmetric_head_on() {
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(7.4, 0.0, PI)]);
        let set = detect_contacts(&s, &ContactConfig::default());
        let twists = [tw(6.0, 0.0), tw(6.0, 0.0)];
        let plastic = resolve_plastic(&s, &twists, &set);
        let vel: Vec<Vec2> = s.robots.iter().zip(&twists).map(|(r, t)| r.heading() * t.v).collect();
        let elastic = resolve_elastic(&vel, &set, 0.0);
        for (p, (r, e)) in plastic.iter().zip(s.robots.iter().zip(&elastic)) {
            assert!((r.heading() * p.v - *e).norm() < 1e-12);
        }
    }

    #[test]
    fn elastic_chain_terminates() {
        // three in a row, outer two pushing inward
        let pairs = vec![
            Contact { i: 0, j: 1, normal: Vec2::new(1.0, 0.0) },
            Contact { i: 1, j: 2, normal: Vec2::new(1.0, 0.0) },
        ];
        let set = ContactSet { pairs };
        let u = [Vec2::new(5.0, 0.0), Vec2::ZERO, Vec2::new(-5.0, 0.0)];
        let out = resolve_elastic(&u, &set, 0.9);
        for c in &set.pairs {
            assert!((out[c.i] - out[c.j]).dot(c.normal) <= 1e-9);
        }
    }

    proptest! {
        #[test]
        fn plastic_leaves_no_approach(
            poses in prop::collection::vec((-PI..PI, -PI..PI), 3),
            cmds in prop::collection::vec((-12.8..12.8f64, -5.0..5.0f64), 3),
        ) {
            // three discs mutually touching, arbitrary headings and commands
            let h = 7.4 * (3.0f64).sqrt() / 2.0;
            let centers = [(0.0, 0.0), (7.4, 0.0), (3.7, h)];
            let robots = centers.iter().zip(&poses)
                .map(|(&(x, y), &(t, _))| RobotState::new(x, y, t)).collect();
            let s = state(robots);
            let set = detect_contacts(&s, &ContactConfig::default());
            let twists: Vec<BodyTwist> = cmds.iter().map(|&(v, w)| tw(v, w)).collect();
            let out = resolve_plastic(&s, &twists, &set);
            for c in &set.pairs {
                let ui = s.robot(c.i).heading() * out[c.i].v;
                let uj = s.robot(c.j).heading() * out[c.j].v;
                prop_assert!((uj - ui).dot(c.normal) >= -1e-12);
            }
        }

        #[test]
        fn elastic_conserves_pair_momentum(
            a in (-10.0..10.0f64, -10.0..10.0f64),
            b in (-10.0..10.0f64, -10.0..10.0f64),
            angle in -PI..PI,
            e in 0.0..=1.0f64,
        ) {
            let set = ContactSet { pairs: vec![Contact { i: 0, j: 1, normal: Vec2::from_angle(angle) }] };
            let u = [Vec2::new(a.0, a.1), Vec2::new(b.0, b.1)];
            let out = resolve_elastic(&u, &set, e);
            let before = u[0] + u[1];
            let after = out[0] + out[1];
            prop_assert!((before - after).norm() < 1e-9);
        }
    }
}
