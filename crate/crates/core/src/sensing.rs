//! Binary line-of-sight sensor.
//!
//! A robot reads '1' when the infinite ray from its center along its heading
//! meets the closed disc of any other robot. Range is unbounded and there is no
//! occlusion: the nearest hit is reported only as a diagnostic.

use crate::geometry::{MRState, RobotState, Vec2, WorldParams};

/// Slack on the perpendicular distance so exact tangency survives rounding.
pub const TANGENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SensorReading {
    /// Nearest robot intersected by the ray, if any.
    pub seen: Option<usize>,
}

impl SensorReading {
    pub fn value(&self) -> bool {
        self.seen.is_some()
    }
}

/// Ray parameter at which the ray from `origin` along unit `dir` enters the disc at `center`.
fn ray_hit(origin: Vec2, dir: Vec2, center: Vec2, radius: f64) -> Option<f64> {
    let rel = center - origin;
    let proj = rel.dot(dir);
    let perp = rel.cross(dir).abs();
    if perp > radius + TANGENCY_TOL {
        return None;
    }
    // A disc containing the origin is always hit; otherwise it must lie ahead.
    let inside = rel.norm_sq() <= radius * radius;
    if proj <= 0.0 && !inside {
        return None;
    }
    let half_chord = (radius * radius - perp * perp).max(0.0).sqrt();
    Some((proj - half_chord).max(0.0))
}

pub fn sense(state: &MRState, i: usize) -> SensorReading {
    let me = &state.robots[i];
    let (origin, dir) = (me.position(), me.heading());
    let r = state.world.robot_radius;
    let mut best: Option<(f64, usize)> = None;
    for (j, other) in state.robots.iter().enumerate() {
        if j == i {
            continue;
        }
        if let Some(t) = ray_hit(origin, dir, other.position(), r) {
            if best.is_none_or(|(bt, _)| t < bt) {
                best = Some((t, j));
            }
        }
    }
    SensorReading { seen: best.map(|(_, j)| j) }
}

/// Readings for every robot, in index order.
pub fn sense_all(state: &MRState) -> Vec<SensorReading> {
    (0..state.len()).map(|i| sense(state, i)).collect()
}

/// Would a robot-sized disc centered at `p` be sensed by `observer`?
pub fn visibility_region_check(observer: &RobotState, p: Vec2, world: &WorldParams) -> bool {
    ray_hit(observer.position(), observer.heading(), p, world.robot_radius).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn state(robots: Vec<RobotState>) -> MRState {
        MRState::new(robots, WorldParams::default()).unwrap()
    }

    /// Walks the ray in small increments and checks disc membership directly.
    fn sampled_hit(observer: &RobotState, p: Vec2, r: f64) -> bool {
        let h = observer.heading();
        let far = (p - observer.position()).norm() + 2.0 * r;
        let steps = 200_000;
        (0..=steps).any(|k| {
            let q = observer.position() + h * (far * k as f64 / steps as f64);
            (q - p).norm() <= r + 1e-9
        })
    }

    #[test]
    fn dead_ahead_and_behind() {
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(10.0, 0.0, 1.0)]);
        assert_eq!(sense(&s, 0).seen, Some(1));
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(-10.0, 0.0, 1.0)]);
        assert!(!sense(&s, 0).value());
    }

    #[test]
    fn tangency_counts() {
        let r = WorldParams::default().robot_radius;
        let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(10.0, r, 0.0)]);
        assert!(sense(&s, 0).value());
        let o = RobotState::new(0.0, 0.0, 0.0);
        assert!(sampled_hit(&o, Vec2::new(10.0, r), r));
        let s = state(vec![o, RobotState::new(10.0, r + 1e-6, 0.0)]);
        assert!(!sense(&s, 0).value());
    }

    #[test]
    fn tangency_is_symmetric() {
        let r = WorldParams::default().robot_radius;
        for sign in [1.0, -1.0] {
            let s = state(vec![RobotState::new(0.0, 0.0, 0.0), RobotState::new(10.0, sign * r, 0.0)]);
            assert!(sense(&s, 0).value());
        }
    }

    #[test]
    fn nearest_is_reported() {
        let s = state(vec![
            RobotState::new(0.0, 0.0, 0.0),
            RobotState::new(30.0, 0.0, 0.0),
            RobotState::new(15.0, 1.0, 0.0),
        ]);
        assert_eq!(sense(&s, 0).seen, Some(2));
    }

    #[test]
    fn region_check_examples() {
        let w = WorldParams::default();
        let o = RobotState::new(0.0, 0.0, 3.0 * PI / 4.0);
        assert!(visibility_region_check(&o, o.heading() * 10.0, &w));
        let o = RobotState::new(0.0, 0.0, 0.0);
        assert!(!visibility_region_check(&o, Vec2::new(10.0, w.robot_radius + 0.01), &w));
        assert!(!visibility_region_check(&o, Vec2::new(-8.0, 0.0), &w));
    }

    #[test]
    fn region_check_matches_sampling_oracle() {
        let w = WorldParams::default();
        let r = w.robot_radius;
        let o = RobotState::new(1.0, -2.0, 0.7);
        for k in 0..60 {
            let a = k as f64 * 0.11;
            let p = Vec2::new(1.0 + 12.0 * a.cos(), -2.0 + 12.0 * a.sin());
            // skip points whose boundary distance is within the sampling resolution
            let perp = (p - o.position()).cross(o.heading()).abs();
            if (perp - r).abs() < 1e-3 {
                continue;
            }
            assert_eq!(visibility_region_check(&o, p, &w), sampled_hit(&o, p, r), "angle {a}");
        }
    }

    fn arb_robots(n: usize) -> impl Strategy<Value = Vec<RobotState>> {
        prop::collection::vec((-40.0..40.0f64, -40.0..40.0f64, -PI..PI), n)
            .prop_map(|v| v.into_iter().map(|(x, y, t)| RobotState::new(x, y, t)).collect())
    }

    proptest! {
        #[test]
        fn rigid_invariance(robots in arb_robots(5), angle in -PI..PI, dx in -50.0..50.0f64, dy in -50.0..50.0f64) {
            let s = state(robots);
            let t = s.transformed(angle, Vec2::new(dx, dy));
            for i in 0..s.len() {
                // skip near-tangent cases where rounding decides the outcome
                let me = s.robot(i);
                let marginal = s.robots.iter().enumerate().any(|(j, o)| {
                    j != i && ((o.position() - me.position()).cross(me.heading()).abs() - 3.7).abs() < 1e-6
                });
                if !marginal {
                    prop_assert_eq!(sense(&s, i).value(), sense(&t, i).value());
                }
            }
        }

        #[test]
        fn inserting_closer_robot_changes_seen_index(d in 20.0..80.0f64, frac in 0.2..0.8f64, theta in -PI..PI) {
            let me = RobotState::new(0.0, 0.0, theta);
            let h = me.heading();
            let far = RobotState::at(h * d, 0.0);
            let mid = RobotState::at(h * (d * frac), 0.0);
            prop_assume!(d * (1.0 - frac) >= 7.4 && d * frac >= 7.4);
            let before = sense(&state(vec![me, far]), 0);
            let after = sense(&state(vec![me, far, mid]), 0);
            prop_assert_eq!(before.seen, Some(1));
            prop_assert_eq!(after.seen, Some(2));
            prop_assert_eq!(before.value(), after.value());
        }
    }
}
