//! Movement classes of wheel commands and the 36 controller categories.

use std::fmt;
use std::str::FromStr;

use crate::geometry::BimodalController;
use crate::kinematics::WheelCommand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MovementClass {
    /// Straight forwards.
    SF,
    /// Straight backwards.
    SB,
    /// Circular forwards.
    CF,
    /// Circular backwards.
    CB,
    /// Rotate on the spot.
    RS,
    /// Stand still.
    SS,
}

impl MovementClass {
    pub const ALL: [MovementClass; 6] = [
        MovementClass::SF,
        MovementClass::SB,
        MovementClass::CF,
        MovementClass::CB,
        MovementClass::RS,
        MovementClass::SS,
    ];

    pub fn label(self) -> &'static str {
        match self {
            MovementClass::SF => "SF",
            MovementClass::SB => "SB",
            MovementClass::CF => "CF",
            MovementClass::CB => "CB",
            MovementClass::RS => "RS",
            MovementClass::SS => "SS",
        }
    }

    /// A command of this class, using `a` and `b` in `(0, 1]` with `a != b` for the curved ones.
    pub fn representative(self, a: f64, b: f64) -> WheelCommand {
        let (l, r) = match self {
            MovementClass::SF => (a, a),
            MovementClass::SB => (-a, -a),
            MovementClass::CF => (a, b),
            MovementClass::CB => (-a, -b),
            MovementClass::RS => (-a, a),
            MovementClass::SS => (0.0, 0.0),
        };
        WheelCommand::from_normalized(l, r)
    }
}

impl fmt::Display for MovementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MovementClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MovementClass::ALL
            .into_iter()
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown movement class `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ControllerCategory {
    pub mode_a: MovementClass,
    pub mode_b: MovementClass,
}

impl ControllerCategory {
    pub fn all() -> impl Iterator<Item = ControllerCategory> {
        MovementClass::ALL.into_iter().flat_map(|mode_a| {
            MovementClass::ALL.into_iter().map(move |mode_b| ControllerCategory { mode_a, mode_b })
        })
    }
}

impl fmt::Display for ControllerCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.mode_a, self.mode_b)
    }
}

impl FromStr for ControllerCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once('-').ok_or_else(|| format!("expected `XX-YY`, got `{s}`"))?;
        Ok(ControllerCategory { mode_a: a.parse()?, mode_b: b.parse()? })
    }
}

/// Classification by the signs of the tangential speed and the turn rate.
pub fn classify(cmd: WheelCommand) -> MovementClass {
    let v = cmd.left + cmd.right;
    let turning = !cmd.is_straight();
    let moving = !cmd.is_spin();
    match (moving, turning) {
        (false, false) => MovementClass::SS,
        (false, true) => MovementClass::RS,
        (true, false) if v > 0.0 => MovementClass::SF,
        (true, false) => MovementClass::SB,
        (true, true) if v > 0.0 => MovementClass::CF,
        (true, true) => MovementClass::CB,
    }
}

pub fn categorize(u: &BimodalController) -> ControllerCategory {
    ControllerCategory { mode_a: classify(u.mode_a()), mode_b: classify(u.mode_b()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::WorldParams;
    use crate::kinematics::twist;
    use proptest::prelude::*;

    fn cmd(l: f64, r: f64) -> WheelCommand {
        WheelCommand::new(l, r).unwrap()
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify(cmd(-0.7, -1.0)), MovementClass::CB);
        assert_eq!(classify(cmd(1.0, -1.0)), MovementClass::RS);
        assert_eq!(classify(cmd(0.3, -0.1)), MovementClass::CF);
        // mixed-sign command curves clockwise while moving forward
        let tw = twist(cmd(0.3, -0.1), &WorldParams::default());
        assert!(tw.v > 0.0 && tw.omega < 0.0);
    }

    #[test]
    fn categorize_examples() {
        assert_eq!(categorize(&BimodalController::u_prev()).to_string(), "CB-RS");
        assert_eq!(categorize(&BimodalController::u_star(0.5, 1.0).unwrap()).to_string(), "RS-SF");
        let zero = BimodalController::new(0.0, 0.0, 0.0, 0.0).unwrap();
        assert_eq!(categorize(&zero).to_string(), "SS-SS");
    }

    #[test]
    fn thirty_six_categories() {
        let all: std::collections::BTreeSet<_> = ControllerCategory::all().collect();
        assert_eq!(all.len(), 36);
        for c in all {
            assert_eq!(c.to_string().parse::<ControllerCategory>().unwrap(), c);
        }
    }

    #[test]
    fn representatives_classify_back() {
        for c in MovementClass::ALL {
            assert_eq!(classify(c.representative(0.4, 0.9)), c);
        }
    }

    proptest! {
        #[test]
        fn negation_swaps_direction(l in -1.0..=1.0f64, r in -1.0..=1.0f64) {
            use MovementClass::*;
            let expected = match classify(cmd(l, r)) {
                SF => SB, SB => SF, CF => CB, CB => CF, RS => RS, SS => SS,
            };
            prop_assert_eq!(classify(cmd(-l, -r)), expected);
        }

        #[test]
        fn wheel_swap_keeps_class(l in -1.0..=1.0f64, r in -1.0..=1.0f64) {
            prop_assert_eq!(classify(cmd(r, l)), classify(cmd(l, r)));
        }

        #[test]
        fn total_on_grid(i in 0..=200i32, j in 0..=200i32) {
            // exactly one class, including lattice points where v or omega vanish
            let c = cmd(i as f64 / 100.0 - 1.0, j as f64 / 100.0 - 1.0);
            prop_assert!(MovementClass::ALL.contains(&classify(c)));
        }
    }
}
