//! Nonaggregating initial states for every controller category.

use std::fmt;

use crate::aggregation;
use crate::geometry::{BimodalController, MRState, WorldParams};
use crate::kinematics::icr_radius;
use crate::scenarios::{
    gen_collinear_backward, gen_deadlock_pairs, gen_near_miss_ring, gen_ring_center, min_ring_size, Facing,
    RingHeading, ScenarioError,
};
use crate::taxonomy::{categorize, ControllerCategory, MovementClass};

/// Distance between neighboring pairs in the pair families.
pub const PAIR_SPACING: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Touching pairs looking away from each other; nobody sees anybody.
    PairsAway,
    /// Touching pairs looking at each other; everybody sees a partner.
    PairsToward,
    /// Collinear robots facing each other, driven apart by straight reversing.
    CollinearBackward,
    /// Ring seeing neighbors around a center robot whose orbit cannot reach it.
    RingSeeNeighbor,
    /// Radially outward ring around a spinning center robot.
    RingRadial,
    /// Ring just missing its neighbors around a spinning center robot.
    NearMissRing,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::PairsAway => "pairs-away",
            Family::PairsToward => "pairs-toward",
            Family::CollinearBackward => "collinear-backward",
            Family::RingSeeNeighbor => "ring-see-neighbor",
            Family::RingRadial => "ring-radial",
            Family::NearMissRing => "near-miss-ring",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Generator family that defeats a category.
pub fn family_for(category: ControllerCategory) -> Family {
    use MovementClass::*;
    match (category.mode_a, category.mode_b) {
        (SS, _) => Family::PairsAway,
        (_, SS | SF | CF) => Family::PairsToward,
        (_, SB) => Family::CollinearBackward,
        (_, CB) => Family::RingSeeNeighbor,
        (RS, RS) => Family::PairsAway,
        (SB | CB, RS) => Family::RingRadial,
        (SF | CF, RS) => Family::NearMissRing,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub category: ControllerCategory,
    pub family: Family,
    pub state: MRState,
}

/// Builds a validated nonaggregating state for `controller`. `n` overrides the
/// default robot count where the family allows it.
pub fn counterexample(
    controller: &BimodalController,
    n: Option<usize>,
    world: &WorldParams,
) -> Result<Counterexample, ScenarioError> {
    let category = categorize(controller);
    let family = family_for(category);
    let pairs = |default: usize, min: usize| -> Result<usize, ScenarioError> {
        match n {
            None => Ok(default),
            Some(n) if n % 2 == 0 && n / 2 >= min => Ok(n / 2),
            Some(n) => Err(ScenarioError::InvalidArgument(format!(
                "{family} needs an even robot count of at least {}, got {n}",
                2 * min
            ))),
        }
    };
    let ring = |default: usize, min: usize| -> Result<usize, ScenarioError> {
        match n {
            None => Ok(default),
            Some(n) if n > min => Ok(n - 1),
            Some(n) => Err(ScenarioError::InvalidArgument(format!(
                "{family} needs at least {} robots, got {n}",
                min + 1
            ))),
        }
    };
    let state = match family {
        Family::PairsAway => gen_deadlock_pairs(pairs(2, 2)?, Facing::Away, PAIR_SPACING, world)?,
        Family::PairsToward => gen_deadlock_pairs(pairs(2, 2)?, Facing::Toward, PAIR_SPACING, world)?,
        Family::CollinearBackward => gen_collinear_backward(pairs(1, 1)?, 2.0 * world.contact_distance(), world)?,
        Family::RingSeeNeighbor => {
            let orbit = icr_radius(controller.mode_b(), world)
                .finite()
                .ok_or_else(|| ScenarioError::ValidationFailed("mode B has no finite turning radius".into()))?;
            let n_ring = ring(min_ring_size(orbit, world), 3)?;
            gen_ring_center(n_ring, RingHeading::SeeRightNeighbor, Some(orbit), world)?
        }
        Family::RingRadial => gen_ring_center(ring(8, 3)?, RingHeading::RadialOut, None, world)?,
        Family::NearMissRing => gen_near_miss_ring(ring(8, 3)?, true, world)?,
    };
    if aggregation::is_aggregated(&state) {
        return Err(ScenarioError::ValidationFailed(format!("{family} state is aggregated at t = 0")));
    }
    Ok(Counterexample { category, family, state })
}

/// A controller of the given category, with distinct wheel magnitudes per mode.
pub fn representative_controller(category: ControllerCategory) -> BimodalController {
    let a = category.mode_a.representative(0.4, 0.9);
    let b = category.mode_b.representative(0.7, 1.0);
    BimodalController::new(a.left, a.right, b.left, b.right).expect("representative commands are in range")
}
