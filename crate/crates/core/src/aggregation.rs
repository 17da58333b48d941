//! Aggregation predicate: is the union of padded robot discs connected?
//!
//! Equal discs of radius `r + rho` overlap or touch exactly when their centers
//! are within `2(r + rho)`, so connectivity of the union equals connectivity of
//! that threshold graph.

use crate::geometry::{distance, MRState};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregationReport {
    pub aggregated: bool,
    /// Connected components, each sorted, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
    pub largest_component_size: usize,
}

/// Disjoint-set forest with union by rank and path compression.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), rank: vec![0; n] }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Returns false if `a` and `b` were already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

pub fn check(state: &MRState) -> AggregationReport {
    let n = state.len();
    let threshold = state.world.aggregation_distance();
    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if distance(&state.robots[i], &state.robots[j]) <= threshold {
                uf.union(i, j);
            }
        }
    }
    let mut by_root: Vec<Option<usize>> = vec![None; n];
    let mut components: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = uf.find(i);
        let slot = *by_root[root].get_or_insert_with(|| {
            components.push(Vec::new());
            components.len() - 1
        });
        components[slot].push(i);
    }
    let largest_component_size = components.iter().map(Vec::len).max().unwrap_or(0);
    AggregationReport { aggregated: components.len() == 1, components, largest_component_size }
}

/// Cheaper form of [`check`] for the simulator's per-step test.
pub fn is_aggregated(state: &MRState) -> bool {
    let n = state.len();
    let threshold = state.world.aggregation_distance();
    let mut uf = UnionFind::new(n);
    let mut joins = 0;
    for i in 0..n {
        for j in i + 1..n {
            if distance(&state.robots[i], &state.robots[j]) <= threshold && uf.union(i, j) {
                joins += 1;
                if joins + 1 == n {
                    return true;
                }
            }
        }
    }
    n <= 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{RobotState, Vec2, WorldParams};
    use proptest::prelude::*;

    fn state(points: &[(f64, f64)], world: WorldParams) -> MRState {
        MRState::new(points.iter().map(|&(x, y)| RobotState::new(x, y, 0.0)).collect(), world).unwrap()
    }

    /// Floyd-Warshall style closure of the adjacency matrix.
    fn closure_components(s: &MRState) -> Vec<Vec<usize>> {
        let n = s.len();
        let t = s.world.aggregation_distance();
        let mut reach: Vec<Vec<bool>> =
            (0..n).map(|i| (0..n).map(|j| i == j || distance(s.robot(i), s.robot(j)) <= t).collect()).collect();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if reach[i][k] && reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for i in 0..n {
            if !seen[i] {
                let comp: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
                comp.iter().for_each(|&j| seen[j] = true);
                out.push(comp);
            }
        }
        out
    }

    #[test]
    fn examples() {
        let w = WorldParams::default();
        assert!(check(&state(&[(5.0, 5.0)], w)).aggregated);

        let d = w.aggregation_distance();
        let chain = check(&state(&[(0.0, 0.0), (d, 0.0), (2.0 * d, 0.0)], w));
        assert!(chain.aggregated);

        let pairs = check(&state(&[(0.0, 0.0), (7.5, 0.0), (100.0, 0.0), (107.5, 0.0)], w));
        assert!(!pairs.aggregated);
        assert_eq!(pairs.components, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(pairs.largest_component_size, 2);
    }

    #[test]
    fn fast_path_agrees() {
        let w = WorldParams::default();
        for pts in [
            vec![(0.0, 0.0)],
            vec![(0.0, 0.0), (7.8, 0.0)],
            vec![(0.0, 0.0), (7.71, 0.0)],
            vec![(0.0, 0.0), (7.0, 0.0), (50.0, 0.0)],
        ] {
            let s = state(&pts, w);
            assert_eq!(is_aggregated(&s), check(&s).aggregated, "{pts:?}");
        }
    }

    fn arb_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-30.0..30.0f64, -30.0..30.0f64), 1..=12)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn matches_transitive_closure(pts in arb_points()) {
            let s = state(&pts, WorldParams::default());
            let report = check(&s);
            prop_assert_eq!(&report.components, &closure_components(&s));
            prop_assert_eq!(report.aggregated, report.components.len() == 1);
            prop_assert_eq!(is_aggregated(&s), report.aggregated);
        }

        #[test]
        fn padding_is_monotone(pts in arb_points(), rho in 0.0..3.0f64, extra in 0.0..3.0f64) {
            let w = WorldParams::default().with_padding(rho);
            let small = check(&state(&pts, w)).largest_component_size;
            let large = check(&state(&pts, w.with_padding(rho + extra))).largest_component_size;
            prop_assert!(large >= small);
        }

        #[test]
        fn rigid_invariance(pts in arb_points(), angle in -3.0..3.0f64, dx in -50.0..50.0f64) {
            let s = state(&pts, WorldParams::default());
            let t = s.transformed(angle, Vec2::new(dx, -dx));
            // boundary pairs can flip under rounding; compare only clear-cut cases
            let thr = s.world.aggregation_distance();
            let marginal = (0..s.len()).any(|i| (i + 1..s.len())
                .any(|j| (distance(s.robot(i), s.robot(j)) - thr).abs() < 1e-9));
            prop_assume!(!marginal);
            prop_assert_eq!(check(&s).components, check(&t).components);
        }
    }
}
