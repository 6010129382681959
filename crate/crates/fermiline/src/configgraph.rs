//! Combinatorics of hard-core electron configurations: the labeled
//! configuration graph, dynamically allowed permutations via reachability,
//! and parity certification of the one-hole sector.
//!
//! A labeled configuration is an ordered list of N distinct points
//! (site, spin).  One move hops a single electron along one lattice edge,
//! keeping its spin, into a point the constraint class admits: under the
//! Pauli class no two electrons may share a (site, spin) pair, under the
//! hard-core class no two may share a site.  A permutation τ is
//! dynamically allowed at base X when the relabeled configuration τX, with
//! (τX)⁽ʲ⁾ = X^(τ(j)), is reachable from X; breadth-first search over the
//! labeled graph enumerates exactly these τ.  Spins are frozen along
//! labels, so every allowed τ preserves the base's spin assignment.

use crate::lattice::Lattice;
use crate::worldline::{Bundle, ConstraintClass, Point};
use crate::Spin;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use thiserror::Error;

/// Default ceiling on breadth-first-searched nodes; acceptance-scale
/// instances stay orders of magnitude below it.
pub const DEFAULT_NODE_CAP: usize = 5_000_000;

#[derive(Debug, Error)]
pub enum ConfigGraphError {
    #[error("configuration must hold at least one electron")]
    EmptyConfig,
    #[error("configuration holds {got} electrons, graph expects {expected}")]
    WrongLength { expected: usize, got: usize },
    #[error("site {0} outside the lattice")]
    SiteOutOfRange(usize),
    #[error("configuration violates the {0:?} constraint")]
    ConstraintViolated(ConstraintClass),
    #[error("{n} electrons exceed the capacity {max} of the {class:?} class")]
    CapacityExceeded { n: usize, max: usize, class: ConstraintClass },
    #[error("search exceeded the node cap {0}; instance too large for exhaustive reachability")]
    GraphTooLarge(usize),
    #[error("{n} electrons on {sites} sites need {bits} key bits; packed keys hold 64")]
    KeyOverflow { n: usize, sites: usize, bits: u32 },
    #[error("one-hole analysis needs N = |Λ| − 1 = {expected}, got {got}")]
    WrongFilling { expected: usize, got: usize },
    #[error("one-hole analysis is defined for the hard-core class")]
    WrongConstraint,
}

/// Ordered list of N distinct electron points.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ElectronConfig {
    pub points: Vec<Point>,
}

impl ElectronConfig {
    pub fn new(points: Vec<Point>) -> Self {
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// All (site, spin) pairs distinct: the Pauli-admissible class.
    pub fn pauli_distinct(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.points.len());
        self.points.iter().all(|p| seen.insert((p.site, p.spin)))
    }

    /// All sites distinct: the hard-core class (spin-blind exclusion).
    pub fn hardcore_distinct(&self) -> bool {
        let mut seen = HashSet::with_capacity(self.points.len());
        self.points.iter().all(|p| seen.insert(p.site))
    }

    /// Membership in a constraint class.
    pub fn admissible(&self, class: ConstraintClass) -> bool {
        match class {
            ConstraintClass::FiniteU => self.pauli_distinct(),
            ConstraintClass::UInfinity => self.hardcore_distinct(),
        }
    }

    /// Canonical representative of the label-quotient orbit: the points in
    /// sorted order.
    pub fn canonical(&self) -> Self {
        let mut points = self.points.clone();
        points.sort();
        Self { points }
    }
}

/// The t = 0 configuration of a bundle, labeled by electron index.
pub fn initial_config(bundle: &Bundle) -> ElectronConfig {
    ElectronConfig::new(bundle.paths.iter().map(|p| p.start).collect())
}

/// Sign of a permutation: +1 for even, −1 for odd.
pub fn permutation_sign(perm: &[usize]) -> i8 {
    if (perm.len() - cycle_count(perm)) % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Cycle lengths of a permutation, sorted descending.
pub fn cycle_type(perm: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; perm.len()];
    let mut lengths = Vec::new();
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
            len += 1;
        }
        lengths.push(len);
    }
    lengths.sort_unstable_by(|a, b| b.cmp(a));
    lengths
}

fn cycle_count(perm: &[usize]) -> usize {
    let mut seen = vec![false; perm.len()];
    let mut count = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        count += 1;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = perm[j];
        }
    }
    count
}

/// One conjugacy class of allowed permutations, ready for tabulation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CycleClass {
    /// Cycle lengths, descending.
    pub lengths: Vec<usize>,
    /// Common sign of the class: (−1)^{N − #cycles}.
    pub sign: i8,
    /// Number of allowed permutations of this type at the queried base.
    pub count: usize,
}

/// The dynamically allowed permutations at one base configuration.
#[derive(Clone, Debug)]
pub struct AllowedPermutations {
    pub base: ElectronConfig,
    /// Sorted lexicographically; always contains the identity.
    pub perms: Vec<Vec<usize>>,
    /// Labeled nodes visited by the search.
    pub visited: usize,
}

impl AllowedPermutations {
    pub fn contains(&self, perm: &[usize]) -> bool {
        self.perms.iter().any(|p| p == perm)
    }

    /// Distinct cycle types over the allowed set.
    pub fn cycle_types(&self) -> BTreeSet<Vec<usize>> {
        self.perms.iter().map(|p| cycle_type(p)).collect()
    }

    /// Signs aligned with `perms`.
    pub fn signs(&self) -> Vec<i8> {
        self.perms.iter().map(|p| permutation_sign(p)).collect()
    }

    /// Cycle-type table (type, sign, multiplicity), largest cycles first.
    pub fn table(&self) -> Vec<CycleClass> {
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for p in &self.perms {
            *counts.entry(cycle_type(p)).or_insert(0) += 1;
        }
        let mut rows: Vec<CycleClass> = counts
            .into_iter()
            .map(|(lengths, count)| {
                let sign = if (self.base.len() - lengths.len()) % 2 == 0 { 1 } else { -1 };
                CycleClass { lengths, sign, count }
            })
            .collect();
        rows.sort_by(|a, b| b.lengths.cmp(&a.lengths));
        rows
    }
}

/// Reachability structure of N labeled electrons on a lattice under a
/// constraint class.  Adjacency is generated on the fly; searches are
/// bounded by a node cap.
#[derive(Clone, Debug)]
pub struct ConfigGraph {
    lattice: Lattice,
    n: usize,
    constraint: ConstraintClass,
    node_cap: usize,
    /// Bits per electron in packed visited keys.
    bits: u32,
}

impl ConfigGraph {
    pub fn new(
        lattice: &Lattice,
        n: usize,
        constraint: ConstraintClass,
    ) -> Result<Self, ConfigGraphError> {
        Self::with_node_cap(lattice, n, constraint, DEFAULT_NODE_CAP)
    }

    pub fn with_node_cap(
        lattice: &Lattice,
        n: usize,
        constraint: ConstraintClass,
        node_cap: usize,
    ) -> Result<Self, ConfigGraphError> {
        if n == 0 {
            return Err(ConfigGraphError::EmptyConfig);
        }
        let sites = lattice.n_sites();
        let max = match constraint {
            ConstraintClass::FiniteU => 2 * sites,
            ConstraintClass::UInfinity => sites,
        };
        if n > max {
            return Err(ConfigGraphError::CapacityExceeded { n, max, class: constraint });
        }
        let bits = usize::BITS - (2 * sites - 1).leading_zeros();
        if bits * n as u32 > 64 {
            return Err(ConfigGraphError::KeyOverflow { n, sites, bits: bits * n as u32 });
        }
        Ok(Self { lattice: lattice.clone(), n, constraint, node_cap, bits })
    }

    pub fn n_electrons(&self) -> usize {
        self.n
    }

    pub fn constraint(&self) -> ConstraintClass {
        self.constraint
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    fn validate(&self, config: &ElectronConfig) -> Result<(), ConfigGraphError> {
        if config.len() != self.n {
            return Err(ConfigGraphError::WrongLength { expected: self.n, got: config.len() });
        }
        for p in &config.points {
            if p.site >= self.lattice.n_sites() {
                return Err(ConfigGraphError::SiteOutOfRange(p.site));
            }
        }
        if !config.admissible(self.constraint) {
            return Err(ConfigGraphError::ConstraintViolated(self.constraint));
        }
        Ok(())
    }

    fn pack(&self, points: &[Point]) -> u64 {
        let mut key = 0u64;
        for p in points {
            key = (key << self.bits) | p.index() as u64;
        }
        key
    }

    /// Whether a single-electron move into `target` is admissible given
    /// the other electrons' points.
    fn admits(&self, points: &[Point], mover: usize, target: Point) -> bool {
        points.iter().enumerate().all(|(j, p)| {
            j == mover
                || match self.constraint {
                    ConstraintClass::FiniteU => (p.site, p.spin) != (target.site, target.spin),
                    ConstraintClass::UInfinity => p.site != target.site,
                }
        })
    }

    /// Breadth-first search of the labeled component of `base`, collecting
    /// exactly the permutations τ with τX reachable.
    ///
    /// Returned τ use the convention τ(j) = i when the reached
    /// configuration places electron j on the base point X⁽ⁱ⁾, matching
    /// the periodicity permutation reported by the path sampler.
    pub fn allowed_permutations(
        &self,
        base: &ElectronConfig,
    ) -> Result<AllowedPermutations, ConfigGraphError> {
        self.validate(base)?;
        let index_of: HashMap<Point, usize> = base
            .points
            .iter()
            .enumerate()
            .map(|(i, &p)| (p, i))
            .collect();
        let mut visited: HashSet<u64> = HashSet::new();
        let mut queue: VecDeque<Vec<Point>> = VecDeque::new();
        let mut perms: Vec<Vec<usize>> = Vec::new();
        visited.insert(self.pack(&base.points));
        queue.push_back(base.points.clone());
        while let Some(points) = queue.pop_front() {
            if let Some(perm) = points
                .iter()
                .map(|p| index_of.get(p).copied())
                .collect::<Option<Vec<usize>>>()
            {
                perms.push(perm);
            }
            for mover in 0..self.n {
                for &(site, _) in self.lattice.neighbors(points[mover].site) {
                    let target = Point { site, spin: points[mover].spin };
                    if !self.admits(&points, mover, target) {
                        continue;
                    }
                    let mut next = points.clone();
                    next[mover] = target;
                    if visited.insert(self.pack(&next)) {
                        if visited.len() > self.node_cap {
                            return Err(ConfigGraphError::GraphTooLarge(self.node_cap));
                        }
                        queue.push_back(next);
                    }
                }
            }
        }
        perms.sort();
        Ok(AllowedPermutations { base: base.clone(), perms, visited: visited.len() })
    }

    /// Canonical base configurations of the constraint class: sorted point
    /// tuples, enumerated in lexicographic order.
    pub fn canonical_bases(&self) -> Vec<ElectronConfig> {
        let n_points = 2 * self.lattice.n_sites();
        let mut bases = Vec::new();
        let mut combo: Vec<usize> = (0..self.n).collect();
        loop {
            let points: Vec<Point> = combo
                .iter()
                .map(|&idx| Point {
                    site: idx / 2,
                    spin: if idx % 2 == 0 { Spin::Up } else { Spin::Down },
                })
                .collect();
            let config = ElectronConfig::new(points);
            if config.admissible(self.constraint) {
                bases.push(config);
            }
            // Next N-combination of point indices in lexicographic order.
            let mut pos = self.n;
            loop {
                if pos == 0 {
                    return bases;
                }
                pos -= 1;
                if combo[pos] != n_points - self.n + pos {
                    break;
                }
            }
            combo[pos] += 1;
            for later in pos + 1..self.n {
                combo[later] = combo[later - 1] + 1;
            }
        }
    }

    /// Union over all canonical bases of the allowed cycle types.
    pub fn cycle_type_support(&self) -> Result<BTreeSet<Vec<usize>>, ConfigGraphError> {
        let mut support = BTreeSet::new();
        for base in self.canonical_bases() {
            support.extend(self.allowed_permutations(&base)?.cycle_types());
        }
        Ok(support)
    }
}

/// Certifies that every dynamically allowed permutation at every base of
/// the one-hole hard-core sector is even.
///
/// Requires N = |Λ| − 1 and the hard-core class; sweeps all canonical
/// bases (site choices and spin patterns) and reports whether every
/// allowed sign is +1.
pub fn one_hole_parity_check(graph: &ConfigGraph) -> Result<bool, ConfigGraphError> {
    if graph.constraint != ConstraintClass::UInfinity {
        return Err(ConfigGraphError::WrongConstraint);
    }
    let expected = graph.lattice.n_sites() - 1;
    if graph.n != expected {
        return Err(ConfigGraphError::WrongFilling { expected, got: graph.n });
    }
    for base in graph.canonical_bases() {
        let allowed = graph.allowed_permutations(&base)?;
        if allowed.signs().iter().any(|&s| s != 1) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{Boundary, LatticeSpec, NeighborNorm};
    use crate::worldline::{sample_bundle, PathEnsembleConfig};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn chain(side: i64, boundary: Boundary) -> Lattice {
        Lattice::build(LatticeSpec {
            dim: 1,
            side,
            hopping: 1.0,
            norm: NeighborNorm::L1,
            boundary,
        })
        .unwrap()
    }

    fn torus_2x2() -> Lattice {
        Lattice::build(LatticeSpec {
            dim: 2,
            side: 2,
            hopping: 1.0,
            norm: NeighborNorm::L1,
            boundary: Boundary::Periodic,
        })
        .unwrap()
    }

    fn up(site: usize) -> Point {
        Point { site, spin: Spin::Up }
    }

    fn down(site: usize) -> Point {
        Point { site, spin: Spin::Down }
    }

    #[test]
    fn membership_classes_are_nested() {
        let doubly_occupied = ElectronConfig::new(vec![up(0), down(0)]);
        assert!(doubly_occupied.pauli_distinct());
        assert!(!doubly_occupied.hardcore_distinct());
        let clash = ElectronConfig::new(vec![up(0), up(0)]);
        assert!(!clash.pauli_distinct());
        let spread = ElectronConfig::new(vec![up(0), down(3)]);
        assert!(spread.admissible(ConstraintClass::FiniteU));
        assert!(spread.admissible(ConstraintClass::UInfinity));
    }

    #[test]
    fn canonical_representative_is_label_invariant() {
        let config = ElectronConfig::new(vec![down(2), up(0), up(3)]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let mut shuffled = config.points.clone();
            shuffled.shuffle(&mut rng);
            assert_eq!(ElectronConfig::new(shuffled).canonical(), config.canonical());
        }
        assert_eq!(
            config.canonical().points,
            vec![up(0), down(2), up(3)]
        );
    }

    #[test]
    fn open_chain_hardcore_allows_identity_only() {
        for (side, n) in [(4, 2), (4, 3), (6, 3)] {
            let lat = chain(side, Boundary::Open);
            let graph = ConfigGraph::new(&lat, n, ConstraintClass::UInfinity).unwrap();
            for base in graph.canonical_bases() {
                let allowed = graph.allowed_permutations(&base).unwrap();
                assert_eq!(
                    allowed.perms,
                    vec![(0..n).collect::<Vec<_>>()],
                    "hard-core electrons cannot pass on an open chain"
                );
            }
        }
    }

    #[test]
    fn ring_one_hole_rotations_are_even() {
        let lat = chain(4, Boundary::Periodic);
        let graph = ConfigGraph::new(&lat, 3, ConstraintClass::UInfinity).unwrap();

        let uniform = ElectronConfig::new(vec![up(0), up(1), up(2)]);
        let allowed = graph.allowed_permutations(&uniform).unwrap();
        // A full lap of the hole advances all three electrons one seat:
        // exactly the cyclic relabelings survive.
        assert_eq!(
            allowed.perms,
            vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]
        );
        assert!(allowed.signs().iter().all(|&s| s == 1));
        let types = allowed.cycle_types();
        assert!(types.contains(&vec![1, 1, 1]) && types.contains(&vec![3]));

        // A spin pattern that no rotation preserves pins the labels.
        let mixed = ElectronConfig::new(vec![up(0), up(1), down(2)]);
        let allowed = graph.allowed_permutations(&mixed).unwrap();
        assert_eq!(allowed.perms, vec![vec![0, 1, 2]]);

        let table = graph
            .allowed_permutations(&uniform)
            .unwrap()
            .table();
        assert_eq!(
            table,
            vec![
                CycleClass { lengths: vec![3], sign: 1, count: 2 },
                CycleClass { lengths: vec![1, 1, 1], sign: 1, count: 1 },
            ]
        );
    }

    #[test]
    fn square_one_hole_matches_the_ring() {
        // The 2×2 torus is the 4-cycle as a graph, so the one-hole sector
        // carries the same cyclic relabelings.
        let graph = ConfigGraph::new(&torus_2x2(), 3, ConstraintClass::UInfinity).unwrap();
        let ring_order = [0usize, 1, 3, 2];
        let uniform =
            ElectronConfig::new(ring_order[..3].iter().map(|&s| up(s)).collect());
        let allowed = graph.allowed_permutations(&uniform).unwrap();
        assert_eq!(allowed.perms.len(), 3);
        assert!(allowed.signs().iter().all(|&s| s == 1));
        assert!(allowed.cycle_types().contains(&vec![3]));
    }

    #[test]
    fn one_hole_parity_holds_on_acceptance_instances() {
        for lat in [torus_2x2(), chain(4, Boundary::Periodic), chain(4, Boundary::Open)] {
            let graph = ConfigGraph::new(&lat, 3, ConstraintClass::UInfinity).unwrap();
            assert_eq!(one_hole_parity_check(&graph).unwrap(), true);
        }
        let graph =
            ConfigGraph::new(&chain(4, Boundary::Periodic), 2, ConstraintClass::UInfinity)
                .unwrap();
        assert!(matches!(
            one_hole_parity_check(&graph),
            Err(ConfigGraphError::WrongFilling { expected: 3, got: 2 })
        ));
        let pauli =
            ConfigGraph::new(&chain(4, Boundary::Periodic), 3, ConstraintClass::FiniteU)
                .unwrap();
        assert!(matches!(
            one_hole_parity_check(&pauli),
            Err(ConfigGraphError::WrongConstraint)
        ));
    }

    #[test]
    fn equal_spin_exchange_needs_a_ring() {
        let base = ElectronConfig::new(vec![up(0), up(2)]);
        let swap = vec![1usize, 0];

        let ring = ConfigGraph::new(
            &chain(4, Boundary::Periodic),
            2,
            ConstraintClass::FiniteU,
        )
        .unwrap();
        let allowed = ring.allowed_permutations(&base).unwrap();
        assert!(allowed.contains(&swap), "electrons can pass around the ring");
        assert_eq!(permutation_sign(&swap), -1);

        let line =
            ConfigGraph::new(&chain(4, Boundary::Open), 2, ConstraintClass::FiniteU).unwrap();
        let allowed = line.allowed_permutations(&base).unwrap();
        assert!(!allowed.contains(&swap), "equal spins cannot pass on a line");

        // Opposite spins never exchange labels: spins are frozen along
        // labels, so no nonidentity permutation can match the spin pattern.
        let mixed = ElectronConfig::new(vec![up(0), down(2)]);
        let allowed = ring.allowed_permutations(&mixed).unwrap();
        assert_eq!(allowed.perms, vec![vec![0, 1]]);
    }

    #[test]
    fn reachability_composes_like_a_groupoid() {
        let cases: Vec<(Lattice, usize, ConstraintClass, ElectronConfig)> = vec![
            (
                chain(4, Boundary::Periodic),
                3,
                ConstraintClass::UInfinity,
                ElectronConfig::new(vec![up(0), up(1), up(2)]),
            ),
            (
                chain(4, Boundary::Periodic),
                2,
                ConstraintClass::FiniteU,
                ElectronConfig::new(vec![up(0), up(2)]),
            ),
        ];
        for (lat, n, class, base) in cases {
            let graph = ConfigGraph::new(&lat, n, class).unwrap();
            let at_base = graph.allowed_permutations(&base).unwrap();
            for tau in &at_base.perms {
                // The relabeled base τX places electron j on X^(τ(j)).
                let moved = ElectronConfig::new(
                    (0..n).map(|j| base.points[tau[j]]).collect(),
                );
                let at_moved = graph.allowed_permutations(&moved).unwrap();
                for sigma in &at_moved.perms {
                    // σ applied at τX reaches (τ∘σ)X, so the composite must
                    // already be allowed at X.
                    let composite: Vec<usize> =
                        (0..n).map(|j| tau[sigma[j]]).collect();
                    assert!(
                        at_base.contains(&composite),
                        "certificate composition escaped the allowed set"
                    );
                }
            }
        }
    }

    #[test]
    fn translations_preserve_allowed_sets() {
        let lat = chain(4, Boundary::Periodic);
        let graph = ConfigGraph::new(&lat, 2, ConstraintClass::FiniteU).unwrap();
        let base = ElectronConfig::new(vec![up(0), down(1)]);
        let reference = graph.allowed_permutations(&base).unwrap();
        for shift in 1..4usize {
            let translated = ElectronConfig::new(
                base.points
                    .iter()
                    .map(|p| Point { site: (p.site + shift) % 4, spin: p.spin })
                    .collect(),
            );
            let moved = graph.allowed_permutations(&translated).unwrap();
            assert_eq!(moved.perms, reference.perms);
        }

        let square = torus_2x2();
        let graph = ConfigGraph::new(&square, 3, ConstraintClass::UInfinity).unwrap();
        let base = ElectronConfig::new(vec![up(0), up(1), up(2)]);
        let reference = graph.allowed_permutations(&base).unwrap();
        // Translate by one step along the first axis; coordinates are
        // centered, so wrap within [−side/2, side/2).
        let translated = ElectronConfig::new(
            base.points
                .iter()
                .map(|p| {
                    let mut coord = square.coord(p.site).to_vec();
                    coord[0] = -1 + (coord[0] + 1 + 1).rem_euclid(2);
                    Point { site: square.site_index(&coord).unwrap(), spin: p.spin }
                })
                .collect(),
        );
        let moved = graph.allowed_permutations(&translated).unwrap();
        assert_eq!(
            moved.perms.iter().map(|p| cycle_type(p)).collect::<BTreeSet<_>>(),
            reference.perms.iter().map(|p| cycle_type(p)).collect::<BTreeSet<_>>()
        );
    }

    #[test]
    fn sampled_periodicity_permutations_are_allowed() {
        let lat = chain(4, Boundary::Periodic);
        for (class, beta) in
            [(ConstraintClass::FiniteU, 2.5), (ConstraintClass::UInfinity, 1.2)]
        {
            let graph = ConfigGraph::new(&lat, 2, class).unwrap();
            let samples = 6000u64;
            let cfg =
                PathEnsembleConfig { beta, samples, seed: 23, constraint: class };
            let mut verified = 0usize;
            for idx in 0..samples {
                let (bundle, flags) = sample_bundle(&lat, 2, &cfg, idx).unwrap();
                let admissible = match class {
                    ConstraintClass::FiniteU => flags.in_d,
                    ConstraintClass::UInfinity => flags.in_d_infinity,
                };
                let Some(perm) = flags.permutation else { continue };
                if !admissible {
                    continue;
                }
                let allowed =
                    graph.allowed_permutations(&initial_config(&bundle)).unwrap();
                assert!(
                    allowed.contains(&perm),
                    "sampled periodicity permutation {perm:?} not reachable"
                );
                verified += 1;
            }
            assert!(verified > 20, "too few admissible periodic samples ({verified})");
        }
    }

    #[test]
    fn support_tables_cover_acceptance_instances() {
        let open = ConfigGraph::new(
            &chain(4, Boundary::Open),
            3,
            ConstraintClass::UInfinity,
        )
        .unwrap();
        let support = open.cycle_type_support().unwrap();
        assert_eq!(support.into_iter().collect::<Vec<_>>(), vec![vec![1, 1, 1]]);

        let ring = ConfigGraph::new(
            &chain(4, Boundary::Periodic),
            3,
            ConstraintClass::UInfinity,
        )
        .unwrap();
        let support = ring.cycle_type_support().unwrap();
        assert!(support.contains(&vec![1, 1, 1]) && support.contains(&vec![3]));
        assert!(
            !support.contains(&vec![2, 1]),
            "a lone transposition would need two electrons to pass on the ring"
        );
    }

    #[test]
    fn guards_reject_oversized_instances() {
        let lat = chain(8, Boundary::Open);
        let graph =
            ConfigGraph::with_node_cap(&lat, 3, ConstraintClass::FiniteU, 50).unwrap();
        let base = ElectronConfig::new(vec![up(0), up(1), up(2)]);
        assert!(matches!(
            graph.allowed_permutations(&base),
            Err(ConfigGraphError::GraphTooLarge(50))
        ));

        let wide = chain(16, Boundary::Open);
        assert!(matches!(
            ConfigGraph::new(&wide, 13, ConstraintClass::FiniteU),
            Err(ConfigGraphError::KeyOverflow { .. })
        ));
        assert!(matches!(
            ConfigGraph::new(&lat, 9, ConstraintClass::UInfinity),
            Err(ConfigGraphError::CapacityExceeded { .. })
        ));
        assert!(matches!(
            ConfigGraph::new(&lat, 0, ConstraintClass::FiniteU),
            Err(ConfigGraphError::EmptyConfig)
        ));

        let graph = ConfigGraph::new(&lat, 2, ConstraintClass::UInfinity).unwrap();
        assert!(matches!(
            graph.allowed_permutations(&ElectronConfig::new(vec![up(0), down(0)])),
            Err(ConfigGraphError::ConstraintViolated(ConstraintClass::UInfinity))
        ));
        assert!(matches!(
            graph.allowed_permutations(&ElectronConfig::new(vec![up(0), up(99)])),
            Err(ConfigGraphError::SiteOutOfRange(99))
        ));
    }

    #[test]
    fn signs_match_the_transposition_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 2..7usize {
            let mut perm: Vec<usize> = (0..n).collect();
            let mut parity = 1i8;
            for _ in 0..40 {
                let a = rng.random_range(0..n);
                let b = rng.random_range(0..n);
                if a != b {
                    perm.swap(a, b);
                    parity = -parity;
                }
                assert_eq!(permutation_sign(&perm), parity);
                let t = cycle_type(&perm);
                assert_eq!(t.iter().sum::<usize>(), n);
                assert!(t.windows(2).all(|w| w[0] >= w[1]));
                let from_type =
                    if (n - t.len()) % 2 == 0 { 1 } else { -1 };
                assert_eq!(from_type, parity);
            }
        }
    }

    proptest! {
        #[test]
        fn hardcore_membership_implies_pauli(sites in proptest::collection::vec(0usize..6, 1..5), spins in proptest::collection::vec(proptest::bool::ANY, 4)) {
            let points: Vec<Point> = sites
                .iter()
                .zip(spins.iter().cycle())
                .map(|(&site, &s)| Point { site, spin: if s { Spin::Up } else { Spin::Down } })
                .collect();
            let config = ElectronConfig::new(points);
            prop_assert!(!config.hardcore_distinct() || config.pauli_distinct());
        }
    }
}
