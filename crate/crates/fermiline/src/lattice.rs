//! Square-lattice graphs `Λ = [−ℓ/2, ℓ/2)^d ∩ Z^d` with open or periodic
//! boundary, neighbor relation from the 1-norm or the max-norm, and a uniform
//! hopping amplitude `t > 0`.
//!
//! Vertices are indexed lexicographically by coordinate tuple, fixed across
//! the whole codebase so matrices and sampled configurations are reproducible
//! bit for bit.  Under periodic closure every vertex has the same total
//! hopping weight `d₀`; on a side-2 torus the two wrap directions reach the
//! same neighbor, which is kept as two distinct bonds so that `d(x)` and the
//! bond count match the infinite-lattice folding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which coordinate norm defines the neighbor relation `‖x − y‖ = 1`.
///
/// `L1` is nearest-neighbor adjacency; `Linf` additionally connects diagonal
/// pairs in dimension ≥ 2.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NeighborNorm {
    #[default]
    L1,
    Linf,
}

/// Boundary handling for the finite box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

/// Build parameters for a lattice graph.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeSpec {
    /// Spatial dimension `d ≥ 1`.
    pub dim: usize,
    /// Even side length `ℓ ≥ 2`; the vertex set is `[−ℓ/2, ℓ/2)^d ∩ Z^d`.
    pub side: i64,
    /// Uniform hopping amplitude on edges, strictly positive.
    pub hopping: f64,
    #[serde(default)]
    pub norm: NeighborNorm,
    #[serde(default)]
    pub boundary: Boundary,
}

#[derive(Debug, Error, PartialEq)]
pub enum LatticeError {
    #[error("lattice dimension must be at least 1")]
    ZeroDimension,
    #[error("side length must be a positive even integer, got {0}")]
    BadSide(i64),
    #[error("hopping amplitude must be strictly positive, got {0}")]
    BadHopping(f64),
    #[error("lattice would have {0} sites, above the supported limit {1}")]
    TooManySites(u128, usize),
    #[error("coordinate {0:?} is not a lattice vertex")]
    UnknownVertex(Vec<i64>),
}

/// One bond of the graph, stored with the unit step taken from `u` to `v`.
///
/// `offset` is the geometric displacement of the hop, not the coordinate
/// difference: a hop across the periodic seam keeps its single-step offset.
/// Distinct wrap directions on a side-2 torus yield distinct bonds between
/// the same vertex pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bond {
    pub u: usize,
    pub v: usize,
    pub offset: Vec<i64>,
}

/// Immutable lattice graph; freely shareable across threads.
#[derive(Clone, Debug)]
pub struct Lattice {
    spec: LatticeSpec,
    coords: Vec<Vec<i64>>,
    /// Per vertex: `(neighbor, t_xy)` with `t_xy` summed over parallel bonds,
    /// sorted by neighbor index.
    neighbors: Vec<Vec<(usize, f64)>>,
    bonds: Vec<Bond>,
    /// `d(x) = Σ_y t_xy`.
    degrees: Vec<f64>,
}

/// Hard cap on the number of sites; dense site matrices stay cheap below it.
const MAX_SITES: usize = 1 << 16;

impl Lattice {
    pub fn build(spec: LatticeSpec) -> Result<Self, LatticeError> {
        if spec.dim == 0 {
            return Err(LatticeError::ZeroDimension);
        }
        if spec.side < 2 || spec.side % 2 != 0 {
            return Err(LatticeError::BadSide(spec.side));
        }
        if !(spec.hopping > 0.0) || !spec.hopping.is_finite() {
            return Err(LatticeError::BadHopping(spec.hopping));
        }
        let n_u128 = (spec.side as u128).pow(spec.dim as u32);
        if n_u128 > MAX_SITES as u128 {
            return Err(LatticeError::TooManySites(n_u128, MAX_SITES));
        }
        let n = n_u128 as usize;

        let mut coords = Vec::with_capacity(n);
        let mut c = vec![-spec.side / 2; spec.dim];
        loop {
            coords.push(c.clone());
            // Lexicographic successor: increment the last axis first.
            let mut axis = spec.dim;
            loop {
                if axis == 0 {
                    break;
                }
                axis -= 1;
                c[axis] += 1;
                if c[axis] < spec.side - spec.side / 2 {
                    break;
                }
                c[axis] = -spec.side / 2;
                if axis == 0 {
                    axis = usize::MAX;
                    break;
                }
            }
            if axis == usize::MAX || coords.len() == n {
                break;
            }
        }
        debug_assert_eq!(coords.len(), n);

        let offsets = unit_offsets(spec.dim, spec.norm);
        let mut bonds = Vec::new();
        let mut neighbors: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for u in 0..n {
            for off in &offsets {
                let mut target = coords[u].clone();
                let mut outside = false;
                for (axis, d) in off.iter().enumerate() {
                    target[axis] += d;
                    let lo = -spec.side / 2;
                    let hi = spec.side - spec.side / 2;
                    if target[axis] < lo || target[axis] >= hi {
                        match spec.boundary {
                            Boundary::Open => {
                                outside = true;
                                break;
                            }
                            Boundary::Periodic => {
                                target[axis] -= spec.side * (target[axis] - lo).div_euclid(spec.side);
                            }
                        }
                    }
                }
                if outside {
                    continue;
                }
                let v = index_of(&spec, &target);
                // Each unordered bond is generated twice, once from each
                // endpoint with reversed offset; keep the copy rooted at the
                // lower index.  On a side-2 torus the offsets ±e reach the
                // same v from the same u and stay distinct bonds.
                if u < v {
                    bonds.push(Bond { u, v, offset: off.clone() });
                }
                match neighbors[u].iter_mut().find(|(w, _)| *w == v) {
                    Some((_, t)) => *t += spec.hopping,
                    None => neighbors[u].push((v, spec.hopping)),
                }
            }
            neighbors[u].sort_by_key(|&(w, _)| w);
        }
        bonds.sort_by(|a, b| (a.u, a.v, &a.offset).cmp(&(b.u, b.v, &b.offset)));

        let degrees = neighbors
            .iter()
            .map(|ns| ns.iter().map(|&(_, t)| t).sum())
            .collect();
        Ok(Lattice { spec, coords, neighbors, bonds, degrees })
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn n_sites(&self) -> usize {
        self.coords.len()
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Coordinate tuple of vertex `x` in lexicographic order.
    pub fn coord(&self, x: usize) -> &[i64] {
        &self.coords[x]
    }

    /// Index of a coordinate tuple, or an error if it lies outside the box.
    pub fn site_index(&self, coord: &[i64]) -> Result<usize, LatticeError> {
        if coord.len() != self.spec.dim {
            return Err(LatticeError::UnknownVertex(coord.to_vec()));
        }
        let lo = -self.spec.side / 2;
        let hi = self.spec.side - self.spec.side / 2;
        if coord.iter().any(|&c| c < lo || c >= hi) {
            return Err(LatticeError::UnknownVertex(coord.to_vec()));
        }
        Ok(index_of(&self.spec, coord))
    }

    /// `(neighbor, t_xy)` pairs of `x`, parallel bonds merged into `t_xy`.
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.neighbors[x]
    }

    /// Total hopping weight `d(x) = Σ_y t_xy`; the holding rate of the jump
    /// process at `x`.
    pub fn degree(&self, x: usize) -> f64 {
        self.degrees[x]
    }

    /// `Some(d₀)` when every vertex has the same total hopping weight.
    pub fn uniform_degree(&self) -> Option<f64> {
        let d0 = self.degrees[0];
        self.degrees
            .iter()
            .all(|&d| (d - d0).abs() == 0.0)
            .then_some(d0)
    }

    /// All bonds, each parallel bond listed separately.
    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    /// Hopping matrix entry `t_xy` (0 when not adjacent).
    pub fn hopping(&self, x: usize, y: usize) -> f64 {
        self.neighbors[x]
            .iter()
            .find(|&&(w, _)| w == y)
            .map_or(0.0, |&(_, t)| t)
    }

    /// True when some vertex pair is connected by more than one bond
    /// (only on side-2 tori).  Constructions that need a unique geometric
    /// displacement per pair refuse such lattices.
    pub fn has_parallel_bonds(&self) -> bool {
        self.bonds.windows(2).any(|w| w[0].u == w[1].u && w[0].v == w[1].v)
    }

    /// Bond index and orientation sign for a hop `x → y`:
    /// `+1` when the bond is stored as `(x, y)`, `−1` for `(y, x)`.
    /// Errors when the pair is not adjacent or has parallel bonds.
    pub fn bond_between(&self, x: usize, y: usize) -> Result<(usize, f64), LatticeError> {
        let (lo, hi, sign) = if x < y { (x, y, 1.0) } else { (y, x, -1.0) };
        let hits: Vec<usize> = self
            .bonds
            .iter()
            .enumerate()
            .filter(|(_, b)| b.u == lo && b.v == hi)
            .map(|(i, _)| i)
            .collect();
        match hits.as_slice() {
            [i] => Ok((*i, sign)),
            _ => Err(LatticeError::UnknownVertex(vec![x as i64, y as i64])),
        }
    }
}

fn index_of(spec: &LatticeSpec, coord: &[i64]) -> usize {
    let mut idx = 0usize;
    for &c in coord {
        idx = idx * spec.side as usize + (c + spec.side / 2) as usize;
    }
    idx
}

fn unit_offsets(dim: usize, norm: NeighborNorm) -> Vec<Vec<i64>> {
    match norm {
        NeighborNorm::L1 => {
            let mut offs = Vec::with_capacity(2 * dim);
            for axis in 0..dim {
                for s in [1i64, -1] {
                    let mut o = vec![0i64; dim];
                    o[axis] = s;
                    offs.push(o);
                }
            }
            offs
        }
        NeighborNorm::Linf => {
            let mut offs = Vec::new();
            let mut o = vec![-1i64; dim];
            loop {
                if o.iter().any(|&d| d != 0) {
                    offs.push(o.clone());
                }
                let mut axis = dim;
                loop {
                    if axis == 0 {
                        return offs;
                    }
                    axis -= 1;
                    o[axis] += 1;
                    if o[axis] <= 1 {
                        break;
                    }
                    o[axis] = -1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dim: usize, side: i64, boundary: Boundary) -> LatticeSpec {
        LatticeSpec { dim, side, hopping: 1.0, norm: NeighborNorm::L1, boundary }
    }

    #[test]
    fn open_chain_of_four() {
        let lat = Lattice::build(spec(1, 4, Boundary::Open)).unwrap();
        assert_eq!(lat.n_sites(), 4);
        let coords: Vec<i64> = (0..4).map(|i| lat.coord(i)[0]).collect();
        assert_eq!(coords, vec![-2, -1, 0, 1]);
        assert_eq!(lat.bonds().len(), 3);
        let degs: Vec<f64> = (0..4).map(|i| lat.degree(i)).collect();
        assert_eq!(degs, vec![1.0, 2.0, 2.0, 1.0]);
        assert_eq!(lat.uniform_degree(), None);
    }

    #[test]
    fn periodic_chain_of_four() {
        let lat = Lattice::build(spec(1, 4, Boundary::Periodic)).unwrap();
        assert_eq!(lat.bonds().len(), 4);
        assert_eq!(lat.uniform_degree(), Some(2.0));
        // Wrap bond connects the box faces with coordinate difference ℓ−1.
        let wrap: Vec<&Bond> = lat
            .bonds()
            .iter()
            .filter(|b| (lat.coord(b.u)[0] - lat.coord(b.v)[0]).abs() != 1)
            .collect();
        assert_eq!(wrap.len(), 1);
        assert_eq!((lat.coord(wrap[0].u)[0] - lat.coord(wrap[0].v)[0]).abs(), 3);
    }

    #[test]
    fn two_by_two_open_is_a_four_cycle() {
        let lat = Lattice::build(spec(2, 2, Boundary::Open)).unwrap();
        assert_eq!(lat.n_sites(), 4);
        assert_eq!(lat.bonds().len(), 4);
        for x in 0..4 {
            assert_eq!(lat.degree(x), 2.0);
            assert_eq!(lat.neighbors(x).len(), 2);
        }
    }

    #[test]
    fn chain_bond_counts() {
        for side in [2i64, 4, 6, 8] {
            let open = Lattice::build(spec(1, side, Boundary::Open)).unwrap();
            assert_eq!(open.bonds().len(), side as usize - 1, "open ℓ={side}");
            let per = Lattice::build(spec(1, side, Boundary::Periodic)).unwrap();
            assert_eq!(per.bonds().len(), side as usize, "periodic ℓ={side}");
        }
    }

    #[test]
    fn side_two_torus_has_doubled_bonds() {
        let lat = Lattice::build(spec(1, 2, Boundary::Periodic)).unwrap();
        assert_eq!(lat.bonds().len(), 2);
        assert!(lat.has_parallel_bonds());
        assert_eq!(lat.hopping(0, 1), 2.0);
        assert_eq!(lat.uniform_degree(), Some(2.0));
        assert!(lat.bond_between(0, 1).is_err());
        let big = Lattice::build(spec(1, 4, Boundary::Periodic)).unwrap();
        assert!(!big.has_parallel_bonds());
        assert!(big.bond_between(0, 1).is_ok());
    }

    #[test]
    fn linf_includes_diagonals_l1_does_not() {
        let mut s = spec(2, 4, Boundary::Open);
        let l1 = Lattice::build(s.clone()).unwrap();
        s.norm = NeighborNorm::Linf;
        let linf = Lattice::build(s).unwrap();
        // Brute-force check of the neighbor relation against the norms.
        for x in 0..l1.n_sites() {
            for y in 0..l1.n_sites() {
                if x == y {
                    continue;
                }
                let dx: Vec<i64> =
                    (0..2).map(|j| (l1.coord(x)[j] - l1.coord(y)[j]).abs()).collect();
                let l1_dist: i64 = dx.iter().sum();
                let linf_dist: i64 = *dx.iter().max().unwrap();
                assert_eq!(l1.hopping(x, y) > 0.0, l1_dist == 1);
                assert_eq!(linf.hopping(x, y) > 0.0, linf_dist == 1);
            }
        }
        let diag = [l1.site_index(&[0, 0]).unwrap(), l1.site_index(&[1, 1]).unwrap()];
        assert_eq!(l1.hopping(diag[0], diag[1]), 0.0);
        assert_eq!(linf.hopping(diag[0], diag[1]), 1.0);
    }

    #[test]
    fn hopping_matrix_is_symmetric() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            for norm in [NeighborNorm::L1, NeighborNorm::Linf] {
                let lat = Lattice::build(LatticeSpec {
                    dim: 2,
                    side: 4,
                    hopping: 0.7,
                    norm,
                    boundary,
                })
                .unwrap();
                for x in 0..lat.n_sites() {
                    for y in 0..lat.n_sites() {
                        assert_eq!(lat.hopping(x, y), lat.hopping(y, x));
                    }
                    assert_eq!(
                        lat.degree(x),
                        lat.neighbors(x).iter().map(|&(_, t)| t).sum::<f64>()
                    );
                }
            }
        }
    }

    #[test]
    fn periodic_degree_is_constant() {
        for (dim, side) in [(1usize, 6i64), (2, 4), (3, 2)] {
            let lat = Lattice::build(spec(dim, side, Boundary::Periodic)).unwrap();
            let d0 = lat.uniform_degree().expect("periodic degree must be uniform");
            assert_eq!(d0, 2.0 * dim as f64);
        }
    }

    #[test]
    fn rejects_bad_specs() {
        assert_eq!(
            Lattice::build(spec(0, 4, Boundary::Open)).unwrap_err(),
            LatticeError::ZeroDimension
        );
        assert_eq!(
            Lattice::build(spec(1, 3, Boundary::Open)).unwrap_err(),
            LatticeError::BadSide(3)
        );
        assert_eq!(
            Lattice::build(spec(1, 0, Boundary::Open)).unwrap_err(),
            LatticeError::BadSide(0)
        );
        let mut s = spec(1, 4, Boundary::Open);
        s.hopping = 0.0;
        assert_eq!(Lattice::build(s).unwrap_err(), LatticeError::BadHopping(0.0));
    }

    #[test]
    fn site_index_round_trips() {
        let lat = Lattice::build(spec(2, 4, Boundary::Open)).unwrap();
        for x in 0..lat.n_sites() {
            assert_eq!(lat.site_index(lat.coord(x)).unwrap(), x);
        }
        assert!(lat.site_index(&[2, 0]).is_err());
        assert!(lat.site_index(&[0]).is_err());
        // Lexicographic order of the coordinate tuples.
        for x in 1..lat.n_sites() {
            assert!(lat.coord(x - 1) < lat.coord(x));
        }
    }
}
