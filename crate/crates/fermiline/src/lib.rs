//! World-line Monte Carlo and exact-diagonalization toolkit for small
//! Hubbard-type lattice models.
//!
//! The crate simulates N interacting lattice electrons in imaginary time
//! `[0, β]` as continuous-time jump processes, decomposes the resulting
//! trajectory bundles into closed space-time loops, and integrates out
//! optional Bose fields (Holstein phonons, a single massive photon mode)
//! into Gaussian influence weights.  Every stochastic estimator is checked
//! against a dense exact-diagonalization oracle that is feasible at desk
//! scale (matrix dimension ≤ 4096).
//!
//! Module map:
//! - [`lattice`]: square-lattice graphs with open or periodic closure.
//! - [`ed`]: dense many-body Hamiltonians, spectra, and thermal traces.
//! - [`configgraph`]: reachability of labeled electron configurations and
//!   the permutations realizable by single-electron hops.
//! - [`worldline`]: continuous-time path sampling and path functionals.
//! - [`loops`]: loop tracing, winding numbers, parities, spin flips.
//! - [`influence`]: Gaussian influence weights for jump-coupled Bose fields.
//! - [`estimators`]: Monte Carlo partition estimators and exact verifiers.
//! - [`rng`]: deterministic substream scheme used by all samplers.

pub mod configgraph;
pub mod ed;
pub mod estimators;
pub mod influence;
pub mod lattice;
pub mod loops;
pub mod rng;
pub mod worldline;

pub use lattice::{Boundary, Lattice, LatticeSpec, NeighborNorm};

/// Electron spin, serialized as ±1 everywhere (CSV, configs, estimators).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub enum Spin {
    #[serde(rename = "1")]
    Up,
    #[serde(rename = "-1")]
    Down,
}

impl Spin {
    pub fn sign(self) -> i8 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub fn from_sign(s: i8) -> Self {
        if s >= 0 {
            Spin::Up
        } else {
            Spin::Down
        }
    }
}
