//! Dense exact diagonalization for small interacting lattice models.
//!
//! Builds the N-electron Hubbard Hamiltonian (optionally with magnetic bond
//! phases and a Zeeman field), its hard-core projection, the Holstein
//! electron-phonon extension, and a single-photon-mode gauge coupling, all as
//! explicit Hermitian matrices on occupation-number bases.  Everything is
//! solved with dense eigendecompositions; construction refuses dimensions
//! above [`DENSE_CAP`] instead of approximating, because these spectra serve
//! as the exact oracle for the Monte Carlo estimators.

mod basis;
mod dense;
mod holstein;
mod hubbard;
mod radiation;
mod resolvent;
mod thermal;

pub use basis::{BasisKind, BosonBasis, BosonCap, FermionBasis};
pub use dense::{op_norm, solve_shifted, HermitianMatrix, DENSE_CAP};
pub use holstein::{
    build_holstein_hubbard, build_lang_firsov, holstein_sector_spectra, lang_firsov_effective,
    LangFirsov,
};
pub use hubbard::{build_hubbard, build_hubbard_on, gutzwiller_project, EdgePhases};
pub use radiation::{build_rad_single_mode, radiation_sector_spectra};
pub use resolvent::resolvent_gap;
pub use thermal::{
    hubbard_sector_spectra, product_s3_diagonal, s3_diagonal, thermal, Sector, SectorSpectra,
    ThermalPoint,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Electronic model parameters shared by every Hamiltonian family.
///
/// The Hamiltonian is
/// `H = −Σ_{xy,σ} t_xy e^{iα_xy} c†_xσ c_yσ + U Σ_x n_x↑ n_x↓
///      + Σ_{x≠y} U_xy n_x n_y − 2b S³`,
/// with the off-site double sum counted literally (each unordered pair
/// contributes twice).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelParams {
    /// On-site repulsion U.
    pub u: f64,
    /// Optional off-site couplings U_xy (symmetric, zero diagonal, |Λ|×|Λ|).
    #[serde(default)]
    pub u_offsite: Option<Vec<Vec<f64>>>,
    /// Zeeman field strength; enters as −2bS³, must be ≥ 0.
    pub b: f64,
    /// Inverse temperature for thermal evaluations, > 0.
    pub beta: f64,
    /// Spectral shift for resolvent comparisons; must be non-real there.
    #[serde(default)]
    pub z: Option<Complex64>,
}

impl ModelParams {
    pub fn validate(&self, n_sites: usize) -> Result<(), EdError> {
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return Err(EdError::BadParams(format!("field b must be ≥ 0, got {}", self.b)));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(EdError::BadParams(format!("beta must be > 0, got {}", self.beta)));
        }
        if let Some(u) = &self.u_offsite {
            if u.len() != n_sites || u.iter().any(|row| row.len() != n_sites) {
                return Err(EdError::BadOffsite("matrix shape must be |Λ|×|Λ|".into()));
            }
            for x in 0..n_sites {
                if u[x][x] != 0.0 {
                    return Err(EdError::BadOffsite(format!("diagonal entry at site {x} must be 0")));
                }
                for y in 0..n_sites {
                    if u[x][y] != u[y][x] {
                        return Err(EdError::BadOffsite(format!("asymmetric at ({x}, {y})")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Off-site energy of an occupation vector: `Σ_{x≠y} U_xy n_x n_y`.
    pub(crate) fn offsite_energy(&self, occ: &[u8]) -> f64 {
        match &self.u_offsite {
            None => 0.0,
            Some(u) => {
                let mut e = 0.0;
                for (x, row) in u.iter().enumerate() {
                    for (y, &uxy) in row.iter().enumerate() {
                        if x != y {
                            e += uxy * occ[x] as f64 * occ[y] as f64;
                        }
                    }
                }
                e
            }
        }
    }
}

/// Dispersionless phonon field parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhononParams {
    /// Phonon energy ω > 0.
    pub omega: f64,
    /// Symmetric electron-phonon couplings g_xy (|Λ|×|Λ|).
    pub g: Vec<Vec<f64>>,
    /// Truncation of the phonon occupation basis.
    pub n_max: u8,
}

impl PhononParams {
    pub fn validate(&self, n_sites: usize) -> Result<(), EdError> {
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(EdError::BadParams(format!("omega must be > 0, got {}", self.omega)));
        }
        if self.g.len() != n_sites || self.g.iter().any(|row| row.len() != n_sites) {
            return Err(EdError::BadParams("coupling matrix g must be |Λ|×|Λ|".into()));
        }
        for x in 0..n_sites {
            for y in 0..n_sites {
                if self.g[x][y] != self.g[y][x] {
                    return Err(EdError::BadParams(format!("g asymmetric at ({x}, {y})")));
                }
            }
        }
        Ok(())
    }

    /// Diagonal coupling helper: g_xy = g·δ_xy.
    pub fn diagonal(n_sites: usize, omega: f64, g: f64, n_max: u8) -> Self {
        let mut m = vec![vec![0.0; n_sites]; n_sites];
        for (x, row) in m.iter_mut().enumerate() {
            row[x] = g;
        }
        Self { omega, g: m, n_max }
    }
}

/// Quantized radiation field parameters (single-mode regime).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhotonParams {
    /// Side of the momentum box; the grid is (2π/L)Z³.
    pub box_side: f64,
    /// Momentum cutoff; only |k| ≤ κ modes couple.
    pub cutoff: f64,
    /// Zero-mode frequency ω(0) = m₀ > 0.
    pub zero_mode_mass: f64,
    /// Per-mode photon occupation truncation.
    pub n_max: u8,
    /// Overall coupling scale ϱ(0); 0 decouples the field.
    pub coupling: f64,
}

impl PhotonParams {
    pub fn validate(&self) -> Result<(), EdError> {
        if !(self.box_side > 0.0) || !(self.cutoff > 0.0) || !(self.zero_mode_mass > 0.0) {
            return Err(EdError::BadParams(
                "box side, cutoff, and zero-mode mass must all be > 0".into(),
            ));
        }
        if !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(EdError::BadParams(format!(
                "coupling scale must be ≥ 0, got {}",
                self.coupling
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EdError {
    #[error("electron count {n} outside 1..={max}")]
    BadElectronCount { n: usize, max: usize },
    #[error("basis is empty: no {n}-electron state on {sites} sites satisfies the constraint")]
    EmptyBasis { n: usize, sites: usize },
    #[error("matrix dimension {dim} exceeds the dense cap {cap}")]
    DimensionTooLarge { dim: usize, cap: usize },
    #[error("phase assigned to non-adjacent pair ({0}, {1})")]
    PhaseOnNonEdge(usize, usize),
    #[error("no phase assigned to edge ({0}, {1})")]
    MissingPhase(usize, usize),
    #[error("bond phases need a unique bond per vertex pair; this lattice has parallel bonds")]
    ParallelBonds,
    #[error("off-site coupling matrix invalid: {0}")]
    BadOffsite(String),
    #[error("invalid parameter: {0}")]
    BadParams(String),
    #[error("spectral shift z must be non-real")]
    RealShift,
    #[error("cutoff {cutoff} admits nonzero momenta (needs κ < 2π/L = {limit}); only the single-mode construction is supported")]
    MultiModeCutoff { cutoff: f64, limit: f64 },
}
