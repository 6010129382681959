//! Thermal expectation values from dense spectra.
//!
//! The magnetic field enters only through the conserved total spin, so the
//! Hamiltonian is diagonalized once per (n_↑, n_↓) sector at b = 0 and the
//! field is applied analytically: Z_m(β, b) = e^{2βbm} Z_m(β, 0).  A direct
//! route that diagonalizes H with the field included is kept alongside as a
//! cross-check.

use super::basis::{BasisKind, FermionBasis};
use super::dense::HermitianMatrix;
use super::hubbard::{build_hubbard_on, EdgePhases};
use super::{EdError, ModelParams};
use crate::lattice::Lattice;

/// Zero-field eigenvalues of one total-spin sector.
#[derive(Clone, Debug)]
pub struct Sector {
    /// 2m = n_↑ − n_↓ for the sector.
    pub twice_m: i32,
    /// Ascending eigenvalues of the b = 0 Hamiltonian on the sector.
    pub evals: Vec<f64>,
}

/// All spin sectors of an N-electron model at b = 0.
#[derive(Clone, Debug)]
pub struct SectorSpectra {
    n_elec: usize,
    sectors: Vec<Sector>,
}

/// Partition function and magnetization at one (β, b) point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThermalPoint {
    pub z: f64,
    pub s3: f64,
}

impl SectorSpectra {
    pub fn new(n_elec: usize, sectors: Vec<Sector>) -> Self {
        Self { n_elec, sectors }
    }

    pub fn n_elec(&self) -> usize {
        self.n_elec
    }

    pub fn sectors(&self) -> &[Sector] {
        &self.sectors
    }

    /// Ground-state energy across sectors at b = 0.
    pub fn ground_energy(&self) -> f64 {
        self.sectors
            .iter()
            .flat_map(|s| s.evals.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    /// Z(β, b) = Σ_m e^{2βbm} Σ_E e^{−βE}; exponentials are shifted by the
    /// global ground energy for stability and the factor restored at the end.
    pub fn z(&self, beta: f64, b: f64) -> f64 {
        let e0 = self.ground_energy();
        let mut total = 0.0;
        for s in &self.sectors {
            let boltz: f64 = s.evals.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
            total += (beta * b * s.twice_m as f64).exp() * boltz;
        }
        total * (-beta * e0).exp()
    }

    /// Zero-field partition function of the sector with the given 2m, if any.
    pub fn sector_z(&self, twice_m: i32, beta: f64) -> Option<f64> {
        self.sectors
            .iter()
            .find(|s| s.twice_m == twice_m)
            .map(|s| s.evals.iter().map(|&e| (-beta * e).exp()).sum())
    }

    /// Thermal magnetization ⟨S³⟩ at (β, b).
    pub fn s3(&self, beta: f64, b: f64) -> f64 {
        let e0 = self.ground_energy();
        let mut num = 0.0;
        let mut den = 0.0;
        for s in &self.sectors {
            let boltz: f64 = s.evals.iter().map(|&e| (-beta * (e - e0)).exp()).sum();
            let w = (beta * b * s.twice_m as f64).exp() * boltz;
            num += 0.5 * s.twice_m as f64 * w;
            den += w;
        }
        num / den
    }

    /// ⟨S³⟩ − (N/2)·tanh(βb): the slack in the free-spin magnetization
    /// bound.  Positive means the interacting system is more polarized than
    /// N independent spins in the same field.
    pub fn al_margin(&self, beta: f64, b: f64) -> f64 {
        self.s3(beta, b) - 0.5 * self.n_elec as f64 * (beta * b).tanh()
    }

    pub fn thermal_point(&self, beta: f64, b: f64) -> ThermalPoint {
        ThermalPoint { z: self.z(beta, b), s3: self.s3(beta, b) }
    }
}

/// Diagonalizes the Hubbard model sector by sector at b = 0.
///
/// Any field value in `params` is ignored here; apply it through
/// [`SectorSpectra::z`].  At b = 0 the spectrum is symmetric under m ↔ −m,
/// so only m ≥ 0 sectors are solved and the rest mirrored.
pub fn hubbard_sector_spectra(
    lattice: &Lattice,
    params: &ModelParams,
    n_elec: usize,
    kind: BasisKind,
    phases: Option<&EdgePhases>,
) -> Result<SectorSpectra, EdError> {
    let zero_field = ModelParams { b: 0.0, ..params.clone() };
    let n_sites = lattice.n_sites();
    let mut sectors = Vec::new();
    for n_up in 0..=n_elec {
        let n_down = n_elec - n_up;
        let twice_m = n_up as i32 - n_down as i32;
        if twice_m < 0 {
            continue; // mirrored below
        }
        let basis = match FermionBasis::sector(n_sites, n_up, n_down, kind) {
            Ok(b) => b,
            Err(EdError::EmptyBasis { .. } | EdError::BadElectronCount { .. }) => continue,
            Err(e) => return Err(e),
        };
        let h = build_hubbard_on(lattice, &zero_field, &basis, phases)?;
        let evals = h.eigenvalues();
        if twice_m > 0 {
            sectors.push(Sector { twice_m: -twice_m, evals: evals.clone() });
        }
        sectors.push(Sector { twice_m, evals });
    }
    if sectors.is_empty() {
        return Err(EdError::EmptyBasis { n: n_elec, sites: n_sites });
    }
    sectors.sort_by_key(|s| s.twice_m);
    Ok(SectorSpectra::new(n_elec, sectors))
}

/// S³ eigenvalues of every basis state, in basis order.
pub fn s3_diagonal(basis: &FermionBasis) -> Vec<f64> {
    basis
        .states()
        .iter()
        .map(|&s| {
            let (up, down) = basis.spin_counts(s);
            0.5 * (up as f64 - down as f64)
        })
        .collect()
}

/// S³ eigenvalues on a fermion ⊗ boson product basis (fermion-major).
pub fn product_s3_diagonal(basis: &FermionBasis, boson_dim: usize) -> Vec<f64> {
    s3_diagonal(basis)
        .into_iter()
        .flat_map(|m| std::iter::repeat_n(m, boson_dim))
        .collect()
}

/// Direct thermal evaluation of a Hamiltonian that already contains every
/// term (field included): Z = Tr e^{−βH} and ⟨S³⟩ via eigenvectors.
/// `s3_diag` holds the S³ eigenvalue of each basis state.
pub fn thermal(h: &HermitianMatrix, s3_diag: &[f64], beta: f64) -> ThermalPoint {
    assert_eq!(h.dim(), s3_diag.len(), "S³ diagonal must match the matrix dimension");
    let (evals, vecs) = h.eigen();
    let e0 = evals.first().copied().unwrap_or(0.0);
    let mut z_shifted = 0.0;
    let mut s3_num = 0.0;
    for (k, &e) in evals.iter().enumerate() {
        let w = (-beta * (e - e0)).exp();
        let expect: f64 = vecs
            .column(k)
            .iter()
            .zip(s3_diag)
            .map(|(amp, &m)| amp.norm_sqr() * m)
            .sum();
        z_shifted += w;
        s3_num += w * expect;
    }
    ThermalPoint { z: z_shifted * (-beta * e0).exp(), s3: s3_num / z_shifted }
}
