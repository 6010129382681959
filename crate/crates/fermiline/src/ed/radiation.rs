//! Electrons minimally coupled to a quantized radiation field in the
//! single-mode regime.
//!
//! The field lives on the momentum grid (2π/L)ℤ³ with a hard cutoff κ; when
//! κ < 2π/L only k = 0 survives, carrying two polarization modes of
//! frequency ω(0) = m₀ with the zero-momentum polarization convention
//! ε_j(0, λ) = 1/√3.  The vector potential is then constant in space and
//! each hop x ← y acquires the Peierls factor
//!
//! `exp{ i Σ_λ c_xy (a_λ + a†_λ)/√2 }`,  `c_xy = ϱ(0) m₀^{−1/2} (1/√3) Σ_j (y−x)_j`,
//!
//! where (y − x) is the geometric unit step of the bond.  Per polarization
//! |c_xy| ≤ ϱ(0)/√m₀, the generic coupling bound ϱ(k)/√ω(k) at k = 0.

use super::basis::{annihilate, create, orbital, BasisKind, BosonBasis, BosonCap, FermionBasis};
use super::dense::{HermitianMatrix, DENSE_CAP};
use super::thermal::{Sector, SectorSpectra};
use super::{EdError, ModelParams, PhotonParams};
use crate::lattice::Lattice;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Polarization modes of the k = 0 photon.
const N_POLARIZATIONS: usize = 2;

/// ε_j(0, λ) for every component j and both polarizations.
const ZERO_MODE_POLARIZATION: f64 = 0.577_350_269_189_625_8; // 1/√3

/// Checks the single-mode condition κ < 2π/L and returns the per-unit-step
/// coupling constant c = ϱ(0)/√(3 m₀).
fn single_mode_coupling(photons: &PhotonParams) -> Result<f64, EdError> {
    photons.validate()?;
    let limit = 2.0 * PI / photons.box_side;
    if photons.cutoff >= limit {
        return Err(EdError::MultiModeCutoff { cutoff: photons.cutoff, limit });
    }
    Ok(photons.coupling * ZERO_MODE_POLARIZATION / photons.zero_mode_mass.sqrt())
}

/// `exp{i s c Σ_λ (a_λ + a†_λ)/√2}` on the photon basis, via the
/// eigendecomposition of the real symmetric exponent.
fn peierls_operator(bosons: &BosonBasis, step_sum: i64, c: f64) -> DMatrix<Complex64> {
    let n = bosons.dim();
    let mut phi = DMatrix::<f64>::zeros(n, n);
    let amp = step_sum as f64 * c / 2f64.sqrt();
    for p in 0..n {
        for lambda in 0..N_POLARIZATIONS {
            if let Some((q, m)) = bosons.raise(p, lambda) {
                phi[(q, p)] += amp * m;
            }
            if let Some((q, m)) = bosons.lower(p, lambda) {
                phi[(q, p)] += amp * m;
            }
        }
    }
    let eig = phi.symmetric_eigen();
    let phases: Vec<Complex64> =
        eig.eigenvalues.iter().map(|&l| Complex64::new(0.0, l).exp()).collect();
    let v = eig.eigenvectors.map(Complex64::from);
    &v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases)) * v.adjoint()
}

/// Builds the Hubbard model coupled to the k = 0 radiation mode pair on
/// `basis ⊗` a truncated two-mode photon basis (fermion-major).
pub fn build_rad_single_mode(
    lattice: &Lattice,
    params: &ModelParams,
    photons: &PhotonParams,
    basis: &FermionBasis,
) -> Result<(BosonBasis, HermitianMatrix), EdError> {
    params.validate(lattice.n_sites())?;
    if params.u.is_infinite() && basis.kind() != BasisKind::Gutzwiller {
        return Err(EdError::BadParams(
            "infinite U needs the hard-core basis; use BasisKind::Gutzwiller".into(),
        ));
    }
    let c = single_mode_coupling(photons)?;
    let bosons = BosonBasis::build(N_POLARIZATIONS, BosonCap::PerMode(photons.n_max));
    let nf = basis.dim();
    let nb = bosons.dim();
    let dim = nf * nb;
    if dim > DENSE_CAP {
        return Err(EdError::DimensionTooLarge { dim, cap: DENSE_CAP });
    }
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    // Electron-diagonal terms and the free field.
    for (f, &state) in basis.states().iter().enumerate() {
        let occ = basis.occupations(state);
        let mut diag = params.offsite_energy(&occ);
        if params.u.is_finite() {
            diag += params.u * basis.double_occupancy(state) as f64;
        }
        let (n_up, n_down) = basis.spin_counts(state);
        diag -= params.b * (n_up as f64 - n_down as f64);
        for p in 0..nb {
            let row = f * nb + p;
            h[(row, row)] += Complex64::from(
                diag + photons.zero_mode_mass * bosons.total_quanta(p) as f64,
            );
        }
    }
    // Peierls-dressed hopping, bond by bond so parallel bonds keep their
    // individual (opposite) step sums.
    let t = lattice.spec().hopping;
    let mut cache: HashMap<i64, DMatrix<Complex64>> = HashMap::new();
    for bond in lattice.bonds() {
        let s: i64 = bond.offset.iter().sum();
        for (x, y, step) in [(bond.u, bond.v, s), (bond.v, bond.u, -s)] {
            let op = cache
                .entry(step)
                .or_insert_with(|| peierls_operator(&bosons, step, c))
                .clone();
            for (f, &state) in basis.states().iter().enumerate() {
                for down in [false, true] {
                    let Some((mid, s1)) = annihilate(state, orbital(y, down)) else {
                        continue;
                    };
                    let Some((dst, s2)) = create(mid, orbital(x, down)) else {
                        continue;
                    };
                    let Some(fp) = basis.index_of(dst) else {
                        continue;
                    };
                    let amp = Complex64::from(-t * s1 * s2);
                    for p in 0..nb {
                        for q in 0..nb {
                            let v = op[(q, p)];
                            if v != Complex64::ZERO {
                                h[(fp * nb + q, f * nb + p)] += amp * v;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((bosons, HermitianMatrix::new_complex(h)?))
}

/// Spin-sector spectra of the single-mode radiation model at b = 0; photons
/// are spin-blind, so m ↔ −m sectors mirror exactly as in the other
/// families.
pub fn radiation_sector_spectra(
    lattice: &Lattice,
    params: &ModelParams,
    photons: &PhotonParams,
    n_elec: usize,
    kind: BasisKind,
) -> Result<SectorSpectra, EdError> {
    let zero_field = ModelParams { b: 0.0, ..params.clone() };
    let n_sites = lattice.n_sites();
    let mut sectors = Vec::new();
    for n_up in 0..=n_elec {
        let n_down = n_elec - n_up;
        let twice_m = n_up as i32 - n_down as i32;
        if twice_m < 0 {
            continue;
        }
        let basis = match FermionBasis::sector(n_sites, n_up, n_down, kind) {
            Ok(b) => b,
            Err(EdError::EmptyBasis { .. } | EdError::BadElectronCount { .. }) => continue,
            Err(e) => return Err(e),
        };
        let (_, h) = build_rad_single_mode(lattice, &zero_field, photons, &basis)?;
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
