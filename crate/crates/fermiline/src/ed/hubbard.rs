//! Hubbard Hamiltonians on occupation bases: hopping with optional magnetic
//! bond phases, on-site and off-site density interactions, a Zeeman field,
//! and the hard-core (infinite-U) projection.

use super::basis::{annihilate, create, orbital, BasisKind, FermionBasis};
use super::dense::{HermitianMatrix, DENSE_CAP};
use super::{EdError, ModelParams};
use crate::lattice::Lattice;
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Antisymmetric bond phases α_xy for the hopping term
/// `−t_xy e^{iα_xy} c†_xσ c_yσ`.
///
/// Phases are stored per unordered edge with the sign convention
/// α_yx = −α_xy.  Lattices with parallel bonds are rejected, since a phase
/// per vertex pair cannot distinguish the two bonds.
#[derive(Clone, Debug, Default)]
pub struct EdgePhases {
    phases: BTreeMap<(usize, usize), f64>,
}

impl EdgePhases {
    /// Zero phase on every edge of the lattice.
    pub fn zero(lattice: &Lattice) -> Result<Self, EdError> {
        if lattice.has_parallel_bonds() {
            return Err(EdError::ParallelBonds);
        }
        let phases = lattice.bonds().iter().map(|b| ((b.u, b.v), 0.0)).collect();
        Ok(Self { phases })
    }

    /// Phases from explicit directed assignments (x, y, α) meaning the hop
    /// x←y carries `e^{iα}` on the `c†_x c_y` amplitude.
    pub fn from_assignments(
        lattice: &Lattice,
        assignments: &[(usize, usize, f64)],
    ) -> Result<Self, EdError> {
        if lattice.has_parallel_bonds() {
            return Err(EdError::ParallelBonds);
        }
        let mut phases = BTreeMap::new();
        for &(x, y, alpha) in assignments {
            if lattice.hopping(x, y) == 0.0 || x == y {
                return Err(EdError::PhaseOnNonEdge(x, y));
            }
            let (key, value) = if x < y { ((x, y), alpha) } else { ((y, x), -alpha) };
            if phases.insert(key, value).is_some() {
                return Err(EdError::BadParams(format!(
                    "edge ({}, {}) assigned a phase twice",
                    key.0, key.1
                )));
            }
        }
        Ok(Self { phases })
    }

    /// Phase α_xy for the `c†_xσ c_yσ` amplitude; errors on unassigned edges
    /// so a partial assignment cannot silently act as zero flux.
    pub fn phase(&self, x: usize, y: usize) -> Result<f64, EdError> {
        let (key, sign) = if x < y { ((x, y), 1.0) } else { ((y, x), -1.0) };
        self.phases
            .get(&key)
            .map(|&a| sign * a)
            .ok_or(EdError::MissingPhase(key.0, key.1))
    }
}

/// Builds the N-electron Hubbard Hamiltonian together with its basis.
///
/// `H = −Σ_{xy,σ} t_xy e^{iα_xy} c†_xσ c_yσ + U Σ_x n_x↑ n_x↓
///      + Σ_{x≠y} U_xy n_x n_y − 2b S³`.
///
/// `U = ∞` is accepted only with the hard-core basis, where the on-site term
/// vanishes identically.
pub fn build_hubbard(
    lattice: &Lattice,
    params: &ModelParams,
    n_elec: usize,
    kind: BasisKind,
    phases: Option<&EdgePhases>,
) -> Result<(FermionBasis, HermitianMatrix), EdError> {
    let basis = FermionBasis::build(lattice.n_sites(), n_elec, kind)?;
    let h = build_hubbard_on(lattice, params, &basis, phases)?;
    Ok((basis, h))
}

/// Builds the Hubbard Hamiltonian on an explicit basis (full, hard-core, or
/// a fixed-spin sector).
pub fn build_hubbard_on(
    lattice: &Lattice,
    params: &ModelParams,
    basis: &FermionBasis,
    phases: Option<&EdgePhases>,
) -> Result<HermitianMatrix, EdError> {
    params.validate(lattice.n_sites())?;
    if params.u.is_infinite() {
        if basis.kind() != BasisKind::Gutzwiller {
            return Err(EdError::BadParams(
                "infinite U needs the hard-core basis; use BasisKind::Gutzwiller".into(),
            ));
        }
    } else if !params.u.is_finite() {
        return Err(EdError::BadParams(format!("on-site U must be finite or +∞, got {}", params.u)));
    }
    let dim = basis.dim();
    if dim > DENSE_CAP {
        return Err(EdError::DimensionTooLarge { dim, cap: DENSE_CAP });
    }
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for (i, &state) in basis.states().iter().enumerate() {
        let occ = basis.occupations(state);
        let mut diag = params.offsite_energy(&occ);
        if params.u.is_finite() {
            diag += params.u * basis.double_occupancy(state) as f64;
        }
        let (n_up, n_down) = basis.spin_counts(state);
        diag -= params.b * (n_up as f64 - n_down as f64);
        h[(i, i)] += Complex64::from(diag);
        // Hopping: both directed pairs (x, y) are visited, so each term's
        // Hermitian partner is generated by the loop itself.
        for x in 0..lattice.n_sites() {
            for &(y, t_xy) in lattice.neighbors(x) {
                let alpha = match phases {
                    Some(p) => p.phase(x, y)?,
                    None => 0.0,
                };
                let amp = -t_xy * Complex64::new(0.0, alpha).exp();
                for down in [false, true] {
                    let Some((mid, s1)) = annihilate(state, orbital(y, down)) else {
                        continue;
                    };
                    let Some((dst, s2)) = create(mid, orbital(x, down)) else {
                        continue;
                    };
                    if let Some(j) = basis.index_of(dst) {
                        h[(j, i)] += amp * (s1 * s2);
                    }
                }
            }
        }
    }
    HermitianMatrix::new_complex(h)
}

/// Restricts a full-basis Hamiltonian to the hard-core subspace.
///
/// Returns the hard-core basis, the embedding (full-basis index of each
/// projected state), and the projected matrix P H P.
pub fn gutzwiller_project(
    full_basis: &FermionBasis,
    h: &HermitianMatrix,
) -> Result<(FermionBasis, Vec<usize>, HermitianMatrix), EdError> {
    if full_basis.kind() == BasisKind::Gutzwiller {
        return Err(EdError::BadParams("basis is already hard-core".into()));
    }
    if h.dim() != full_basis.dim() {
        return Err(EdError::BadParams(format!(
            "matrix dimension {} does not match basis dimension {}",
            h.dim(),
            full_basis.dim()
        )));
    }
    let projected =
        FermionBasis::build(full_basis.n_sites(), full_basis.n_elec(), BasisKind::Gutzwiller)?;
    let embedding: Vec<usize> = projected
        .states()
        .iter()
        .map(|&s| full_basis.index_of(s).expect("hard-core state missing from full basis"))
        .collect();
    let full = h.to_complex();
    let mut sub = DMatrix::<Complex64>::zeros(projected.dim(), projected.dim());
    for (i, &fi) in embedding.iter().enumerate() {
        for (j, &fj) in embedding.iter().enumerate() {
            sub[(i, j)] = full[(fi, fj)];
        }
    }
    let h_sub = HermitianMatrix::new_complex(sub)?;
    Ok((projected, embedding, h_sub))
}
