//! Strong-coupling resolvent comparison.
//!
//! As U → ∞ the finite-U resolvent converges to the hard-core one embedded
//! in the full space: `(H(U) − z)⁻¹ → P (H_∞ − z)⁻¹ P`, with P the
//! projection onto states without doubly occupied sites.  The operator-norm
//! distance between the two sides is the quantity reported here; it decays
//! like 1/U and vanishes identically when no state can be doubly occupied.

use super::basis::{BasisKind, FermionBasis};
use super::dense::{op_norm, solve_shifted};
use super::hubbard::{build_hubbard, EdgePhases};
use super::{EdError, ModelParams};
use crate::lattice::Lattice;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// ‖(H(U) − z)⁻¹ − P (H_∞ − z)⁻¹ P‖ for the Hubbard model at finite U.
///
/// `H_∞` is the hard-core Hamiltonian (the U term dropped on the projected
/// basis); every other coupling is shared.  The shift must be non-real.
pub fn resolvent_gap(
    lattice: &Lattice,
    params: &ModelParams,
    n_elec: usize,
    z: Complex64,
    phases: Option<&EdgePhases>,
) -> Result<f64, EdError> {
    if z.im == 0.0 {
        return Err(EdError::RealShift);
    }
    if !params.u.is_finite() {
        return Err(EdError::BadParams(
            "the comparison needs a finite U on the full basis".into(),
        ));
    }
    let (full_basis, h_full) = build_hubbard(lattice, params, n_elec, BasisKind::None, phases)?;
    let r_full = solve_shifted(&h_full, z)?;
    let hard_core = ModelParams { u: f64::INFINITY, ..params.clone() };
    let (_, h_inf) = build_hubbard(lattice, &hard_core, n_elec, BasisKind::Gutzwiller, phases)?;
    let r_inf = solve_shifted(&h_inf, z)?;
    // Embed P (H_∞ − z)⁻¹ P into the full space.
    let projected = FermionBasis::build(lattice.n_sites(), n_elec, BasisKind::Gutzwiller)?;
    let embedding: Vec<usize> = projected
        .states()
        .iter()
        .map(|&s| full_basis.index_of(s).expect("hard-core state missing from full basis"))
        .collect();
    let mut embedded = DMatrix::<Complex64>::zeros(full_basis.dim(), full_basis.dim());
    for (i, &fi) in embedding.iter().enumerate() {
        for (j, &fj) in embedding.iter().enumerate() {
            embedded[(fi, fj)] = r_inf[(i, j)];
        }
    }
    Ok(op_norm(&(r_full - embedded)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ed::hubbard::gutzwiller_project;
    use crate::lattice::{Boundary, Lattice, LatticeSpec, NeighborNorm};

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

    fn params(u: f64) -> ModelParams {
        ModelParams { u, u_offsite: None, b: 0.0, beta: 1.0, z: None }
    }

    #[test]
    fn gap_shrinks_with_u() {
        let lat = chain(2, Boundary::Open);
        let z = Complex64::new(0.0, 1.0);
        let mut last = f64::INFINITY;
        for u in [1e1, 1e2, 1e3] {
            let gap = resolvent_gap(&lat, &params(u), 2, z, None).unwrap();
            assert!(gap < last, "gap must fall with U: {gap} after {last}");
            // The leading correction is O(1/U).
            assert!(gap < 20.0 / u, "gap {gap} too large at U = {u}");
            last = gap;
        }
    }

    #[test]
    fn single_electron_has_no_gap() {
        // One electron can never doubly occupy a site, so the projection is
        // the identity and both resolvents coincide.
        let lat = chain(4, Boundary::Periodic);
        let gap = resolvent_gap(&lat, &params(7.0), 1, Complex64::new(0.5, 2.0), None).unwrap();
        assert!(gap < 1e-12, "expected identical resolvents, got {gap}");
    }

    #[test]
    fn real_shift_is_rejected() {
        let lat = chain(2, Boundary::Open);
        assert!(matches!(
            resolvent_gap(&lat, &params(10.0), 2, Complex64::from(1.0), None),
            Err(EdError::RealShift)
        ));
    }

    #[test]
    fn projection_of_projected_model_is_rejected() {
        let lat = chain(2, Boundary::Open);
        assert!(resolvent_gap(&lat, &params(f64::INFINITY), 2, Complex64::new(0.0, 1.0), None)
            .is_err());
    }

    #[test]
    fn projection_helper_used_consistently() {
        // gutzwiller_project on the full U-Hamiltonian and the direct
        // hard-core build differ exactly by the dropped U term; with U = 0
        // they agree, which pins the embedding indices used above.
        let lat = chain(4, Boundary::Open);
        let (full_basis, h_full) =
            build_hubbard(&lat, &params(0.0), 3, BasisKind::None, None).unwrap();
        let (_, _, projected) = gutzwiller_project(&full_basis, &h_full).unwrap();
        let hard = ModelParams { u: f64::INFINITY, ..params(0.0) };
        let (_, direct) = build_hubbard(&lat, &hard, 3, BasisKind::Gutzwiller, None).unwrap();
        let a = projected.to_complex();
        let b = direct.to_complex();
        assert_eq!(a.nrows(), b.nrows());
        let diff = (a - b).iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        assert!(diff < 1e-12);
    }
}
