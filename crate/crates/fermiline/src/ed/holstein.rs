//! Holstein-Hubbard exact diagonalization: electrons coupled linearly to
//! one dispersionless phonon mode per site,
//!
//! `H = H_hub + ω Σ_y b†_y b_y + Σ_{x,y} g_xy n_x (b_y + b†_y)`,
//!
//! together with the polaron (Lang-Firsov) frame obtained by displacing
//! each mode by the local electron density.  Both frames describe the same
//! model; their truncated spectra differ only through the occupation cutoff,
//! which is what the frame-agreement tests exploit.

use super::basis::{annihilate, create, orbital, BasisKind, BosonBasis, BosonCap, FermionBasis};
use super::dense::{HermitianMatrix, DENSE_CAP};
use super::hubbard::{build_hubbard_on, EdgePhases};
use super::thermal::{Sector, SectorSpectra};
use super::{EdError, ModelParams, PhononParams};
use crate::lattice::Lattice;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// Effective electron-only couplings produced by the polaron transform.
///
/// Displacing mode z by ω⁻¹ Σ_x g_xz n_x removes the linear coupling and
/// leaves density-density terms:
/// on-site `U_eff,xx = U − 2ω⁻¹ Σ_z g_xz²`, pair terms
/// `U_eff,xy = U_xy − ω⁻¹ Σ_z g_xz g_zy`, and a single-particle shift
/// `v_eff(x) = −ω⁻¹ Σ_z g_xz²`.  Hops acquire the displacement operator
/// `exp[−Σ_z ζ_xy(z)(b†_z − b_z)]` with `ζ_xy = ξ_x − ξ_y`,
/// `(ξ_x)_z = ω⁻¹ g_xz`.
#[derive(Clone, Debug)]
pub struct LangFirsov {
    /// Effective density couplings; diagonal entries are the shifted
    /// on-site U, off-diagonal entries the shifted pair couplings.
    pub u_eff: Vec<Vec<f64>>,
    /// Single-particle potential −ω⁻¹ Σ_z g_xz² per site.
    pub v_eff: Vec<f64>,
    /// Displacement vectors ξ_x = g_x·/ω.
    xi: Vec<Vec<f64>>,
}

impl LangFirsov {
    /// ξ_x, the displacement attached to an electron at site x.
    pub fn displacement(&self, x: usize) -> &[f64] {
        &self.xi[x]
    }

    /// ζ_xy = ξ_x − ξ_y, the displacement transferred by a hop x ← y.
    pub fn zeta(&self, x: usize, y: usize) -> Vec<f64> {
        self.xi[x].iter().zip(&self.xi[y]).map(|(a, b)| a - b).collect()
    }
}

/// Computes the polaron-frame effective couplings for given phonon
/// parameters; purely algebraic, no lattice needed.
pub fn lang_firsov_effective(
    params: &ModelParams,
    phonons: &PhononParams,
    n_sites: usize,
) -> Result<LangFirsov, EdError> {
    phonons.validate(n_sites)?;
    params.validate(n_sites)?;
    let w = phonons.omega;
    let g = &phonons.g;
    let mut u_eff = vec![vec![0.0; n_sites]; n_sites];
    let mut v_eff = vec![0.0; n_sites];
    for x in 0..n_sites {
        let self_shift: f64 = (0..n_sites).map(|z| g[x][z] * g[x][z]).sum();
        v_eff[x] = -self_shift / w;
        u_eff[x][x] = params.u - 2.0 * self_shift / w;
        for y in 0..n_sites {
            if y == x {
                continue;
            }
            let cross: f64 = (0..n_sites).map(|z| g[x][z] * g[z][y]).sum();
            let bare = params.u_offsite.as_ref().map_or(0.0, |u| u[x][y]);
            u_eff[x][y] = bare - cross / w;
        }
    }
    let xi = g.iter().map(|row| row.iter().map(|&gxz| gxz / w).collect()).collect();
    Ok(LangFirsov { u_eff, v_eff, xi })
}

fn product_dims(
    basis: &FermionBasis,
    bosons: &BosonBasis,
) -> Result<(usize, usize, usize), EdError> {
    let nf = basis.dim();
    let nb = bosons.dim();
    let dim = nf * nb;
    if dim > DENSE_CAP {
        return Err(EdError::DimensionTooLarge { dim, cap: DENSE_CAP });
    }
    Ok((nf, nb, dim))
}

/// Builds the Holstein-Hubbard Hamiltonian on `basis ⊗` a truncated phonon
/// basis (one mode per site, fermion-major product index).
pub fn build_holstein_hubbard(
    lattice: &Lattice,
    params: &ModelParams,
    phonons: &PhononParams,
    basis: &FermionBasis,
    cap: BosonCap,
    phases: Option<&EdgePhases>,
) -> Result<(BosonBasis, HermitianMatrix), EdError> {
    let n_sites = lattice.n_sites();
    phonons.validate(n_sites)?;
    let bosons = BosonBasis::build(n_sites, cap);
    let (nf, nb, dim) = product_dims(basis, &bosons)?;
    let h_el = build_hubbard_on(lattice, params, basis, phases)?.to_complex();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    // Electron part ⊗ phonon identity.
    for f in 0..nf {
        for fp in 0..nf {
            let v = h_el[(fp, f)];
            if v != Complex64::ZERO {
                for p in 0..nb {
                    h[(fp * nb + p, f * nb + p)] += v;
                }
            }
        }
    }
    // Free phonons and the density-displacement coupling, diagonal in the
    // electron index.
    for (f, &state) in basis.states().iter().enumerate() {
        let occ = basis.occupations(state);
        // A_y = Σ_x g_xy n_x multiplies (b_y + b†_y).
        let amp: Vec<f64> = (0..n_sites)
            .map(|y| occ.iter().enumerate().map(|(x, &n)| phonons.g[x][y] * n as f64).sum())
            .collect();
        for p in 0..nb {
            let row = f * nb + p;
            h[(row, row)] += Complex64::from(phonons.omega * bosons.total_quanta(p) as f64);
            for (y, &a) in amp.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                if let Some((q, m)) = bosons.raise(p, y) {
                    h[(f * nb + q, row)] += Complex64::from(a * m);
                }
                if let Some((q, m)) = bosons.lower(p, y) {
                    h[(f * nb + q, row)] += Complex64::from(a * m);
                }
            }
        }
    }
    Ok((bosons, HermitianMatrix::new_complex(h)?))
}

/// Matrix of `exp[Σ_z c_z (b†_z − b_z)]` on a truncated Bose basis.
///
/// The generator is real antisymmetric, so i·M is Hermitian and the
/// exponential follows from its eigendecomposition; the result is a real
/// orthogonal displacement operator (exactly orthogonal even under
/// truncation, since the truncated generator is still antisymmetric).
fn displacement_operator(bosons: &BosonBasis, coeffs: &[f64]) -> DMatrix<f64> {
    let n = bosons.dim();
    let mut gen = DMatrix::<Complex64>::zeros(n, n);
    for p in 0..n {
        for (z, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            if let Some((q, m)) = bosons.raise(p, z) {
                gen[(q, p)] += Complex64::from(c * m);
            }
            if let Some((q, m)) = bosons.lower(p, z) {
                gen[(q, p)] -= Complex64::from(c * m);
            }
        }
    }
    // exp(M) = V e^{−iΛ} V† where iM = V Λ V†.
    let herm = gen.map(|v| Complex64::new(0.0, 1.0) * v);
    let eig = herm.symmetric_eigen();
    let phases: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| Complex64::new(0.0, -l).exp())
        .collect();
    let v = &eig.eigenvectors;
    let d = v * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(phases)) * v.adjoint();
    d.map(|z| {
        debug_assert!(z.im.abs() < 1e-10, "displacement operator should be real");
        z.re
    })
}

/// Builds the same model in the polaron frame: displaced phonons, effective
/// density couplings, and hops dressed by displacement operators.
pub fn build_lang_firsov(
    lattice: &Lattice,
    params: &ModelParams,
    phonons: &PhononParams,
    basis: &FermionBasis,
    cap: BosonCap,
) -> Result<(BosonBasis, HermitianMatrix), EdError> {
    let n_sites = lattice.n_sites();
    let lf = lang_firsov_effective(params, phonons, n_sites)?;
    if params.u.is_infinite() && basis.kind() != BasisKind::Gutzwiller {
        return Err(EdError::BadParams(
            "infinite U needs the hard-core basis; use BasisKind::Gutzwiller".into(),
        ));
    }
    let bosons = BosonBasis::build(n_sites, cap);
    let (_, nb, dim) = product_dims(basis, &bosons)?;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    // Diagonal: effective interactions, potential shift, field, phonons.
    for (f, &state) in basis.states().iter().enumerate() {
        let occ = basis.occupations(state);
        let mut diag = 0.0;
        for x in 0..n_sites {
            diag += lf.v_eff[x] * occ[x] as f64;
            if occ[x] == 2 {
                if params.u.is_infinite() {
                    unreachable!("hard-core basis admits no double occupation");
                }
                diag += lf.u_eff[x][x];
            }
            for y in 0..n_sites {
                if y != x {
                    diag += lf.u_eff[x][y] * occ[x] as f64 * occ[y] as f64;
                }
            }
        }
        let (n_up, n_down) = basis.spin_counts(state);
        diag -= params.b * (n_up as f64 - n_down as f64);
        for p in 0..nb {
            let row = f * nb + p;
            h[(row, row)] += diag + phonons.omega * bosons.total_quanta(p) as f64;
        }
    }
    // Dressed hopping: −t_xy c†_xσ c_yσ ⊗ D_xy with
    // D_xy = exp[−Σ_z ζ_xy(z)(b†_z − b_z)].
    for x in 0..n_sites {
        for &(y, t_xy) in lattice.neighbors(x) {
            let coeffs: Vec<f64> = lf.zeta(x, y).iter().map(|&c| -c).collect();
            let d_xy = displacement_operator(&bosons, &coeffs);
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
                    let amp = -t_xy * s1 * s2;
                    for p in 0..nb {
                        for q in 0..nb {
                            let v = d_xy[(q, p)];
                            if v != 0.0 {
                                h[(fp * nb + q, f * nb + p)] += amp * v;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((bosons, HermitianMatrix::new_real(h)?))
}

/// Spin-sector spectra of the Holstein-Hubbard model at b = 0, mirrored
/// over m ↔ −m exactly as in the pure-electron case (phonons are
/// spin-blind).
pub fn holstein_sector_spectra(
    lattice: &Lattice,
    params: &ModelParams,
    phonons: &PhononParams,
    n_elec: usize,
    kind: BasisKind,
    cap: BosonCap,
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
        let (_, h) = build_holstein_hubbard(lattice, &zero_field, phonons, &basis, cap, None)?;
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
