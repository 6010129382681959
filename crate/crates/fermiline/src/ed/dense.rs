//! Dense Hermitian matrices and the few linear-algebra operations the
//! exact-diagonalization layer needs: spectra, operator norms, and shifted
//! inverses.  Everything here is deliberately dense and refuses to run
//! above [`DENSE_CAP`]; the crate targets desk-scale oracle problems, not
//! large sparse solves.

use super::EdError;
use nalgebra::{Complex, DMatrix};

type C64 = Complex<f64>;

/// Largest matrix dimension the dense layer accepts.
pub const DENSE_CAP: usize = 4096;

/// Relative Hermiticity defect allowed when finalizing a built matrix.
const HERMITICITY_TOL: f64 = 1e-12;

/// A dense Hermitian operator, stored real when every entry is real.
#[derive(Clone, Debug)]
pub enum HermitianMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<C64>),
}

impl HermitianMatrix {
    /// Wraps a built matrix after checking size and Hermiticity.
    ///
    /// The defect ‖A − A†‖_max must stay below a small multiple of the
    /// largest entry; builders assemble H entry by entry and a violation
    /// means a sign or conjugation bug, not roundoff.
    pub fn new_complex(m: DMatrix<C64>) -> Result<Self, EdError> {
        let dim = m.nrows();
        if dim > DENSE_CAP {
            return Err(EdError::DimensionTooLarge { dim, cap: DENSE_CAP });
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0f64, f64::max);
        let mut defect = 0.0f64;
        for i in 0..dim {
            for j in i..dim {
                defect = defect.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        if defect > HERMITICITY_TOL * scale {
            return Err(EdError::BadParams(format!(
                "matrix is not Hermitian: defect {defect:.3e} at scale {scale:.3e}"
            )));
        }
        // Store real when the imaginary parts vanish identically; the real
        // eigensolver is noticeably faster at the sizes the oracles use.
        if m.iter().all(|z| z.im == 0.0) {
            Ok(HermitianMatrix::Real(m.map(|z| z.re)))
        } else {
            Ok(HermitianMatrix::Complex(m))
        }
    }

    pub fn new_real(m: DMatrix<f64>) -> Result<Self, EdError> {
        Self::new_complex(m.map(C64::from))
    }

    pub fn dim(&self) -> usize {
        match self {
            HermitianMatrix::Real(m) => m.nrows(),
            HermitianMatrix::Complex(m) => m.nrows(),
        }
    }

    pub fn to_complex(&self) -> DMatrix<C64> {
        match self {
            HermitianMatrix::Real(m) => m.map(C64::from),
            HermitianMatrix::Complex(m) => m.clone(),
        }
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut evals: Vec<f64> = match self {
            HermitianMatrix::Real(m) => {
                m.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
            }
            HermitianMatrix::Complex(m) => {
                m.clone().symmetric_eigen().eigenvalues.iter().copied().collect()
            }
        };
        evals.sort_by(|a, b| a.total_cmp(b));
        evals
    }

    /// Full eigendecomposition: ascending eigenvalues with matching
    /// eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        let (mut pairs, vecs): (Vec<(f64, usize)>, DMatrix<C64>) = match self {
            HermitianMatrix::Real(m) => {
                let e = m.clone().symmetric_eigen();
                (
                    e.eigenvalues.iter().copied().zip(0..).collect(),
                    e.eigenvectors.map(C64::from),
                )
            }
            HermitianMatrix::Complex(m) => {
                let e = m.clone().symmetric_eigen();
                (e.eigenvalues.iter().copied().zip(0..).collect(), e.eigenvectors)
            }
        };
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let evals: Vec<f64> = pairs.iter().map(|&(v, _)| v).collect();
        let cols: Vec<_> = pairs.iter().map(|&(_, c)| vecs.column(c).into_owned()).collect();
        (evals, DMatrix::from_columns(&cols))
    }
}

/// Operator norm (largest singular value) of a dense complex matrix,
/// computed as √λ_max(A†A) so it works for non-Hermitian inputs too.
pub fn op_norm(a: &DMatrix<C64>) -> f64 {
    let gram = a.adjoint() * a;
    let evals = gram.symmetric_eigen().eigenvalues;
    evals.iter().fold(0.0f64, |acc, &v| acc.max(v.max(0.0))).sqrt()
}

/// `(H − z)⁻¹` for Hermitian `H` and non-real shift `z`.
pub fn solve_shifted(h: &HermitianMatrix, z: C64) -> Result<DMatrix<C64>, EdError> {
    if z.im == 0.0 {
        return Err(EdError::RealShift);
    }
    let dim = h.dim();
    let shifted = h.to_complex() - DMatrix::from_diagonal_element(dim, dim, z);
    shifted
        .lu()
        .try_inverse()
        .ok_or_else(|| EdError::BadParams("shifted matrix is numerically singular".into()))
}
