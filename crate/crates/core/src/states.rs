//! Density matrices, observables and ensemble-average expectation values.

use num_complex::Complex64;

use crate::error::{QcbError, Result};
use crate::matcore::{hermitian_eig, ComplexMatrix, EigDecomposition, DEFAULT_HERMITIAN_TOL};

/// Trace deviation that is silently renormalized; anything larger is rejected.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted for a density matrix.
pub const POSITIVITY_TOL: f64 = 1e-10;
/// Unitarity tolerance for `evolve_state`.
pub const UNITARY_TOL: f64 = 1e-9;
/// Relative gap below which two eigenvalues of an observable share an eigenspace.
pub const DEGENERACY_REL_TOL: f64 = 1e-8;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_HERMITIAN_TOL)
    }

    /// Validates with a caller-chosen Hermiticity tolerance; trace and
    /// positivity tolerances stay fixed at [`TRACE_TOL`] / [`POSITIVITY_TOL`].
    pub fn with_tolerance(matrix: ComplexMatrix, hermitian_tol: f64) -> Result<Self> {
        let deviation = matrix.hermitian_deviation();
        if deviation.is_nan() || deviation > hermitian_tol {
            return Err(QcbError::InvalidState(format!(
                "not Hermitian (max |rho - rho^dagger| = {deviation:.3e})"
            )));
        }
        let mut m = matrix.hermitian_part();
        let trace = m.trace().re;
        if trace.is_nan() || (trace - 1.0).abs() > TRACE_TOL {
            return Err(QcbError::InvalidState(format!("trace is {trace}, expected 1")));
        }
        if trace != 1.0 {
            m = m.scale_real(1.0 / trace);
        }
        let eig = hermitian_eig(&m, f64::INFINITY)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -POSITIVITY_TOL {
            return Err(QcbError::InvalidState(format!(
                "not positive semidefinite (smallest eigenvalue {min:.3e})"
            )));
        }
        Ok(Self { matrix: m })
    }

    /// Diagonal state from probabilities.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        Self::new(ComplexMatrix::from_real_diagonal(weights))
    }

    /// `|psi><psi|` for a (not necessarily normalized) vector.
    pub fn pure(psi: &[Complex64]) -> Result<Self> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || psi.is_empty() {
            return Err(QcbError::InvalidState("zero state vector".into()));
        }
        let n = psi.len();
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = psi[i] * psi[j].conj() / (norm * norm);
            }
        }
        Self::new(m)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// One eigenspace `E(a)` of an observable.
#[derive(Debug, Clone)]
pub struct Eigenspace {
    pub value: f64,
    pub multiplicity: usize,
    pub projector: ComplexMatrix,
}

/// Hermitian operator with its eigenstructure cached.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: ComplexMatrix,
    eig: EigDecomposition,
    eigenspaces: Vec<Eigenspace>,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, DEFAULT_HERMITIAN_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix, hermitian_tol: f64) -> Result<Self> {
        let eig = hermitian_eig(&matrix, hermitian_tol)?;
        let matrix = matrix.hermitian_part();
        let group_tol = DEGENERACY_REL_TOL * matrix.max_abs().max(1.0);
        let n = eig.dim();

        let mut eigenspaces = Vec::new();
        let mut start = 0;
        while start < n {
            let mut end = start + 1;
            while end < n && eig.values[end - 1] - eig.values[end] < group_tol {
                end += 1;
            }
            let mut projector = ComplexMatrix::zeros(n);
            for k in start..end {
                let v = eig.vectors.column(k);
                for i in 0..n {
                    for j in 0..n {
                        projector[(i, j)] += v[i] * v[j].conj();
                    }
                }
            }
            let value = eig.values[start..end].iter().sum::<f64>() / (end - start) as f64;
            eigenspaces.push(Eigenspace {
                value,
                multiplicity: end - start,
                projector,
            });
            start = end;
        }

        Ok(Self {
            matrix,
            eig,
            eigenspaces,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn eig(&self) -> &EigDecomposition {
        &self.eig
    }

    /// Eigenvalues counted with multiplicity, non-increasing.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.values
    }

    pub fn eigenspaces(&self) -> &[Eigenspace] {
        &self.eigenspaces
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// The observable `U^dagger A U`.
    pub fn conjugated(&self, u: &ComplexMatrix) -> Result<Self> {
        self.matrix.ensure_same_dim(u)?;
        Self::new((&(&u.adjoint() * &self.matrix) * u).hermitian_part())
    }
}

/// `rho = sum_k w_k |psi_k><psi_k|` with weights sorted non-increasing.
#[derive(Debug, Clone)]
pub struct EnsembleDecomposition {
    pub weights: Vec<f64>,
    /// Column k is the eigenstate carrying `weights[k]`.
    pub states: ComplexMatrix,
}

impl EnsembleDecomposition {
    pub fn reconstruct(&self) -> ComplexMatrix {
        EigDecomposition {
            values: self.weights.clone(),
            vectors: self.states.clone(),
        }
        .reconstruct()
    }
}

pub fn ensemble_decomposition(rho: &DensityMatrix) -> Result<EnsembleDecomposition> {
    let eig = hermitian_eig(rho.matrix(), f64::INFINITY)?;
    let mut weights: Vec<f64> = eig.values.iter().map(|w| w.clamp(0.0, 1.0)).collect();
    let total: f64 = weights.iter().sum();
    if total.is_nan() || (total - 1.0).abs() > TRACE_TOL {
        return Err(QcbError::InvalidState(format!("weights sum to {total}")));
    }
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(EnsembleDecomposition {
        weights,
        states: eig.vectors,
    })
}

/// Ensemble average `tr(A rho)`.
pub fn expectation(a: &Observable, rho: &DensityMatrix) -> Result<f64> {
    a.matrix().ensure_same_dim(rho.matrix())?;
    let value = trace_of_product(a.matrix(), rho.matrix());
    if value.im.abs() > 1e-10 * a.matrix().max_abs().max(1.0) {
        return Err(QcbError::NonRealExpectation { imag: value.im });
    }
    Ok(value.re)
}

/// `tr(AB)` without forming the product.
pub(crate) fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.dim();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `U rho U^dagger`.
pub fn evolve_state(rho0: &DensityMatrix, u: &ComplexMatrix) -> Result<DensityMatrix> {
    rho0.matrix().ensure_same_dim(u)?;
    u.ensure_unitary(UNITARY_TOL)?;
    Ok(evolve_unchecked(rho0, u))
}

pub(crate) fn evolve_unchecked(rho0: &DensityMatrix, u: &ComplexMatrix) -> DensityMatrix {
    let m = &(u * rho0.matrix()) * &u.adjoint();
    DensityMatrix {
        matrix: m.hermitian_part(),
    }
}
