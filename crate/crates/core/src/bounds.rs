//! Kinematical bounds on `tr(A rho(t))` under unitary evolution, the unitaries
//! that attain them, and the tighter per-block bounds for decoupled systems.

use serde::{Deserialize, Serialize};

use crate::error::{QcbError, Result};
use crate::matcore::{hermitian_eig, ComplexMatrix};
use crate::states::{ensemble_decomposition, expectation, DensityMatrix, Observable};

/// Max off-block entry of `rho0` tolerated by [`decoupled_bounds`].
pub const BLOCK_DIAGONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Max,
    Min,
}

impl std::str::FromStr for Direction {
    type Err = QcbError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(Self::Max),
            "min" => Ok(Self::Min),
            other => Err(QcbError::InvalidConfig(format!(
                "direction must be `max` or `min`, got `{other}`"
            ))),
        }
    }
}

/// Lower and upper kinematical bounds with the index pairings that attain them.
///
/// A pairing `(k, j)` sends the ensemble state with the k-th largest weight
/// onto the eigenvector in slot `j` of the observable's non-increasing
/// spectrum. For decoupled bounds both indices run over the concatenation of
/// the blocks in partition order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicalBounds {
    pub lower: f64,
    pub upper: f64,
    pub pairing_max: Vec<(usize, usize)>,
    pub pairing_min: Vec<(usize, usize)>,
}

impl KinematicalBounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn paired_sums(weights: &[f64], lambdas: &[f64]) -> (f64, f64) {
    let n = weights.len();
    let upper = weights.iter().zip(lambdas).map(|(w, l)| w * l).sum();
    let lower = (0..n).map(|k| weights[k] * lambdas[n - 1 - k]).sum();
    (lower, upper)
}

/// Sharp bounds over all unitaries: pair weights (descending) with eigenvalues
/// descending for the upper bound and ascending for the lower one.
pub fn kinematical_bounds(a: &Observable, rho0: &DensityMatrix) -> Result<KinematicalBounds> {
    a.matrix().ensure_same_dim(rho0.matrix())?;
    let ens = ensemble_decomposition(rho0)?;
    let (lower, upper) = paired_sums(&ens.weights, a.eigenvalues());
    let n = a.dim();
    Ok(KinematicalBounds {
        lower,
        upper,
        pairing_max: (0..n).map(|k| (k, k)).collect(),
        pairing_min: (0..n).map(|k| (k, n - 1 - k)).collect(),
    })
}

/// Unitary sending the k-th ensemble state onto the eigenvector paired with it
/// for the requested bound, `U = sum_k |phi_pair(k)><psi_k|`.
pub fn optimal_unitary(a: &Observable, rho0: &DensityMatrix, direction: Direction) -> Result<ComplexMatrix> {
    a.matrix().ensure_same_dim(rho0.matrix())?;
    let ens = ensemble_decomposition(rho0)?;
    let n = a.dim();
    let eigvecs = &a.eig().vectors;
    let mut u = ComplexMatrix::zeros(n);
    for k in 0..n {
        let slot = match direction {
            Direction::Max => k,
            Direction::Min => n - 1 - k,
        };
        for i in 0..n {
            let phi = eigvecs[(i, slot)];
            for j in 0..n {
                u[(i, j)] += phi * ens.states[(j, k)].conj();
            }
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Attainment {
    AtUpper,
    AtLower,
    Interior { gap_to_upper: f64, gap_to_lower: f64 },
}

/// Classifies `tr(A rho)` against the bounds of the orbit of `rho`.
/// When the bounds collapse the upper bound takes precedence.
pub fn check_attainment(a: &Observable, rho: &DensityMatrix, tol: f64) -> Result<Attainment> {
    let bounds = kinematical_bounds(a, rho)?;
    let value = expectation(a, rho)?;
    Ok(classify(value, &bounds, tol))
}

pub fn classify(value: f64, bounds: &KinematicalBounds, tol: f64) -> Attainment {
    if (bounds.upper - value).abs() <= tol {
        Attainment::AtUpper
    } else if (value - bounds.lower).abs() <= tol {
        Attainment::AtLower
    } else {
        Attainment::Interior {
            gap_to_upper: bounds.upper - value,
            gap_to_lower: value - bounds.lower,
        }
    }
}

/// Disjoint index sets covering `0..dim`, one per non-interacting subspace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspacePartition {
    pub blocks: Vec<Vec<usize>>,
    /// `p_i`, the population of each block, when a state was supplied.
    pub block_probabilities: Option<Vec<f64>>,
}

impl SubspacePartition {
    pub fn new(dim: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; dim];
        for block in &blocks {
            if block.is_empty() {
                return Err(QcbError::InvalidPartition("empty block".into()));
            }
            for &i in block {
                if i >= dim {
                    return Err(QcbError::InvalidPartition(format!(
                        "index {i} out of range for dimension {dim}"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(QcbError::InvalidPartition(format!("index {i} appears twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(QcbError::InvalidPartition(format!("index {missing} is not covered")));
        }
        Ok(Self {
            blocks,
            block_probabilities: None,
        })
    }

    pub fn single_block(dim: usize) -> Self {
        Self {
            blocks: vec![(0..dim).collect()],
            block_probabilities: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn populations(&self, rho: &DensityMatrix) -> Vec<f64> {
        let m = rho.matrix();
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&i| m[(i, i)].re).sum())
            .collect()
    }

    pub fn with_probabilities(mut self, rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != self.dim() {
            return Err(QcbError::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        self.block_probabilities = Some(self.populations(rho));
        Ok(self)
    }

    /// Largest entry of `m` coupling two different blocks.
    pub fn max_off_block(&self, m: &ComplexMatrix) -> f64 {
        let mut owner = vec![0usize; self.dim()];
        for (b, block) in self.blocks.iter().enumerate() {
            for &i in block {
                owner[i] = b;
            }
        }
        let n = m.dim();
        let mut max = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if owner[i] != owner[j] {
                    max = max.max(m[(i, j)].norm());
                }
            }
        }
        max
    }
}

/// Per-block kinematical bounds for a state that is block diagonal with
/// respect to `partition`, using the restricted observables `P_i A P_i`.
pub fn decoupled_bounds(
    a: &Observable,
    rho0: &DensityMatrix,
    partition: &SubspacePartition,
) -> Result<KinematicalBounds> {
    a.matrix().ensure_same_dim(rho0.matrix())?;
    if partition.dim() != a.dim() {
        return Err(QcbError::DimensionMismatch {
            expected: a.dim(),
            found: partition.dim(),
        });
    }
    let off = partition.max_off_block(rho0.matrix());
    if off > BLOCK_DIAGONAL_TOL {
        return Err(QcbError::NotBlockDiagonal {
            max_entry: off,
            tol: BLOCK_DIAGONAL_TOL,
        });
    }

    let mut bounds = KinematicalBounds {
        lower: 0.0,
        upper: 0.0,
        pairing_max: Vec::with_capacity(a.dim()),
        pairing_min: Vec::with_capacity(a.dim()),
    };
    let mut offset = 0;
    for block in &partition.blocks {
        let n_i = block.len();
        let rho_i = rho0.matrix().submatrix(block);
        let a_i = a.matrix().submatrix(block);
        let weights: Vec<f64> = hermitian_eig(&rho_i, f64::INFINITY)?
            .values
            .into_iter()
            .map(|w| w.max(0.0))
            .collect();
        let lambdas = hermitian_eig(&a_i, f64::INFINITY)?.values;
        let (lo, up) = paired_sums(&weights, &lambdas);
        bounds.lower += lo;
        bounds.upper += up;
        bounds.pairing_max.extend((0..n_i).map(|k| (offset + k, offset + k)));
        bounds
            .pairing_min
            .extend((0..n_i).map(|k| (offset + k, offset + n_i - 1 - k)));
        offset += n_i;
    }
    Ok(bounds)
}

/// Block-diagonal unitary attaining the decoupled bound, built blockwise
/// like [`optimal_unitary`].
pub fn decoupled_optimal_unitary(
    a: &Observable,
    rho0: &DensityMatrix,
    partition: &SubspacePartition,
    direction: Direction,
) -> Result<ComplexMatrix> {
    decoupled_bounds(a, rho0, partition)?;
    let n = a.dim();
    let mut u = ComplexMatrix::zeros(n);
    for block in &partition.blocks {
        let n_i = block.len();
        let rho_eig = hermitian_eig(&rho0.matrix().submatrix(block), f64::INFINITY)?;
        let a_eig = hermitian_eig(&a.matrix().submatrix(block), f64::INFINITY)?;
        for k in 0..n_i {
            let slot = match direction {
                Direction::Max => k,
                Direction::Min => n_i - 1 - k,
            };
            for (bi, &i) in block.iter().enumerate() {
                for (bj, &j) in block.iter().enumerate() {
                    u[(i, j)] += a_eig.vectors[(bi, slot)] * rho_eig.vectors[(bj, k)].conj();
                }
            }
        }
    }
    Ok(u)
}
