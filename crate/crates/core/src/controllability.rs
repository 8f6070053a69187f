//! Lie-algebra rank test for complete controllability and detection of
//! decoupled (direct-sum) structure.
//!
//! Generators `H_m` enter as the skew-Hermitian fields `-i H_m`. The closure
//! is grown breadth-first: every element added in one round is bracketed
//! with everything already in the basis during the next round, and each
//! bracket is kept only if its component outside the current span is large
//! enough. The basis is orthonormal for the real inner product
//! `Re tr(X^dagger Y)`, which is the Hilbert-Schmidt product restricted to
//! skew-Hermitian matrices.

use num_complex::Complex64;
use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::bounds::SubspacePartition;
use crate::dynamics::ControlModel;
use crate::error::{QcbError, Result};
use crate::matcore::{commutator, ComplexMatrix, DEFAULT_HERMITIAN_TOL};
use crate::states::DensityMatrix;

/// Default relative residual above which a bracket counts as a new direction.
pub const DEFAULT_CLOSURE_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct LieClosureReport {
    /// Hilbert-space dimension N.
    pub n: usize,
    pub dimension: usize,
    /// Orthonormal skew-Hermitian basis of the generated algebra.
    pub basis: Vec<ComplexMatrix>,
    /// Bracket rounds that added new directions before closure (or saturation at N^2).
    pub generations: usize,
    pub controllable: bool,
}

impl LieClosureReport {
    pub fn full_dimension(&self) -> usize {
        self.n * self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IdealReport {
    pub dimension: usize,
    /// Whether the ideal reaches `N^2 - 1`, the su(N) criterion.
    pub meets_criterion: bool,
}

fn real_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x.conj() * y).re)
        .sum()
}

/// Orthonormal span with residual-based admission.
#[derive(Debug, Default)]
struct Span {
    basis: Vec<ComplexMatrix>,
}

impl Span {
    fn residual(&self, candidate: &ComplexMatrix) -> ComplexMatrix {
        let mut r = candidate.clone();
        for _ in 0..2 {
            for q in &self.basis {
                let c = real_inner(q, &r);
                r.add_scaled_mut(-c, q);
            }
        }
        r
    }

    /// Adds the normalized residual when it exceeds `tol` relative to the
    /// candidate's norm. Candidates below `floor` in norm are treated as zero.
    fn try_add(&mut self, candidate: &ComplexMatrix, tol: f64, floor: f64) -> bool {
        let norm0 = candidate.frobenius_norm();
        if norm0 <= floor {
            return false;
        }
        let r = self.residual(candidate);
        let rn = r.frobenius_norm();
        if rn / norm0 > tol {
            self.basis.push(r.scale_real(1.0 / rn));
            true
        } else {
            false
        }
    }
}

fn to_skew(h: &ComplexMatrix) -> ComplexMatrix {
    h.scale(Complex64::new(0.0, -1.0))
}

fn validate_generators(generators: &[ComplexMatrix]) -> Result<usize> {
    let first = generators.first().ok_or(QcbError::NoGenerators)?;
    for g in generators {
        first.ensure_same_dim(g)?;
        g.ensure_hermitian(DEFAULT_HERMITIAN_TOL)?;
    }
    Ok(first.dim())
}

/// Grows `span` from its current `frontier` by bracketing against `partners`
/// (or against the span itself when `partners` is `None`) until nothing new
/// appears. Returns the number of rounds that produced new elements.
fn grow(span: &mut Span, mut frontier: Vec<usize>, partners: Option<&[ComplexMatrix]>, cap: usize, tol: f64) -> usize {
    let mut rounds = 0;
    while !frontier.is_empty() && span.basis.len() < cap {
        let mut next = Vec::new();
        for &i in &frontier {
            let n_partners = partners.map_or(span.basis.len(), <[_]>::len);
            for j in 0..n_partners {
                if partners.is_none() && j == i {
                    continue;
                }
                let x = &span.basis[i];
                let y = match partners {
                    Some(p) => &p[j],
                    None => &span.basis[j],
                };
                let bracket = commutator(x, y).expect("dimensions validated");
                // basis elements are unit norm, so `tol` doubles as the zero floor
                if span.try_add(&bracket, tol, tol) {
                    next.push(span.basis.len() - 1);
                    if span.basis.len() >= cap {
                        return rounds + 1;
                    }
                }
            }
        }
        if !next.is_empty() {
            rounds += 1;
        }
        frontier = next;
    }
    rounds
}

/// Basis and dimension of the Lie algebra generated by `-i H` for the given
/// Hermitian generators.
pub fn lie_closure(generators: &[ComplexMatrix], tol: f64) -> Result<LieClosureReport> {
    let n = validate_generators(generators)?;
    let cap = n * n;
    let scale = generators.iter().map(ComplexMatrix::frobenius_norm).fold(0.0, f64::max);
    let mut span = Span::default();
    for g in generators {
        if span.basis.len() < cap {
            span.try_add(&to_skew(g), tol, tol * scale);
        }
    }
    let frontier: Vec<usize> = (0..span.basis.len()).collect();
    let generations = grow(&mut span, frontier, None, cap, tol);
    let dimension = span.basis.len();
    Ok(LieClosureReport {
        n,
        dimension,
        basis: span.basis,
        generations,
        controllable: dimension == cap,
    })
}

/// Ideal generated by `-i H_m` (the `seeds`) inside the algebra spanned by
/// `closure`.
pub fn ideal_closure(seeds: &[ComplexMatrix], closure: &LieClosureReport, tol: f64) -> Result<IdealReport> {
    let n = closure.n;
    for s in seeds {
        if s.dim() != n {
            return Err(QcbError::DimensionMismatch {
                expected: n,
                found: s.dim(),
            });
        }
        s.ensure_hermitian(DEFAULT_HERMITIAN_TOL)?;
    }
    let scale = seeds.iter().map(ComplexMatrix::frobenius_norm).fold(0.0, f64::max);
    let mut span = Span::default();
    for s in seeds {
        span.try_add(&to_skew(s), tol, tol * scale);
    }
    let frontier: Vec<usize> = (0..span.basis.len()).collect();
    grow(&mut span, frontier, Some(&closure.basis), n * n, tol);
    let dimension = span.basis.len();
    Ok(IdealReport {
        dimension,
        meets_criterion: dimension + 1 >= n * n,
    })
}

/// Complete controllability verdict from the dimension of the algebra
/// generated by `{H0, H1, ..., HM}`.
pub fn is_completely_controllable(model: &ControlModel, tol: f64) -> Result<(bool, LieClosureReport)> {
    let report = lie_closure(&model.generators(), tol)?;
    Ok((report.controllable, report))
}

/// The alternative criterion: dimension of the ideal generated by the
/// control Hamiltonians alone.
pub fn control_ideal(model: &ControlModel, closure: &LieClosureReport, tol: f64) -> Result<IdealReport> {
    if model.n_controls() == 0 {
        return Ok(IdealReport {
            dimension: 0,
            meets_criterion: model.dim() == 1,
        });
    }
    ideal_closure(model.controls(), closure, tol)
}

/// Connected components of the coupling graph of `H0, H1, ..., HM` in the
/// model basis. `H0` must already be diagonal there.
pub fn detect_decoupling(model: &ControlModel, rho0: Option<&DensityMatrix>, tol: f64) -> Result<SubspacePartition> {
    let n = model.dim();
    let h0 = model.drift();
    let mut off_diag = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off_diag = off_diag.max(h0[(i, j)].norm());
            }
        }
    }
    if off_diag > tol {
        return Err(QcbError::BasisNotAdapted { max_entry: off_diag });
    }

    let mut components = UnionFind::<usize>::new(n);
    for h in model.controls() {
        for i in 0..n {
            for j in i + 1..n {
                if h[(i, j)].norm() > tol || h[(j, i)].norm() > tol {
                    components.union(i, j);
                }
            }
        }
    }
    let labels = components.into_labeling();
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut block_of_root: Vec<Option<usize>> = vec![None; n];
    for (i, &root) in labels.iter().enumerate() {
        let b = *block_of_root[root].get_or_insert_with(|| {
            blocks.push(Vec::new());
            blocks.len() - 1
        });
        blocks[b].push(i);
    }

    let partition = SubspacePartition::new(n, blocks)?;
    match rho0 {
        Some(rho) => partition.with_probabilities(rho),
        None => Ok(partition),
    }
}

/// Lie closure of each block's restricted generators. This reports
/// subsystem controllability only; it makes no claim about the joint system.
pub fn block_closures(model: &ControlModel, partition: &SubspacePartition, tol: f64) -> Result<Vec<LieClosureReport>> {
    if partition.dim() != model.dim() {
        return Err(QcbError::DimensionMismatch {
            expected: model.dim(),
            found: partition.dim(),
        });
    }
    partition
        .blocks
        .iter()
        .map(|block| {
            let gens: Vec<ComplexMatrix> = model.generators().iter().map(|g| g.submatrix(block)).collect();
            lie_closure(&gens, tol)
        })
        .collect()
}

/// Largest residual, relative to the bracket norm, of any bracket of two
/// basis elements after projecting onto the span.
pub fn closure_residual(report: &LieClosureReport) -> f64 {
    let span = Span {
        basis: report.basis.clone(),
    };
    let mut worst = 0.0f64;
    for (i, x) in report.basis.iter().enumerate() {
        for y in &report.basis[i + 1..] {
            let b = commutator(x, y).expect("basis shares one dimension");
            let norm = b.frobenius_norm();
            if norm > 0.0 {
                worst = worst.max(span.residual(&b).frobenius_norm() / norm.max(1.0));
            }
        }
    }
    worst
}
