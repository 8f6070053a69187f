//! Control-linear Hamiltonians `H0 + sum_m f_m(t) H_m` driven by
//! piecewise-constant pulses, propagated exactly step by step (hbar = 1).
//!
//! Time-ordered products put the latest step leftmost:
//! `U(tF, t0) = U_S ... U_2 U_1`.

use serde::{Deserialize, Serialize};

use crate::error::{QcbError, Result};
use crate::matcore::{hermitian_eig, ComplexMatrix, EigDecomposition, DEFAULT_HERMITIAN_TOL};
use crate::states::{evolve_unchecked, expectation, DensityMatrix, Observable};

#[derive(Debug, Clone)]
pub struct ControlModel {
    h0: ComplexMatrix,
    controls: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl ControlModel {
    pub fn new(h0: ComplexMatrix, controls: Vec<ComplexMatrix>) -> Result<Self> {
        Self::with_tolerance(h0, controls, DEFAULT_HERMITIAN_TOL)
    }

    pub fn with_tolerance(h0: ComplexMatrix, controls: Vec<ComplexMatrix>, tol: f64) -> Result<Self> {
        h0.ensure_hermitian(tol)?;
        for c in &controls {
            h0.ensure_same_dim(c)?;
            c.ensure_hermitian(tol)?;
        }
        let labels = (1..=controls.len()).map(|m| format!("H{m}")).collect();
        Ok(Self {
            h0: h0.hermitian_part(),
            controls: controls.iter().map(ComplexMatrix::hermitian_part).collect(),
            labels,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.controls.len() {
            return Err(QcbError::DimensionMismatch {
                expected: self.controls.len(),
                found: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn n_controls(&self) -> usize {
        self.controls.len()
    }

    pub fn drift(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn controls(&self) -> &[ComplexMatrix] {
        &self.controls
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `[H0, H1, ..., HM]`.
    pub fn generators(&self) -> Vec<ComplexMatrix> {
        std::iter::once(self.h0.clone())
            .chain(self.controls.iter().cloned())
            .collect()
    }

    /// `H0 + sum_m f_m H_m`.
    pub fn hamiltonian(&self, amplitudes: &[f64]) -> ComplexMatrix {
        let mut h = self.h0.clone();
        for (f, hm) in amplitudes.iter().zip(&self.controls) {
            if *f != 0.0 {
                h.add_scaled_mut(*f, hm);
            }
        }
        h
    }
}

/// Piecewise-constant amplitudes on `S` uniform intervals of `[t0, tF]`.
/// Row `s` holds `f_1..f_M` on interval `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ScheduleRecord", try_from = "ScheduleRecord")]
pub struct PulseSchedule {
    t0: f64,
    tf: f64,
    n_controls: usize,
    amplitudes: Vec<Vec<f64>>,
}

/// On-disk layout of a schedule: `t0`, `tF`, `steps`, row-per-step amplitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScheduleRecord {
    t0: f64,
    #[serde(rename = "tF")]
    tf: f64,
    steps: usize,
    amplitudes: Vec<Vec<f64>>,
}

impl From<PulseSchedule> for ScheduleRecord {
    fn from(p: PulseSchedule) -> Self {
        Self {
            t0: p.t0,
            tf: p.tf,
            steps: p.amplitudes.len(),
            amplitudes: p.amplitudes,
        }
    }
}

impl TryFrom<ScheduleRecord> for PulseSchedule {
    type Error = QcbError;
    fn try_from(r: ScheduleRecord) -> Result<Self> {
        if r.steps != r.amplitudes.len() {
            return Err(QcbError::InvalidSchedule(format!(
                "`steps` is {} but {} amplitude rows were given",
                r.steps,
                r.amplitudes.len()
            )));
        }
        let m = r.amplitudes.first().map_or(0, Vec::len);
        PulseSchedule::new(r.t0, r.tf, m, r.amplitudes)
    }
}

impl PulseSchedule {
    pub fn new(t0: f64, tf: f64, n_controls: usize, amplitudes: Vec<Vec<f64>>) -> Result<Self> {
        if !(t0.is_finite() && tf.is_finite() && tf > t0) {
            return Err(QcbError::InvalidSchedule(format!(
                "need finite t0 < tF, got [{t0}, {tf}]"
            )));
        }
        if amplitudes.is_empty() {
            return Err(QcbError::InvalidSchedule("at least one step is required".into()));
        }
        for (s, row) in amplitudes.iter().enumerate() {
            if row.len() != n_controls {
                return Err(QcbError::InvalidSchedule(format!(
                    "step {s} has {} amplitudes, expected {n_controls}",
                    row.len()
                )));
            }
            if let Some(m) = row.iter().position(|x| !x.is_finite()) {
                return Err(QcbError::NonFiniteAmplitude { step: s, control: m });
            }
        }
        Ok(Self {
            t0,
            tf,
            n_controls,
            amplitudes,
        })
    }

    pub fn zeros(t0: f64, tf: f64, steps: usize, n_controls: usize) -> Result<Self> {
        Self::constant(t0, tf, steps, &vec![0.0; n_controls])
    }

    pub fn constant(t0: f64, tf: f64, steps: usize, values: &[f64]) -> Result<Self> {
        Self::new(t0, tf, values.len(), vec![values.to_vec(); steps])
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn n_steps(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn n_controls(&self) -> usize {
        self.n_controls
    }

    pub fn dt(&self) -> f64 {
        (self.tf - self.t0) / self.n_steps() as f64
    }

    pub fn amplitudes(&self) -> &[Vec<f64>] {
        &self.amplitudes
    }

    /// Grid times `t0, t0 + dt, ..., tF` (S + 1 points).
    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..=self.n_steps()).map(|s| self.t0 + s as f64 * dt).collect()
    }

    /// Same grid, new amplitudes (validated).
    pub fn with_amplitudes(&self, amplitudes: Vec<Vec<f64>>) -> Result<Self> {
        if amplitudes.len() != self.n_steps() {
            return Err(QcbError::InvalidSchedule(format!(
                "expected {} steps, got {}",
                self.n_steps(),
                amplitudes.len()
            )));
        }
        Self::new(self.t0, self.tf, self.n_controls, amplitudes)
    }

    /// `self` followed by `next`; both must share the step width.
    pub fn concatenate(&self, next: &PulseSchedule) -> Result<Self> {
        if next.n_controls != self.n_controls {
            return Err(QcbError::DimensionMismatch {
                expected: self.n_controls,
                found: next.n_controls,
            });
        }
        if (next.dt() - self.dt()).abs() > 1e-12 * self.dt().abs().max(1.0) {
            return Err(QcbError::InvalidSchedule("step widths differ".into()));
        }
        let mut amplitudes = self.amplitudes.clone();
        amplitudes.extend(next.amplitudes.iter().cloned());
        let tf = self.t0 + self.dt() * amplitudes.len() as f64;
        Self::new(self.t0, tf, self.n_controls, amplitudes)
    }
}

fn check_compatible(model: &ControlModel, pulses: &PulseSchedule) -> Result<()> {
    if model.n_controls() != pulses.n_controls() {
        return Err(QcbError::DimensionMismatch {
            expected: model.n_controls(),
            found: pulses.n_controls(),
        });
    }
    Ok(())
}

/// Eigendecomposition of each step Hamiltonian, in time order.
pub fn step_decompositions(model: &ControlModel, pulses: &PulseSchedule) -> Result<Vec<EigDecomposition>> {
    check_compatible(model, pulses)?;
    pulses
        .amplitudes()
        .iter()
        .map(|row| hermitian_eig(&model.hamiltonian(row), f64::INFINITY))
        .collect()
}

/// Per-step propagators `U_1, ..., U_S`.
pub fn step_unitaries(model: &ControlModel, pulses: &PulseSchedule) -> Result<Vec<ComplexMatrix>> {
    let dt = pulses.dt();
    Ok(step_decompositions(model, pulses)?
        .iter()
        .map(|e| e.unitary_exp(dt))
        .collect())
}

/// `U(tF, t0) = U_S ... U_1`, each step exact for its constant Hamiltonian.
pub fn propagate(model: &ControlModel, pulses: &PulseSchedule) -> Result<ComplexMatrix> {
    let mut u = ComplexMatrix::identity(model.dim());
    for step in step_unitaries(model, pulses)? {
        u = &step * &u;
    }
    Ok(u)
}

/// Evolution from `tF` back to `t0` through the same intervals, i.e.
/// `U_1^dagger ... U_S^dagger`; composing it with [`propagate`] gives the identity.
pub fn propagate_reversed(model: &ControlModel, pulses: &PulseSchedule) -> Result<ComplexMatrix> {
    let dt = pulses.dt();
    let mut u = ComplexMatrix::identity(model.dim());
    for eig in step_decompositions(model, pulses)?.iter().rev() {
        u = &eig.unitary_exp(-dt) * &u;
    }
    Ok(u)
}

/// `<A(t_s)>` on all S + 1 grid times, starting with `tr(A rho0)`.
pub fn simulate_expectation(
    model: &ControlModel,
    pulses: &PulseSchedule,
    rho0: &DensityMatrix,
    a: &Observable,
) -> Result<Vec<f64>> {
    model.drift().ensure_same_dim(rho0.matrix())?;
    model.drift().ensure_same_dim(a.matrix())?;
    let mut rho = rho0.clone();
    let mut series = Vec::with_capacity(pulses.n_steps() + 1);
    series.push(expectation(a, &rho)?);
    for u in step_unitaries(model, pulses)? {
        rho = evolve_unchecked(&rho, &u);
        series.push(expectation(a, &rho)?);
    }
    Ok(series)
}

/// `<A(tF)>` only.
pub fn final_expectation(
    model: &ControlModel,
    pulses: &PulseSchedule,
    rho0: &DensityMatrix,
    a: &Observable,
) -> Result<f64> {
    model.drift().ensure_same_dim(rho0.matrix())?;
    let u = propagate(model, pulses)?;
    expectation(a, &evolve_unchecked(rho0, &u))
}
