//! Gradient search for piecewise-constant pulses that drive `<A(tF)>` toward
//! its kinematical bound, and the yield bookkeeping that compares the two.
//!
//! The gradient is exact for the piecewise-constant model. With
//! `H_s = V diag(lambda) V^dagger` on step `s`, the derivative of
//! `exp(-i H_s dt)` along `H_m` is `V (G o V^dagger H_m V) V^dagger`, where `G`
//! holds the divided differences of `x -> exp(-i x dt)` over the spectrum.
//! Forward states and backward-propagated observables then give every
//! `d<A(tF)>/df_m[s]` from one forward and one backward sweep.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{kinematical_bounds, Direction, KinematicalBounds};
use crate::dynamics::{final_expectation, step_decompositions, ControlModel, PulseSchedule};
use crate::error::{QcbError, Result};
use crate::matcore::ComplexMatrix;
use crate::states::{DensityMatrix, Observable};

/// Armijo sufficient-increase constant for the backtracking search.
const ARMIJO_C: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
const STEP_GROWTH: f64 = 1.5;
/// Iterations over which the yield improvement is measured for convergence.
const CONVERGENCE_WINDOW: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialPulse {
    Zeros,
    Constant {
        value: f64,
    },
    /// Independent uniform draws in `[-amplitude, amplitude]`.
    Random {
        amplitude: f64,
    },
}

impl std::str::FromStr for InitialPulse {
    type Err = QcbError;

    /// `zeros`, `constant:<c>` or `random:<a>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || QcbError::InvalidConfig(format!("cannot parse initial pulse `{s}`"));
        let (kind, arg) = s.split_once(':').map_or((s, None), |(k, a)| (k, Some(a)));
        let number = |a: Option<&str>| a.and_then(|x| x.trim().parse::<f64>().ok()).ok_or_else(bad);
        match kind.trim() {
            "zeros" => Ok(Self::Zeros),
            "constant" => Ok(Self::Constant { value: number(arg)? }),
            "random" => Ok(Self::Random {
                amplitude: number(arg)?,
            }),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationConfig {
    pub target_time: f64,
    pub steps: usize,
    pub iterations: usize,
    /// Initial trial step of the backtracking line search.
    pub learning_rate: f64,
    pub initial_pulse: InitialPulse,
    pub seed: u64,
    pub direction: Direction,
    /// Yield change below which the run counts as converged.
    pub convergence_tol: f64,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        Self {
            target_time: 20.0,
            steps: 200,
            iterations: 200,
            learning_rate: 1.0,
            initial_pulse: InitialPulse::Random { amplitude: 0.1 },
            seed: 0,
            direction: Direction::Max,
            convergence_tol: 1e-6,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(QcbError::InvalidConfig(msg.into()));
        if !(self.target_time.is_finite() && self.target_time > 0.0) {
            return fail("target_time must be positive");
        }
        if self.steps == 0 {
            return fail("steps must be at least 1");
        }
        if self.iterations == 0 {
            return fail("iterations must be at least 1");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail("learning_rate must be positive");
        }
        if self.convergence_tol.is_nan() || self.convergence_tol < 0.0 {
            return fail("convergence_tol must be non-negative");
        }
        match self.initial_pulse {
            InitialPulse::Constant { value } if !value.is_finite() => fail("initial constant must be finite"),
            InitialPulse::Random { amplitude } if !(amplitude.is_finite() && amplitude >= 0.0) => {
                fail("initial random amplitude must be finite and non-negative")
            }
            _ => Ok(()),
        }
    }

    fn initial_schedule(&self, n_controls: usize) -> Result<PulseSchedule> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let amplitudes = (0..self.steps)
            .map(|_| {
                (0..n_controls)
                    .map(|_| match self.initial_pulse {
                        InitialPulse::Zeros => 0.0,
                        InitialPulse::Constant { value } => value,
                        InitialPulse::Random { amplitude } => amplitude * (2.0 * rng.random::<f64>() - 1.0),
                    })
                    .collect()
            })
            .collect();
        PulseSchedule::new(0.0, self.target_time, n_controls, amplitudes)
    }
}

/// Achieved value relative to the bounds, in both normalizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YieldFraction {
    /// `(value - lower) / (upper - lower)` for max (mirrored for min), in [0, 1].
    pub range_normalized: f64,
    /// `value / upper` for max, `value / lower` for min; `None` when that bound is 0.
    pub relative_to_bound: Option<f64>,
}

/// Yield toward the upper bound.
pub fn yield_fraction(value: f64, bounds: &KinematicalBounds) -> Result<YieldFraction> {
    yield_fraction_toward(value, bounds, Direction::Max)
}

pub fn yield_fraction_toward(value: f64, bounds: &KinematicalBounds, direction: Direction) -> Result<YieldFraction> {
    let width = bounds.width();
    if width <= collapse_tol(bounds) {
        return Err(QcbError::BoundsCollapsed { value: bounds.upper });
    }
    let (progress, target) = match direction {
        Direction::Max => (value - bounds.lower, bounds.upper),
        Direction::Min => (bounds.upper - value, bounds.lower),
    };
    Ok(YieldFraction {
        range_normalized: (progress / width).clamp(0.0, 1.0),
        relative_to_bound: (target != 0.0).then(|| value / target),
    })
}

fn collapse_tol(bounds: &KinematicalBounds) -> f64 {
    1e-12 * bounds.upper.abs().max(bounds.lower.abs()).max(1.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationReport {
    pub best_pulses: PulseSchedule,
    pub final_expectation: f64,
    pub bounds: KinematicalBounds,
    pub yield_fraction: YieldFraction,
    /// Best expectation after each iteration; entry 0 is the initial pulse.
    pub trajectory: Vec<f64>,
    pub converged: bool,
    pub iterations_run: usize,
    pub seed: u64,
    pub direction: Direction,
    /// Set when lower = upper; the run then returns immediately with yield 1.
    pub bounds_collapsed: bool,
}

/// Exact `d<A(tF)>/df_m[s]` as an S x M array.
pub fn gradient(
    model: &ControlModel,
    pulses: &PulseSchedule,
    rho0: &DensityMatrix,
    a: &Observable,
) -> Result<Vec<Vec<f64>>> {
    model.drift().ensure_same_dim(rho0.matrix())?;
    model.drift().ensure_same_dim(a.matrix())?;
    Ok(value_and_gradient(model, pulses, rho0, a)?.1)
}

fn value_and_gradient(
    model: &ControlModel,
    pulses: &PulseSchedule,
    rho0: &DensityMatrix,
    a: &Observable,
) -> Result<(f64, Vec<Vec<f64>>)> {
    let n = model.dim();
    let dt = pulses.dt();
    let eigs = step_decompositions(model, pulses)?;
    let unitaries: Vec<ComplexMatrix> = eigs.iter().map(|e| e.unitary_exp(dt)).collect();

    // rho_s: state entering step s
    let mut states = Vec::with_capacity(unitaries.len());
    let mut rho = rho0.matrix().clone();
    for u in &unitaries {
        let next = &(u * &rho) * &u.adjoint();
        states.push(std::mem::replace(&mut rho, next));
    }
    let value = crate::states::trace_of_product(a.matrix(), &rho).re;

    let mut grad = vec![vec![0.0; model.n_controls()]; unitaries.len()];
    // b: observable pulled back to the end of step s
    let mut b = a.matrix().clone();
    for s in (0..unitaries.len()).rev() {
        let eig = &eigs[s];
        let v = &eig.vectors;
        let v_adj = v.adjoint();
        let u = &unitaries[s];

        // Y = V^dagger (rho_s U^dagger B) V, so tr(B dU rho_s U^dagger) = tr(K Y)
        let x = &(&states[s] * &u.adjoint()) * &b;
        let y = &(&v_adj * &x) * v;
        let divided = divided_differences(&eig.values, dt);

        for (m, hm) in model.controls().iter().enumerate() {
            let hm_eig = &(&v_adj * hm) * v;
            let mut tr = Complex64::new(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    tr += divided[i * n + j] * hm_eig[(i, j)] * y[(j, i)];
                }
            }
            grad[s][m] = 2.0 * tr.re;
        }
        b = &(&u.adjoint() * &b) * u;
    }
    Ok((value, grad))
}

/// Divided differences of `x -> exp(-i x dt)` over `values`, row-major,
/// written in the cancellation-free sinc form.
fn divided_differences(values: &[f64], dt: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n * n);
    for &lj in values {
        for &lk in values {
            let mean = 0.5 * (lj + lk);
            let half = 0.5 * (lj - lk) * dt;
            let sinc = if half.abs() < 1e-8 {
                1.0 - half * half / 6.0
            } else {
                half.sin() / half
            };
            out.push(Complex64::from_polar(1.0, -mean * dt) * Complex64::new(0.0, -dt * sinc));
        }
    }
    out
}

/// Gradient ascent (or descent for `Direction::Min`) with Armijo backtracking.
///
/// Steps are only accepted when they improve the objective, so the recorded
/// trajectory is monotone. The trial step grows after each accepted step and
/// halves on each rejection.
pub fn optimize(
    model: &ControlModel,
    rho0: &DensityMatrix,
    a: &Observable,
    config: &OptimizationConfig,
) -> Result<OptimizationReport> {
    config.validate()?;
    model.drift().ensure_same_dim(rho0.matrix())?;
    model.drift().ensure_same_dim(a.matrix())?;
    let bounds = kinematical_bounds(a, rho0)?;
    let mut pulses = config.initial_schedule(model.n_controls())?;
    let sign = match config.direction {
        Direction::Max => 1.0,
        Direction::Min => -1.0,
    };

    if bounds.width() <= collapse_tol(&bounds) {
        let value = final_expectation(model, &pulses, rho0, a)?;
        return Ok(OptimizationReport {
            best_pulses: pulses,
            final_expectation: value,
            bounds,
            yield_fraction: YieldFraction {
                range_normalized: 1.0,
                relative_to_bound: Some(1.0),
            },
            trajectory: vec![value],
            converged: true,
            iterations_run: 0,
            seed: config.seed,
            direction: config.direction,
            bounds_collapsed: true,
        });
    }

    let yield_of = |v: f64| yield_fraction_toward(v, &bounds, config.direction).map(|y| y.range_normalized);
    let (mut value, mut grad) = value_and_gradient(model, &pulses, rho0, a)?;
    let mut trajectory = vec![value];
    let mut yields = vec![yield_of(value)?];
    let mut step = config.learning_rate;
    let mut converged = false;
    let mut iterations_run = 0;

    for _ in 0..config.iterations {
        iterations_run += 1;
        let slope: f64 = grad.iter().flatten().map(|g| g * g).sum();
        if slope == 0.0 {
            converged = true;
            break;
        }

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<Vec<f64>> = pulses
                .amplitudes()
                .iter()
                .zip(&grad)
                .map(|(row, g)| row.iter().zip(g).map(|(f, d)| f + sign * step * d).collect())
                .collect();
            let candidate = pulses.with_amplitudes(trial)?;
            let (v, g) = value_and_gradient(model, &candidate, rho0, a)?;
            if sign * (v - value) >= ARMIJO_C * step * slope {
                accepted = Some((candidate, v, g));
                break;
            }
            step *= 0.5;
        }

        match accepted {
            Some((candidate, v, g)) => {
                pulses = candidate;
                value = v;
                grad = g;
                step *= STEP_GROWTH;
            }
            None => {
                // no ascent direction left at machine precision
                trajectory.push(value);
                yields.push(yield_of(value)?);
                converged = true;
                break;
            }
        }
        trajectory.push(value);
        yields.push(yield_of(value)?);

        let k = yields.len() - 1;
        if k >= CONVERGENCE_WINDOW && yields[k] - yields[k - CONVERGENCE_WINDOW] < config.convergence_tol {
            converged = true;
            break;
        }
    }

    Ok(OptimizationReport {
        yield_fraction: yield_fraction_toward(value, &bounds, config.direction)?,
        best_pulses: pulses,
        final_expectation: value,
        bounds,
        trajectory,
        converged,
        iterations_run,
        seed: config.seed,
        direction: config.direction,
        bounds_collapsed: false,
    })
}

/// Runs [`optimize`] once per seed in parallel and keeps the best yield;
/// ties go to the lowest seed.
pub fn optimize_multistart(
    model: &ControlModel,
    rho0: &DensityMatrix,
    a: &Observable,
    config: &OptimizationConfig,
    seeds: &[u64],
) -> Result<OptimizationReport> {
    if seeds.is_empty() {
        return Err(QcbError::InvalidConfig("multi-start needs at least one seed".into()));
    }
    let reports: Vec<OptimizationReport> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = OptimizationConfig { seed, ..config.clone() };
            optimize(model, rho0, a, &cfg)
        })
        .collect::<Result<_>>()?;
    let best = reports
        .into_iter()
        .reduce(|best, r| {
            let better = r.yield_fraction.range_normalized > best.yield_fraction.range_normalized
                || (r.yield_fraction.range_normalized == best.yield_fraction.range_normalized && r.seed < best.seed);
            if better {
                r
            } else {
                best
            }
        })
        .expect("at least one seed");
    Ok(best)
}
