use std::path::PathBuf;

use qcb_core::bounds::{classify, decoupled_bounds};
use qcb_core::controllability::{block_closures, control_ideal};
use qcb_core::{
    detect_decoupling, evolve_state, expectation, is_completely_controllable, kinematical_bounds, optimal_unitary,
    optimize_multistart, simulate_expectation, Attainment, DensityMatrix, Direction, InitialPulse, KinematicalBounds,
    Observable, OptimizationConfig, DEFAULT_CLOSURE_TOL,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::model::{self, matrix_json, ModelFile, ObservableSpec};

/// Absolute slack used when classifying a value as sitting on a bound.
const ATTAINMENT_TOL: f64 = 1e-9;
/// Entry magnitude below which two levels count as uncoupled.
const COUPLING_TOL: f64 = 1e-12;

pub struct Inputs {
    pub file: ModelFile,
    pub observable_arg: Option<String>,
    pub rho0_arg: Option<String>,
}

impl Inputs {
    fn rho0(&self) -> Result<Option<DensityMatrix>, CliError> {
        match &self.rho0_arg {
            Some(arg) => model::parse_rho0_arg(arg, self.file.model.dim()).map(Some),
            None => Ok(self.file.rho0.clone()),
        }
    }

    fn require_rho0(&self, command: &str) -> Result<DensityMatrix, CliError> {
        self.rho0()?.ok_or_else(|| {
            CliError::validation(
                "rho0",
                format!("`{command}` needs an initial state; add `rho0` to the model file or pass --rho0"),
            )
        })
    }

    fn observable(&self) -> Result<Option<(ObservableSpec, Observable)>, CliError> {
        let spec = match &self.observable_arg {
            Some(arg) => Some(ObservableSpec::from_arg(arg, self.file.model.dim())?),
            None => self.file.observable.clone(),
        };
        spec.map(|s| s.resolve(&self.file.model).map(|o| (s, o))).transpose()
    }

    fn require_observable(&self, command: &str) -> Result<(ObservableSpec, Observable), CliError> {
        self.observable()?.ok_or_else(|| {
            CliError::validation(
                "observable",
                format!("`{command}` needs an observable; add `observable` to the model file or pass --observable"),
            )
        })
    }
}

fn bounds_json(b: &KinematicalBounds) -> Value {
    json!({ "lower": b.lower, "upper": b.upper })
}

fn attainment_json(a: &Attainment) -> Value {
    serde_json::to_value(a).expect("attainment serializes")
}

fn attainment_tol(b: &KinematicalBounds) -> f64 {
    ATTAINMENT_TOL * b.upper.abs().max(b.lower.abs()).max(1.0)
}

pub fn bounds(inputs: &Inputs, emit_unitary: bool) -> Result<Value, CliError> {
    let rho0 = inputs.require_rho0("bounds")?;
    let (spec, a) = inputs.require_observable("bounds")?;
    let b = kinematical_bounds(&a, &rho0)?;
    let initial = expectation(&a, &rho0)?;
    let mut out = json!({
        "command": "bounds",
        "dim": inputs.file.model.dim(),
        "observable": spec.describe(),
        "lower": b.lower,
        "upper": b.upper,
        "initial_expectation": initial,
        "attainment": attainment_json(&classify(initial, &b, attainment_tol(&b))),
    });
    if emit_unitary {
        let mut unitaries = serde_json::Map::new();
        for (key, dir, target) in [("max", Direction::Max, b.upper), ("min", Direction::Min, b.lower)] {
            let u = optimal_unitary(&a, &rho0, dir)?;
            let reached = expectation(&a, &evolve_state(&rho0, &u)?)?;
            unitaries.insert(
                key.into(),
                json!({ "matrix": matrix_json(&u), "expectation": reached, "target": target }),
            );
        }
        out["optimal_unitary"] = Value::Object(unitaries);
    }
    Ok(out)
}

pub fn controllability(inputs: &Inputs, ideal: bool) -> Result<Value, CliError> {
    let model = &inputs.file.model;
    let (controllable, report) = is_completely_controllable(model, DEFAULT_CLOSURE_TOL)?;
    let mut out = json!({
        "command": "controllability",
        "dim": model.dim(),
        "lie_dimension": report.dimension,
        "full_dimension": report.full_dimension(),
        "controllable": controllable,
        "generations": report.generations,
    });
    if ideal {
        let r = control_ideal(model, &report, DEFAULT_CLOSURE_TOL)?;
        let n = model.dim();
        out["ideal"] = json!({
            "dimension": r.dimension,
            "target": n * n - 1,
            "meets_criterion": r.meets_criterion,
        });
    }
    Ok(out)
}

pub fn decompose(inputs: &Inputs) -> Result<Value, CliError> {
    let model = &inputs.file.model;
    let rho0 = inputs.rho0()?;
    let partition = detect_decoupling(model, rho0.as_ref(), COUPLING_TOL)?;
    let closures = block_closures(model, &partition, DEFAULT_CLOSURE_TOL)?;
    let blocks: Vec<Value> = partition
        .blocks
        .iter()
        .zip(&closures)
        .enumerate()
        .map(|(i, (levels, closure))| {
            json!({
                "levels": levels.iter().map(|k| k + 1).collect::<Vec<_>>(),
                "size": levels.len(),
                "probability": partition.block_probabilities.as_ref().map(|p| p[i]),
                "lie_dimension": closure.dimension,
                "controllable": closure.dimension == closure.full_dimension(),
            })
        })
        .collect();
    let mut out = json!({
        "command": "decompose",
        "dim": model.dim(),
        "n_blocks": partition.blocks.len(),
        "blocks": blocks,
    });
    if let (Some(rho), Some((spec, a))) = (rho0, inputs.observable()?) {
        let global = kinematical_bounds(&a, &rho)?;
        let decoupled = decoupled_bounds(&a, &rho, &partition)?;
        out["observable"] = spec.describe().into();
        out["bounds"] = json!({
            "global": bounds_json(&global),
            "decoupled": bounds_json(&decoupled),
        });
    }
    Ok(out)
}

pub struct OptimizeArgs {
    pub config: OptimizationConfig,
    pub starts: usize,
    pub out: Option<PathBuf>,
}

pub fn optimize(inputs: &Inputs, args: &OptimizeArgs) -> Result<Value, CliError> {
    let model = &inputs.file.model;
    let rho0 = inputs.require_rho0("optimize")?;
    let (spec, a) = inputs.require_observable("optimize")?;
    if args.starts == 0 {
        return Err(CliError::validation("starts", "must be at least 1"));
    }
    args.config.validate()?;
    let seeds: Vec<u64> = (0..args.starts as u64)
        .map(|k| args.config.seed.wrapping_add(k))
        .collect();
    let report = optimize_multistart(model, &rho0, &a, &args.config, &seeds)?;
    if let Some(path) = &args.out {
        model::write_pulses(path, &report.best_pulses)?;
    }
    let cfg = &args.config;
    Ok(json!({
        "command": "optimize",
        "dim": model.dim(),
        "observable": spec.describe(),
        "config": {
            "target_time": cfg.target_time,
            "steps": cfg.steps,
            "iterations": cfg.iterations,
            "learning_rate": cfg.learning_rate,
            "initial_pulse": cfg.initial_pulse,
            "direction": cfg.direction,
            "convergence_tol": cfg.convergence_tol,
            "seeds": seeds,
        },
        "seed": report.seed,
        "final_expectation": report.final_expectation,
        "bounds": bounds_json(&report.bounds),
        "bounds_collapsed": report.bounds_collapsed,
        "yield_fraction": report.yield_fraction,
        "converged": report.converged,
        "iterations_run": report.iterations_run,
        "trajectory": report.trajectory,
        "pulses_path": args.out.as_ref().map(|p| p.display().to_string()),
        "best_pulses": report.best_pulses,
    }))
}

pub fn simulate(inputs: &Inputs, pulses_path: &std::path::Path) -> Result<Value, CliError> {
    let model = &inputs.file.model;
    let rho0 = inputs.require_rho0("simulate")?;
    let (spec, a) = inputs.require_observable("simulate")?;
    let pulses = model::load_pulses(pulses_path)?;
    if pulses.n_controls() != model.n_controls() {
        return Err(CliError::validation(
            "pulses",
            format!(
                "schedule has {} controls per step but the model has {}",
                pulses.n_controls(),
                model.n_controls()
            ),
        ));
    }
    let series = simulate_expectation(model, &pulses, &rho0, &a)?;
    let last = *series.last().expect("series includes t0");
    let b = kinematical_bounds(&a, &rho0)?;
    Ok(json!({
        "command": "simulate",
        "dim": model.dim(),
        "observable": spec.describe(),
        "steps": pulses.n_steps(),
        "times": pulses.times(),
        "expectation": series,
        "final_expectation": last,
        "bounds": bounds_json(&b),
        "attainment": attainment_json(&classify(last, &b, attainment_tol(&b))),
    }))
}

/// Default for `--init`.
pub fn default_initial_pulse() -> InitialPulse {
    OptimizationConfig::default().initial_pulse
}
