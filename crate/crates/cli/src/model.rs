//! Model files: JSON documents with keys `dim`, `h0`, `controls` and the
//! optional `rho0`, `observable`, `labels` and `description`.
//!
//! Matrices are nested row arrays whose entries are real numbers or
//! `[re, im]` pairs. Every matrix must be Hermitian to within
//! [`HERMITIAN_TOL`] and of size `dim`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use qcb_core::{ComplexMatrix, ControlModel, DensityMatrix, Observable, PulseSchedule};
use serde::Deserialize;

use crate::error::{CliError, Named};

pub const HERMITIAN_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged, expecting = "expected a real number or a [re, im] pair")]
enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl From<Entry> for Complex64 {
    fn from(e: Entry) -> Self {
        match e {
            Entry::Real(re) => Complex64::new(re, 0.0),
            Entry::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

type RawMatrix = Vec<Vec<Entry>>;

#[derive(Debug, Deserialize)]
#[serde(untagged, expecting = "expected a matrix, or a list of diagonal weights")]
enum RawState {
    Diagonal(Vec<f64>),
    Matrix(RawMatrix),
}

#[derive(Debug, Deserialize)]
#[serde(
    untagged,
    expecting = "expected a matrix or an alias such as \"h0\" or \"control:1\""
)]
enum RawObservable {
    Alias(String),
    Matrix(RawMatrix),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    dim: usize,
    h0: RawMatrix,
    controls: Vec<RawMatrix>,
    #[serde(default)]
    rho0: Option<RawState>,
    #[serde(default)]
    observable: Option<RawObservable>,
    #[serde(default)]
    labels: Option<Vec<String>>,
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
}

/// A validated model file.
#[derive(Debug, Clone)]
pub struct ModelFile {
    pub model: ControlModel,
    pub rho0: Option<DensityMatrix>,
    pub observable: Option<ObservableSpec>,
}

/// An observable as written by the user, before it is bound to a model.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    Drift,
    /// 1-based control index.
    Control(usize),
    Identity,
    /// 1-based level index.
    Projector(usize),
    Matrix(ComplexMatrix),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn to_matrix(field: &str, raw: RawMatrix, dim: usize) -> Result<ComplexMatrix, CliError> {
    if raw.len() != dim {
        return Err(CliError::validation(
            field,
            format!("expected {dim} rows, found {}", raw.len()),
        ));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (i, row) in raw.into_iter().enumerate() {
        if row.len() != dim {
            return Err(CliError::validation(
                field,
                format!("row {} has {} entries, expected {dim}", i + 1, row.len()),
            ));
        }
        data.extend(row.into_iter().map(Complex64::from));
    }
    if let Some(bad) = data.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(CliError::validation(
            field,
            format!("entry ({}, {}) is not finite", bad / dim + 1, bad % dim + 1),
        ));
    }
    let m = ComplexMatrix::new(dim, data).named(field)?;
    m.ensure_hermitian(HERMITIAN_TOL).named(field)?;
    Ok(m)
}

fn to_state(field: &str, raw: RawState, dim: usize) -> Result<DensityMatrix, CliError> {
    let m = match raw {
        RawState::Diagonal(w) if w.len() == dim => ComplexMatrix::from_real_diagonal(&w),
        RawState::Diagonal(w) => {
            return Err(CliError::validation(
                field,
                format!("expected {dim} weights, found {}", w.len()),
            ));
        }
        RawState::Matrix(rows) => to_matrix(field, rows, dim)?,
    };
    DensityMatrix::with_tolerance(m, HERMITIAN_TOL).named(field)
}

impl ObservableSpec {
    /// Parses `h0`, `control:m`, `identity`, `projector:k` (1-based indices).
    pub fn from_alias(s: &str) -> Result<Self, CliError> {
        let bad = |msg: String| CliError::validation("observable", msg);
        let index = |arg: &str| {
            arg.trim()
                .parse::<usize>()
                .ok()
                .filter(|&k| k >= 1)
                .ok_or_else(|| bad(format!("`{s}`: index must be a positive integer")))
        };
        match s.trim().split_once(':') {
            None if s.trim() == "h0" => Ok(Self::Drift),
            None if s.trim() == "identity" => Ok(Self::Identity),
            Some(("control", k)) => Ok(Self::Control(index(k)?)),
            Some(("projector", k)) => Ok(Self::Projector(index(k)?)),
            _ => Err(bad(format!(
                "unknown alias `{s}`; expected h0, control:<m>, identity, projector:<k> or a matrix"
            ))),
        }
    }

    /// Command-line form: an alias, an inline JSON matrix, or a path to one.
    pub fn from_arg(arg: &str, dim: usize) -> Result<Self, CliError> {
        if let Ok(spec) = Self::from_alias(arg) {
            return Ok(spec);
        }
        let (origin, text) = inline_or_file(arg)?;
        let raw: RawMatrix = serde_json::from_str(&text).map_err(|e| CliError::parse(origin, &text, &e))?;
        Ok(Self::Matrix(to_matrix("observable", raw, dim)?))
    }

    pub fn resolve(&self, model: &ControlModel) -> Result<Observable, CliError> {
        let n = model.dim();
        let m = match self {
            Self::Drift => model.drift().clone(),
            Self::Identity => ComplexMatrix::identity(n),
            Self::Control(k) => model.controls().get(k - 1).cloned().ok_or_else(|| {
                CliError::validation(
                    "observable",
                    format!(
                        "control:{k} requested but the model has {} controls",
                        model.n_controls()
                    ),
                )
            })?,
            Self::Projector(k) if *k <= n => {
                let mut p = ComplexMatrix::zeros(n);
                p[(k - 1, k - 1)] = Complex64::new(1.0, 0.0);
                p
            }
            Self::Projector(k) => {
                return Err(CliError::validation(
                    "observable",
                    format!("projector:{k} is out of range for dimension {n}"),
                ))
            }
            Self::Matrix(m) => m.clone(),
        };
        Observable::with_tolerance(m, HERMITIAN_TOL).named("observable")
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Drift => "h0".into(),
            Self::Identity => "identity".into(),
            Self::Control(k) => format!("control:{k}"),
            Self::Projector(k) => format!("projector:{k}"),
            Self::Matrix(_) => "matrix".into(),
        }
    }
}

/// Treats `arg` as inline JSON when it starts with `[` or `{`, else as a path.
fn inline_or_file(arg: &str) -> Result<(String, String), CliError> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        Ok(("<inline>".into(), arg.to_string()))
    } else {
        let path = Path::new(arg);
        Ok((path.display().to_string(), read(path)?))
    }
}

/// `--rho0` value: inline JSON or a file holding a matrix, a weight list, or
/// an object with a `rho0` key.
pub fn parse_rho0_arg(arg: &str, dim: usize) -> Result<DensityMatrix, CliError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Wrapped {
        Bare(RawState),
        Keyed { rho0: RawState },
    }
    let (origin, text) = inline_or_file(arg)?;
    let raw: Wrapped = serde_json::from_str(&text).map_err(|e| CliError::parse(origin, &text, &e))?;
    let state = match raw {
        Wrapped::Bare(s) | Wrapped::Keyed { rho0: s } => s,
    };
    to_state("rho0", state, dim)
}

pub fn load_model(path: &Path) -> Result<ModelFile, CliError> {
    let text = read(path)?;
    let raw: RawModel =
        serde_json::from_str(&text).map_err(|e| CliError::parse(path.display().to_string(), &text, &e))?;
    let dim = raw.dim;
    if dim == 0 {
        return Err(CliError::validation("dim", "must be at least 1"));
    }
    let h0 = to_matrix("h0", raw.h0, dim)?;
    let controls = raw
        .controls
        .into_iter()
        .enumerate()
        .map(|(k, c)| to_matrix(&format!("controls[{}]", k + 1), c, dim))
        .collect::<Result<Vec<_>, _>>()?;
    let mut model = ControlModel::with_tolerance(h0, controls, HERMITIAN_TOL).named("controls")?;
    if let Some(labels) = raw.labels {
        model = model.with_labels(labels).named("labels")?;
    }
    let rho0 = raw.rho0.map(|r| to_state("rho0", r, dim)).transpose()?;
    let observable = match raw.observable {
        None => None,
        Some(RawObservable::Alias(a)) => Some(ObservableSpec::from_alias(&a)?),
        Some(RawObservable::Matrix(m)) => Some(ObservableSpec::Matrix(to_matrix("observable", m, dim)?)),
    };
    Ok(ModelFile {
        model,
        rho0,
        observable,
    })
}

pub fn load_pulses(path: &Path) -> Result<PulseSchedule, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path.display().to_string(), &text, &e))
}

/// Writes `t0`, `tF`, `steps` and one amplitude row per line. Numbers use
/// the shortest representation that parses back to the same bits.
pub fn write_pulses(path: &Path, pulses: &PulseSchedule) -> Result<(), CliError> {
    let num = |x: f64| serde_json::to_string(&x).expect("finite amplitudes");
    let rows: Vec<String> = pulses
        .amplitudes()
        .iter()
        .map(|row| format!("    [{}]", row.iter().map(|&x| num(x)).collect::<Vec<_>>().join(", ")))
        .collect();
    let text = format!(
        "{{\n  \"t0\": {},\n  \"tF\": {},\n  \"steps\": {},\n  \"amplitudes\": [\n{}\n  ]\n}}\n",
        num(pulses.t0()),
        num(pulses.tf()),
        pulses.n_steps(),
        rows.join(",\n")
    );
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Matrix as rows of `[re, im]` pairs, the same layout the loader accepts.
pub fn matrix_json(m: &ComplexMatrix) -> serde_json::Value {
    m.rows()
        .iter()
        .map(|row| row.iter().map(|z| vec![z.re, z.im]).collect::<Vec<_>>())
        .collect::<Vec<_>>()
        .into()
}
