use std::path::PathBuf;

use qcb_core::QcbError;
use thiserror::Error;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{origin}:{line}:{column}: {message}\n{context}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
        context: String,
    },

    /// A named invariant of the input failed, e.g. `rho0` or `controls[2]`.
    #[error("{field}: {message}")]
    Validation { field: String, message: String },

    #[error("{0}")]
    Core(#[from] QcbError),
}

impl CliError {
    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Builds a parse error that quotes the offending line of `source`.
    pub fn parse(origin: impl Into<String>, source: &str, err: &serde_json::Error) -> Self {
        let (line, column) = (err.line(), err.column());
        let text = source.lines().nth(line.saturating_sub(1)).unwrap_or("");
        let caret = " ".repeat(column.saturating_sub(1).min(text.len()));
        let mut message = err.to_string();
        if let Some(pos) = message.rfind(" at line ") {
            message.truncate(pos);
        }
        Self::Parse {
            origin: origin.into(),
            line,
            column,
            message,
            context: format!("  | {text}\n  | {caret}^"),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(
                QcbError::NotUnitary { .. } | QcbError::NonRealExpectation { .. } | QcbError::BoundsCollapsed { .. },
            ) => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }
}

/// Attaches a field name to a core validation failure.
pub trait Named<T> {
    fn named(self, field: &str) -> Result<T, CliError>;
}

impl<T> Named<T> for Result<T, QcbError> {
    fn named(self, field: &str) -> Result<T, CliError> {
        self.map_err(|e| match e {
            QcbError::NotUnitary { .. } | QcbError::NonRealExpectation { .. } => CliError::Core(e),
            other => CliError::validation(field, other.to_string()),
        })
    }
}
