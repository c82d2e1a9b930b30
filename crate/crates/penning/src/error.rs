use std::path::PathBuf;

use penning_core::Error as CoreError;

/// Errors of the std layer. [`AppError::exit_code`] maps them onto the CLI
/// exit codes.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("config: {0}")]
    Config(String),

    #[error("unknown config key(s): {}", .0.join(", "))]
    UnknownKeys(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Format { path: PathBuf, line: usize, msg: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("trajectory too short for a spectrum: {got} samples, need {need}")]
    TooShort { got: usize, need: usize },

    /// No bias in the search bracket matched the circuit frequency.
    #[error("no resonance at {target_hz} Hz in the searched bias range; scanned (ΔV V, f_z Hz): {}", fmt_table(.table))]
    ResonanceNotFound { target_hz: f64, table: Vec<(f64, Option<f64>)> },

    /// The particle left the domain or hit an electrode.
    #[error("{0}")]
    Lost(String),
}

fn fmt_table(t: &[(f64, Option<f64>)]) -> String {
    t.iter()
        .map(|(v, f)| match f {
            Some(f) => format!("({v:.4}, {f:.1})"),
            None => format!("({v:.4}, none)"),
        })
        .collect::<Vec<_>>()
        .join(" ")
}

impl AppError {
    pub fn config(msg: impl Into<String>) -> Self {
        AppError::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 config, 3 non-convergence, 4 physics failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) => match e {
                CoreError::NonConvergence { .. } => 3,
                CoreError::NoAxialConfinement(_)
                | CoreError::UnstableTrap { .. }
                | CoreError::PlanInfeasible { .. }
                | CoreError::SingularPoint(_)
                | CoreError::OutOfDomain(_)
                | CoreError::FlatField => 4,
                _ => 2,
            },
            AppError::ResonanceNotFound { .. } | AppError::Lost(_) => 4,
            AppError::TooShort { .. } => 4,
            _ => 2,
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
