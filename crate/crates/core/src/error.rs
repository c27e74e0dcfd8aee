use thiserror::Error;

/// Errors produced anywhere in the library.
///
/// The CLI maps [`Error::is_precondition`] failures to exit code 2 and
/// everything else to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e}, tolerance {tol:.1e})")]
    NotHermitian { asymmetry: f64, tol: f64 },

    #[error("parameter `{name}` = {value} is outside its allowed range: {expected}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("{what} failed to converge (last residual {residual:.3e})")]
    NoConvergence { what: &'static str, residual: f64 },

    #[error("requested accuracy {eps:.3e} is below the numerical floor {floor:.1e}")]
    BelowFloor { eps: f64, floor: f64 },

    #[error(
        "register of {requested} qubits exceeds the cap of {cap} (set QGSP_MAX_QUBITS to override)"
    )]
    QubitBudget { requested: usize, cap: usize },

    #[error("selected measurement branch has zero probability")]
    ZeroNormBranch,

    #[error("amplitude amplification gave up after {attempts} attempts")]
    AmplificationFailed { attempts: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Whether the failure is a violated precondition (bad input) as opposed
    /// to a numerical failure during the computation.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::NotHermitian { .. }
                | Error::OutOfRange { .. }
                | Error::BelowFloor { .. }
                | Error::QubitBudget { .. }
                | Error::Parse(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }

    /// Short machine-readable tag used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::NotHermitian { .. } => "not_hermitian",
            Error::OutOfRange { .. } => "out_of_range",
            Error::NoConvergence { .. } => "no_convergence",
            Error::BelowFloor { .. } => "below_floor",
            Error::QubitBudget { .. } => "qubit_budget",
            Error::ZeroNormBranch => "zero_norm_branch",
            Error::AmplificationFailed { .. } => "amplification_failed",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}
