use thiserror::Error;

/// Errors raised anywhere in the framework.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("msh parse error (line {line}): {msg}")]
    MshParse { line: usize, msg: String },

    #[error("unsupported element: {0}")]
    UnsupportedElement(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("index {index} out of range for {what} (len {len})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    #[error("no boundary condition defined for marker {0}")]
    MissingBoundaryCondition(i32),

    #[error("singular matrix: zero pivot in column {column}")]
    SingularMatrix { column: usize },

    #[error(
        "linear solver stagnated after {iterations} iterations (relative residual {residual:e})"
    )]
    LinearSolverStagnation { iterations: usize, residual: f64 },

    #[error("newton solver did not converge within {iterations} iterations")]
    NewtonNoConvergence { iterations: usize },

    #[error("newton solver diverged: residual {residual:e} exceeds {limit:e}")]
    NewtonDiverged { residual: f64, limit: f64 },

    #[error("time step size {dt:e} fell below the minimum {dt_min:e}")]
    TimeStepUnderflow { dt: f64, dt_min: f64 },

    #[error("coupling stencil mismatch: {0}")]
    StencilMismatch(String),

    #[error("parameter file line {line}: {msg}")]
    ParameterSyntax { line: usize, msg: String },

    #[error("missing required parameter `{0}`")]
    MissingParameter(String),

    #[error("parameter `{key}`: cannot convert `{value}` to {ty}")]
    ParameterType {
        key: String,
        value: String,
        ty: &'static str,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Failures a time loop may recover from by reducing the step size.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            Error::SingularMatrix { .. }
                | Error::LinearSolverStagnation { .. }
                | Error::NewtonNoConvergence { .. }
                | Error::NewtonDiverged { .. }
        )
    }
}
