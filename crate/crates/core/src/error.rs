use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("cannot differentiate unit {unit} in layer {layer}: ReLU has no derivative in the activation set")]
    NotDifferentiable { layer: usize, unit: usize },

    #[error("coordinate index {index} out of range for input dimension {dim}")]
    BadCoordinate { index: usize, dim: usize },

    #[error("point {0} outside the unit interval")]
    OutOfDomain(f64),

    #[error("derivative order {order} not available for spline order {k}")]
    DerivativeOrder { order: usize, k: usize },

    #[error("spline order {0} cannot be compiled to a ReLU3 network (only cubic, k = 4)")]
    UnsupportedOrder(usize),

    #[error("missing derivative networks: {0}")]
    MissingDerivatives(&'static str),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("too many points for exact enumeration: {0} > 20")]
    TooManyPoints(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),

    #[error("training diverged at step {step} (loss = {loss})")]
    Diverged {
        step: usize,
        loss: f64,
        history: Vec<crate::pde::HistoryRow>,
    },

    #[error("least-squares fit residual {0:e} exceeds tolerance")]
    FitResidual(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
