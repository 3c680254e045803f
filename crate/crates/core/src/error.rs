use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("normal vector is not unit length (|n| = {0})")]
    NonUnitNormal(f64),
    #[error("fields are sampled on different grids or point sets")]
    GridMismatch,
    #[error("fields carry different frequencies")]
    FrequencyMismatch,
    #[error("quadrature does not match the field samples: {0}")]
    QuadratureMismatch(String),
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("singular evaluation: {0}")]
    Pole(String),
    #[error("active (gain) medium rejected: {0}")]
    Active(String),
    #[error("coincident source and observation points")]
    Coincident,
    #[error("singular discrete operator (condition estimate {0:.3e})")]
    Singular(f64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
