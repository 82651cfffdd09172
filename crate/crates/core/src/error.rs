use thiserror::Error;

pub type Result<T, E = BrwError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BrwError {
    /// An input lies outside the domain of a model or operation.
    #[error("domain error: {field} = {value} violates {bound}")]
    Domain {
        field: &'static str,
        value: f64,
        bound: String,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("no phasematching in range [{lo_nm:.2}, {hi_nm:.2}] nm")]
    NoPhasematching { lo_nm: f64, hi_nm: f64 },

    #[error("no {what} mode found at {wavelength_nm:.3} nm")]
    ModeNotFound {
        what: &'static str,
        wavelength_nm: f64,
    },

    #[error("ridge too narrow: lateral guide supports no bound mode ({0})")]
    OverNarrowRidge(String),

    #[error("maximum at range edge (tau = {tau_fs} fs); widen range")]
    WidenRange { tau_fs: f64 },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("filter band outside grid, extend grid: {0}")]
    ExtendGrid(String),

    #[error("no pairs pass filters")]
    NoPairs,

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl BrwError {
    pub(crate) fn domain(field: &'static str, value: f64, bound: impl Into<String>) -> Self {
        BrwError::Domain {
            field,
            value,
            bound: bound.into(),
        }
    }
}
