use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("contract violated: {0}")]
    Contract(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid object: {0}")]
    InvalidObject(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("singular design at x = {x:?}, t = {t}: {detail}")]
    SingularDesign {
        x: Vec<f64>,
        t: f64,
        detail: &'static str,
    },

    #[error("bandwidth selection failed: {0}")]
    SelectionFailure(String),

    #[error("degenerate signal: column {column} has zero variance")]
    DegenerateSignal { column: usize },

    #[error("fit failed at quadrature node (x = {x}, t = {t}): {source}")]
    Node {
        x: f64,
        t: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Dimension { .. } => "dimension",
            Error::Contract(_) => "contract",
            Error::EmptyInput(_) => "empty_input",
            Error::InvalidObject(_) => "invalid_object",
            Error::Convergence { .. } => "convergence",
            Error::SingularDesign { .. } => "singular_design",
            Error::SelectionFailure(_) => "selection_failure",
            Error::DegenerateSignal { .. } => "degenerate_signal",
            Error::Node { .. } => "node",
        }
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
