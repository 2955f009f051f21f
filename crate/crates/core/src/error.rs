use thiserror::Error;

/// Errors raised by estimators, tests, simulators and the training loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("label space needs at least 2 classes, got {0}")]
    LabelSpace(usize),
    #[error("label {label} out of range for k = {k}")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("format error: {0}")]
    Format(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("probability vector at row {row} is not on the simplex")]
    OffSimplex { row: usize },
    #[error("parameter `{name}` out of range")]
    Parameter { name: &'static str },
    #[error("class {class} has target mass but no examples")]
    Support { class: usize },
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
