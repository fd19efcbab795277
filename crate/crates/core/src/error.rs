use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// The input document could not be parsed as game JSON.
    #[error("parse error: {0}")]
    Parse(String),

    /// A field of an input document failed validation; the path names the
    /// offending entry (e.g. `payoffs[13]`).
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },

    /// Vector or tensor dimensions do not match the game shape.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A measure or comeasure entry was not strictly positive.
    #[error("nonpositive weight: {0}")]
    NonPositiveWeight(String),

    /// A joint distribution did not sum to one (or had negative mass).
    #[error("joint distribution not normalized: {0}")]
    NotNormalized(String),

    /// Entropic gradient requested at a boundary point of the simplex.
    #[error("boundary point: {0}")]
    BoundaryPoint(String),

    /// The requested operation does not apply to this input.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    /// A numerical routine failed to meet its accuracy contract.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A dynamical state stopped being finite at the given step.
    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    /// Reading or writing an artifact failed.
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;
