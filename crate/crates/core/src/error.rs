use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A formula was requested outside the parameter regime where it holds.
    #[error("regime error: {0}")]
    Regime(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Boundary types passed to conditional propagation miss some ancestors.
    /// Coordinates are `(generation, label)`.
    #[error("boundary types missing for {} coordinate(s), first {:?}", .0.len(), .0.first())]
    IncompleteBoundary(Vec<(i64, u32)>),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
