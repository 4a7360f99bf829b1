use alloc::boxed::Box;
use alloc::string::String;

use crate::boundary::BoundaryPoint;

/// Errors raised by the core library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value lies outside the group or ring an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input: a measure, a query or a textual value.
    #[error("validation error: {0}")]
    Validation(String),

    /// An exact computation would exceed a configured size budget.
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// Boundary digits did not stabilise before the horizon ran out.
    #[error("no convergence within horizon {horizon}")]
    Convergence {
        horizon: u64,
        best_effort: Box<BoundaryPoint>,
    },
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
