//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by fallible operations.
///
/// Internal invariants (exponent-grid violations, overflow) are impossible
/// by construction and guarded by debug assertions instead.
#[derive(Debug, Error)]
pub enum Error {
    /// A query violates its well-formedness predicate (non-decreasing
    /// sequence, negative mode index, a pos/neg collision outside the
    /// explicit collision path, ...).
    #[error("malformed query: {0}")]
    MalformedQuery(String),

    /// An identity that the recursion guarantees failed to hold, e.g. a
    /// denominator clearing left a remainder. Always a bug or a genuine
    /// theorem violation; never user error.
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),

    /// A requested window cannot certify the requested q-order.
    #[error("window too small: {0}")]
    WindowTooSmall(String),

    /// A numeric evaluation was requested on a series whose truncation
    /// order cannot meet the accuracy target.
    #[error("insufficient series order: {0}")]
    InsufficientOrder(String),
}

impl Error {
    /// Process exit status assigned to this error class by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MalformedQuery(_) | Error::WindowTooSmall(_) | Error::InsufficientOrder(_) => 2,
            Error::Inconsistency(_) => 3,
        }
    }
}
