use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or out-of-contract input.
    #[error("invalid input: {0}")]
    Input(String),

    /// An enumeration or LP would exceed its configured size cap.
    #[error("resource cap exceeded: {what} needs {needed}, cap is {cap}")]
    Resource {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    /// An iterative solver stopped before certifying the requested tolerance.
    #[error("solver did not reach tolerance ({context}): lower {lower}, upper {upper}")]
    Solver {
        lower: f64,
        upper: f64,
        context: String,
    },

    /// The linear program is infeasible or unbounded.
    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn input<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Input(msg.into()))
}

/// Checks `needed <= cap`, returning a resource error otherwise.
pub(crate) fn check_cap(what: &'static str, needed: u128, cap: u128) -> Result<()> {
    if needed > cap {
        return Err(Error::Resource { what, needed, cap });
    }
    Ok(())
}
