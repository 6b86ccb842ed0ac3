use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// No rotation in [0°, 360°) distributes the points equally over the
    /// three sectors.
    #[error("no balancing rotation exists for {count} points")]
    BalancingFailed { count: usize },

    /// Polar angle (and therefore sector membership) is undefined at the
    /// origin.
    #[error("point at the origin has no polar angle")]
    UndefinedAngle,

    /// A receiver sits exactly on top of a base station; the path-loss law
    /// diverges at zero distance, so such instances are rejected outright.
    #[error("station {station} and receiver {receiver} are co-located")]
    CoLocated { station: usize, receiver: usize },

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    /// Exhaustive enumeration was refused because the instance is too large.
    #[error("instance has |B||K| = {size} association variables, oracle limit is {limit}")]
    RefusedSize { size: usize, limit: usize },

    #[error("malformed document: {0}")]
    Schema(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
