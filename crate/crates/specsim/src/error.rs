use thiserror::Error;

use crate::model::UeId;

/// Errors surfaced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} must be finite, got {value}")]
    NonFinite { what: &'static str, value: f64 },

    #[error("{what} must be strictly positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },

    #[error("{what} must be nonnegative, got {value}")]
    Negative { what: &'static str, value: f64 },

    /// The per-channel rate cannot cover the requested rate with any number
    /// of sub-channels; the UE sits out the episode.
    #[error(
        "infeasible demand: {required_rate_bps} bps cannot be served at a zero per-channel rate"
    )]
    InfeasibleDemand { required_rate_bps: f64 },

    #[error("resource-demand ratio is undefined for an empty demand list")]
    UndefinedDemandRatio,

    #[error("failure limit must be at least 2, got {0}")]
    InvalidFailureLimit(u32),

    #[error("winner set is not welfare-optimal for the given bids: {0}")]
    InconsistentWinners(String),

    #[error("UE {ue_id} overdraft: payment {payment} exceeds remaining budget {budget}")]
    Overdraft {
        ue_id: UeId,
        payment: f64,
        budget: f64,
    },

    #[error("UE {0} uses the LLM strategy but no advisor was supplied")]
    MissingAdvisor(UeId),

    #[error("invalid scenario config: {0}")]
    Config(String),
}
