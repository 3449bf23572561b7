//! Bidding policies and per-UE auction state: truthful and shaded bids,
//! budget capping, and failure/blocking bookkeeping.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::UeId;

/// Which bidding policy a UE follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Truthful,
    Shaded,
    Llm,
}

impl StrategyKind {
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Truthful => "truthful",
            StrategyKind::Shaded => "shaded",
            StrategyKind::Llm => "llm",
        }
    }
}

/// Shared failure/blocking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StrategyParams {
    /// Consecutive lost auctions tolerated before a UE is temporarily
    /// blocked. Must be at least 2 so the shading interpolation is defined.
    pub f_max: u32,
    /// Episodes a blocked UE sits out before re-entering.
    pub block_duration_episodes: u32,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            f_max: 5,
            block_duration_episodes: 3,
        }
    }
}

impl StrategyParams {
    pub fn validate(&self) -> Result<(), Error> {
        if self.f_max < 2 {
            return Err(Error::InvalidFailureLimit(self.f_max));
        }
        Ok(())
    }
}

/// How a UE took part in one episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Participation {
    /// Submitted this per-channel bid.
    Bid(f64),
    /// Sat out voluntarily (capped bid fell below the reserve, or no
    /// feasible demand).
    Abstained,
    /// Sat out because of an active block.
    Blocked,
}

/// One episode as seen by a single UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistoryEntry {
    pub episode: u32,
    pub participation: Participation,
    pub won: bool,
    /// Total amount paid this episode (0 unless won).
    pub payment: f64,
    /// Clearing price published after this episode's auction.
    pub clearing_price: f64,
}

/// Mutable per-UE episode state, owned by the simulation loop.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BidderState {
    pub ue_id: UeId,
    pub remaining_budget: f64,
    pub consecutive_failures: u32,
    /// Last episode (inclusive) of an active block, if any.
    pub blocked_until_episode: Option<u32>,
    pub history: Vec<HistoryEntry>,
}

impl BidderState {
    pub fn new(ue_id: UeId, budget: f64) -> Self {
        Self {
            ue_id,
            remaining_budget: budget,
            consecutive_failures: 0,
            blocked_until_episode: None,
            history: Vec::new(),
        }
    }

    pub fn is_blocked(&self, episode: u32) -> bool {
        self.blocked_until_episode
            .is_some_and(|until| episode <= until)
    }

    /// Applies one round's outcome for a UE that submitted a bid: winners
    /// pay and reset their failure streak; losers accumulate failures and
    /// are blocked for `block_duration_episodes` once the streak reaches
    /// `f_max` (the streak restarts at zero on return).
    pub fn update_after_round(
        &mut self,
        bid_per_channel: f64,
        won: bool,
        payment_total: f64,
        clearing_price: f64,
        episode: u32,
        params: &StrategyParams,
    ) -> Result<(), Error> {
        if won {
            // Unreachable when bids are budget-capped; tolerance covers the
            // rounding of budget/demand back up through demand*payment.
            if payment_total > self.remaining_budget * (1.0 + 1e-12) + 1e-12 {
                return Err(Error::Overdraft {
                    ue_id: self.ue_id,
                    payment: payment_total,
                    budget: self.remaining_budget,
                });
            }
            self.remaining_budget = (self.remaining_budget - payment_total).max(0.0);
            self.consecutive_failures = 0;
        } else {
            self.consecutive_failures += 1;
            if self.consecutive_failures >= params.f_max {
                self.blocked_until_episode = Some(episode + params.block_duration_episodes);
                self.consecutive_failures = 0;
            }
        }
        self.push_entry(HistoryEntry {
            episode,
            participation: Participation::Bid(bid_per_channel),
            won,
            payment: if won { payment_total } else { 0.0 },
            clearing_price,
        });
        Ok(())
    }

    /// Records an episode the UE did not enter. Only submitted-and-lost
    /// rounds count toward the failure streak, so this leaves it untouched.
    pub fn record_inactive(&mut self, episode: u32, reason: Participation, clearing_price: f64) {
        debug_assert!(!matches!(reason, Participation::Bid(_)));
        self.push_entry(HistoryEntry {
            episode,
            participation: reason,
            won: false,
            payment: 0.0,
            clearing_price,
        });
    }

    fn push_entry(&mut self, entry: HistoryEntry) {
        debug_assert!(
            self.history
                .last()
                .is_none_or(|last| last.episode < entry.episode),
            "history episodes must be strictly increasing"
        );
        self.history.push(entry);
    }
}

/// Truthful policy: bid the valuation, exactly.
pub fn truthful_bid(valuation: f64) -> f64 {
    valuation
}

/// Interpolation weight between the last clearing price and the UE's own
/// valuation: `log(failures + 1) / log(f_max)`, clamped to `[0, 1]`.
pub fn shading_factor(failures: u32, params: &StrategyParams) -> f64 {
    debug_assert!(params.f_max >= 2);
    let beta = (f64::from(failures) + 1.0).ln() / f64::from(params.f_max).ln();
    beta.clamp(0.0, 1.0)
}

/// Shaded policy: start at the last clearing price and move toward the true
/// valuation as consecutive failures accumulate; never bid above the
/// valuation, even when the market clears higher.
pub fn shaded_bid(
    valuation: f64,
    clearing_price: f64,
    failures: u32,
    params: &StrategyParams,
) -> f64 {
    let beta = shading_factor(failures, params);
    let raw = beta * valuation + (1.0 - beta) * clearing_price;
    valuation.min(raw)
}

/// Caps a per-channel bid so the worst-case total payment
/// (`demand * bid`, since VCG never charges above the bid) fits the
/// remaining budget. Callers abstain when the result falls below the
/// reserve price.
pub fn budget_cap(bid_per_channel: f64, demand: u32, remaining_budget: f64) -> f64 {
    bid_per_channel.min(remaining_budget / f64::from(demand.max(1)))
}
