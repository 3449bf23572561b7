//! Winner determination and pricing.
//!
//! The BS allocates at most `capacity` sub-channels to the submitted bids,
//! maximizing declared welfare `sum(demand * (bid - reserve))` over the
//! selected set. Selection is exact (pseudo-polynomial dynamic program over
//! capacity), which is what makes the pivot-payment truthfulness properties
//! hold in tests. Each winner then pays the externality it imposes on the
//! others: the optimal welfare with the winner removed minus the welfare
//! the rest obtain in the chosen allocation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::exec;
use crate::model::UeId;

/// A per-episode sealed bid: how many sub-channels and at what per-channel
/// price.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SealedBid {
    pub ue_id: UeId,
    pub demand: u32,
    pub bid_per_channel: f64,
}

impl SealedBid {
    pub fn validate(&self) -> Result<(), Error> {
        if !self.bid_per_channel.is_finite() {
            return Err(Error::NonFinite {
                what: "bid_per_channel",
                value: self.bid_per_channel,
            });
        }
        if self.bid_per_channel < 0.0 {
            return Err(Error::Negative {
                what: "bid_per_channel",
                value: self.bid_per_channel,
            });
        }
        if self.demand == 0 {
            return Err(Error::NonPositive {
                what: "demand",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// How the published clearing price is derived from the round's payments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClearingRule {
    /// Minimum per-channel payment among the round's winners.
    #[default]
    MinWinningPayment,
    /// Mean per-channel payment among the round's winners.
    MeanWinningPayment,
}

/// What one winner owes: the welfare-unit pivot and its per-channel form
/// `reserve + pivot / demand`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Payment {
    pub pivot: f64,
    pub per_channel: f64,
}

/// The result of one auction round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuctionOutcome {
    /// Winning UE ids, ascending.
    pub winners: Vec<UeId>,
    /// Payments per winner; losers owe nothing and are absent.
    pub payments: BTreeMap<UeId, Payment>,
    /// Optimal declared welfare of the chosen allocation.
    pub welfare: f64,
    /// Published market price for this round; carries the previous value
    /// forward when nobody wins.
    pub clearing_price: f64,
    /// BS utility for the round: `sum(demand * (per_channel - reserve))`.
    pub bs_utility: f64,
}

/// One DP cell: the best admissible subset of the bids processed so far
/// within a given channel budget. Preference order: higher welfare, then
/// fewer channels used, then lexicographically smallest id set.
#[derive(Clone)]
struct Cell {
    welfare: f64,
    channels: u32,
    ids: Vec<UeId>,
}

impl Cell {
    fn empty() -> Self {
        Cell {
            welfare: 0.0,
            channels: 0,
            ids: Vec::new(),
        }
    }
}

/// True when the candidate (base cell extended by `id` with `value`) is
/// strictly preferred over `current`.
fn candidate_beats(base: &Cell, id: UeId, demand: u32, value: f64, current: &Cell) -> bool {
    let welfare = base.welfare + value;
    if welfare != current.welfare {
        return welfare > current.welfare;
    }
    let channels = base.channels + demand;
    if channels != current.channels {
        return channels < current.channels;
    }
    // Compare `base.ids ++ [id]` against `current.ids` lexicographically.
    // `id` exceeds every id in `base.ids`, so the comparison never has to
    // look past it.
    let mut i = 0;
    loop {
        let lhs = if i < base.ids.len() {
            Some(base.ids[i])
        } else if i == base.ids.len() {
            Some(id)
        } else {
            None
        };
        let rhs = current.ids.get(i).copied();
        match (lhs, rhs) {
            (Some(a), Some(b)) if a == b => i += 1,
            (Some(a), Some(b)) => return a < b,
            (None, Some(_)) => return true,
            (Some(_), None) => return false,
            (None, None) => return false,
        }
    }
}

/// Exact welfare-maximizing winner determination.
///
/// Returns the selected UE ids (ascending) and the optimal welfare. Bids
/// below the reserve can only lower welfare and are filtered out up front;
/// bids exactly at the reserve carry zero value and lose every tie because
/// equal-welfare allocations prefer fewer channels. Ties beyond that break
/// toward the lexicographically smallest winner set, so identical inputs
/// always produce identical outputs regardless of bid order.
pub fn solve_welfare(bids: &[SealedBid], capacity: u32, reserve: f64) -> (Vec<UeId>, f64) {
    let cap = capacity as usize;
    let mut admitted: Vec<&SealedBid> = bids
        .iter()
        .filter(|b| b.bid_per_channel >= reserve && b.demand >= 1)
        .collect();
    admitted.sort_by_key(|b| b.ue_id);

    let mut dp: Vec<Cell> = vec![Cell::empty(); cap + 1];
    for bid in admitted {
        let need = bid.demand as usize;
        if need > cap {
            continue;
        }
        let value = f64::from(bid.demand) * (bid.bid_per_channel - reserve);
        for w in (need..=cap).rev() {
            // Split so the candidate base (index w - need) and the current
            // best (index w) can be borrowed simultaneously.
            let (lower, upper) = dp.split_at_mut(w);
            let base = &lower[w - need];
            let current = &mut upper[0];
            if candidate_beats(base, bid.ue_id, bid.demand, value, current) {
                let mut ids = Vec::with_capacity(base.ids.len() + 1);
                ids.extend_from_slice(&base.ids);
                ids.push(bid.ue_id);
                *current = Cell {
                    welfare: base.welfare + value,
                    channels: base.channels + bid.demand,
                    ids,
                };
            }
        }
    }

    let best = &dp[cap];
    (best.ids.clone(), best.welfare)
}

/// Declared welfare of a fixed allocation, summed in ascending-id order.
/// Using the same association order everywhere keeps zero-externality
/// pivots exactly zero.
fn welfare_of(by_id: &BTreeMap<UeId, (u32, f64)>, ids: &[UeId], reserve: f64) -> f64 {
    let mut total = 0.0;
    for id in ids {
        let (demand, bid) = by_id[id];
        total += f64::from(demand) * (bid - reserve);
    }
    total
}

struct PivotSolver<'a> {
    bids: &'a [SealedBid],
    by_id: BTreeMap<UeId, (u32, f64)>,
    winners: Vec<UeId>,
    capacity: u32,
    reserve: f64,
}

impl PivotSolver<'_> {
    fn entry(&self, id: UeId) -> (UeId, Payment) {
        let (demand, bid) = self.by_id[&id];
        let others: Vec<SealedBid> = self
            .bids
            .iter()
            .filter(|b| b.ue_id != id)
            .copied()
            .collect();
        let (without_ids, _) = solve_welfare(&others, self.capacity, self.reserve);
        let welfare_without = welfare_of(&self.by_id, &without_ids, self.reserve);
        let rest: Vec<UeId> = self.winners.iter().copied().filter(|w| *w != id).collect();
        let welfare_rest = welfare_of(&self.by_id, &rest, self.reserve);
        let value = f64::from(demand) * (bid - self.reserve);
        // The pivot lies in [0, value] in exact arithmetic; the clamp only
        // removes float residue so r <= per_channel <= bid holds as stated.
        let pivot = (welfare_without - welfare_rest).clamp(0.0, value);
        let per_channel = (self.reserve + pivot / f64::from(demand)).min(bid);
        (id, Payment { pivot, per_channel })
    }
}

fn prepare_pivots<'a>(
    bids: &'a [SealedBid],
    capacity: u32,
    reserve: f64,
    winners: &[UeId],
) -> Result<PivotSolver<'a>, Error> {
    let (expected, _) = solve_welfare(bids, capacity, reserve);
    let mut sorted = winners.to_vec();
    sorted.sort_unstable();
    if expected != sorted {
        return Err(Error::InconsistentWinners(format!(
            "expected {expected:?}, got {sorted:?}"
        )));
    }
    let by_id: BTreeMap<UeId, (u32, f64)> = bids
        .iter()
        .map(|b| (b.ue_id, (b.demand, b.bid_per_channel)))
        .collect();
    if by_id.len() != bids.len() {
        return Err(Error::InconsistentWinners(
            "duplicate ue ids in the bid list".into(),
        ));
    }
    Ok(PivotSolver {
        bids,
        by_id,
        winners: sorted,
        capacity,
        reserve,
    })
}

fn collect_payments(entries: Vec<(UeId, Payment)>) -> BTreeMap<UeId, Payment> {
    entries.into_iter().collect()
}

/// Pivot payments for a winner set previously produced by [`solve_welfare`]
/// on the same inputs (anything else is an error). Each winner's exclusion
/// subproblem is independent, so they run in parallel under the `parallel`
/// feature; results are merged by ue id and identical to the sequential
/// path.
pub fn vcg_payments(
    bids: &[SealedBid],
    capacity: u32,
    reserve: f64,
    winners: &[UeId],
) -> Result<BTreeMap<UeId, Payment>, Error> {
    let solver = prepare_pivots(bids, capacity, reserve, winners)?;
    let ids = solver.winners.clone();
    Ok(collect_payments(exec::ordered_map(&ids, |id| {
        solver.entry(*id)
    })))
}

/// Always-sequential twin of [`vcg_payments`]; reference path for tests and
/// benches.
pub fn vcg_payments_seq(
    bids: &[SealedBid],
    capacity: u32,
    reserve: f64,
    winners: &[UeId],
) -> Result<BTreeMap<UeId, Payment>, Error> {
    let solver = prepare_pivots(bids, capacity, reserve, winners)?;
    let ids = solver.winners.clone();
    Ok(collect_payments(exec::ordered_map_seq(&ids, |id| {
        solver.entry(*id)
    })))
}

/// Runs one full auction round: winner determination, pivot payments,
/// clearing-price extraction, and the BS utility for the round.
///
/// `fallback_clearing` is published when nobody wins (callers pass the
/// previous round's clearing price, or the reserve before any round has
/// resolved).
pub fn run_auction(
    bids: &[SealedBid],
    capacity: u32,
    reserve: f64,
    fallback_clearing: f64,
    rule: ClearingRule,
) -> Result<AuctionOutcome, Error> {
    for bid in bids {
        bid.validate()?;
    }
    if !reserve.is_finite() || reserve < 0.0 {
        return Err(Error::Negative {
            what: "reserve",
            value: reserve,
        });
    }
    let (winners, welfare) = solve_welfare(bids, capacity, reserve);
    let solver = prepare_pivots(bids, capacity, reserve, &winners)?;
    let payments = collect_payments(exec::ordered_map(&winners, |id| solver.entry(*id)));

    let clearing_price = if payments.is_empty() {
        fallback_clearing
    } else {
        match rule {
            ClearingRule::MinWinningPayment => payments
                .values()
                .map(|p| p.per_channel)
                .fold(f64::INFINITY, f64::min),
            ClearingRule::MeanWinningPayment => {
                payments.values().map(|p| p.per_channel).sum::<f64>() / payments.len() as f64
            }
        }
    };

    let bs_utility = winners
        .iter()
        .map(|id| {
            let (demand, _) = solver.by_id[id];
            f64::from(demand) * (payments[id].per_channel - reserve)
        })
        .sum();

    Ok(AuctionOutcome {
        winners,
        payments,
        welfare,
        clearing_price,
        bs_utility,
    })
}
