//! Repeated-episode auction driver: population setup, budget dynamics,
//! episode execution, and metric accumulation.
//!
//! The episode loop is sequential and single-threaded over state; only
//! independent scenario runs (sweep points, seed batches) fan out in
//! parallel via [`run_many`], each with its own RNG stream. With scripted
//! advisors an entire run is bit-reproducible from the seed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::advisor::{Advisor, BidRecord, BudgetKind, PromptContext};
use crate::error::Error;
use crate::exec;
use crate::mechanism::{run_auction, AuctionOutcome, ClearingRule, SealedBid};
use crate::model::{demand_ratio, ChannelDraw, RadioConfig, UeId, UeProfile, ValuationCalibration};
use crate::strategy::{
    budget_cap, shaded_bid, truthful_bid, BidderState, Participation, StrategyKind, StrategyParams,
};

/// Budget dynamics across episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BudgetMode {
    /// Each UE's budget is set to a fresh draw from
    /// `U[reserve - epsilon, reserve + epsilon]` at every episode start.
    Refill { epsilon: f64 },
    /// Each UE gets one fixed budget for the whole horizon.
    Static { amount: f64 },
}

impl BudgetMode {
    pub fn kind(&self) -> BudgetKind {
        match self {
            BudgetMode::Refill { .. } => BudgetKind::Refill,
            BudgetMode::Static { .. } => BudgetKind::Static,
        }
    }

    fn initial_budget(&self) -> f64 {
        match self {
            // refill sets the working budget at each episode start
            BudgetMode::Refill { .. } => 0.0,
            BudgetMode::Static { amount } => *amount,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyOverride {
    pub ue: UeId,
    pub strategy: StrategyKind,
}

/// Which policy each UE follows: a population default plus per-UE
/// overrides. Overrides naming UEs beyond `ue_count` are inert, so the
/// default 16-UE layout stays harmless in smaller scenarios.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategyAssignment {
    #[serde(default = "default_population_strategy")]
    pub default: StrategyKind,
    #[serde(default)]
    pub overrides: Vec<StrategyOverride>,
}

fn default_population_strategy() -> StrategyKind {
    StrategyKind::Shaded
}

impl Default for StrategyAssignment {
    fn default() -> Self {
        // one truthful and one LLM slot in an otherwise shaded population
        Self {
            default: StrategyKind::Shaded,
            overrides: vec![
                StrategyOverride {
                    ue: 10,
                    strategy: StrategyKind::Truthful,
                },
                StrategyOverride {
                    ue: 13,
                    strategy: StrategyKind::Llm,
                },
            ],
        }
    }
}

impl StrategyAssignment {
    pub fn uniform(kind: StrategyKind) -> Self {
        Self {
            default: kind,
            overrides: Vec::new(),
        }
    }

    pub fn kind_for(&self, ue: UeId) -> StrategyKind {
        self.overrides
            .iter()
            .find(|o| o.ue == ue)
            .map(|o| o.strategy)
            .unwrap_or(self.default)
    }

    fn validate(&self) -> Result<(), Error> {
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.overrides {
            if !seen.insert(o.ue) {
                return Err(Error::Config(format!(
                    "duplicate strategy override for UE {}",
                    o.ue
                )));
            }
        }
        Ok(())
    }
}

/// Knobs for LLM-advised bidding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmOptions {
    /// Clamp advisor bids into `[0, valuation]` before submission. Raw
    /// suggestions are kept in the episode record either way.
    pub clamp_to_valuation: bool,
    /// How many recent episodes the prompt's history sections cover.
    pub history_window: usize,
}

impl Default for LlmOptions {
    fn default() -> Self {
        Self {
            clamp_to_valuation: true,
            history_window: 10,
        }
    }
}

/// Full scenario description; together with the advisor scripts this
/// determines a run byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub episode_count: u32,
    pub ue_count: u32,
    pub rng_seed: u64,
    /// Redraw each UE's SINR at every episode start instead of once per run.
    pub redraw_sinr_each_episode: bool,
    pub clearing_rule: ClearingRule,
    /// SINR draw interval in dB, low..high.
    pub sinr_db_range: (f64, f64),
    /// Rate-to-utility scaler draw interval, low..high.
    pub alpha_range: (f64, f64),
    /// Target interval for calibrated per-channel valuations.
    pub valuation_bounds: (f64, f64),
    /// Service classes: requested downlink rates in bps; each UE draws one
    /// uniformly. The default single 370 kbps class keeps every demand at
    /// one sub-channel over the default SINR range.
    pub service_classes: Vec<f64>,
    pub radio: RadioConfig,
    pub budget: BudgetMode,
    pub strategies: StrategyAssignment,
    pub strategy_params: StrategyParams,
    pub llm: LlmOptions,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            episode_count: 20,
            ue_count: 16,
            rng_seed: 17,
            redraw_sinr_each_episode: false,
            clearing_rule: ClearingRule::MinWinningPayment,
            sinr_db_range: (5.0, 20.0),
            alpha_range: (0.8, 1.2),
            valuation_bounds: (1.0, 3.5),
            service_classes: vec![370_000.0],
            radio: RadioConfig::default(),
            budget: BudgetMode::Refill { epsilon: 0.12 },
            strategies: StrategyAssignment::default(),
            strategy_params: StrategyParams::default(),
            llm: LlmOptions::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn reserve_price(&self) -> f64 {
        self.radio.reserve_price()
    }

    pub fn capacity(&self) -> u32 {
        self.radio.subchannel_count
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.ue_count == 0 {
            return Err(Error::Config("ue_count must be at least 1".into()));
        }
        self.radio.validate()?;
        self.strategy_params.validate()?;
        self.strategies.validate()?;
        for (name, (lo, hi)) in [
            ("sinr_db_range", self.sinr_db_range),
            ("alpha_range", self.alpha_range),
            ("valuation_bounds", self.valuation_bounds),
        ] {
            if !lo.is_finite() || !hi.is_finite() || hi < lo {
                return Err(Error::Config(format!(
                    "{name} must be an ordered finite interval, got ({lo}, {hi})"
                )));
            }
        }
        if self.alpha_range.0 <= 0.0 {
            return Err(Error::Config(
                "alpha_range must be strictly positive".into(),
            ));
        }
        if self.service_classes.is_empty() {
            return Err(Error::Config("service_classes must not be empty".into()));
        }
        if self
            .service_classes
            .iter()
            .any(|r| !r.is_finite() || *r <= 0.0)
        {
            return Err(Error::Config(
                "service_classes must all be strictly positive".into(),
            ));
        }
        match self.budget {
            BudgetMode::Refill { epsilon } => {
                if !epsilon.is_finite() || epsilon < 0.0 || epsilon > self.reserve_price() {
                    return Err(Error::Config(format!(
                        "refill epsilon must lie in [0, reserve], got {epsilon}"
                    )));
                }
            }
            BudgetMode::Static { amount } => {
                if !amount.is_finite() || amount < 0.0 {
                    return Err(Error::Config(format!(
                        "static budget must be nonnegative, got {amount}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn calibration(&self) -> Result<ValuationCalibration, Error> {
        ValuationCalibration::new(
            self.alpha_range,
            self.sinr_db_range,
            self.radio.bandwidth_per_subchannel_hz,
            self.valuation_bounds,
        )
    }
}

/// Advisors keyed by UE id; every LLM-strategy UE needs an entry.
pub type AdvisorBank = BTreeMap<UeId, Box<dyn Advisor>>;

/// Everything that happened in one episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpisodeRecord {
    pub episode: u32,
    /// Budget top-ups applied at episode start (empty under static budgets).
    pub refills: BTreeMap<UeId, f64>,
    pub submitted_bids: Vec<SealedBid>,
    pub outcome: AuctionOutcome,
    /// Quasilinear utility gained this episode, zero for every non-winner.
    pub per_ue_utility_delta: BTreeMap<UeId, f64>,
    pub bs_utility_delta: f64,
    pub abstained: Vec<UeId>,
    pub blocked: Vec<UeId>,
    /// LLM UEs whose advisor failed and fell back to the shaded heuristic.
    pub llm_fallbacks: Vec<UeId>,
    /// Raw advisor suggestions before valuation/budget capping.
    pub llm_raw_bids: BTreeMap<UeId, f64>,
}

/// Per-UE aggregate results over a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UeMetrics {
    pub ue_id: UeId,
    pub strategy: StrategyKind,
    pub wins: u32,
    pub win_frequency: f64,
    pub accumulated_utility: f64,
    pub last_win_episode: Option<u32>,
    pub initial_budget: f64,
    pub total_refilled: f64,
    pub total_paid: f64,
    pub final_budget: f64,
}

/// Run-level aggregates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    pub per_ue: Vec<UeMetrics>,
    pub bs_accumulated_utility: f64,
    /// Resource-demand ratio of the initial population (NaN when no UE has
    /// a feasible demand).
    pub eta: f64,
    pub clearing_price_series: Vec<f64>,
}

/// Full output of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub metrics: MetricsTable,
    pub episodes: Vec<EpisodeRecord>,
    pub profiles: Vec<UeProfile>,
    pub final_states: Vec<BidderState>,
}

/// Draws the UE population from the seeded RNG: per UE (in id order) an
/// alpha, an SINR, and a service class, then the derived rate, demand, and
/// calibrated valuation. A UE whose demand is infeasible is marked
/// permanently abstaining.
pub fn init_population(
    config: &ScenarioConfig,
    rng: &mut impl Rng,
) -> Result<(Vec<UeProfile>, Vec<BidderState>), Error> {
    let calibration = config.calibration()?;
    let mut profiles = Vec::with_capacity(config.ue_count as usize);
    let mut states = Vec::with_capacity(config.ue_count as usize);
    for id in 0..config.ue_count {
        let alpha = draw_uniform(rng, config.alpha_range);
        let sinr_db = draw_uniform(rng, config.sinr_db_range);
        let class_idx = rng.random_range(0..config.service_classes.len());
        let required_rate_bps = config.service_classes[class_idx];
        let draw = match ChannelDraw::evaluate(
            &config.radio,
            &calibration,
            alpha,
            sinr_db,
            required_rate_bps,
        ) {
            Ok(draw) => Some(draw),
            Err(Error::InfeasibleDemand { .. }) => {
                log::warn!(
                    "UE {id}: QoS demand infeasible at {sinr_db} dB; permanently abstaining"
                );
                None
            }
            Err(other) => return Err(other),
        };
        let initial_budget = config.budget.initial_budget();
        profiles.push(UeProfile {
            id,
            alpha,
            required_rate_bps,
            initial_budget,
            strategy: config.strategies.kind_for(id),
            draw,
        });
        states.push(BidderState::new(id, initial_budget));
    }
    Ok((profiles, states))
}

/// Applies the episode-start budget dynamics and returns the applied
/// deltas by UE id. Under refill every UE's budget (blocked ones included)
/// is set to a fresh draw; under static budgets this is a no-op.
pub fn refill_budgets(
    states: &mut [BidderState],
    mode: &BudgetMode,
    reserve: f64,
    rng: &mut impl Rng,
) -> BTreeMap<UeId, f64> {
    let mut deltas = BTreeMap::new();
    if let BudgetMode::Refill { epsilon } = mode {
        for state in states.iter_mut() {
            let target = draw_uniform(rng, (reserve - epsilon, reserve + epsilon));
            deltas.insert(state.ue_id, target - state.remaining_budget);
            state.remaining_budget = target;
        }
    }
    deltas
}

fn draw_uniform(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

/// A scenario in progress: population, per-UE state, and the public price
/// signal, advanced one episode at a time.
pub struct Simulation {
    config: ScenarioConfig,
    calibration: ValuationCalibration,
    profiles: Vec<UeProfile>,
    draws: Vec<Option<ChannelDraw>>,
    states: Vec<BidderState>,
    rng: ChaCha8Rng,
    clearing_price: f64,
    clearing_series: Vec<f64>,
    episodes_run: u32,
}

impl Simulation {
    pub fn new(config: &ScenarioConfig) -> Result<Self, Error> {
        config.validate()?;
        let calibration = config.calibration()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let (profiles, states) = init_population(config, &mut rng)?;
        let draws = profiles.iter().map(|p| p.draw).collect();
        Ok(Self {
            config: config.clone(),
            calibration,
            profiles,
            draws,
            states,
            rng,
            clearing_price: config.reserve_price(),
            clearing_series: Vec::new(),
            episodes_run: 0,
        })
    }

    pub fn profiles(&self) -> &[UeProfile] {
        &self.profiles
    }

    pub fn states(&self) -> &[BidderState] {
        &self.states
    }

    /// Advances one episode: refill budgets, (optionally) redraw channels,
    /// collect capped strategy bids, run the auction, and settle state.
    pub fn run_episode(&mut self, advisors: &mut AdvisorBank) -> Result<EpisodeRecord, Error> {
        let episode = self.episodes_run + 1;
        let reserve = self.config.reserve_price();
        let params = self.config.strategy_params;

        let refills = refill_budgets(
            &mut self.states,
            &self.config.budget,
            reserve,
            &mut self.rng,
        );
        if self.config.redraw_sinr_each_episode {
            self.redraw_channels()?;
        }

        let clearing_prev = self.clearing_price;
        let mut submitted: Vec<SealedBid> = Vec::new();
        let mut abstained: Vec<UeId> = Vec::new();
        let mut blocked: Vec<UeId> = Vec::new();
        let mut llm_fallbacks: Vec<UeId> = Vec::new();
        let mut llm_raw_bids: BTreeMap<UeId, f64> = BTreeMap::new();

        for idx in 0..self.profiles.len() {
            let id = self.profiles[idx].id;
            let Some(draw) = self.draws[idx] else {
                abstained.push(id);
                continue;
            };
            if self.states[idx].is_blocked(episode) {
                blocked.push(id);
                continue;
            }
            let valuation = draw.valuation_per_channel;
            let failures = self.states[idx].consecutive_failures;
            let bid = match self.profiles[idx].strategy {
                StrategyKind::Truthful => truthful_bid(valuation),
                StrategyKind::Shaded => shaded_bid(valuation, clearing_prev, failures, &params),
                StrategyKind::Llm => {
                    let ctx = self.prompt_context(idx, &draw, episode);
                    let advisor = advisors.get_mut(&id).ok_or(Error::MissingAdvisor(id))?;
                    match advisor.advise(&ctx) {
                        Ok(reply) => {
                            llm_raw_bids.insert(id, reply.bid_value);
                            let bid = if self.config.llm.clamp_to_valuation {
                                reply.bid_value.min(valuation)
                            } else {
                                reply.bid_value
                            };
                            bid.max(0.0)
                        }
                        Err(err) => {
                            log::debug!("UE {id}: advisor failed ({err}); shaded fallback");
                            llm_fallbacks.push(id);
                            shaded_bid(valuation, clearing_prev, failures, &params)
                        }
                    }
                }
            };
            let capped = budget_cap(
                bid,
                draw.demand_subchannels,
                self.states[idx].remaining_budget,
            );
            if capped < reserve {
                abstained.push(id);
                continue;
            }
            submitted.push(SealedBid {
                ue_id: id,
                demand: draw.demand_subchannels,
                bid_per_channel: capped,
            });
        }

        let outcome = run_auction(
            &submitted,
            self.config.capacity(),
            reserve,
            clearing_prev,
            self.config.clearing_rule,
        )?;
        self.clearing_price = outcome.clearing_price;
        self.clearing_series.push(outcome.clearing_price);

        let mut per_ue_utility_delta: BTreeMap<UeId, f64> =
            self.profiles.iter().map(|p| (p.id, 0.0)).collect();
        for bid in &submitted {
            let idx = bid.ue_id as usize;
            let won = outcome.payments.contains_key(&bid.ue_id);
            let payment_total = if won {
                f64::from(bid.demand) * outcome.payments[&bid.ue_id].per_channel
            } else {
                0.0
            };
            self.states[idx].update_after_round(
                bid.bid_per_channel,
                won,
                payment_total,
                outcome.clearing_price,
                episode,
                &params,
            )?;
            if won {
                let valuation = self.draws[idx]
                    .expect("submitted bids imply a feasible draw")
                    .valuation_per_channel;
                let delta =
                    f64::from(bid.demand) * (valuation - outcome.payments[&bid.ue_id].per_channel);
                per_ue_utility_delta.insert(bid.ue_id, delta);
            }
        }
        for &id in &abstained {
            self.states[id as usize].record_inactive(
                episode,
                Participation::Abstained,
                outcome.clearing_price,
            );
        }
        for &id in &blocked {
            self.states[id as usize].record_inactive(
                episode,
                Participation::Blocked,
                outcome.clearing_price,
            );
        }

        self.episodes_run = episode;
        let bs_utility_delta = outcome.bs_utility;
        Ok(EpisodeRecord {
            episode,
            refills,
            submitted_bids: submitted,
            outcome,
            per_ue_utility_delta,
            bs_utility_delta,
            abstained,
            blocked,
            llm_fallbacks,
            llm_raw_bids,
        })
    }

    fn redraw_channels(&mut self) -> Result<(), Error> {
        for idx in 0..self.profiles.len() {
            let sinr_db = draw_uniform(&mut self.rng, self.config.sinr_db_range);
            let profile = &self.profiles[idx];
            self.draws[idx] = match ChannelDraw::evaluate(
                &self.config.radio,
                &self.calibration,
                profile.alpha,
                sinr_db,
                profile.required_rate_bps,
            ) {
                Ok(draw) => Some(draw),
                Err(Error::InfeasibleDemand { .. }) => None,
                Err(other) => return Err(other),
            };
        }
        Ok(())
    }

    fn prompt_context(&self, idx: usize, draw: &ChannelDraw, episode: u32) -> PromptContext {
        let window = self.config.llm.history_window;
        let state = &self.states[idx];
        let clearing_price_history = tail(&self.clearing_series, window).to_vec();
        let own_bid_history = tail(&state.history, window)
            .iter()
            .map(|entry| BidRecord {
                bid: match entry.participation {
                    Participation::Bid(bid) => Some(bid),
                    _ => None,
                },
                won: entry.won,
                payment: entry.payment,
            })
            .collect();
        PromptContext {
            valuation_per_channel: draw.valuation_per_channel,
            remaining_budget: state.remaining_budget,
            demand: draw.demand_subchannels,
            clearing_price_history,
            own_bid_history,
            episodes_total: self.config.episode_count,
            episodes_remaining: self.config.episode_count.saturating_sub(episode),
            budget_kind: self.config.budget.kind(),
        }
    }

    fn into_result(self, episodes: Vec<EpisodeRecord>) -> SimulationResult {
        let total_episodes = self.config.episode_count;
        let mut per_ue = Vec::with_capacity(self.profiles.len());
        for (idx, profile) in self.profiles.iter().enumerate() {
            let mut wins = 0u32;
            let mut accumulated_utility = 0.0;
            let mut last_win_episode = None;
            let mut total_refilled = 0.0;
            let mut total_paid = 0.0;
            for record in &episodes {
                if let Some(delta) = record.refills.get(&profile.id) {
                    total_refilled += delta;
                }
                if let Some(payment) = record.outcome.payments.get(&profile.id) {
                    wins += 1;
                    last_win_episode = Some(record.episode);
                    let demand = record
                        .submitted_bids
                        .iter()
                        .find(|b| b.ue_id == profile.id)
                        .map(|b| b.demand)
                        .unwrap_or(0);
                    total_paid += f64::from(demand) * payment.per_channel;
                }
                accumulated_utility += record.per_ue_utility_delta[&profile.id];
            }
            per_ue.push(UeMetrics {
                ue_id: profile.id,
                strategy: profile.strategy,
                wins,
                win_frequency: if total_episodes == 0 {
                    0.0
                } else {
                    f64::from(wins) / f64::from(total_episodes)
                },
                accumulated_utility,
                last_win_episode,
                initial_budget: profile.initial_budget,
                total_refilled,
                total_paid,
                final_budget: self.states[idx].remaining_budget,
            });
        }
        let demands: Vec<u32> = self
            .profiles
            .iter()
            .filter_map(|p| p.draw.map(|d| d.demand_subchannels))
            .collect();
        let eta = demand_ratio(self.config.radio.subchannel_count, &demands).unwrap_or(f64::NAN);
        let bs_accumulated_utility = episodes.iter().map(|r| r.bs_utility_delta).sum();
        SimulationResult {
            metrics: MetricsTable {
                per_ue,
                bs_accumulated_utility,
                eta,
                clearing_price_series: self.clearing_series.clone(),
            },
            episodes,
            profiles: self.profiles,
            final_states: self.states,
        }
    }
}

/// Runs a full scenario: `episode_count` episodes over a freshly drawn
/// population, returning metrics, the per-episode log, and final state.
pub fn run_simulation(
    config: &ScenarioConfig,
    advisors: &mut AdvisorBank,
) -> Result<SimulationResult, Error> {
    let mut sim = Simulation::new(config)?;
    for profile in sim.profiles() {
        if profile.strategy == StrategyKind::Llm && !advisors.contains_key(&profile.id) {
            return Err(Error::MissingAdvisor(profile.id));
        }
    }
    let mut episodes = Vec::with_capacity(config.episode_count as usize);
    for _ in 0..config.episode_count {
        episodes.push(sim.run_episode(advisors)?);
    }
    Ok(sim.into_result(episodes))
}

/// Runs independent scenarios, in parallel under the `parallel` feature.
/// Each run builds its own advisors and RNG stream, so results match
/// [`run_many_seq`] exactly.
pub fn run_many<F>(
    configs: &[ScenarioConfig],
    make_advisors: F,
) -> Result<Vec<SimulationResult>, Error>
where
    F: Fn(&ScenarioConfig) -> AdvisorBank + Sync + Send,
{
    exec::ordered_map(configs, |config| {
        let mut advisors = make_advisors(config);
        run_simulation(config, &mut advisors)
    })
    .into_iter()
    .collect()
}

/// Always-sequential twin of [`run_many`].
pub fn run_many_seq<F>(
    configs: &[ScenarioConfig],
    make_advisors: F,
) -> Result<Vec<SimulationResult>, Error>
where
    F: Fn(&ScenarioConfig) -> AdvisorBank + Sync + Send,
{
    exec::ordered_map_seq(configs, |config| {
        let mut advisors = make_advisors(config);
        run_simulation(config, &mut advisors)
    })
    .into_iter()
    .collect()
}

fn tail<T>(items: &[T], window: usize) -> &[T] {
    &items[items.len().saturating_sub(window)..]
}
