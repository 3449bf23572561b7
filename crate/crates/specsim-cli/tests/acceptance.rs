//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (visible with `--nocapture`). Mechanism-theoretic criteria run on
//! randomized instances against an exhaustive oracle local to this file;
//! scenario criteria run the shipped presets with scripted advisors.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use specsim::mechanism::{run_auction, solve_welfare, ClearingRule, SealedBid};
use specsim::model::UeId;
use specsim::sim::{run_many, ScenarioConfig, SimulationResult};
use specsim::strategy::{shaded_bid, shading_factor, StrategyKind, StrategyParams};
use specsim_cli::preset::{
    build_advisors, preset_scenarios, preset_script, run_preset, AdvisorMode, Preset,
};

mod support {
    use super::*;

    /// Exhaustive winner determination, independent of the solver: welfare
    /// summed in ascending-id order, same preference order on ties.
    pub fn brute_force(bids: &[SealedBid], capacity: u32, reserve: f64) -> (Vec<UeId>, f64) {
        let mut admitted: Vec<&SealedBid> = bids
            .iter()
            .filter(|b| b.bid_per_channel >= reserve && b.demand >= 1)
            .collect();
        admitted.sort_by_key(|b| b.ue_id);
        let n = admitted.len();
        let mut best: (Vec<UeId>, f64, u64) = (Vec::new(), 0.0, 0);
        for mask in 0u32..(1u32 << n) {
            let mut welfare = 0.0;
            let mut channels: u64 = 0;
            let mut ids = Vec::new();
            for (i, bid) in admitted.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    welfare += f64::from(bid.demand) * (bid.bid_per_channel - reserve);
                    channels += u64::from(bid.demand);
                    ids.push(bid.ue_id);
                }
            }
            if channels > u64::from(capacity) {
                continue;
            }
            let better = welfare > best.1
                || (welfare == best.1 && channels < best.2)
                || (welfare == best.1 && channels == best.2 && !ids.is_empty() && ids < best.0);
            if better {
                best = (ids, welfare, channels);
            }
        }
        (best.0, best.1)
    }

    pub fn run_preset_in_memory(preset: Preset) -> Vec<(String, ScenarioConfig, SimulationResult)> {
        let scenarios = preset_scenarios(preset);
        let mode = AdvisorMode::Scripted {
            policy: preset_script(preset),
        };
        let configs: Vec<_> = scenarios.iter().map(|(_, c)| c.clone()).collect();
        let results = run_many(&configs, |config| build_advisors(config, &mode)).unwrap();
        scenarios
            .into_iter()
            .zip(results)
            .map(|((label, config), result)| (label, config, result))
            .collect()
    }

    pub fn all_presets() -> Vec<(Preset, Vec<(String, ScenarioConfig, SimulationResult)>)> {
        [
            Preset::Refill,
            Preset::Static,
            Preset::EtaSweep,
            Preset::AllTruthful,
            Preset::AllHeuristic,
            Preset::AllLlm,
        ]
        .into_iter()
        .map(|preset| (preset, run_preset_in_memory(preset)))
        .collect()
    }

    /// Mean of last-win episodes over the UEs that won at least once.
    pub fn mean_last_win(result: &SimulationResult) -> f64 {
        let wins: Vec<u32> = result
            .metrics
            .per_ue
            .iter()
            .filter_map(|u| u.last_win_episode)
            .collect();
        assert!(!wins.is_empty(), "run produced no winners at all");
        wins.iter().map(|w| f64::from(*w)).sum::<f64>() / wins.len() as f64
    }

    pub fn verdict(criterion: u32, pass: bool, detail: &str) {
        println!(
            "acceptance criterion {criterion:2}: {} — {detail}",
            if pass { "PASS" } else { "FAIL" }
        );
        assert!(pass, "criterion {criterion} failed: {detail}");
    }
}

use support::*;

#[test]
fn criterion_01_vcg_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let instances = 10_000;
    let mut mismatches = 0;
    for _ in 0..instances {
        let n = rng.random_range(0..=10);
        let bids: Vec<SealedBid> = (0..n)
            .map(|ue_id| SealedBid {
                ue_id,
                demand: rng.random_range(1..=3),
                bid_per_channel: rng.random_range(0.0..4.0),
            })
            .collect();
        let capacity = rng.random_range(1..=8);
        let reserve = rng.random_range(0.0..2.0);
        let (winners, welfare) = solve_welfare(&bids, capacity, reserve);
        let (oracle_winners, oracle_welfare) = brute_force(&bids, capacity, reserve);
        if welfare != oracle_welfare || winners != oracle_winners {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        mismatches == 0 && elapsed.as_secs_f64() < 30.0,
        &format!(
            "{instances} random instances, {mismatches} mismatches vs exhaustive enumeration, {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_02_incentive_compatibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(2002);
    let instances = 1_000;
    let mut violations = 0;
    for _ in 0..instances {
        let n: u32 = rng.random_range(2..=8);
        let mut bids: Vec<SealedBid> = (0..n)
            .map(|ue_id| SealedBid {
                ue_id,
                demand: rng.random_range(1..=3),
                bid_per_channel: rng.random_range(0.0..4.0),
            })
            .collect();
        let capacity = rng.random_range(1..=8);
        let reserve = rng.random_range(0.0..2.0);
        let bidder = rng.random_range(0..n as usize);
        let ue_id = bids[bidder].ue_id;
        let demand = bids[bidder].demand;
        let valuation: f64 = rng.random_range(0.1..4.0);

        let mut utility_of = |bid_value: f64| -> f64 {
            bids[bidder].bid_per_channel = bid_value;
            let outcome = run_auction(
                &bids,
                capacity,
                reserve,
                reserve,
                ClearingRule::MinWinningPayment,
            )
            .unwrap();
            match outcome.payments.get(&ue_id) {
                Some(p) => f64::from(demand) * (valuation - p.per_channel),
                None => 0.0,
            }
        };

        let truthful = utility_of(valuation);
        for step in 0..=40 {
            let deviation = 2.0 * valuation * f64::from(step) / 40.0;
            if utility_of(deviation) > truthful + 1e-9 {
                violations += 1;
            }
        }
    }
    verdict(
        2,
        violations == 0,
        &format!("{instances} instances x 41-point deviation grid, {violations} violations"),
    );
}

#[test]
fn criterion_03_individual_rationality_in_every_preset() {
    let mut episodes_checked = 0;
    let mut violations = 0;
    for (_, runs) in all_presets() {
        for (_, config, result) in &runs {
            let reserve = config.reserve_price();
            for record in &result.episodes {
                episodes_checked += 1;
                let submitted: BTreeMap<UeId, &SealedBid> =
                    record.submitted_bids.iter().map(|b| (b.ue_id, b)).collect();
                for (ue, payment) in &record.outcome.payments {
                    let bid = submitted[ue];
                    // r <= pi <= kappa, exactly
                    if payment.per_channel < reserve || payment.per_channel > bid.bid_per_channel {
                        violations += 1;
                    }
                    if payment.pivot < 0.0 {
                        violations += 1;
                    }
                }
                // non-winners (and non-submitters) carry no payment entry
                // and gain zero utility
                for profile in &result.profiles {
                    if !record.outcome.payments.contains_key(&profile.id)
                        && record.per_ue_utility_delta[&profile.id] != 0.0
                    {
                        violations += 1;
                    }
                }
            }
        }
    }
    verdict(
        3,
        violations == 0 && episodes_checked > 0,
        &format!("{episodes_checked} preset episodes scanned, {violations} violations"),
    );
}

#[test]
fn criterion_04_abundant_regime_collapse() {
    let runs = run_preset_in_memory(Preset::EtaSweep);
    let (_, config, abundant) = runs
        .iter()
        .find(|(label, _, _)| label == "eta_1.500")
        .expect("sweep contains the abundant point");
    let reserve = config.reserve_price();
    let mut pass = (reserve - 1.2).abs() < 1e-12 && abundant.metrics.eta == 1.5;
    for ue in &abundant.metrics.per_ue {
        if ue.win_frequency != 1.0 {
            pass = false;
        }
    }
    for price in &abundant.metrics.clearing_price_series {
        if *price != reserve {
            pass = false;
        }
    }
    for record in &abundant.episodes {
        for payment in record.outcome.payments.values() {
            if payment.per_channel != reserve || payment.pivot != 0.0 {
                pass = false;
            }
        }
    }
    verdict(
        4,
        pass,
        &format!(
            "eta=1.5: every UE wins every episode and all {} clearing prices equal the reserve {reserve}",
            abundant.metrics.clearing_price_series.len()
        ),
    );
}

#[test]
fn criterion_05_refill_echo_advisor_equals_truthful() {
    let (_, llm_config) = preset_scenarios(Preset::Refill).remove(0);
    let mut truthful_config = llm_config.clone();
    for o in truthful_config.strategies.overrides.iter_mut() {
        if o.strategy == StrategyKind::Llm {
            o.strategy = StrategyKind::Truthful;
        }
    }
    let mode = AdvisorMode::Scripted {
        policy: preset_script(Preset::Refill),
    };
    let results = run_many(&[llm_config.clone(), truthful_config], |config| {
        build_advisors(config, &mode)
    })
    .unwrap();
    let (llm_run, truthful_run) = (&results[0], &results[1]);

    let llm_slot: Vec<UeId> = llm_config
        .strategies
        .overrides
        .iter()
        .filter(|o| o.strategy == StrategyKind::Llm)
        .map(|o| o.ue)
        .collect();
    let mut pass = !llm_slot.is_empty();
    for (a, b) in llm_run
        .metrics
        .per_ue
        .iter()
        .zip(truthful_run.metrics.per_ue.iter())
    {
        // identical rows up to the strategy label
        if a.wins != b.wins
            || a.win_frequency != b.win_frequency
            || a.accumulated_utility != b.accumulated_utility
            || a.last_win_episode != b.last_win_episode
            || a.total_paid != b.total_paid
            || a.final_budget != b.final_budget
        {
            pass = false;
        }
    }
    verdict(
        5,
        pass,
        &format!(
            "echo-scripted LLM slot (UE {:?}) reproduces the truthful bidder's metrics exactly",
            llm_slot
        ),
    );
}

#[test]
fn criterion_06_static_budget_exhaustion_ordering() {
    let truthful = &run_preset_in_memory(Preset::AllTruthful)[0].2;
    let paced = &run_preset_in_memory(Preset::AllLlm)[0].2;

    let max_wins = truthful
        .metrics
        .per_ue
        .iter()
        .map(|u| u.wins)
        .max()
        .unwrap();
    let mean_truthful = mean_last_win(truthful);
    let mean_paced = mean_last_win(paced);
    let separation = mean_paced - mean_truthful;
    let pass = max_wins <= 12 && mean_truthful < mean_paced && separation >= 3.0;
    verdict(
        6,
        pass,
        &format!(
            "max wins {max_wins} (<=12); mean last win: truthful {mean_truthful:.2} < paced {mean_paced:.2} (separation {separation:.2} >= 3)"
        ),
    );
}

#[test]
fn criterion_07_bs_utility_ordering() {
    let truthful = run_preset_in_memory(Preset::AllTruthful)[0]
        .2
        .metrics
        .bs_accumulated_utility;
    let heuristic = run_preset_in_memory(Preset::AllHeuristic)[0]
        .2
        .metrics
        .bs_accumulated_utility;
    let paced = run_preset_in_memory(Preset::AllLlm)[0]
        .2
        .metrics
        .bs_accumulated_utility;
    let pass = truthful >= heuristic && heuristic >= paced && truthful > paced;
    verdict(
        7,
        pass,
        &format!("BS utility {truthful:.2} (truthful) >= {heuristic:.2} (heuristic) >= {paced:.2} (paced script), strict at the ends"),
    );
}

#[test]
fn criterion_08_budget_ledger_conservation() {
    let mut ues_checked = 0;
    let mut violations = 0;
    for (_, runs) in all_presets() {
        for (_, _, result) in &runs {
            // recompute the ledger from the episode log, independent of the
            // accumulated metrics
            let mut refills: BTreeMap<UeId, f64> = BTreeMap::new();
            let mut payments: BTreeMap<UeId, f64> = BTreeMap::new();
            for record in &result.episodes {
                for (ue, delta) in &record.refills {
                    *refills.entry(*ue).or_default() += delta;
                }
                for bid in &record.submitted_bids {
                    if let Some(payment) = record.outcome.payments.get(&bid.ue_id) {
                        *payments.entry(bid.ue_id).or_default() +=
                            f64::from(bid.demand) * payment.per_channel;
                    }
                }
            }
            for (profile, state) in result.profiles.iter().zip(result.final_states.iter()) {
                ues_checked += 1;
                let expected = profile.initial_budget
                    + refills.get(&profile.id).copied().unwrap_or(0.0)
                    - payments.get(&profile.id).copied().unwrap_or(0.0);
                if (expected - state.remaining_budget).abs() > 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    verdict(
        8,
        violations == 0 && ues_checked > 0,
        &format!("{ues_checked} UE ledgers closed to 1e-9, {violations} violations"),
    );
}

#[test]
fn criterion_09_manifest_determinism() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_preset(Preset::Refill, None, dir_a.path(), false).unwrap();
    run_preset(Preset::Refill, None, dir_b.path(), false).unwrap();
    let mut pass = true;
    let mut compared = Vec::new();
    for name in ["metrics.csv", "bs.csv", "manifest.json"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        if a != b {
            pass = false;
        }
        compared.push(name);
    }
    verdict(
        9,
        pass,
        &format!("two runs of the same manifest produced byte-identical {compared:?}"),
    );
}

#[test]
fn criterion_10_heuristic_boundary_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let draws = 10_000;
    let mut violations = 0;
    for _ in 0..draws {
        let valuation: f64 = rng.random_range(0.0..5.0);
        let clearing: f64 = rng.random_range(0.0..5.0);
        let f_max: u32 = rng.random_range(2..=10);
        let failures: u32 = rng.random_range(0..=f_max);
        let params = StrategyParams {
            f_max,
            block_duration_episodes: 3,
        };
        let beta = shading_factor(failures, &params);
        let bid = shaded_bid(valuation, clearing, failures, &params);
        if !(0.0..=1.0).contains(&beta) {
            violations += 1;
        }
        if failures == 0 && bid != valuation.min(clearing) {
            violations += 1;
        }
        if failures + 1 == f_max && bid != valuation {
            violations += 1;
        }
        if bid > valuation {
            violations += 1;
        }
    }
    verdict(
        10,
        violations == 0,
        &format!("{draws} randomized draws of the shading rule, {violations} violations"),
    );
}
