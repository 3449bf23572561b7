//! CSV and manifest emission. Files are UTF-8 with LF line endings and
//! fixed column orders:
//!
//! - `metrics.csv`: `ue_id,strategy,win_frequency,accumulated_utility,last_win_episode`
//! - `bs.csv`: `episode,bs_utility_delta,clearing_price`
//! - `summary.csv` (sweeps only):
//!   `label,eta,subchannel_count,total_demand,mean_win_frequency,mean_ue_accumulated_utility,bs_accumulated_utility,min_clearing_price,max_clearing_price`
//!
//! `manifest.json` snapshots everything that determines a scripted run
//! (configs, seed, advisor mode) plus the SHA-256 of each emitted file, so
//! re-running a manifest must reproduce identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use specsim::sim::{ScenarioConfig, SimulationResult};

use crate::preset::AdvisorMode;

pub const METRICS_HEADER: &str =
    "ue_id,strategy,win_frequency,accumulated_utility,last_win_episode";
pub const BS_HEADER: &str = "episode,bs_utility_delta,clearing_price";
pub const SUMMARY_HEADER: &str = "label,eta,subchannel_count,total_demand,mean_win_frequency,mean_ue_accumulated_utility,bs_accumulated_utility,min_clearing_price,max_clearing_price";

/// Everything needed to reproduce a scripted run, plus output checksums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub preset: Option<String>,
    pub seed: u64,
    pub advisor_mode: AdvisorMode,
    pub scenarios: Vec<(String, ScenarioConfig)>,
    /// Relative file name -> SHA-256 hex digest.
    pub files: BTreeMap<String, String>,
}

/// Writes `metrics.csv` and `bs.csv` for one run into `dir`; returns
/// `(file name, sha256)` pairs.
pub fn emit_outputs(
    result: &SimulationResult,
    dir: &Path,
) -> anyhow::Result<Vec<(String, String)>> {
    let mut metrics = String::new();
    metrics.push_str(METRICS_HEADER);
    metrics.push('\n');
    for ue in &result.metrics.per_ue {
        let last_win = ue
            .last_win_episode
            .map(|e| e.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            metrics,
            "{},{},{},{},{}",
            ue.ue_id,
            ue.strategy.label(),
            ue.win_frequency,
            ue.accumulated_utility,
            last_win
        );
    }

    let mut bs = String::new();
    bs.push_str(BS_HEADER);
    bs.push('\n');
    for record in &result.episodes {
        let _ = writeln!(
            bs,
            "{},{},{}",
            record.episode, record.bs_utility_delta, record.outcome.clearing_price
        );
    }

    let mut emitted = Vec::new();
    for (name, contents) in [("metrics.csv", metrics), ("bs.csv", bs)] {
        let path = dir.join(name);
        std::fs::write(&path, &contents).with_context(|| format!("writing {}", path.display()))?;
        emitted.push((name.to_string(), sha256_hex(contents.as_bytes())));
    }
    Ok(emitted)
}

/// Writes the sweep `summary.csv`: one row per sweep point.
pub fn emit_sweep_summary(
    results: &[(String, SimulationResult)],
    dir: &Path,
) -> anyhow::Result<(String, String)> {
    let mut summary = String::new();
    summary.push_str(SUMMARY_HEADER);
    summary.push('\n');
    for (label, result) in results {
        let metrics = &result.metrics;
        let n = metrics.per_ue.len().max(1) as f64;
        let mean_win = metrics.per_ue.iter().map(|u| u.win_frequency).sum::<f64>() / n;
        let mean_utility = metrics
            .per_ue
            .iter()
            .map(|u| u.accumulated_utility)
            .sum::<f64>()
            / n;
        let total_demand: u32 = result
            .profiles
            .iter()
            .filter_map(|p| p.draw.map(|d| d.demand_subchannels))
            .sum();
        let (min_clear, max_clear) = metrics
            .clearing_price_series
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                (lo.min(*p), hi.max(*p))
            });
        // eta = K / D, so the capacity is recoverable exactly
        let k = if total_demand > 0 && metrics.eta.is_finite() {
            (metrics.eta * f64::from(total_demand)).round() as u32
        } else {
            0
        };
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{}",
            label,
            metrics.eta,
            k,
            total_demand,
            mean_win,
            mean_utility,
            metrics.bs_accumulated_utility,
            min_clear,
            max_clear
        );
    }
    let path = dir.join("summary.csv");
    std::fs::write(&path, &summary).with_context(|| format!("writing {}", path.display()))?;
    Ok(("summary.csv".to_string(), sha256_hex(summary.as_bytes())))
}

pub fn write_manifest(manifest: &RunManifest, dir: &Path) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    let path = dir.join("manifest.json");
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
