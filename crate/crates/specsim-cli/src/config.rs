//! Scenario config files: TOML documents mirroring
//! [`specsim::sim::ScenarioConfig`] section by section. An empty file means
//! all defaults; unknown keys are rejected with the offending name.

use std::path::Path;

use anyhow::Context;
use specsim::sim::ScenarioConfig;

pub fn load_config(path: &Path) -> anyhow::Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn parse_config(text: &str) -> anyhow::Result<ScenarioConfig> {
    let config: ScenarioConfig = toml::from_str(text)?;
    config.validate()?;
    Ok(config)
}

/// The default scenario rendered as a TOML document; `parse_config` of this
/// round-trips to `ScenarioConfig::default()`.
pub fn default_config_toml() -> String {
    toml::to_string_pretty(&ScenarioConfig::default()).expect("default config serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_yields_defaults() {
        let config = parse_config("").unwrap();
        assert_eq!(config, ScenarioConfig::default());
        assert_eq!(config.ue_count, 16);
        assert_eq!(config.radio.subchannel_count, 6);
        assert_eq!(config.episode_count, 20);
        assert!((config.reserve_price() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn unknown_field_is_rejected_by_name() {
        let err = parse_config("foo = 1\n").unwrap_err();
        assert!(err.to_string().contains("foo"), "error was: {err:#}");
    }

    #[test]
    fn zero_ue_count_fails_validation() {
        assert!(parse_config("ue_count = 0\n").is_err());
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let rendered = default_config_toml();
        let parsed = parse_config(&rendered).unwrap();
        assert_eq!(parsed, ScenarioConfig::default());
    }

    #[test]
    fn sections_override_defaults() {
        let text = r#"
            episode_count = 5
            [budget]
            mode = "static"
            amount = 15.0
            [strategies]
            default = "truthful"
        "#;
        let config = parse_config(text).unwrap();
        assert_eq!(config.episode_count, 5);
        assert!(matches!(
            config.budget,
            specsim::sim::BudgetMode::Static { amount } if amount == 15.0
        ));
    }
}
