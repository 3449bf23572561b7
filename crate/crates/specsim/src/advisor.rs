//! Bid advisors for LLM-strategy UEs.
//!
//! A UE builds a structured prompt from its valuation, budget, demand, and
//! outcome history, sends it to a chat-completion endpoint, and parses the
//! `Bid value: ...` reply. Scripted advisors satisfy the same contract
//! deterministically and offline, which keeps full simulation runs
//! bit-reproducible from the seed. Transport and parse failures surface as
//! errors; the simulation loop degrades them to the shaded heuristic bid
//! rather than aborting the run.

use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable carrying the chat-completion endpoint base URL.
pub const ENV_BASE_URL: &str = "SPECSIM_LLM_BASE_URL";
/// Environment variable carrying the API key (optional; sent as a bearer
/// token when present).
pub const ENV_API_KEY: &str = "SPECSIM_LLM_API_KEY";
/// Environment variable overriding the model name.
pub const ENV_MODEL: &str = "SPECSIM_LLM_MODEL";

/// Appended to the prompt under static budgets, where spending must be
/// paced across the whole horizon.
pub const PACING_INSTRUCTION: &str =
    "Objective: maximize cumulative utility while never exhausting the budget before the last episode.";

#[derive(Debug, Error)]
pub enum AdvisorError {
    #[error("reply has no \"Bid value:\" label")]
    MissingLabel,
    #[error("bid value is not a valid nonnegative number: {0}")]
    InvalidBid(String),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("replay script exhausted after {0} bids")]
    ReplayExhausted(usize),
    #[error("missing endpoint configuration: {0}")]
    MissingEndpoint(String),
}

/// Whether the scenario refreshes budgets each episode or hands out one
/// fixed budget for the whole horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetKind {
    Refill,
    Static,
}

/// One prior episode as rendered into the prompt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BidRecord {
    /// Per-channel bid, `None` when the UE sat the episode out.
    pub bid: Option<f64>,
    pub won: bool,
    pub payment: f64,
}

/// Everything an advisor gets to see when asked for a bid.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptContext {
    pub valuation_per_channel: f64,
    pub remaining_budget: f64,
    pub demand: u32,
    pub clearing_price_history: Vec<f64>,
    pub own_bid_history: Vec<BidRecord>,
    pub episodes_total: u32,
    /// Episodes still to come after the current one.
    pub episodes_remaining: u32,
    pub budget_kind: BudgetKind,
}

/// Renders the prompt. Output is byte-stable for identical contexts; under
/// a static budget the pacing objective is appended before the asks.
pub fn build_prompt(ctx: &PromptContext) -> String {
    let mut prompt = String::new();
    prompt.push_str("Given the following network and economic context:\n");
    let _ = writeln!(
        prompt,
        "- Your true valuation for the BS spectrum: {:.4}",
        ctx.valuation_per_channel
    );
    let _ = writeln!(prompt, "- Your budget: {:.4}", ctx.remaining_budget);
    let _ = writeln!(prompt, "- Number of sub-channels required: {}", ctx.demand);
    if ctx.clearing_price_history.is_empty() {
        prompt.push_str("- Previous clearing prices: none\n");
    } else {
        let prices: Vec<String> = ctx
            .clearing_price_history
            .iter()
            .map(|p| format!("{p:.4}"))
            .collect();
        let _ = writeln!(prompt, "- Previous clearing prices: {}", prices.join(", "));
    }
    if ctx.own_bid_history.is_empty() {
        prompt.push_str("- Previous own bids and auction outcomes: none\n");
    } else {
        let entries: Vec<String> = ctx.own_bid_history.iter().map(render_record).collect();
        let _ = writeln!(
            prompt,
            "- Previous own bids and auction outcomes: {}",
            entries.join("; ")
        );
    }
    let _ = writeln!(
        prompt,
        "- Auction episodes remaining: {} of {}",
        ctx.episodes_remaining, ctx.episodes_total
    );
    if ctx.budget_kind == BudgetKind::Static {
        prompt.push_str(PACING_INSTRUCTION);
        prompt.push('\n');
    }
    prompt.push_str("Please analyze and provide:\n");
    prompt.push_str("1. Recommended bid value for the spectrum.\n");
    prompt.push_str("2. A brief explanation of your reasoning.\n");
    prompt
}

fn render_record(record: &BidRecord) -> String {
    match record.bid {
        None => "sat out".to_string(),
        Some(bid) if record.won => format!("bid {:.4} -> won (paid {:.4})", bid, record.payment),
        Some(bid) => format!("bid {bid:.4} -> lost"),
    }
}

/// A parsed advisor answer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvisorReply {
    pub bid_value: f64,
    pub explanation: String,
    pub raw_response: String,
}

/// Extracts the first number following the `Bid value:` label (case
/// insensitive, tolerant of surrounding prose and whitespace) plus the
/// `Explanation:` text. Negative, non-numeric, or non-finite values fail,
/// which callers treat as a retry/fallback trigger.
pub fn parse_reply(raw: &str) -> Result<AdvisorReply, AdvisorError> {
    let after_label = find_after_label(raw, "bid value").ok_or(AdvisorError::MissingLabel)?;
    let rest = after_label
        .trim_start()
        .trim_start_matches(':')
        .trim_start();
    if rest.starts_with('-') {
        return Err(AdvisorError::InvalidBid("negative".into()));
    }
    let digits: String = rest
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '.')
        .collect();
    if digits.is_empty() {
        return Err(AdvisorError::InvalidBid(format!(
            "no number after label: {:?}",
            rest.chars().take(20).collect::<String>()
        )));
    }
    let bid_value: f64 = digits
        .parse()
        .map_err(|_| AdvisorError::InvalidBid(digits.clone()))?;
    if !bid_value.is_finite() {
        return Err(AdvisorError::InvalidBid(digits));
    }
    let explanation = find_after_label(raw, "explanation")
        .map(|text| {
            text.trim_start()
                .trim_start_matches(':')
                .trim()
                .trim_matches('"')
                .to_string()
        })
        .unwrap_or_default();
    Ok(AdvisorReply {
        bid_value,
        explanation,
        raw_response: raw.to_string(),
    })
}

/// Case-insensitive ASCII search; returns the text following the label.
fn find_after_label<'a>(haystack: &'a str, label: &str) -> Option<&'a str> {
    let lowered = haystack.to_ascii_lowercase();
    lowered
        .find(&label.to_ascii_lowercase())
        .map(|pos| &haystack[pos + label.len()..])
}

/// An agent that proposes a per-channel bid for a prompt context.
pub trait Advisor: Send {
    fn advise(&mut self, ctx: &PromptContext) -> Result<AdvisorReply, AdvisorError>;
}

/// Deterministic offline policies satisfying the [`Advisor`] contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum ScriptedPolicy {
    /// Always bid the true valuation.
    EchoValuation,
    /// Bid a fixed fraction of the valuation (a simple pacing stand-in).
    FixedFraction { fraction: f64 },
    /// Replay a fixed list of bids, one per call; exhausting it is an error.
    Replay { bids: Vec<f64> },
}

/// Test/offline double for the HTTP advisor.
#[derive(Debug, Clone)]
pub struct ScriptedAdvisor {
    policy: ScriptedPolicy,
    cursor: usize,
}

impl ScriptedAdvisor {
    pub fn new(policy: ScriptedPolicy) -> Self {
        Self { policy, cursor: 0 }
    }
}

impl Advisor for ScriptedAdvisor {
    fn advise(&mut self, ctx: &PromptContext) -> Result<AdvisorReply, AdvisorError> {
        let (bid, explanation) = match &self.policy {
            ScriptedPolicy::EchoValuation => {
                (ctx.valuation_per_channel, "echo valuation".to_string())
            }
            ScriptedPolicy::FixedFraction { fraction } => (
                fraction * ctx.valuation_per_channel,
                format!("fixed fraction {fraction} of valuation"),
            ),
            ScriptedPolicy::Replay { bids } => {
                let bid = *bids
                    .get(self.cursor)
                    .ok_or(AdvisorError::ReplayExhausted(bids.len()))?;
                self.cursor += 1;
                (bid, format!("replay step {}", self.cursor))
            }
        };
        Ok(AdvisorReply {
            bid_value: bid,
            explanation: explanation.clone(),
            raw_response: format!("Bid value: {bid}\nExplanation: \"{explanation}\""),
        })
    }
}

/// Chat-completion endpoint parameters. The API key is read from the
/// environment and never serialized into run manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub temperature: f64,
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            model_name: "gpt-5-mini".to_string(),
            timeout_secs: 30,
            max_retries: 2,
            temperature: 0.0,
            api_key: None,
        }
    }
}

impl EndpointConfig {
    /// Builds endpoint settings from `SPECSIM_LLM_*` environment variables.
    pub fn from_env() -> Result<Self, AdvisorError> {
        let base_url = std::env::var(ENV_BASE_URL).map_err(|_| {
            AdvisorError::MissingEndpoint(format!(
                "set {ENV_BASE_URL} to the chat-completion base URL (and optionally {ENV_API_KEY})"
            ))
        })?;
        let mut cfg = Self {
            base_url,
            ..Self::default()
        };
        if let Ok(model) = std::env::var(ENV_MODEL) {
            cfg.model_name = model;
        }
        cfg.api_key = std::env::var(ENV_API_KEY).ok();
        Ok(cfg)
    }
}

/// Live advisor speaking a generic chat-completion JSON shape: the prompt
/// goes out as a single user message, the first choice's message content
/// comes back through [`parse_reply`]. Retries `max_retries` times on
/// transport or parse failures before giving up.
pub struct HttpAdvisor {
    endpoint: EndpointConfig,
    client: reqwest::blocking::Client,
}

impl HttpAdvisor {
    pub fn new(endpoint: EndpointConfig) -> Result<Self, AdvisorError> {
        if endpoint.base_url.is_empty() {
            return Err(AdvisorError::MissingEndpoint("empty base URL".into()));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(endpoint.timeout_secs))
            .build()
            .map_err(|e| AdvisorError::Transport(e.to_string()))?;
        Ok(Self { endpoint, client })
    }

    fn call_once(&self, prompt: &str) -> Result<AdvisorReply, AdvisorError> {
        let url = format!(
            "{}/chat/completions",
            self.endpoint.base_url.trim_end_matches('/')
        );
        let body = serde_json::json!({
            "model": self.endpoint.model_name,
            "temperature": self.endpoint.temperature,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let mut request = self.client.post(url).json(&body);
        if let Some(key) = &self.endpoint.api_key {
            request = request.bearer_auth(key);
        }
        let response = request
            .send()
            .map_err(|e| AdvisorError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(AdvisorError::Transport(format!("HTTP {status}")));
        }
        let value: serde_json::Value = response
            .json()
            .map_err(|e| AdvisorError::Transport(e.to_string()))?;
        let content = value["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| AdvisorError::Transport("response has no message content".into()))?;
        parse_reply(content)
    }
}

impl Advisor for HttpAdvisor {
    fn advise(&mut self, ctx: &PromptContext) -> Result<AdvisorReply, AdvisorError> {
        let prompt = build_prompt(ctx);
        let attempts = self.endpoint.max_retries + 1;
        let mut last_err = AdvisorError::Transport("no attempts made".into());
        for _ in 0..attempts {
            match self.call_once(&prompt) {
                Ok(reply) => return Ok(reply),
                Err(err) => {
                    log::debug!("advisor attempt failed: {err}");
                    last_err = err;
                }
            }
        }
        Err(last_err)
    }
}

/// One-shot request against a live endpoint: build the prompt, call, parse,
/// retrying per the endpoint settings.
pub fn request_bid(
    ctx: &PromptContext,
    endpoint: &EndpointConfig,
) -> Result<AdvisorReply, AdvisorError> {
    let mut advisor = HttpAdvisor::new(endpoint.clone())?;
    advisor.advise(ctx)
}
