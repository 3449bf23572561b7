//! Repeated spectrum auction simulator.
//!
//! A base station auctions `K` orthogonal sub-channels per episode to a
//! population of UE bidders via the VCG mechanism (exact welfare-maximizing
//! winner determination with a reserve price, Clarke pivot payments). UEs
//! follow truthful, shaded-heuristic, or LLM-advised bidding policies under
//! per-episode refilled or static budgets.
//!
//! Module map:
//! - [`model`]: radio/economic primitives (Shannon rate, QoS feasibility,
//!   valuations, reservation price, resource-demand ratio).
//! - [`mechanism`]: winner determination and pivot pricing.
//! - [`strategy`]: bidding policies and per-UE state bookkeeping.
//! - [`advisor`]: prompt construction, reply parsing, the chat-completion
//!   client, and deterministic scripted advisors.
//! - [`sim`]: the episode loop, budget dynamics, and metrics.
//!
//! With the default `parallel` feature, pivot solves and batch runs fan out
//! over rayon; `--no-default-features` builds a fully sequential variant
//! with identical results.

pub mod advisor;
pub mod error;
mod exec;
pub mod mechanism;
pub mod model;
pub mod sim;
pub mod strategy;

pub use error::Error;
