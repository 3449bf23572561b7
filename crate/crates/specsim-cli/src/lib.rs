//! Batch front end for the spectrum auction simulator: scenario config
//! loading, preset experiments, CSV/manifest emission, and LLM endpoint
//! wiring. The binary in `main.rs` is a thin argument layer over this
//! library so integration tests can drive runs in-process.

pub mod config;
pub mod output;
pub mod preset;

pub use config::load_config;
pub use output::{emit_outputs, RunManifest};
pub use preset::{run_preset, AdvisorMode, Preset, PresetOutcome};
