//! Online personalization of text generation by tuning low-dimensional
//! soft-prompt latents with neural bandit policies (NeuralUCB / NeuralTS)
//! against per-user reward feedback.
//!
//! The crate is organized around the online loop:
//!
//! - [`config`] — hyperparameters, defaults, and seeded RNG substreams.
//! - [`projection`] — random projection from the optimized latent to the
//!   full soft prompt.
//! - [`surrogate`] — the reward-predicting MLP and its from-scratch
//!   training.
//! - [`bandit`] — candidate pools, acquisition scoring, selection, and
//!   posterior updates.
//! - [`reward`] — ROUGE scoring, synthetic landscapes, profile files, and
//!   the generation-service client.
//! - [`simulation`] — per-profile runs, baselines, aggregation, and CSV
//!   export.
//!
//! See the `examples/` directory for runnable entry points per capability,
//! and the `softbandit` binary for batch experiment runs.

pub mod bandit;
pub mod config;
pub mod projection;
pub mod reward;
pub mod simulation;
pub mod surrogate;

pub use config::{derive_rng_stream, ExperimentConfig, Policy, RewardOracle, StreamPurpose};
pub use projection::{make_projection, project, ProjectionSpec, SoftPrompt, SoftPromptLatent};
pub use simulation::{aggregate, best_so_far, run_baseline, run_online, ProfileOracle, Trajectory};
