//! Experiment configuration: every hyperparameter with its default, plus the
//! seeded RNG-stream discipline that keeps runs reproducible.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Which acquisition rule drives candidate selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Policy {
    NeuralUcb,
    NeuralTs,
    RandomSearch,
}

impl Policy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::NeuralUcb => "neuralucb",
            Policy::NeuralTs => "neuralts",
            Policy::RandomSearch => "random",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "neuralucb" => Ok(Policy::NeuralUcb),
            "neuralts" => Ok(Policy::NeuralTs),
            "random" | "randomsearch" => Ok(Policy::RandomSearch),
            other => Err(format!("unknown policy {other:?}")),
        }
    }
}

/// Describes where rewards come from during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RewardOracle {
    /// Hidden smooth landscape with a known optimum, for desk-scale runs.
    Synthetic {
        #[serde(default = "default_landscape_rank")]
        num_directions: usize,
        #[serde(default = "default_temperature")]
        temperature: f64,
    },
    /// Text generation through an external service, scored by ROUGE.
    Remote {
        endpoint: String,
        #[serde(default = "default_instruction")]
        instruction: String,
        #[serde(default = "default_timeout_secs")]
        timeout_secs: u64,
    },
}

fn default_landscape_rank() -> usize {
    3
}
fn default_temperature() -> f64 {
    0.5
}
fn default_instruction() -> String {
    "Generate a personalized response.".to_string()
}
fn default_timeout_secs() -> u64 {
    30
}

impl Default for RewardOracle {
    fn default() -> Self {
        RewardOracle::Synthetic {
            num_directions: default_landscape_rank(),
            temperature: default_temperature(),
        }
    }
}

/// All experiment hyperparameters. Defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Intrinsic dimension d' of the optimized latent.
    pub intrinsic_dim: usize,
    /// Number of soft tokens N_z.
    pub num_soft_tokens: usize,
    /// Per-token embedding width.
    pub token_dim: usize,
    /// Prior strength lambda in the covariance.
    pub lambda_reg: f64,
    /// Exploration weight nu.
    pub nu: f64,
    /// Total online iterations T.
    pub total_iterations: usize,
    /// Surrogate hidden width m.
    pub hidden_dim: usize,
    /// Surrogate training steps per online round.
    pub local_iterations: usize,
    /// Surrogate learning rate.
    pub learning_rate: f64,
    /// Candidate pool size per iteration.
    pub candidate_pool_size: usize,
    /// Selection policy.
    pub policy: Policy,
    /// Master seed for all RNG substreams.
    pub seed: u64,
    /// Reward source.
    pub reward_oracle: RewardOracle,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            intrinsic_dim: 100,
            num_soft_tokens: 5,
            token_dim: 4096,
            lambda_reg: 0.1,
            nu: 0.1,
            total_iterations: 165,
            hidden_dim: 100,
            local_iterations: 40,
            learning_rate: 3e-4,
            candidate_pool_size: 500,
            policy: Policy::NeuralUcb,
            seed: 42,
            reward_oracle: RewardOracle::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {field} = {value}")]
    Invariant { field: &'static str, value: String },
}

impl ExperimentConfig {
    /// Full soft-prompt dimension d = token_dim * num_soft_tokens.
    pub fn full_dim(&self) -> usize {
        self.token_dim * self.num_soft_tokens
    }

    /// Width normalization applied to gradient features, 1/hidden_dim.
    pub fn feature_scale(&self) -> f64 {
        1.0 / self.hidden_dim as f64
    }

    /// Exploration weight at iteration `t`. Constant for now; the hook
    /// exists so a decaying schedule stays a one-line change.
    pub fn nu_at(&self, _t: usize) -> f64 {
        self.nu
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn positive(field: &'static str, v: usize) -> Result<(), ConfigError> {
            if v == 0 {
                return Err(ConfigError::Invariant {
                    field,
                    value: v.to_string(),
                });
            }
            Ok(())
        }
        positive("intrinsic_dim", self.intrinsic_dim)?;
        positive("num_soft_tokens", self.num_soft_tokens)?;
        positive("token_dim", self.token_dim)?;
        positive("total_iterations", self.total_iterations)?;
        positive("hidden_dim", self.hidden_dim)?;
        positive("local_iterations", self.local_iterations)?;
        positive("candidate_pool_size", self.candidate_pool_size)?;
        if !(self.lambda_reg > 0.0 && self.lambda_reg.is_finite()) {
            return Err(ConfigError::Invariant {
                field: "lambda_reg",
                value: self.lambda_reg.to_string(),
            });
        }
        if !(self.nu >= 0.0 && self.nu.is_finite()) {
            return Err(ConfigError::Invariant {
                field: "nu",
                value: self.nu.to_string(),
            });
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ConfigError::Invariant {
                field: "learning_rate",
                value: self.learning_rate.to_string(),
            });
        }
        Ok(())
    }

    /// Parse a flat JSON key/value document. Missing keys take defaults,
    /// unknown keys are rejected.
    pub fn load(source: &str) -> Result<Self, ConfigError> {
        let trimmed = source.trim();
        let cfg: ExperimentConfig = if trimmed.is_empty() {
            ExperimentConfig::default()
        } else {
            serde_json::from_str(trimmed)?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Stable hex digest of the serialized config, used in manifests and
    /// trajectory records.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_json().as_bytes());
        let digest = hasher.finalize();
        hex_prefix(&digest, 16)
    }
}

fn hex_prefix(bytes: &[u8], n: usize) -> String {
    bytes[..n].iter().map(|b| format!("{b:02x}")).collect()
}

/// Independent RNG substreams, one per concern, so that e.g. drawing more
/// candidates never perturbs the projection matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamPurpose {
    Projection,
    Candidates,
    Surrogate,
    Policy,
    Oracle,
}

impl StreamPurpose {
    fn tag(&self) -> &'static str {
        match self {
            StreamPurpose::Projection => "projection",
            StreamPurpose::Candidates => "candidates",
            StreamPurpose::Surrogate => "surrogate",
            StreamPurpose::Policy => "policy",
            StreamPurpose::Oracle => "oracle",
        }
    }
}

/// A reproducible RNG stream keyed by (seed, profile, purpose). Cheap to
/// clone; `rng()` always restarts from the stream head.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    key: [u8; 32],
}

impl RngStream {
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.key)
    }

    /// Derive a child stream, e.g. one per online iteration.
    pub fn substream(&self, index: u64) -> RngStream {
        let mut hasher = Sha256::new();
        hasher.update(self.key);
        hasher.update(index.to_le_bytes());
        RngStream {
            key: hasher.finalize().into(),
        }
    }
}

/// Derive the RNG stream for a (config seed, profile, purpose) triple.
pub fn derive_rng_stream(
    config: &ExperimentConfig,
    profile_id: &str,
    purpose: StreamPurpose,
) -> RngStream {
    let mut hasher = Sha256::new();
    hasher.update(config.seed.to_le_bytes());
    hasher.update([0u8]);
    hasher.update(profile_id.as_bytes());
    hasher.update([0u8]);
    hasher.update(purpose.tag().as_bytes());
    RngStream {
        key: hasher.finalize().into(),
    }
}
