//! The per-profile online loop: select, evaluate, observe, update. Records
//! trajectories, runs baselines, and aggregates results across profiles.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{gen_candidates, select_next, update_posterior, BanditError, BanditState};
use crate::config::{derive_rng_stream, ExperimentConfig, Policy, RewardOracle, StreamPurpose};
use crate::projection::{make_projection, project, ProjectionError, ProjectionSpec, SoftPrompt, SoftPromptLatent};
use crate::reward::{
    avg_rouge_reward, remote_generate, synthetic_reward, RewardError, ServiceError,
    SyntheticLandscape, UserProfile,
};
use rand::Rng;

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error("iteration {iteration}: {source}")]
    Oracle {
        iteration: usize,
        #[source]
        source: RewardError,
    },
    #[error("iteration {iteration}: {source}")]
    Service {
        iteration: usize,
        #[source]
        source: ServiceError,
    },
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error(transparent)]
    Projection(#[from] ProjectionError),
    #[error("group {0:?} has no trajectories")]
    EmptyGroup(String),
    #[error("trajectory lengths differ: {0} vs {1}")]
    MismatchedLength(usize, usize),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One recorded step of an online run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: usize,
    pub chosen_latent: SoftPromptLatent,
    pub reward: f64,
    pub best_so_far: f64,
}

/// Full record of one profile run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub profile_id: String,
    pub policy: String,
    pub records: Vec<TrajectoryRecord>,
    pub config_fingerprint: String,
}

impl Trajectory {
    pub fn final_best(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.best_so_far)
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.reward).collect()
    }
}

/// Running maximum: element i is the max of rewards[0..=i].
pub fn best_so_far(rewards: &[f64]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    rewards
        .iter()
        .map(|&r| {
            best = best.max(r);
            best
        })
        .collect()
}

/// Where rewards come from for one profile run.
pub enum ProfileOracle {
    Synthetic(SyntheticLandscape),
    Textual {
        endpoint: String,
        instruction: String,
        timeout: Duration,
        projection: ProjectionSpec,
        token_dim: usize,
    },
}

impl ProfileOracle {
    /// Instantiate the oracle described by the config for one profile,
    /// drawing any hidden structure from that profile's substreams.
    pub fn for_profile(
        config: &ExperimentConfig,
        profile_id: &str,
    ) -> Result<ProfileOracle, SimulationError> {
        match &config.reward_oracle {
            RewardOracle::Synthetic {
                num_directions,
                temperature,
            } => {
                let stream = derive_rng_stream(config, profile_id, StreamPurpose::Oracle);
                Ok(ProfileOracle::Synthetic(SyntheticLandscape::sample(
                    config.intrinsic_dim,
                    *num_directions,
                    *temperature,
                    &stream,
                )))
            }
            RewardOracle::Remote {
                endpoint,
                instruction,
                timeout_secs,
            } => {
                let stream = derive_rng_stream(config, profile_id, StreamPurpose::Projection);
                let projection =
                    make_projection(config.full_dim(), config.intrinsic_dim, &stream)?;
                Ok(ProfileOracle::Textual {
                    endpoint: endpoint.clone(),
                    instruction: instruction.clone(),
                    timeout: Duration::from_secs(*timeout_secs),
                    projection,
                    token_dim: config.token_dim,
                })
            }
        }
    }

    /// Reward for choosing `latent` at step `t`. Textual oracles project the
    /// latent, call the generation service on the scheduled example (cycling
    /// profile examples in order) and score against its gold output.
    fn evaluate(
        &self,
        profile: &UserProfile,
        latent: &SoftPromptLatent,
        t: usize,
    ) -> Result<f64, SimulationError> {
        match self {
            ProfileOracle::Synthetic(landscape) => synthetic_reward(landscape, latent)
                .map_err(|source| SimulationError::Oracle { iteration: t, source }),
            ProfileOracle::Textual {
                endpoint,
                instruction,
                timeout,
                projection,
                token_dim,
            } => {
                let prompt = project(projection, latent)?;
                self.score_prompt(profile, &prompt, *token_dim, endpoint, instruction, *timeout, t)
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn score_prompt(
        &self,
        profile: &UserProfile,
        prompt: &SoftPrompt,
        token_dim: usize,
        endpoint: &str,
        instruction: &str,
        timeout: Duration,
        t: usize,
    ) -> Result<f64, SimulationError> {
        let example = &profile.examples[t % profile.examples.len()];
        let text = remote_generate(endpoint, prompt, token_dim, instruction, &example.input, timeout)
            .map_err(|source| SimulationError::Service { iteration: t, source })?;
        Ok(avg_rouge_reward(&text, &example.gold))
    }
}

/// Run the online loop for one profile under the config's policy.
pub fn run_online(
    profile: &UserProfile,
    config: &ExperimentConfig,
    oracle: &ProfileOracle,
) -> Result<Trajectory, SimulationError> {
    let candidates_stream = derive_rng_stream(config, &profile.id, StreamPurpose::Candidates);
    let surrogate_stream = derive_rng_stream(config, &profile.id, StreamPurpose::Surrogate);
    let policy_stream = derive_rng_stream(config, &profile.id, StreamPurpose::Policy);
    let mut policy_rng = policy_stream.rng();
    let mut state = BanditState::new(config, &surrogate_stream);
    let mut records = Vec::with_capacity(config.total_iterations);
    let mut best = f64::NEG_INFINITY;
    for t in 0..config.total_iterations {
        state.nu = config.nu_at(t);
        let pool = gen_candidates(config, &candidates_stream, t);
        let (_, chosen) = select_next(&state, &pool, config.policy, &mut policy_rng)?;
        let reward = oracle.evaluate(profile, &chosen, t)?;
        update_posterior(&mut state, chosen.clone(), reward)?;
        best = best.max(reward);
        records.push(TrajectoryRecord {
            t,
            chosen_latent: chosen,
            reward,
            best_so_far: best,
        });
    }
    Ok(Trajectory {
        profile_id: profile.id.clone(),
        policy: config.policy.as_str().to_string(),
        records,
        config_fingerprint: config.fingerprint(),
    })
}

/// Baseline trajectory. Synthetic oracles: a pure random-search run (no
/// surrogate or covariance state), bit-identical to `run_online` under the
/// RandomSearch policy. Textual oracles: zero-shot generation with a zero
/// soft prompt on the same example schedule.
pub fn run_baseline(
    profile: &UserProfile,
    config: &ExperimentConfig,
    oracle: &ProfileOracle,
) -> Result<Trajectory, SimulationError> {
    let mut records = Vec::with_capacity(config.total_iterations);
    let mut best = f64::NEG_INFINITY;
    match oracle {
        ProfileOracle::Synthetic(_) => {
            let candidates_stream =
                derive_rng_stream(config, &profile.id, StreamPurpose::Candidates);
            let mut policy_rng =
                derive_rng_stream(config, &profile.id, StreamPurpose::Policy).rng();
            for t in 0..config.total_iterations {
                let pool = gen_candidates(config, &candidates_stream, t);
                let idx = policy_rng.gen_range(0..pool.len());
                let chosen = pool.0[idx].clone();
                let reward = oracle.evaluate(profile, &chosen, t)?;
                best = best.max(reward);
                records.push(TrajectoryRecord {
                    t,
                    chosen_latent: chosen,
                    reward,
                    best_so_far: best,
                });
            }
            Ok(Trajectory {
                profile_id: profile.id.clone(),
                policy: Policy::RandomSearch.as_str().to_string(),
                records,
                config_fingerprint: config.fingerprint(),
            })
        }
        ProfileOracle::Textual {
            endpoint,
            instruction,
            timeout,
            token_dim,
            ..
        } => {
            let zero_latent = SoftPromptLatent(vec![0.0; config.intrinsic_dim]);
            let zero_prompt = SoftPrompt::zeros(config.full_dim());
            for t in 0..config.total_iterations {
                let reward = oracle.score_prompt(
                    profile,
                    &zero_prompt,
                    *token_dim,
                    endpoint,
                    instruction,
                    *timeout,
                    t,
                )?;
                best = best.max(reward);
                records.push(TrajectoryRecord {
                    t,
                    chosen_latent: zero_latent.clone(),
                    reward,
                    best_so_far: best,
                });
            }
            Ok(Trajectory {
                profile_id: profile.id.clone(),
                policy: "zero-shot".to_string(),
                records,
                config_fingerprint: config.fingerprint(),
            })
        }
    }
}

/// Mean and population standard deviation of final best-so-far in a group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

fn group_stats(trajectories: &[Trajectory]) -> GroupStats {
    let finals: Vec<f64> = trajectories.iter().map(Trajectory::final_best).collect();
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let var = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    GroupStats {
        mean,
        std: var.sqrt(),
        count: finals.len(),
    }
}

/// Cross-profile summary mirroring the headline comparison: per-policy
/// stats, baseline stats, and the improvement of the best policy mean over
/// the baseline mean, in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub policies: BTreeMap<String, GroupStats>,
    pub baseline: GroupStats,
    pub improvement_pct: f64,
}

pub fn aggregate(
    policy_groups: &BTreeMap<String, Vec<Trajectory>>,
    baseline: &[Trajectory],
) -> Result<AggregateReport, SimulationError> {
    if baseline.is_empty() {
        return Err(SimulationError::EmptyGroup("baseline".to_string()));
    }
    let expected_len = baseline[0].records.len();
    let mut policies = BTreeMap::new();
    for (name, group) in policy_groups {
        if group.is_empty() {
            return Err(SimulationError::EmptyGroup(name.clone()));
        }
        for trajectory in group.iter().chain(baseline.iter()) {
            if trajectory.records.len() != expected_len {
                return Err(SimulationError::MismatchedLength(
                    expected_len,
                    trajectory.records.len(),
                ));
            }
        }
        policies.insert(name.clone(), group_stats(group));
    }
    let baseline_stats = group_stats(baseline);
    let best_mean = policies
        .values()
        .map(|s| s.mean)
        .fold(baseline_stats.mean, f64::max);
    let improvement_pct = if baseline_stats.mean != 0.0 {
        (best_mean - baseline_stats.mean) / baseline_stats.mean * 100.0
    } else {
        0.0
    };
    Ok(AggregateReport {
        policies,
        baseline: baseline_stats,
        improvement_pct,
    })
}

/// Write one trajectory as CSV with the exact header `t,reward,best_so_far`.
pub fn write_trajectory_csv(path: &Path, trajectory: &Trajectory) -> Result<(), SimulationError> {
    let io_err = |source| SimulationError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    let mut out = String::from("t,reward,best_so_far\n");
    for record in &trajectory.records {
        out.push_str(&format!(
            "{},{},{}\n",
            record.t, record.reward, record.best_so_far
        ));
    }
    file.write_all(out.as_bytes()).map_err(io_err)
}

/// A named desk-scale synthetic experiment: profile count plus the config
/// adjustments that keep the run fast.
#[derive(Debug, Clone)]
pub struct SyntheticSuite {
    pub id: &'static str,
    pub num_profiles: usize,
    pub intrinsic_dim: usize,
    pub total_iterations: usize,
    pub candidate_pool_size: usize,
}

impl SyntheticSuite {
    pub fn lookup(id: &str) -> Option<SyntheticSuite> {
        match id {
            "small" => Some(SyntheticSuite {
                id: "small",
                num_profiles: 8,
                intrinsic_dim: 10,
                total_iterations: 165,
                candidate_pool_size: 500,
            }),
            "full" => Some(SyntheticSuite {
                id: "full",
                num_profiles: 20,
                intrinsic_dim: 10,
                total_iterations: 165,
                candidate_pool_size: 500,
            }),
            _ => None,
        }
    }

    /// Apply the suite's scale overrides to a config.
    pub fn apply(&self, config: &ExperimentConfig) -> ExperimentConfig {
        let mut cfg = config.clone();
        cfg.intrinsic_dim = self.intrinsic_dim;
        cfg.total_iterations = self.total_iterations;
        cfg.candidate_pool_size = self.candidate_pool_size;
        if !matches!(cfg.reward_oracle, RewardOracle::Synthetic { .. }) {
            cfg.reward_oracle = RewardOracle::default();
        }
        cfg
    }

    /// Synthetic profiles carry no text; one placeholder example each.
    pub fn profiles(&self) -> Vec<UserProfile> {
        (0..self.num_profiles)
            .map(|i| UserProfile {
                id: format!("{}-{i:03}", self.id),
                persona: None,
                examples: vec![crate::reward::ProfileExample {
                    input: String::new(),
                    gold: String::new(),
                }],
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.intrinsic_dim = 4;
        cfg.hidden_dim = 10;
        cfg.candidate_pool_size = 30;
        cfg.total_iterations = 5;
        cfg
    }

    fn profile(id: &str) -> UserProfile {
        UserProfile {
            id: id.to_string(),
            persona: None,
            examples: vec![crate::reward::ProfileExample {
                input: "x".into(),
                gold: "y".into(),
            }],
        }
    }

    #[test]
    fn best_so_far_running_max() {
        assert_eq!(best_so_far(&[0.1, 0.3, 0.2]), vec![0.1, 0.3, 0.3]);
        assert!(best_so_far(&[]).is_empty());
        let sorted = [0.1, 0.2, 0.3];
        assert_eq!(best_so_far(&sorted), sorted.to_vec());
    }

    #[test]
    fn single_iteration_trajectory() {
        let mut cfg = synthetic_config();
        cfg.total_iterations = 1;
        let p = profile("t1");
        let oracle = ProfileOracle::for_profile(&cfg, &p.id).unwrap();
        let traj = run_online(&p, &cfg, &oracle).unwrap();
        assert_eq!(traj.records.len(), 1);
        assert_eq!(traj.records[0].best_so_far, traj.records[0].reward);
    }

    #[test]
    fn best_so_far_consistent_in_random_run() {
        let mut cfg = synthetic_config();
        cfg.policy = Policy::RandomSearch;
        let p = profile("rand");
        let oracle = ProfileOracle::for_profile(&cfg, &p.id).unwrap();
        let traj = run_online(&p, &cfg, &oracle).unwrap();
        let expected = best_so_far(&traj.rewards());
        let got: Vec<f64> = traj.records.iter().map(|r| r.best_so_far).collect();
        assert_eq!(got, expected);
        for (b, r) in got.iter().zip(traj.rewards()) {
            assert!(*b >= r);
        }
    }

    #[test]
    fn synthetic_runs_are_deterministic() {
        let cfg = synthetic_config();
        let p = profile("det");
        let oracle = ProfileOracle::for_profile(&cfg, &p.id).unwrap();
        let a = run_online(&p, &cfg, &oracle).unwrap();
        let b = run_online(&p, &cfg, &oracle).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn baseline_equals_random_search_online() {
        let mut cfg = synthetic_config();
        cfg.policy = Policy::RandomSearch;
        let p = profile("eq");
        let oracle = ProfileOracle::for_profile(&cfg, &p.id).unwrap();
        let online = run_online(&p, &cfg, &oracle).unwrap();
        let baseline = run_baseline(&p, &cfg, &oracle).unwrap();
        assert_eq!(online, baseline);
    }

    #[test]
    fn aggregate_degenerate_equal_groups() {
        let make = |policy: &str| Trajectory {
            profile_id: "p".into(),
            policy: policy.into(),
            records: vec![TrajectoryRecord {
                t: 0,
                chosen_latent: SoftPromptLatent(vec![0.0]),
                reward: 0.4,
                best_so_far: 0.4,
            }],
            config_fingerprint: "f".into(),
        };
        let mut groups = BTreeMap::new();
        groups.insert("neuralucb".to_string(), vec![make("neuralucb")]);
        groups.insert("neuralts".to_string(), vec![make("neuralts")]);
        let report = aggregate(&groups, &[make("random")]).unwrap();
        assert_eq!(report.improvement_pct, 0.0);
        assert_eq!(report.baseline.std, 0.0);
    }

    fn constant_trajectory(policy: &str, value: f64) -> Trajectory {
        Trajectory {
            profile_id: "p".into(),
            policy: policy.into(),
            records: vec![TrajectoryRecord {
                t: 0,
                chosen_latent: SoftPromptLatent(vec![0.0]),
                reward: value,
                best_so_far: value,
            }],
            config_fingerprint: "f".into(),
        }
    }

    #[test]
    fn aggregate_headline_row() {
        let mut groups = BTreeMap::new();
        groups.insert("neuralucb".into(), vec![constant_trajectory("neuralucb", 0.203)]);
        groups.insert("neuralts".into(), vec![constant_trajectory("neuralts", 0.228)]);
        let report = aggregate(&groups, &[constant_trajectory("random", 0.140)]).unwrap();
        assert!((report.improvement_pct - 62.9).abs() < 0.05, "{}", report.improvement_pct);
    }

    #[test]
    fn aggregate_scholarly_row() {
        let mut groups = BTreeMap::new();
        groups.insert("neuralucb".into(), vec![constant_trajectory("neuralucb", 0.345)]);
        groups.insert("neuralts".into(), vec![constant_trajectory("neuralts", 0.341)]);
        let report = aggregate(&groups, &[constant_trajectory("random", 0.225)]).unwrap();
        assert!((report.improvement_pct - 53.3).abs() < 0.05, "{}", report.improvement_pct);
    }

    #[test]
    fn aggregate_rejects_empty_and_mismatched() {
        let groups = BTreeMap::new();
        assert!(aggregate(&groups, &[]).is_err());
        let mut groups = BTreeMap::new();
        groups.insert("neuralucb".into(), vec![constant_trajectory("neuralucb", 0.2)]);
        let mut long = constant_trajectory("random", 0.1);
        long.records.push(long.records[0].clone());
        assert!(aggregate(&groups, &[long]).is_err());
    }

    #[test]
    fn aggregate_permutation_invariant() {
        let mut groups = BTreeMap::new();
        let a = constant_trajectory("neuralucb", 0.3);
        let b = constant_trajectory("neuralucb", 0.5);
        groups.insert("neuralucb".into(), vec![a.clone(), b.clone()]);
        let r1 = aggregate(&groups, &[constant_trajectory("random", 0.2)]).unwrap();
        groups.insert("neuralucb".into(), vec![b, a]);
        let r2 = aggregate(&groups, &[constant_trajectory("random", 0.2)]).unwrap();
        assert_eq!(r1, r2);
    }

    #[test]
    fn csv_format_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let traj = Trajectory {
            profile_id: "p".into(),
            policy: "random".into(),
            records: vec![
                TrajectoryRecord {
                    t: 0,
                    chosen_latent: SoftPromptLatent(vec![0.0]),
                    reward: 0.5,
                    best_so_far: 0.5,
                },
                TrajectoryRecord {
                    t: 1,
                    chosen_latent: SoftPromptLatent(vec![0.0]),
                    reward: 0.25,
                    best_so_far: 0.5,
                },
            ],
            config_fingerprint: "f".into(),
        };
        write_trajectory_csv(&path, &traj).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "t,reward,best_so_far\n0,0.5,0.5\n1,0.25,0.5\n");
    }

    #[test]
    fn suite_lookup_and_profiles() {
        let suite = SyntheticSuite::lookup("small").unwrap();
        assert_eq!(suite.profiles().len(), suite.num_profiles);
        assert!(SyntheticSuite::lookup("nope").is_none());
        let cfg = suite.apply(&ExperimentConfig::default());
        assert_eq!(cfg.intrinsic_dim, 10);
    }
}
