//! Compare NeuralUCB, NeuralTS, and random search on seeded synthetic
//! landscapes. Prints the mean final best-so-far per policy.
//!
//!     cargo run --release --example compare_policies -- [seeds] [tau] [rank]

use softbandit::config::{ExperimentConfig, Policy, RewardOracle};
use softbandit::reward::{ProfileExample, UserProfile};
use softbandit::simulation::{run_online, ProfileOracle};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let seeds: usize = args.get(1).map_or(10, |s| s.parse().expect("seeds"));
    let tau: f64 = args.get(2).map_or(0.5, |s| s.parse().expect("tau"));
    let rank: usize = args.get(3).map_or(3, |s| s.parse().expect("rank"));

    for policy in [Policy::RandomSearch, Policy::NeuralUcb, Policy::NeuralTs] {
        let mut cfg = ExperimentConfig::default();
        cfg.intrinsic_dim = 10;
        cfg.total_iterations = 165;
        cfg.candidate_pool_size = 500;
        cfg.policy = policy;
        cfg.reward_oracle = RewardOracle::Synthetic {
            num_directions: rank,
            temperature: tau,
        };
        let mut finals = Vec::new();
        for seed in 0..seeds {
            let profile = UserProfile {
                id: format!("landscape-{seed:03}"),
                persona: None,
                examples: vec![ProfileExample {
                    input: String::new(),
                    gold: String::new(),
                }],
            };
            let oracle = ProfileOracle::for_profile(&cfg, &profile.id).unwrap();
            let trajectory = run_online(&profile, &cfg, &oracle).unwrap();
            finals.push(trajectory.final_best());
        }
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        println!("{:<12} mean final best-so-far over {seeds} seeds: {mean:.4}", policy.as_str());
    }
}
