//! Run one online personalization loop on a synthetic landscape and print
//! the trajectory as it unfolds.
//!
//!     cargo run --release --example synthetic_run

use softbandit::config::ExperimentConfig;
use softbandit::reward::{ProfileExample, UserProfile};
use softbandit::simulation::{run_online, ProfileOracle};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.intrinsic_dim = 10;
    cfg.total_iterations = 60;
    cfg.candidate_pool_size = 200;

    let profile = UserProfile {
        id: "demo".to_string(),
        persona: None,
        examples: vec![ProfileExample {
            input: String::new(),
            gold: String::new(),
        }],
    };
    let oracle = ProfileOracle::for_profile(&cfg, &profile.id).unwrap();
    let trajectory = run_online(&profile, &cfg, &oracle).unwrap();

    println!("policy: {} | {} iterations", trajectory.policy, trajectory.records.len());
    for record in trajectory.records.iter().step_by(5) {
        let bar = "#".repeat((record.best_so_far * 40.0) as usize);
        println!("t={:<3} reward={:.4} best={:.4} {bar}", record.t, record.reward, record.best_so_far);
    }
    println!("final best-so-far: {:.4}", trajectory.final_best());
}
