//! Run the small synthetic suite for all three policies and export per-run
//! trajectory CSVs plus the aggregate report.
//!
//!     cargo run --release --example export_trajectories -- out_dir

use std::collections::BTreeMap;

use softbandit::config::Policy;
use softbandit::simulation::{
    aggregate, run_baseline, run_online, write_trajectory_csv, ProfileOracle, SyntheticSuite,
};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "trajectories".to_string());
    std::fs::create_dir_all(&out).unwrap();

    let suite = SyntheticSuite::lookup("small").unwrap();
    let config = suite.apply(&softbandit::ExperimentConfig::default());
    let mut groups: BTreeMap<String, Vec<_>> = BTreeMap::new();
    let mut baselines = Vec::new();

    for profile in suite.profiles() {
        let oracle = ProfileOracle::for_profile(&config, &profile.id).unwrap();
        for policy in [Policy::NeuralUcb, Policy::NeuralTs] {
            let mut cfg = config.clone();
            cfg.policy = policy;
            let trajectory = run_online(&profile, &cfg, &oracle).unwrap();
            let path = format!("{out}/{}_{}.csv", policy.as_str(), profile.id);
            write_trajectory_csv(path.as_ref(), &trajectory).unwrap();
            groups.entry(policy.as_str().to_string()).or_default().push(trajectory);
        }
        let baseline = run_baseline(&profile, &config, &oracle).unwrap();
        let path = format!("{out}/baseline_{}.csv", profile.id);
        write_trajectory_csv(path.as_ref(), &baseline).unwrap();
        baselines.push(baseline);
    }

    let report = aggregate(&groups, &baselines).unwrap();
    std::fs::write(
        format!("{out}/aggregate.json"),
        serde_json::to_string_pretty(&report).unwrap(),
    )
    .unwrap();
    for (policy, stats) in &report.policies {
        println!("{policy}: {:.4} +/- {:.4}", stats.mean, stats.std);
    }
    println!("baseline: {:.4} +/- {:.4}", report.baseline.mean, report.baseline.std);
    println!("improvement: {:.1}%", report.improvement_pct);
    println!("wrote CSVs and aggregate.json to {out}/");
}
