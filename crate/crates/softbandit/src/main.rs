//! Batch experiment runner: `softbandit run` executes online personalization
//! runs and exports trajectories; `softbandit score` is a standalone ROUGE
//! scorer.
//!
//! Exit codes: 0 success, 1 config error, 2 data error, 3 service error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use softbandit::config::{ExperimentConfig, Policy, RewardOracle};
use softbandit::reward::{avg_rouge_reward, load_profiles, UserProfile};
use softbandit::simulation::{
    aggregate, run_baseline, run_online, write_trajectory_csv, ProfileOracle, SimulationError,
    SyntheticSuite, Trajectory,
};

#[derive(Parser)]
#[command(name = "softbandit", version, about = "Online soft-prompt personalization with neural bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run online experiments over profiles or a synthetic suite.
    Run(RunArgs),
    /// Score generated text against gold text with averaged ROUGE-1/L.
    Score(ScoreArgs),
}

#[derive(Parser)]
struct RunArgs {
    /// Experiment config file (JSON). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Profile file with user examples.
    #[arg(long, conflicts_with = "synthetic")]
    profiles: Option<PathBuf>,
    /// Synthetic suite id (small | full).
    #[arg(long)]
    synthetic: Option<String>,
    /// Policy to run; repeatable.
    #[arg(long = "policy", value_name = "POLICY")]
    policies: Vec<Policy>,
    /// Output directory for manifest, CSVs, and the aggregate report.
    #[arg(long)]
    out: PathBuf,
    /// Generation service endpoint; switches the reward oracle to remote.
    #[arg(long)]
    endpoint: Option<String>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Parser)]
struct ScoreArgs {
    /// File with one generated text per line.
    #[arg(long)]
    generated: PathBuf,
    /// File with one gold text per line; must match line count.
    #[arg(long)]
    gold: PathBuf,
}

#[derive(Serialize)]
struct RunManifest {
    config_fingerprint: String,
    config: ExperimentConfig,
    profile_source: String,
    policies: Vec<String>,
    output_dir: String,
    started_at: String,
}

enum CliError {
    Config(String),
    Data(String),
    Service(String),
}

impl CliError {
    fn report(&self) -> ExitCode {
        let (code, message) = match self {
            CliError::Config(m) => (1, m),
            CliError::Data(m) => (2, m),
            CliError::Service(m) => (3, m),
        };
        eprintln!("error: {message}");
        ExitCode::from(code)
    }
}

fn classify(err: SimulationError) -> CliError {
    match err {
        SimulationError::Service { .. } => CliError::Service(err.to_string()),
        _ => CliError::Data(err.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Score(args) => cmd_score(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn cmd_run(args: RunArgs) -> Result<(), CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::load(&text).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(endpoint) = &args.endpoint {
        config.reward_oracle = RewardOracle::Remote {
            endpoint: endpoint.clone(),
            instruction: "Generate a personalized response.".to_string(),
            timeout_secs: 30,
        };
    }

    let (profiles, profile_source) = match (&args.profiles, &args.synthetic) {
        (Some(path), None) => {
            let profiles = load_profiles(path).map_err(|e| CliError::Data(e.to_string()))?;
            (profiles, path.display().to_string())
        }
        (None, Some(suite_id)) => {
            let suite = SyntheticSuite::lookup(suite_id)
                .ok_or_else(|| CliError::Config(format!("unknown synthetic suite {suite_id:?}")))?;
            config = suite.apply(&config);
            (suite.profiles(), format!("synthetic:{suite_id}"))
        }
        _ => {
            return Err(CliError::Config(
                "exactly one of --profiles or --synthetic is required".to_string(),
            ))
        }
    };

    let policies = if args.policies.is_empty() {
        vec![config.policy]
    } else {
        args.policies.clone()
    };

    std::fs::create_dir_all(&args.out)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", args.out.display())))?;
    let manifest = RunManifest {
        config_fingerprint: config.fingerprint(),
        config: config.clone(),
        profile_source,
        policies: policies.iter().map(|p| p.as_str().to_string()).collect(),
        output_dir: args.out.display().to_string(),
        started_at: chrono::Utc::now().to_rfc3339(),
    };
    let manifest_path = args.out.join("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )
    .map_err(|e| CliError::Data(format!("cannot write manifest: {e}")))?;

    let mut policy_groups: BTreeMap<String, Vec<Trajectory>> = BTreeMap::new();
    let mut baselines = Vec::new();
    for profile in &profiles {
        let oracle = ProfileOracle::for_profile(&config, &profile.id).map_err(classify)?;
        for &policy in &policies {
            let mut run_config = config.clone();
            run_config.policy = policy;
            let trajectory = run_profile(profile, &run_config, &oracle)?;
            write_csv(&args.out, policy.as_str(), &profile.id, &trajectory)?;
            policy_groups
                .entry(policy.as_str().to_string())
                .or_default()
                .push(trajectory);
        }
        let baseline = run_baseline(profile, &config, &oracle).map_err(classify)?;
        write_csv(&args.out, "baseline", &profile.id, &baseline)?;
        baselines.push(baseline);
    }

    let report = aggregate(&policy_groups, &baselines).map_err(classify)?;
    std::fs::write(
        args.out.join("aggregate.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )
    .map_err(|e| CliError::Data(format!("cannot write aggregate report: {e}")))?;
    println!(
        "completed {} profiles x {} policies; improvement over baseline: {:.1}%",
        profiles.len(),
        policies.len(),
        report.improvement_pct
    );
    Ok(())
}

fn run_profile(
    profile: &UserProfile,
    config: &ExperimentConfig,
    oracle: &ProfileOracle,
) -> Result<Trajectory, CliError> {
    run_online(profile, config, oracle).map_err(classify)
}

fn write_csv(
    out: &Path,
    label: &str,
    profile_id: &str,
    trajectory: &Trajectory,
) -> Result<(), CliError> {
    let path = out.join(format!("{label}_{profile_id}.csv"));
    write_trajectory_csv(&path, trajectory).map_err(classify)
}

fn cmd_score(args: ScoreArgs) -> Result<(), CliError> {
    let read_lines = |path: &Path| -> Result<Vec<String>, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        Ok(text.lines().map(str::to_string).collect())
    };
    let generated = read_lines(&args.generated)?;
    let gold = read_lines(&args.gold)?;
    if generated.len() != gold.len() {
        return Err(CliError::Data(format!(
            "line count mismatch: {} generated vs {} gold",
            generated.len(),
            gold.len()
        )));
    }
    let mut total = 0.0;
    for (g, r) in generated.iter().zip(&gold) {
        let score = avg_rouge_reward(g, r);
        total += score;
        println!("{score}");
    }
    let mean = if generated.is_empty() {
        0.0
    } else {
        total / generated.len() as f64
    };
    println!("mean: {mean}");
    Ok(())
}
