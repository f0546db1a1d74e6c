//! Show the latent-to-soft-prompt mapping: a 100-dimensional latent is
//! projected to N_z x token_dim embeddings through a fixed random matrix.
//!
//!     cargo run --example projection_demo

use softbandit::config::{derive_rng_stream, ExperimentConfig, StreamPurpose};
use softbandit::projection::{make_projection, project, SoftPromptLatent};

fn main() {
    let mut cfg = ExperimentConfig::default();
    cfg.token_dim = 16; // desk scale; a real LLM would use its embedding width
    let stream = derive_rng_stream(&cfg, "demo", StreamPurpose::Projection);
    let spec = make_projection(cfg.full_dim(), cfg.intrinsic_dim, &stream).unwrap();
    println!(
        "projection: {} x {} (soft prompt = {} tokens x {} dims)",
        spec.output_dim(),
        spec.input_dim(),
        cfg.num_soft_tokens,
        cfg.token_dim
    );

    let latent = SoftPromptLatent(
        (0..cfg.intrinsic_dim)
            .map(|i| (i as f64 / cfg.intrinsic_dim as f64) - 0.5)
            .collect(),
    );
    let prompt = project(&spec, &latent).unwrap();
    for (row, values) in prompt.rows(cfg.token_dim).iter().enumerate() {
        let head: Vec<String> = values.iter().take(4).map(|v| format!("{v:+.3}")).collect();
        println!("token {row}: [{} ...]", head.join(", "));
    }
}
