//! Score candidate texts against references with ROUGE-1, ROUGE-L, and the
//! averaged reward used as online feedback.
//!
//!     cargo run --example rouge_scoring

use softbandit::reward::{avg_rouge_reward, rouge1, rouge_l, tokenize};

fn main() {
    let pairs = [
        (
            "teen internet safety tips for parents",
            "how parents can keep teens safe online",
        ),
        ("markets rally on rate cut hopes", "markets rally as rate cuts loom"),
        ("the cat sat", "the cat ran"),
    ];
    for (generated, gold) in pairs {
        let cand = tokenize(generated);
        let reference = tokenize(gold);
        let r1 = rouge1(&cand, &reference);
        let rl = rouge_l(&cand, &reference);
        println!("generated: {generated:?}");
        println!("gold:      {gold:?}");
        println!(
            "  rouge-1 f1 {:.3} | rouge-l f1 {:.3} | reward {:.3}",
            r1.f1,
            rl.f1,
            avg_rouge_reward(generated, gold)
        );
    }
}
