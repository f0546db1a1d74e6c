//! Reward oracles: ROUGE-1/L scoring against gold text, synthetic preference
//! landscapes with a known optimum, user-profile files, and the wire client
//! for an external generation service.

use std::collections::HashMap;
use std::path::Path;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::RngStream;
use crate::projection::{SoftPrompt, SoftPromptLatent};

#[derive(Debug, Error)]
pub enum RewardError {
    #[error("latent length {got} does not match landscape dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot read profile file {path}: {source}")]
    ProfileIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("profile file {path} does not parse: {source}")]
    ProfileParse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("profile record {index}: {message}")]
    ProfileSchema { index: usize, message: String },
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("connection to {endpoint} failed: {message}")]
    Connection { endpoint: String, message: String },
    #[error("request to {endpoint} timed out")]
    Timeout { endpoint: String },
    #[error("service at {endpoint} returned status {status}")]
    Status { endpoint: String, status: u16 },
    #[error("malformed response from {endpoint}: {message}")]
    MalformedResponse { endpoint: String, message: String },
}

// --- tokenization and ROUGE ---

/// Lowercase tokens with no whitespace, produced only by `tokenize`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence(pub Vec<String>);

/// Lowercase, split on runs of non-alphanumeric characters, drop empties.
/// No stemming, no stopword removal.
pub fn tokenize(text: &str) -> TokenSequence {
    let tokens = text
        .to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect();
    TokenSequence(tokens)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_match(matched: f64, cand_len: usize, ref_len: usize) -> Self {
        let precision = if cand_len == 0 { 0.0 } else { matched / cand_len as f64 };
        let recall = if ref_len == 0 { 0.0 } else { matched / ref_len as f64 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        RougeScore { precision, recall, f1 }
    }
}

/// Clipped unigram overlap.
pub fn rouge1(candidate: &TokenSequence, reference: &TokenSequence) -> RougeScore {
    let mut ref_counts: HashMap<&str, usize> = HashMap::new();
    for token in &reference.0 {
        *ref_counts.entry(token).or_insert(0) += 1;
    }
    let mut cand_counts: HashMap<&str, usize> = HashMap::new();
    for token in &candidate.0 {
        *cand_counts.entry(token).or_insert(0) += 1;
    }
    let matched: usize = cand_counts
        .iter()
        .map(|(token, &c)| c.min(ref_counts.get(token).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_match(matched as f64, candidate.0.len(), reference.0.len())
}

/// Longest-common-subsequence overlap, F1-weighted.
pub fn rouge_l(candidate: &TokenSequence, reference: &TokenSequence) -> RougeScore {
    let lcs = lcs_length(&candidate.0, &reference.0);
    RougeScore::from_match(lcs as f64, candidate.0.len(), reference.0.len())
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            curr[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[b.len()]
}

/// Mean of ROUGE-1 F1 and ROUGE-L F1 over the tokenized texts; the online
/// feedback signal for textual runs.
pub fn avg_rouge_reward(generated: &str, gold: &str) -> f64 {
    let cand = tokenize(generated);
    let reference = tokenize(gold);
    (rouge1(&cand, &reference).f1 + rouge_l(&cand, &reference).f1) / 2.0
}

// --- synthetic landscapes ---

/// Hidden smooth reward surface r(z') = exp(-||B z' - w||^2 / tau), with the
/// optimum placed inside the candidate box. Desk-scale stand-in for the
/// LLM-plus-user feedback loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLandscape {
    /// rank x dim, row-major.
    matrix: Vec<f64>,
    target: Vec<f64>,
    rank: usize,
    dim: usize,
    temperature: f64,
    /// The latent at which the reward attains 1; kept for diagnostics.
    pub optimum: Vec<f64>,
}

impl SyntheticLandscape {
    pub fn from_parts(matrix: Vec<Vec<f64>>, target: Vec<f64>, temperature: f64) -> Self {
        let rank = matrix.len();
        let dim = matrix.first().map_or(0, |r| r.len());
        SyntheticLandscape {
            matrix: matrix.into_iter().flatten().collect(),
            target,
            rank,
            dim,
            temperature,
            optimum: vec![],
        }
    }

    /// Draw a landscape: B entries Uniform(-1, 1), target w = B z* for a
    /// hidden optimum z* in [-0.5, 0.5]^dim.
    pub fn sample(dim: usize, rank: usize, temperature: f64, stream: &RngStream) -> Self {
        let mut rng = stream.rng();
        let matrix: Vec<f64> = (0..rank * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let optimum: Vec<f64> = (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let target = (0..rank)
            .map(|r| {
                matrix[r * dim..(r + 1) * dim]
                    .iter()
                    .zip(&optimum)
                    .map(|(b, z)| b * z)
                    .sum()
            })
            .collect();
        SyntheticLandscape {
            matrix,
            target,
            rank,
            dim,
            temperature,
            optimum,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// r(z') = exp(-||B z' - w||^2 / tau), always in (0, 1].
pub fn synthetic_reward(
    landscape: &SyntheticLandscape,
    latent: &SoftPromptLatent,
) -> Result<f64, RewardError> {
    if latent.dim() != landscape.dim {
        return Err(RewardError::DimensionMismatch {
            expected: landscape.dim,
            got: latent.dim(),
        });
    }
    let mut dist_sq = 0.0;
    for r in 0..landscape.rank {
        let row = &landscape.matrix[r * landscape.dim..(r + 1) * landscape.dim];
        let proj: f64 = row.iter().zip(&latent.0).map(|(b, z)| b * z).sum();
        let diff = proj - landscape.target[r];
        dist_sq += diff * diff;
    }
    Ok((-dist_sq / landscape.temperature).exp())
}

// --- user profiles ---

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileExample {
    pub input: String,
    pub gold: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub persona: Option<String>,
    pub examples: Vec<ProfileExample>,
}

/// Load profiles from a JSON array file, preserving order and validating
/// the record invariants.
pub fn load_profiles(path: &Path) -> Result<Vec<UserProfile>, RewardError> {
    let text = std::fs::read_to_string(path).map_err(|source| RewardError::ProfileIo {
        path: path.display().to_string(),
        source,
    })?;
    let profiles: Vec<UserProfile> =
        serde_json::from_str(&text).map_err(|source| RewardError::ProfileParse {
            path: path.display().to_string(),
            source,
        })?;
    for (index, profile) in profiles.iter().enumerate() {
        if profile.id.is_empty() {
            return Err(RewardError::ProfileSchema {
                index,
                message: "field id must be nonempty".to_string(),
            });
        }
        if profile.examples.is_empty() {
            return Err(RewardError::ProfileSchema {
                index,
                message: "field examples must contain at least one record".to_string(),
            });
        }
    }
    Ok(profiles)
}

pub fn save_profiles(path: &Path, profiles: &[UserProfile]) -> Result<(), RewardError> {
    let text = serde_json::to_string_pretty(profiles).expect("profiles serialize");
    std::fs::write(path, text).map_err(|source| RewardError::ProfileIo {
        path: path.display().to_string(),
        source,
    })
}

// --- generation service client ---

#[derive(Serialize)]
struct GenerateRequest<'a> {
    soft_prompt: Vec<&'a [f64]>,
    instruction: &'a str,
    input: &'a str,
}

#[derive(Deserialize)]
struct GenerateResponse {
    text: String,
}

/// POST the soft prompt and the test input to `{endpoint}/generate` and
/// return the generated text. The prompt is reshaped into N_z rows of
/// `token_dim` entries for the wire format.
pub fn remote_generate(
    endpoint: &str,
    prompt: &SoftPrompt,
    token_dim: usize,
    instruction: &str,
    input_text: &str,
    timeout: Duration,
) -> Result<String, ServiceError> {
    let url = format!("{}/generate", endpoint.trim_end_matches('/'));
    let body = GenerateRequest {
        soft_prompt: prompt.rows(token_dim),
        instruction,
        input: input_text,
    };
    let agent = ureq::AgentBuilder::new().timeout(timeout).build();
    let response = agent
        .post(&url)
        .set("content-type", "application/json")
        .send_string(&serde_json::to_string(&body).expect("request serializes"));
    match response {
        Ok(resp) => {
            let text = resp.into_string().map_err(|e| ServiceError::MalformedResponse {
                endpoint: endpoint.to_string(),
                message: e.to_string(),
            })?;
            let parsed: GenerateResponse =
                serde_json::from_str(&text).map_err(|e| ServiceError::MalformedResponse {
                    endpoint: endpoint.to_string(),
                    message: e.to_string(),
                })?;
            Ok(parsed.text)
        }
        Err(ureq::Error::Status(status, _)) => Err(ServiceError::Status {
            endpoint: endpoint.to_string(),
            status,
        }),
        Err(ureq::Error::Transport(t)) => {
            let message = t.to_string();
            if message.contains("timed out") || message.contains("timeout") {
                Err(ServiceError::Timeout {
                    endpoint: endpoint.to_string(),
                })
            } else {
                Err(ServiceError::Connection {
                    endpoint: endpoint.to_string(),
                    message,
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(words: &[&str]) -> TokenSequence {
        TokenSequence(words.iter().map(|s| s.to_string()).collect())
    }

    #[test]
    fn tokenize_lowercases_and_splits() {
        assert_eq!(tokenize("The Cat—sat!!").0, vec!["the", "cat", "sat"]);
    }

    #[test]
    fn tokenize_empty() {
        assert!(tokenize("").0.is_empty());
    }

    #[test]
    fn tokenize_keeps_alphanumerics() {
        assert_eq!(tokenize("a1 b2  c3").0, vec!["a1", "b2", "c3"]);
    }

    #[test]
    fn rouge1_identical() {
        let s = toks(&["the", "cat", "sat"]);
        let r = rouge1(&s, &s);
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn rouge1_empty_candidate() {
        let r = rouge1(&toks(&[]), &toks(&["a", "b"]));
        assert_eq!((r.precision, r.recall, r.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn rouge1_partial_overlap() {
        let r = rouge1(&toks(&["the", "cat", "sat"]), &toks(&["the", "cat", "ran"]));
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rouge1_clips_repeats() {
        // candidate repeats "a" three times; reference has it once
        let r = rouge1(&toks(&["a", "a", "a"]), &toks(&["a", "b"]));
        assert!((r.precision - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_identical() {
        let s = toks(&["x", "y", "z"]);
        assert_eq!(rouge_l(&s, &s).f1, 1.0);
    }

    #[test]
    fn rouge_l_reordered() {
        let r = rouge_l(&toks(&["a", "b", "c", "d"]), &toks(&["a", "c", "b", "d"]));
        assert!((r.f1 - 0.75).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_disjoint() {
        assert_eq!(rouge_l(&toks(&["a", "b"]), &toks(&["c", "d"])).f1, 0.0);
    }

    #[test]
    fn f1_symmetric_under_swap() {
        let a = toks(&["the", "cat", "sat", "down"]);
        let b = toks(&["a", "cat", "sat"]);
        let ab = rouge1(&a, &b);
        let ba = rouge1(&b, &a);
        assert_eq!(ab.f1, ba.f1);
        assert_eq!(ab.precision, ba.recall);
        let lab = rouge_l(&a, &b);
        let lba = rouge_l(&b, &a);
        assert_eq!(lab.f1, lba.f1);
    }

    #[test]
    fn avg_reward_matches_composition() {
        assert_eq!(avg_rouge_reward("the cat sat", "the cat sat"), 1.0);
        assert!((avg_rouge_reward("the cat sat", "the cat ran") - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(avg_rouge_reward("", "gold text"), 0.0);
    }

    #[test]
    fn synthetic_optimum_scores_one() {
        let cfg = crate::config::ExperimentConfig::default();
        let stream = crate::config::derive_rng_stream(&cfg, "land", crate::config::StreamPurpose::Oracle);
        let landscape = SyntheticLandscape::sample(6, 3, 2.0, &stream);
        let r = synthetic_reward(&landscape, &SoftPromptLatent(landscape.optimum.clone())).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_scalar_formula() {
        let landscape = SyntheticLandscape::from_parts(vec![vec![1.0]], vec![0.0], 1.0);
        let r = synthetic_reward(&landscape, &SoftPromptLatent(vec![1.0])).unwrap();
        assert!((r - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn synthetic_decreases_along_ray() {
        let landscape = SyntheticLandscape::from_parts(vec![vec![1.0, 0.5]], vec![0.0], 2.0);
        let mut last = f64::INFINITY;
        for k in 1..6 {
            let z = SoftPromptLatent(vec![0.2 * k as f64, 0.1 * k as f64]);
            let r = synthetic_reward(&landscape, &z).unwrap();
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn synthetic_dimension_mismatch() {
        let landscape = SyntheticLandscape::from_parts(vec![vec![1.0, 2.0]], vec![0.0], 1.0);
        assert!(synthetic_reward(&landscape, &SoftPromptLatent(vec![1.0])).is_err());
    }

    #[test]
    fn profiles_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("profiles.json");
        let profiles = vec![
            UserProfile {
                id: "u1".into(),
                persona: Some("financial journalist".into()),
                examples: vec![ProfileExample {
                    input: "markets rallied".into(),
                    gold: "markets rally on rate cut hopes".into(),
                }],
            },
            UserProfile {
                id: "u2".into(),
                persona: None,
                examples: vec![ProfileExample {
                    input: "a".into(),
                    gold: "b".into(),
                }],
            },
        ];
        save_profiles(&path, &profiles).unwrap();
        let loaded = load_profiles(&path).unwrap();
        assert_eq!(profiles, loaded);
    }

    #[test]
    fn empty_examples_rejected_with_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"[{"id":"ok","examples":[{"input":"a","gold":"b"}]},{"id":"bad","examples":[]}]"#,
        )
        .unwrap();
        let err = load_profiles(&path).unwrap_err();
        assert!(err.to_string().contains("record 1"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(load_profiles(Path::new("/nonexistent/profiles.json")).is_err());
    }

    // brute-force oracles live in tests/acceptance.rs; short sanity cases here

    #[test]
    fn lcs_at_most_clipped_match_short_exhaustive() {
        // every LCS element is a matched unigram occurrence, so the LCS
        // length can never exceed the clipped unigram match count
        let alphabet = ["a", "b", "c"];
        let seqs: Vec<Vec<String>> = (0..=3)
            .flat_map(|len: u32| {
                (0..alphabet.len().pow(len)).map(move |mut code| {
                    (0..len)
                        .map(|_| {
                            let s = alphabet[code % 3].to_string();
                            code /= 3;
                            s
                        })
                        .collect()
                })
            })
            .collect();
        for a in &seqs {
            for b in &seqs {
                let lcs = lcs_length(a, b);
                let ta = TokenSequence(a.clone());
                let tb = TokenSequence(b.clone());
                let matched = if a.is_empty() {
                    0.0
                } else {
                    rouge1(&ta, &tb).precision * a.len() as f64
                };
                assert!(lcs as f64 <= matched + 1e-9);
            }
        }
    }
}
