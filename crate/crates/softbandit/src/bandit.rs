//! Neural bandit policies over soft-prompt latents: quasi-random candidate
//! pools, gradient-feature uncertainty with a diagonal covariance, UCB and
//! Thompson-sampling acquisition, and posterior updates.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::config::{ExperimentConfig, Policy, RngStream};
use crate::projection::SoftPromptLatent;
use crate::surrogate::{
    forward, grad_params, init_surrogate, train_local, ObservationHistory, OptimizerState,
    SurrogateError, SurrogateNet,
};

#[derive(Debug, Error)]
pub enum BanditError {
    #[error("candidate pool is empty")]
    EmptyPool,
    #[error("reward must be finite, got {0}")]
    NonFiniteReward(f64),
    #[error(transparent)]
    Surrogate(#[from] SurrogateError),
}

/// Surrogate plus diagonal confidence state for one profile run.
#[derive(Debug, Clone)]
pub struct BanditState {
    pub net: SurrogateNet,
    pub opt: OptimizerState,
    pub history: ObservationHistory,
    /// Diagonal of the design matrix, one entry per surrogate parameter.
    pub cov_diag: Vec<f64>,
    pub lambda_reg: f64,
    pub nu: f64,
    pub iteration: usize,
    pub feature_scale: f64,
    pub local_iterations: usize,
    pub learning_rate: f64,
}

impl BanditState {
    pub fn new(config: &ExperimentConfig, surrogate_stream: &RngStream) -> Self {
        let (net, opt) = init_surrogate(config, surrogate_stream);
        let param_count = net.param_count();
        BanditState {
            net,
            opt,
            history: ObservationHistory::default(),
            cov_diag: vec![config.lambda_reg; param_count],
            lambda_reg: config.lambda_reg,
            nu: config.nu,
            iteration: 0,
            feature_scale: config.feature_scale(),
            local_iterations: config.local_iterations,
            learning_rate: config.learning_rate,
        }
    }
}

/// Ordered candidate latents inside the [-1, 1] box.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool(pub Vec<SoftPromptLatent>);

impl CandidatePool {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn first_primes(n: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(n);
    let mut candidate = 2u64;
    while primes.len() < n {
        if primes.iter().all(|p| candidate % p != 0) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut fraction = 1.0 / base as f64;
    while index > 0 {
        result += (index % base) as f64 * fraction;
        index /= base;
        fraction /= base as f64;
    }
    result
}

/// Candidate pool for iteration `t`: a shifted Halton sequence over
/// [-1, 1]^{d'}, advanced by pool_size indices per iteration. The random
/// shift comes from the stream head, so the pool is a pure function of
/// (stream, t).
pub fn gen_candidates(config: &ExperimentConfig, stream: &RngStream, t: usize) -> CandidatePool {
    let dim = config.intrinsic_dim;
    let pool = config.candidate_pool_size;
    let bases = first_primes(dim);
    let mut rng = stream.rng();
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    let start = (t * pool) as u64;
    let points = (0..pool)
        .map(|i| {
            let index = start + i as u64 + 1;
            let coords = (0..dim)
                .map(|d| {
                    let u = (radical_inverse(index, bases[d]) + shift[d]).fract();
                    2.0 * u - 1.0
                })
                .collect();
            SoftPromptLatent(coords)
        })
        .collect();
    CandidatePool(points)
}

/// Predictive standard deviation from gradient features against the
/// diagonal covariance: sqrt(scale * sum_j g_j^2 / cov_j).
pub fn sigma(state: &BanditState, latent: &SoftPromptLatent) -> Result<f64, BanditError> {
    let grad = grad_params(&state.net, latent)?;
    let sum: f64 = grad
        .iter()
        .zip(&state.cov_diag)
        .map(|(g, c)| g * g / c)
        .sum();
    Ok((state.feature_scale * sum).sqrt())
}

/// NeuralUCB acquisition: mu + nu * sigma.
pub fn ucb_score(state: &BanditState, latent: &SoftPromptLatent) -> Result<f64, BanditError> {
    let mu = forward(&state.net, latent)?;
    Ok(mu + state.nu * sigma(state, latent)?)
}

/// NeuralTS acquisition: a draw from N(mu, (nu * sigma)^2).
pub fn ts_sample(
    state: &BanditState,
    latent: &SoftPromptLatent,
    rng: &mut impl Rng,
) -> Result<f64, BanditError> {
    let mu = forward(&state.net, latent)?;
    let sd = state.nu * sigma(state, latent)?;
    if sd == 0.0 {
        return Ok(mu);
    }
    let normal = Normal::new(mu, sd).expect("finite moments");
    Ok(normal.sample(rng))
}

/// Pick the next latent from the pool. Before any observation the surrogate
/// is untrained, so the cold-start choice is uniform for every policy.
/// Ties break toward the lowest index.
pub fn select_next(
    state: &BanditState,
    pool: &CandidatePool,
    policy: Policy,
    rng: &mut impl Rng,
) -> Result<(usize, SoftPromptLatent), BanditError> {
    if pool.is_empty() {
        return Err(BanditError::EmptyPool);
    }
    if state.history.is_empty() || policy == Policy::RandomSearch {
        let idx = rng.gen_range(0..pool.len());
        return Ok((idx, pool.0[idx].clone()));
    }
    let mut best_idx = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (idx, latent) in pool.0.iter().enumerate() {
        let score = match policy {
            Policy::NeuralUcb => ucb_score(state, latent)?,
            Policy::NeuralTs => ts_sample(state, latent, rng)?,
            Policy::RandomSearch => unreachable!(),
        };
        if score > best_score {
            best_score = score;
            best_idx = idx;
        }
    }
    Ok((best_idx, pool.0[best_idx].clone()))
}

/// Add the squared gradient features of `latent` (taken at the current net)
/// to the diagonal covariance.
pub fn update_covariance(state: &mut BanditState, latent: &SoftPromptLatent) -> Result<(), BanditError> {
    let grad = grad_params(&state.net, latent)?;
    for (c, g) in state.cov_diag.iter_mut().zip(&grad) {
        *c += state.feature_scale * g * g;
    }
    Ok(())
}

/// Record an observation: covariance update at the pre-training net, then
/// local surrogate retraining over the full history.
pub fn update_posterior(
    state: &mut BanditState,
    chosen: SoftPromptLatent,
    reward: f64,
) -> Result<(), BanditError> {
    if !reward.is_finite() {
        return Err(BanditError::NonFiniteReward(reward));
    }
    update_covariance(state, &chosen)?;
    state.history.push(chosen, reward);
    let (net, opt) = train_local(
        &state.net,
        &state.opt,
        &state.history,
        state.local_iterations,
        state.learning_rate,
    )?;
    state.net = net;
    state.opt = opt;
    state.iteration += 1;
    Ok(())
}
