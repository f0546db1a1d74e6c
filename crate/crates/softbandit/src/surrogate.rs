//! Reward-predicting surrogate: a one-hidden-layer ReLU MLP trained from
//! scratch with decoupled-weight-decay Adam, plus the exact parameter
//! gradient used as the uncertainty feature map.
//!
//! Parameter vector layout (length P = m*d' + m + m + 1):
//! W1 row-major, then b1, then the output head W2, then b2.

use rand::Rng;
use thiserror::Error;

use crate::config::{ExperimentConfig, RngStream};
use crate::projection::SoftPromptLatent;

#[derive(Debug, Error)]
pub enum SurrogateError {
    #[error("latent length {got} does not match surrogate input dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("cannot train on an empty observation history")]
    EmptyHistory,
}

/// One hidden layer of `hidden_dim` rectified units with a scalar head.
#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateNet {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// hidden_dim x input_dim, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl SurrogateNet {
    pub fn param_count(&self) -> usize {
        self.hidden_dim * self.input_dim + 2 * self.hidden_dim + 1
    }

    fn check_input(&self, latent: &SoftPromptLatent) -> Result<(), SurrogateError> {
        if latent.dim() != self.input_dim {
            return Err(SurrogateError::DimensionMismatch {
                expected: self.input_dim,
                got: latent.dim(),
            });
        }
        Ok(())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(std::iter::once(&mut self.b2))
    }

    /// True for coordinates that receive weight decay (weights, not biases).
    fn is_weight(&self, idx: usize) -> bool {
        let w1_end = self.hidden_dim * self.input_dim;
        let b1_end = w1_end + self.hidden_dim;
        let w2_end = b1_end + self.hidden_dim;
        idx < w1_end || (b1_end..w2_end).contains(&idx)
    }
}

/// Adam moments with decoupled weight decay.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl OptimizerState {
    pub fn new(param_count: usize) -> Self {
        OptimizerState {
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.01,
        }
    }
}

/// Observed (latent, reward) pairs in arrival order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservationHistory {
    pub latents: Vec<SoftPromptLatent>,
    pub rewards: Vec<f64>,
}

impl ObservationHistory {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, latent: SoftPromptLatent, reward: f64) {
        self.latents.push(latent);
        self.rewards.push(reward);
    }
}

/// Glorot-uniform weights, zero biases, zero optimizer moments.
pub fn init_surrogate(
    config: &ExperimentConfig,
    stream: &RngStream,
) -> (SurrogateNet, OptimizerState) {
    let d = config.intrinsic_dim;
    let m = config.hidden_dim;
    let mut rng = stream.rng();
    let a1 = (6.0 / (d + m) as f64).sqrt();
    let w1 = (0..m * d).map(|_| rng.gen_range(-a1..a1)).collect();
    let a2 = (6.0 / (m + 1) as f64).sqrt();
    let w2 = (0..m).map(|_| rng.gen_range(-a2..a2)).collect();
    let net = SurrogateNet {
        input_dim: d,
        hidden_dim: m,
        w1,
        b1: vec![0.0; m],
        w2,
        b2: 0.0,
    };
    let opt = OptimizerState::new(net.param_count());
    (net, opt)
}

/// Predicted reward: W2 . relu(W1 z' + b1) + b2.
pub fn forward(net: &SurrogateNet, latent: &SoftPromptLatent) -> Result<f64, SurrogateError> {
    net.check_input(latent)?;
    let mut out = net.b2;
    for j in 0..net.hidden_dim {
        let row = &net.w1[j * net.input_dim..(j + 1) * net.input_dim];
        let pre: f64 = row.iter().zip(&latent.0).map(|(w, z)| w * z).sum::<f64>() + net.b1[j];
        if pre > 0.0 {
            out += net.w2[j] * pre;
        }
    }
    Ok(out)
}

/// Exact gradient of `forward` w.r.t. every parameter, in layout order.
/// Subgradient 0 at rectifier kinks.
pub fn grad_params(
    net: &SurrogateNet,
    latent: &SoftPromptLatent,
) -> Result<Vec<f64>, SurrogateError> {
    net.check_input(latent)?;
    let d = net.input_dim;
    let m = net.hidden_dim;
    let mut grad = vec![0.0; net.param_count()];
    let (gw1, rest) = grad.split_at_mut(m * d);
    let (gb1, rest) = rest.split_at_mut(m);
    let (gw2, gb2) = rest.split_at_mut(m);
    for j in 0..m {
        let row = &net.w1[j * d..(j + 1) * d];
        let pre: f64 = row.iter().zip(&latent.0).map(|(w, z)| w * z).sum::<f64>() + net.b1[j];
        if pre > 0.0 {
            gw2[j] = pre;
            gb1[j] = net.w2[j];
            for i in 0..d {
                gw1[j * d + i] = net.w2[j] * latent.0[i];
            }
        }
    }
    gb2[0] = 1.0;
    Ok(grad)
}

/// Full-batch MSE training for `steps` updates, warm-starting from the given
/// net and optimizer state. Weight decay is decoupled and skips biases.
pub fn train_local(
    net: &SurrogateNet,
    opt: &OptimizerState,
    history: &ObservationHistory,
    steps: usize,
    lr: f64,
) -> Result<(SurrogateNet, OptimizerState), SurrogateError> {
    if history.is_empty() {
        return Err(SurrogateError::EmptyHistory);
    }
    let mut net = net.clone();
    let mut opt = opt.clone();
    let n = history.len() as f64;
    for _ in 0..steps {
        let mut grad_loss = vec![0.0; net.param_count()];
        for (latent, &reward) in history.latents.iter().zip(&history.rewards) {
            let pred = forward(&net, latent)?;
            let g = grad_params(&net, latent)?;
            let coeff = 2.0 * (pred - reward) / n;
            for (gl, gi) in grad_loss.iter_mut().zip(&g) {
                *gl += coeff * gi;
            }
        }
        opt.step += 1;
        let bc1 = 1.0 - opt.beta1.powi(opt.step as i32);
        let bc2 = 1.0 - opt.beta2.powi(opt.step as i32);
        let decay_mask: Vec<bool> = (0..net.param_count()).map(|i| net.is_weight(i)).collect();
        for (idx, param) in net.params_mut().enumerate() {
            let g = grad_loss[idx];
            let m = &mut opt.first_moment[idx];
            let v = &mut opt.second_moment[idx];
            *m = opt.beta1 * *m + (1.0 - opt.beta1) * g;
            *v = opt.beta2 * *v + (1.0 - opt.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            let mut delta = lr * m_hat / (v_hat.sqrt() + opt.epsilon);
            if decay_mask[idx] {
                delta += lr * opt.weight_decay * *param;
            }
            *param -= delta;
        }
    }
    Ok((net, opt))
}
