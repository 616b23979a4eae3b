//! Contextual Bernoulli bandits and the variational bandit encoder.
//!
//! An instance has `K` arms with fixed contexts `x_k ∈ R^d`. The mean reward
//! of arm `k` is the min-max normalized score `w · x_k` raised to a power,
//! so exactly one arm pays with probability 1 and one with probability 0.
//!
//! The encoder maps each context to Kumaraswamy parameters
//! `(log a_k, log b_k)`. Each step draws one reparameterized sample per arm,
//! pulls the argmax, and takes one gradient-ascent step on
//!
//! ```text
//! Σ_{records} log p(r | z̃_arm) + β_KL Σ_{pulled k} H[q_k]
//! ```
//!
//! with fresh samples `z̃` for the likelihood terms.

mod stress;
mod vbe;

pub use stress::{run_evidence_stress, StressConfig, StressMode, StressReport, StressRow};
pub use vbe::{
    objective, run, run_in, vbe_step, Abort, LikelihoodTerm, Objective, RunTrace, TraceRow,
    VbeState,
};

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{domain, Result};
use crate::ks::{BetaParams, UnitValue};
use crate::real::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    /// `K` rows of dimension `d`.
    pub contexts: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub true_probs: Vec<f64>,
    pub power: u32,
}

/// Draws `w` and every `x_k` from `N(0, I_d)` and sets
/// `p_k = minmax(w · x_k)^power`.
pub fn generate_instance<R: RngCore + ?Sized>(
    k: usize,
    d: usize,
    power: u32,
    rng: &mut R,
) -> Result<BanditInstance> {
    if k < 2 {
        return domain("generate_instance", "K >= 2", k as f64);
    }
    if d < 1 {
        return domain("generate_instance", "d >= 1", d as f64);
    }
    if power < 1 {
        return domain("generate_instance", "power >= 1", power as f64);
    }
    let mut normal = || -> f64 { rng.sample(StandardNormal) };
    let weights: Vec<f64> = (0..d).map(|_| normal()).collect();
    let contexts: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| normal()).collect()).collect();
    let scores: Vec<f64> = contexts
        .iter()
        .map(|x| x.iter().zip(&weights).map(|(a, b)| a * b).sum())
        .collect();
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return domain("generate_instance", "scores not all equal", hi);
    }
    let true_probs = scores
        .iter()
        .map(|s| ((s - lo) / (hi - lo)).powi(power as i32))
        .collect();
    Ok(BanditInstance {
        contexts,
        weights,
        true_probs,
        power,
    })
}

impl BanditInstance {
    pub fn n_arms(&self) -> usize {
        self.contexts.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn best_prob(&self) -> f64 {
        self.true_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn best_arm(&self) -> usize {
        let best = self.best_prob();
        self.true_probs.iter().position(|&p| p == best).unwrap_or(0)
    }

    pub fn mean_prob(&self) -> f64 {
        self.true_probs.iter().sum::<f64>() / self.n_arms() as f64
    }

    /// Expected per-step regret of uniform random play, and its variance.
    pub fn random_regret_moments(&self) -> (f64, f64) {
        let best = self.best_prob();
        let mean = best - self.mean_prob();
        let var = self
            .true_probs
            .iter()
            .map(|p| (best - p - mean).powi(2))
            .sum::<f64>()
            / self.n_arms() as f64;
        (mean, var)
    }

    /// SHA-256 over the shape, power, and the little-endian bytes of every
    /// context, weight, and probability.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_arms() as u64).to_le_bytes());
        h.update((self.dim() as u64).to_le_bytes());
        h.update(self.power.to_le_bytes());
        for row in &self.contexts {
            for v in row {
                h.update(v.to_le_bytes());
            }
        }
        for v in self.weights.iter().chain(&self.true_probs) {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// One observed pull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub context: Vec<f64>,
    pub arm: usize,
    pub reward: bool,
}

/// `r log z + (1 - r) log(1 - z)`, with `log(1 - z)` from `log1mexp(log z)`.
pub fn bernoulli_log_lik<T: Real>(reward: bool, z: UnitValue<T>) -> T {
    if reward {
        z.log_value()
    } else {
        z.log_complement()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaKl {
    /// `β_KL = 1 / |pulled arms|`: the regularizer is a mean over pulled arms.
    InversePulled,
    Fixed(f64),
}

/// Weight on the minibatch log-likelihood sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LikelihoodScale {
    /// Plain sum over the minibatch.
    Sum,
    /// Average over the minibatch.
    Mean,
    /// Sum rescaled by `|D| / minibatch`: unbiased for the full buffer.
    Buffer,
    /// The `Buffer` objective divided by `|D|`: the ELBO per record.
    PerRecord,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Minibatch {
    Full,
    Size(usize),
}

/// Prior over each arm's mean reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Prior {
    /// Regularizer is the entropy `H[q]`.
    Uniform,
    /// Regularizer is `-KL(q ‖ Beta(α, β))` with the default series length.
    Beta(BetaParams<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    VbeKs,
    Random,
    /// The encoder with `β_KL = 0`.
    GreedyNoEntropy,
    /// Always pulls the best arm; zero regret by construction.
    Oracle,
}

impl Policy {
    pub fn name(&self) -> &'static str {
        match self {
            Policy::VbeKs => "vbe-ks",
            Policy::Random => "random",
            Policy::GreedyNoEntropy => "greedy-no-entropy",
            Policy::Oracle => "oracle",
        }
    }

    pub fn uses_encoder(&self) -> bool {
        matches!(self, Policy::VbeKs | Policy::GreedyNoEntropy)
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "vbe-ks" => Ok(Policy::VbeKs),
            "random" => Ok(Policy::Random),
            "greedy-no-entropy" => Ok(Policy::GreedyNoEntropy),
            "oracle" => Ok(Policy::Oracle),
            _ => Err(format!(
                "unknown policy `{s}` (expected vbe-ks, random, greedy-no-entropy, or oracle)"
            )),
        }
    }
}

/// Plain SGD step size for the summed minibatch objective. Steps of `1e-2`
/// on a 256-record sum overflow the encoder within a few hundred steps.
pub const DEFAULT_LEARNING_RATE: f64 = 2e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VbeConfig {
    pub steps: usize,
    pub beta_kl: BetaKl,
    pub learning_rate: f64,
    pub minibatch: Minibatch,
    pub likelihood: LikelihoodScale,
    pub hidden_widths: Vec<usize>,
    pub prior: Prior,
}

impl Default for VbeConfig {
    fn default() -> Self {
        VbeConfig {
            steps: 2000,
            beta_kl: BetaKl::InversePulled,
            learning_rate: DEFAULT_LEARNING_RATE,
            minibatch: Minibatch::Size(256),
            likelihood: LikelihoodScale::Sum,
            hidden_widths: crate::mlp::DEFAULT_HIDDEN.to_vec(),
            prior: Prior::Uniform,
        }
    }
}

impl VbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 1 {
            return domain("VbeConfig", "steps >= 1", 0.0);
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return domain("VbeConfig", "learning rate finite and > 0", self.learning_rate);
        }
        if let Minibatch::Size(0) = self.minibatch {
            return domain("VbeConfig", "minibatch >= 1", 0.0);
        }
        if let BetaKl::Fixed(b) = self.beta_kl {
            if !(b >= 0.0) || !b.is_finite() {
                return domain("VbeConfig", "fixed beta_kl finite and >= 0", b);
            }
        }
        Ok(())
    }
}
