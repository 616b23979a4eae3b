//! Evidence stress: one arm, scripted rewards, growing evidence.
//!
//! The arm's observation count `n` doubles every `doubling_steps` steps up
//! to `2^max_log2_evidence`. Each step estimates the objective from
//! `minibatch` fresh reparameterized samples rescaled by `n / minibatch`,
//! backpropagates into a one-layer encoder, and checks that every sample,
//! objective value, and gradient is finite.
//!
//! In [`StressMode::Scripted`] every reward is a failure and the encoder is
//! pinned to the exact posterior: `n` failures under a uniform prior give
//! `Beta(1, n + 1)`, which is `KS(1, n + 1)`. In [`StressMode::Trained`] the
//! encoder instead follows its own SGD steps, with successes scripted at a
//! fixed rate. Plain SGD at a fixed step size falls behind the sharpening
//! posterior and eventually overshoots; the trained mode reports where.

use rand::RngCore;
use serde::Serialize;

use super::vbe::{objective, LikelihoodTerm};
use super::Prior;
use crate::error::{domain, KsError, Result};
use crate::ks::UnitValue;
use crate::mlp::{Matrix, MlpConfig, MlpParams};
use crate::real::{Precision, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StressMode {
    Scripted,
    Trained,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressConfig {
    pub mode: StressMode,
    pub max_log2_evidence: u32,
    pub doubling_steps: usize,
    /// Extra steps at full evidence.
    pub settle_steps: usize,
    pub minibatch: usize,
    pub learning_rate: f64,
    /// Scripted success fraction in `[0, 1]`; trained mode only.
    pub reward_rate: f64,
    pub precision: Precision,
}

impl Default for StressConfig {
    fn default() -> Self {
        StressConfig {
            mode: StressMode::Scripted,
            max_log2_evidence: 24,
            doubling_steps: 200,
            settle_steps: 1000,
            minibatch: 64,
            learning_rate: 1e-2,
            reward_rate: 0.0,
            precision: Precision::Single,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StressRow {
    pub step: usize,
    pub evidence: f64,
    pub log_a: f64,
    pub log_b: f64,
    pub objective: f64,
    /// Largest absolute parameter gradient.
    pub max_abs_grad: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StressReport {
    pub rows: Vec<StressRow>,
    pub max_log2_b: f64,
    pub nonfinite_events: usize,
    pub aborted: Option<String>,
}

impl StressReport {
    pub fn final_row(&self) -> Option<&StressRow> {
        self.rows.last()
    }
}

pub fn run_evidence_stress<R: RngCore + ?Sized>(
    config: &StressConfig,
    rng: &mut R,
) -> Result<StressReport> {
    match config.precision {
        Precision::Single => stress_in::<f32, R>(config, rng),
        Precision::Double => stress_in::<f64, R>(config, rng),
    }
}

fn stress_in<T: Real, R: RngCore + ?Sized>(
    config: &StressConfig,
    rng: &mut R,
) -> Result<StressReport> {
    if config.minibatch == 0 || config.doubling_steps == 0 {
        return domain("StressConfig", "minibatch and doubling_steps >= 1", 0.0);
    }
    let reward_rate = match config.mode {
        StressMode::Scripted => 0.0,
        StressMode::Trained => config.reward_rate,
    };
    if !(0.0..=1.0).contains(&config.reward_rate) {
        return domain("StressConfig", "reward_rate in [0, 1]", config.reward_rate);
    }
    if !(config.learning_rate > 0.0) {
        return domain("StressConfig", "learning rate > 0", config.learning_rate);
    }

    // No hidden layer: the arm's (log a, log b) are two free biases plus a
    // weight on the constant context.
    let mlp = MlpConfig::new(1, Vec::new(), 2)?;
    let mut params = MlpParams::<T>::zeros(&mlp);
    let context = Matrix::from_vec(1, 1, vec![T::one()])?;
    let lr = T::of(config.learning_rate);
    let m = config.minibatch;
    let ramp = config.max_log2_evidence as usize * config.doubling_steps;
    let total = ramp + config.settle_steps;

    let mut rows = Vec::with_capacity(total);
    let mut max_log_b = f64::NEG_INFINITY;
    let mut aborted = None;
    let mut successes_carry = 0.0;

    for step in 1..=total {
        let log2_n = (step.min(ramp) as f64 / config.doubling_steps as f64)
            .min(config.max_log2_evidence as f64);
        let evidence = log2_n.exp2();
        let outcome = (|| -> Result<StressRow> {
            if config.mode == StressMode::Scripted {
                let (_, bias) = params.layer_mut(0);
                bias[0] = T::zero();
                bias[1] = T::of(evidence.ln_1p());
            }
            let (out, mut tape) = params.forward(&context)?;
            let mut terms = Vec::with_capacity(m);
            for _ in 0..m {
                // spread successes evenly through the batch
                successes_carry += reward_rate;
                let reward = successes_carry >= 1.0;
                if reward {
                    successes_carry -= 1.0;
                }
                terms.push(LikelihoodTerm {
                    arm: 0,
                    reward,
                    noise: UnitValue::from_log(T::open_unit(rng).ln())?,
                });
            }
            let scale = T::of(evidence / m as f64);
            let obj = objective(&out, &terms, scale, &[0], T::one(), &Prior::Uniform)?;
            let grads = params.backward(&mut tape, &obj.output_grads)?;
            let max_abs_grad = grads.as_slice().iter().fold(0.0f64, |m, &g| m.max(Real::to_f64(g).abs()));
            if let Some(i) = grads.as_slice().iter().position(|g| !g.is_finite()) {
                return Err(KsError::NonFiniteParam { index: i });
            }
            if config.mode == StressMode::Trained {
                params.sgd_step(&grads, lr)?;
            }
            Ok(StressRow {
                step,
                evidence,
                log_a: out.row(0)[0].to_f64(),
                log_b: out.row(0)[1].to_f64(),
                objective: obj.value.to_f64(),
                max_abs_grad,
            })
        })();
        match outcome {
            Ok(row) => {
                max_log_b = max_log_b.max(row.log_b);
                rows.push(row);
            }
            Err(KsError::NonFinite { what, .. }) => {
                aborted = Some(KsError::NonFinite { what, step }.to_string());
                break;
            }
            Err(e @ KsError::NonFiniteParam { .. }) => {
                aborted = Some(format!("step {step}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }

    Ok(StressReport {
        rows,
        max_log2_b: max_log_b / std::f64::consts::LN_2,
        nonfinite_events: usize::from(aborted.is_some()),
        aborted,
    })
}
