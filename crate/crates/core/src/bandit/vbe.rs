use std::time::Instant;

use rand::seq::index;
use rand::{Rng, RngCore};
use serde::Serialize;

use super::{BanditInstance, BetaKl, LikelihoodScale, Minibatch, Policy, Prior, ReplayRecord, VbeConfig};
use crate::error::{KsError, Result};
use crate::ks::{self, icdf, icdf_log_grads, LogParams, UnitValue, DEFAULT_KL_TERMS};
use crate::mlp::{Matrix, MlpConfig, MlpParams};
use crate::real::{Precision, Real};

/// One likelihood term: the record's arm and reward plus the base noise
/// used for its reparameterized sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodTerm<T> {
    pub arm: usize,
    pub reward: bool,
    pub noise: UnitValue<T>,
}

/// Value of the training objective and its gradient with respect to the
/// encoder outputs `(log a_k, log b_k)` for every arm.
#[derive(Debug, Clone)]
pub struct Objective<T> {
    pub value: T,
    pub log_lik: T,
    pub regularizer: T,
    pub n_regularized: usize,
    pub output_grads: Matrix<T>,
}

fn nonfinite(what: &'static str) -> KsError {
    KsError::NonFinite { what, step: 0 }
}

fn params_of<T: Real>(outputs: &Matrix<T>, arm: usize) -> Result<LogParams<T>> {
    let row = outputs.row(arm);
    LogParams::new(row[0], row[1]).map_err(|_| nonfinite("encoder output"))
}

/// `lik_scale · Σ_terms log p(r | z̃) + β_KL · Σ_{pulled} R(q_k)`, where
/// `R` is the entropy under a uniform prior and `-KL(q ‖ Beta)` otherwise.
///
/// Gradients flow through the inverse CDF in log space: for a record with
/// reward 1 the likelihood gradient is `∂z/∂θ / z`, for reward 0 it is
/// `-∂z/∂θ / (1 - z)`, each formed as one exponent.
pub fn objective<T: Real>(
    outputs: &Matrix<T>,
    terms: &[LikelihoodTerm<T>],
    lik_scale: T,
    pulled: &[usize],
    beta_kl: T,
    prior: &Prior,
) -> Result<Objective<T>> {
    let mut grads = Matrix::<T>::zeros(outputs.rows(), 2);
    let mut log_lik = T::zero();
    for term in terms {
        let p = params_of(outputs, term.arm)?;
        let z = icdf(term.noise, &p).map_err(|_| nonfinite("sample"))?;
        let (ga, gb) = icdf_log_grads(term.noise, &p);
        let (ll, da, db) = if term.reward {
            let lz = z.log_value();
            (lz, ga.div_exp(lz), gb.div_exp(lz))
        } else {
            let l1mz = z.log_complement();
            (l1mz, -ga.div_exp(l1mz), -gb.div_exp(l1mz))
        };
        log_lik = log_lik + ll;
        let g = grads.row_mut(term.arm);
        g[0] = g[0] + lik_scale * da;
        g[1] = g[1] + lik_scale * db;
    }

    let mut regularizer = T::zero();
    if beta_kl != T::zero() {
        for &k in pulled {
            let p = params_of(outputs, k)?;
            let (r, gr) = match prior {
                Prior::Uniform => (ks::entropy(&p), ks::entropy_grads(&p)),
                Prior::Beta(beta) => {
                    let bp = ks::BetaParams::new(T::of(beta.alpha), T::of(beta.beta))?;
                    let kl = ks::kl_to_beta(&p, &bp, DEFAULT_KL_TERMS)?;
                    let g = ks::kl_to_beta_grads(&p, &bp, DEFAULT_KL_TERMS)?;
                    (-kl, ks::GradPair::new(-g.d_log_a, -g.d_log_b))
                }
            };
            regularizer = regularizer + r;
            let g = grads.row_mut(k);
            g[0] = g[0] + beta_kl * gr.d_log_a;
            g[1] = g[1] + beta_kl * gr.d_log_b;
        }
    }

    let value = lik_scale * log_lik + beta_kl * regularizer;
    if !value.is_finite() {
        return Err(nonfinite("objective"));
    }
    if !grads.as_slice().iter().all(|g| g.is_finite()) {
        return Err(nonfinite("output gradient"));
    }
    Ok(Objective {
        value,
        log_lik,
        regularizer,
        n_regularized: if beta_kl != T::zero() { pulled.len() } else { 0 },
        output_grads: grads,
    })
}

/// Mutable training state of one encoder run.
#[derive(Debug, Clone)]
pub struct VbeState<T> {
    pub params: MlpParams<T>,
    pub buffer: Vec<ReplayRecord>,
    contexts: Matrix<T>,
    pulled: Vec<bool>,
    pulled_list: Vec<usize>,
    cum_regret: f64,
    /// Largest encoder `log b` seen at any arm so far.
    pub max_log_b: f64,
    pub last_objective: f64,
}

impl<T: Real> VbeState<T> {
    pub fn new<R: RngCore + ?Sized>(
        instance: &BanditInstance,
        config: &VbeConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let mlp = MlpConfig::new(instance.dim(), config.hidden_widths.clone(), 2)?;
        Self::with_params(instance, MlpParams::init(&mlp, rng))
    }

    pub fn with_params(instance: &BanditInstance, params: MlpParams<T>) -> Result<Self> {
        let rows: Vec<Vec<T>> = instance
            .contexts
            .iter()
            .map(|x| x.iter().map(|&v| T::of(v)).collect())
            .collect();
        let contexts = Matrix::from_rows(&rows)?;
        if params.config().input_dim != contexts.cols() || params.config().output_dim != 2 {
            return Err(KsError::Dimension {
                expected: contexts.cols(),
                got: params.config().input_dim,
            });
        }
        Ok(VbeState {
            params,
            buffer: Vec::new(),
            contexts,
            pulled: vec![false; instance.n_arms()],
            pulled_list: Vec::new(),
            cum_regret: 0.0,
            max_log_b: f64::NEG_INFINITY,
            last_objective: f64::NAN,
        })
    }

    pub fn pulled_arms(&self) -> &[usize] {
        &self.pulled_list
    }

    /// Encoder outputs for every arm.
    pub fn encode(&self) -> Result<Matrix<T>> {
        Ok(self.params.forward(&self.contexts)?.0)
    }
}

/// One row of a run trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub arm: usize,
    pub reward: bool,
    pub inst_regret: f64,
    pub cum_regret: f64,
}

/// Why and where a run stopped early.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Abort {
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunTrace {
    pub policy: Policy,
    pub rows: Vec<TraceRow>,
    pub aborted: Option<Abort>,
    pub nonfinite_events: usize,
    pub wall_clock_secs: f64,
    /// Largest encoder `log b` over all arms and steps (encoder policies).
    pub max_log_b: Option<f64>,
}

impl RunTrace {
    pub fn cum_regret(&self) -> f64 {
        self.rows.last().map_or(0.0, |r| r.cum_regret)
    }
}

fn thompson_choice<T: Real>(samples: &[UnitValue<T>]) -> usize {
    // strict comparison: ties go to the lowest index
    let mut best = 0;
    for (k, z) in samples.iter().enumerate().skip(1) {
        if z.log_value() > samples[best].log_value() {
            best = k;
        }
    }
    best
}

/// One Thompson-sampling step followed by one gradient-ascent update.
///
/// Non-finite encoder outputs, samples, objective values, or gradients
/// stop the step with [`KsError::NonFinite`] carrying `t`.
pub fn vbe_step<T: Real, R: RngCore + ?Sized>(
    state: &mut VbeState<T>,
    instance: &BanditInstance,
    config: &VbeConfig,
    policy: Policy,
    t: usize,
    rng: &mut R,
) -> Result<TraceRow> {
    let tag = |e: KsError| match e {
        KsError::NonFinite { what, .. } => KsError::NonFinite { what, step: t },
        KsError::NonFiniteParam { .. } => KsError::NonFinite {
            what: "parameter gradient",
            step: t,
        },
        other => other,
    };

    let (outputs, mut tape) = state.params.forward(&state.contexts)?;
    let k = instance.n_arms();
    let mut samples = Vec::with_capacity(k);
    for arm in 0..k {
        let p = params_of(&outputs, arm).map_err(tag)?;
        state.max_log_b = state.max_log_b.max(p.log_b.to_f64());
        let u = UnitValue::from_log(T::open_unit(rng).ln())?;
        samples.push(icdf(u, &p).map_err(|_| tag(nonfinite("sample")))?);
    }
    let arm = thompson_choice(&samples);
    let prob = instance.true_probs[arm];
    let reward = rng.random::<f64>() < prob;

    state.buffer.push(ReplayRecord {
        context: instance.contexts[arm].clone(),
        arm,
        reward,
    });
    if !state.pulled[arm] {
        state.pulled[arm] = true;
        state.pulled_list.push(arm);
    }

    let n = state.buffer.len();
    let chosen: Vec<usize> = match config.minibatch {
        Minibatch::Size(m) if m < n => index::sample(rng, n, m).into_vec(),
        _ => (0..n).collect(),
    };
    let mut terms = Vec::with_capacity(chosen.len());
    for i in chosen {
        let rec = &state.buffer[i];
        terms.push(LikelihoodTerm {
            arm: rec.arm,
            reward: rec.reward,
            noise: UnitValue::from_log(T::open_unit(rng).ln())?,
        });
    }
    let beta_kl = match (policy, config.beta_kl) {
        (Policy::GreedyNoEntropy, _) => T::zero(),
        (_, BetaKl::InversePulled) => T::one() / T::of(state.pulled_list.len() as f64),
        (_, BetaKl::Fixed(b)) => T::of(b),
    };
    let lik_scale = match config.likelihood {
        LikelihoodScale::Sum => T::one(),
        LikelihoodScale::Mean => T::one() / T::of(terms.len() as f64),
        LikelihoodScale::Buffer => T::of(n as f64 / terms.len() as f64),
        LikelihoodScale::PerRecord => T::one() / T::of(terms.len() as f64),
    };
    let beta_kl = match config.likelihood {
        LikelihoodScale::PerRecord => beta_kl / T::of(n as f64),
        _ => beta_kl,
    };
    let obj = objective(
        &outputs,
        &terms,
        lik_scale,
        &state.pulled_list,
        beta_kl,
        &config.prior,
    )
    .map_err(tag)?;
    let grads = state.params.backward(&mut tape, &obj.output_grads)?;
    state
        .params
        .sgd_step(&grads, T::of(config.learning_rate))
        .map_err(tag)?;
    state.last_objective = obj.value.to_f64();

    let inst_regret = instance.best_prob() - prob;
    state.cum_regret += inst_regret;
    Ok(TraceRow {
        step: t,
        arm,
        reward,
        inst_regret,
        cum_regret: state.cum_regret,
    })
}

/// Runs `config.steps` steps of `policy` in precision `precision`.
pub fn run<R: RngCore + ?Sized>(
    instance: &BanditInstance,
    config: &VbeConfig,
    policy: Policy,
    precision: Precision,
    rng: &mut R,
) -> Result<RunTrace> {
    match precision {
        Precision::Single => run_in::<f32, R>(instance, config, policy, rng),
        Precision::Double => run_in::<f64, R>(instance, config, policy, rng),
    }
}

/// [`run`] at a fixed working precision `T`.
///
/// A non-finite event ends the run; the trace keeps the completed steps
/// and records the failing step in [`RunTrace::aborted`].
pub fn run_in<T: Real, R: RngCore + ?Sized>(
    instance: &BanditInstance,
    config: &VbeConfig,
    policy: Policy,
    rng: &mut R,
) -> Result<RunTrace> {
    config.validate()?;
    let start = Instant::now();
    let mut rows = Vec::with_capacity(config.steps);
    let mut aborted = None;
    let mut nonfinite_events = 0;
    let mut max_log_b = None;

    if policy.uses_encoder() {
        let mut state = VbeState::<T>::new(instance, config, rng)?;
        for t in 1..=config.steps {
            match vbe_step(&mut state, instance, config, policy, t, rng) {
                Ok(row) => rows.push(row),
                Err(e @ KsError::NonFinite { .. }) => {
                    nonfinite_events += 1;
                    aborted = Some(Abort {
                        step: t,
                        reason: e.to_string(),
                    });
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        max_log_b = Some(state.max_log_b);
    } else {
        let best = instance.best_prob();
        let mut cum_regret = 0.0;
        for t in 1..=config.steps {
            let arm = match policy {
                Policy::Oracle => instance.best_arm(),
                _ => rng.random_range(0..instance.n_arms()),
            };
            let prob = instance.true_probs[arm];
            let reward = rng.random::<f64>() < prob;
            let inst_regret = best - prob;
            cum_regret += inst_regret;
            rows.push(TraceRow {
                step: t,
                arm,
                reward,
                inst_regret,
                cum_regret,
            });
        }
    }
    Ok(RunTrace {
        policy,
        rows,
        aborted,
        nonfinite_events,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        max_log_b,
    })
}
