use anyhow::{anyhow, bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use stableks::bandit::{self, generate_instance, Abort, BetaKl, Minibatch, Policy, Prior, VbeConfig};
use stableks::BetaParams;

use crate::args::BanditArgs;
use crate::sidecar::Run;
use crate::table::{num, TableWriter, WrittenTable, BANDIT_SUMMARY, TRACE};

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub seed: u64,
    pub policy: Policy,
    pub instance_sha256: String,
    pub cum_regret: f64,
    pub steps_completed: usize,
    pub nonfinite_events: usize,
    pub aborted: Option<Abort>,
    pub max_log_b: Option<f64>,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolicySummary {
    pub policy: Policy,
    pub runs: usize,
    pub mean_cum_regret: f64,
    pub std_cum_regret: f64,
    pub se_cum_regret: f64,
    pub aborted_runs: usize,
    pub nonfinite_events: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BanditSummary {
    pub config: VbeConfig,
    /// Closed-form expected regret of uniform random play, averaged over
    /// the seeds' instances.
    pub expected_random_regret: f64,
    /// Standard error of the random policy's mean cumulative regret over
    /// the seeds, from the per-instance regret variances.
    pub expected_random_regret_se: f64,
    pub policies: Vec<PolicySummary>,
    pub runs: Vec<RunRecord>,
}

fn parse_beta_kl(s: &str) -> Result<BetaKl> {
    if s == "inverse-pulled" {
        return Ok(BetaKl::InversePulled);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| anyhow!("--beta-kl takes `inverse-pulled` or a number, got `{s}`"))?;
    Ok(BetaKl::Fixed(v))
}

fn parse_prior(s: &str) -> Result<Prior> {
    if s == "uniform" {
        return Ok(Prior::Uniform);
    }
    let rest = s
        .strip_prefix("beta:")
        .ok_or_else(|| anyhow!("--prior takes `uniform` or `beta:ALPHA,BETA`, got `{s}`"))?;
    let (a, b) = rest
        .split_once(',')
        .ok_or_else(|| anyhow!("--prior beta needs two numbers, got `{rest}`"))?;
    let alpha: f64 = a.trim().parse().context("--prior alpha")?;
    let beta: f64 = b.trim().parse().context("--prior beta")?;
    Ok(Prior::Beta(BetaParams::new(alpha, beta)?))
}

fn config_from(args: &BanditArgs) -> Result<VbeConfig> {
    let config = VbeConfig {
        steps: args.steps,
        beta_kl: parse_beta_kl(&args.beta_kl)?,
        learning_rate: args.learning_rate,
        minibatch: match args.minibatch {
            0 => Minibatch::Full,
            m => Minibatch::Size(m),
        },
        likelihood: args.likelihood.into(),
        hidden_widths: args.hidden.clone(),
        prior: parse_prior(&args.prior)?,
    };
    config.validate()?;
    Ok(config)
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn write_trace(path: std::path::PathBuf, trace: &bandit::RunTrace) -> Result<WrittenTable> {
    let mut t = TableWriter::create(path, TRACE)?;
    for r in &trace.rows {
        t.row([
            r.step.to_string(),
            r.arm.to_string(),
            u8::from(r.reward).to_string(),
            num(r.inst_regret),
            num(r.cum_regret),
        ])?;
    }
    t.finish()
}

pub fn run(run: &mut Run, args: &BanditArgs) -> Result<BanditSummary> {
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    if args.policy.is_empty() {
        bail!("--policy needs at least one policy");
    }
    let config = config_from(args)?;
    let base = run.cli.seed;
    let seeds: Vec<u64> = (0..args.seeds).map(|i| base.wrapping_add(i)).collect();

    let instances = seeds
        .par_iter()
        .map(|&s| generate_instance(args.arms, args.dim, args.power, &mut ChaCha8Rng::seed_from_u64(s)))
        .collect::<Result<Vec<_>, _>>()?;
    let expected_random_regret = instances
        .iter()
        .map(|i| i.random_regret_moments().0 * args.steps as f64)
        .sum::<f64>()
        / instances.len() as f64;
    let expected_random_regret_se = instances
        .iter()
        .map(|i| i.random_regret_moments().1 * args.steps as f64)
        .sum::<f64>()
        .sqrt()
        / instances.len() as f64;

    let jobs: Vec<(usize, Policy)> = (0..seeds.len())
        .flat_map(|i| args.policy.iter().map(move |&p| (i, p)))
        .collect();
    let precision = args.precision.into();
    let results = jobs
        .par_iter()
        .map(|&(i, policy)| -> Result<(RunRecord, WrittenTable)> {
            let seed = seeds[i];
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1);
            let trace = bandit::run(&instances[i], &config, policy, precision, &mut rng)?;
            let written = write_trace(run.path(&format!("trace_{policy}_seed{seed}.csv")), &trace)?;
            let record = RunRecord {
                seed,
                policy,
                instance_sha256: instances[i].hash(),
                cum_regret: trace.cum_regret(),
                steps_completed: trace.rows.len(),
                nonfinite_events: trace.nonfinite_events,
                aborted: trace.aborted.clone(),
                max_log_b: trace.max_log_b,
                wall_clock_secs: trace.wall_clock_secs,
            };
            Ok((record, written))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut runs = Vec::with_capacity(results.len());
    for (record, written) in results {
        run.record(written);
        runs.push(record);
    }

    let mut policies = Vec::new();
    let mut t = run.table("bandit_summary.csv", BANDIT_SUMMARY)?;
    for &policy in &args.policy {
        let mine: Vec<&RunRecord> = runs.iter().filter(|r| r.policy == policy).collect();
        let regrets: Vec<f64> = mine.iter().map(|r| r.cum_regret).collect();
        let (mean, std) = mean_std(&regrets);
        let s = PolicySummary {
            policy,
            runs: mine.len(),
            mean_cum_regret: mean,
            std_cum_regret: std,
            se_cum_regret: std / (mine.len() as f64).sqrt(),
            aborted_runs: mine.iter().filter(|r| r.aborted.is_some()).count(),
            nonfinite_events: mine.iter().map(|r| r.nonfinite_events).sum(),
        };
        t.row([
            policy.to_string(),
            s.runs.to_string(),
            num(s.mean_cum_regret),
            num(s.std_cum_regret),
            num(s.se_cum_regret),
            num(expected_random_regret),
            s.aborted_runs.to_string(),
            s.nonfinite_events.to_string(),
        ])?;
        println!(
            "{:<18} cumulative regret {:>9.2} +/- {:<8.2} ({} runs, {} aborted)",
            policy.name(),
            s.mean_cum_regret,
            s.std_cum_regret,
            s.runs,
            s.aborted_runs
        );
        policies.push(s);
    }
    run.record(t.finish()?);
    println!("expected regret of uniform random play: {expected_random_regret:.2}");
    for r in runs.iter().filter(|r| r.aborted.is_some()) {
        if let Some(a) = &r.aborted {
            println!("aborted: {} seed {} at step {}: {}", r.policy, r.seed, a.step, a.reason);
        }
    }

    Ok(BanditSummary {
        config,
        expected_random_regret,
        expected_random_regret_se,
        policies,
        runs,
    })
}
