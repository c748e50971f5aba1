use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::RunConfig;
use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::instance::{InstanceSpec, SuperArm};
use crate::oracle::{flaky_wrap, OracleSpec};
use crate::policy::{Feedback, Policy, PolicyConfig};
use crate::rng::{stream_rng, Stream};

/// Per-round approximation regret `alpha * beta * opt - r_mu(S_t)`. May be
/// negative when `alpha * beta < 1`.
pub fn regret_increment(alpha: f64, beta: f64, opt: f64, r_chosen: f64) -> f64 {
    alpha * beta * opt - r_chosen
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: u64,
    pub cum_regret: f64,
    /// Cumulative expected reward of the chosen super arms.
    pub cum_reward: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngAudit {
    pub environment: u64,
    pub noise: u64,
    pub selection: u64,
    pub laplace: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub run_id: u64,
    pub config: RunConfig,
    pub instance: String,
    pub m: usize,
    pub k: usize,
    /// Resolved approximation ratio used for accounting.
    pub alpha: f64,
    pub opt: f64,
    pub checkpoints: Vec<Checkpoint>,
    pub pull_counts: Vec<u64>,
    pub fallbacks: u64,
    pub rng_audit: RngAudit,
    pub wall_clock_secs: f64,
}

impl RunResult {
    pub fn final_regret(&self) -> f64 {
        self.checkpoints.last().map_or(0.0, |c| c.cum_regret)
    }
}

/// Hook into the interaction loop, for diagnostics that need the policy's
/// internal state.
pub trait RoundObserver {
    /// Called after selection, before feedback is applied.
    fn before_update(
        &mut self,
        _t: u64,
        _policy: &Policy,
        _chosen: &SuperArm,
        _instance: &InstanceSpec,
    ) {
    }

    /// Called once the policy has absorbed round `t`.
    fn after_update(&mut self, _t: u64, _policy: &Policy, _instance: &InstanceSpec) {}
}

impl RoundObserver for () {}

/// Prepared run: validated config, built instance, resolved oracle.
struct Setup {
    instance: InstanceSpec,
    oracle: OracleSpec,
    alpha: f64,
    opt: f64,
}

fn prepare(config: &RunConfig) -> Result<Setup> {
    config.validate()?;
    let instance = config.instance.build()?;
    let ds = instance.decision_set();
    let base = match config.oracle {
        Some(kind) => OracleSpec::new(kind),
        None => OracleSpec::default_for(ds, instance.reward()),
    };
    base.check_compatible(ds, instance.reward())?;
    let oracle = if config.beta < 1.0 {
        flaky_wrap(base, config.beta)?
    } else {
        base
    };
    let alpha = config.alpha.unwrap_or(base.alpha());
    let (opt, _) = instance.opt_value()?;
    Ok(Setup {
        instance,
        oracle,
        alpha,
        opt,
    })
}

pub fn run(config: &RunConfig) -> Result<RunResult> {
    run_observed(config, &mut ())
}

/// Runs the full interaction protocol for `config.horizon` rounds.
/// Deterministic in `(config, config.seed)`.
pub fn run_observed(config: &RunConfig, observer: &mut dyn RoundObserver) -> Result<RunResult> {
    let Setup {
        instance,
        oracle,
        alpha,
        opt,
    } = prepare(config)?;
    let started = Instant::now();
    let ds = instance.decision_set();
    let reward = instance.reward();
    let m = instance.m();

    let mut policy_cfg = PolicyConfig::new(config.algorithm, config.epsilon, config.horizon)
        .noiseless(config.noiseless);
    policy_cfg.dp_log_term = config.dp_log_term;
    let mut policy = Policy::new(policy_cfg, m, instance.k())?;

    let env_rng = stream_rng(config.seed, Stream::Environment);
    let mut env = EnvState::with_flips(&instance, env_rng, config.independent_flips);
    let mut noise_rng = stream_rng(config.seed, Stream::Noise);
    let mut select_rng = stream_rng(config.seed, Stream::Selection);

    let schedule = config.checkpoints();
    let mut next_cp = schedule.iter().copied().peekable();
    let mut checkpoints = Vec::with_capacity(schedule.len());
    let mut outcome = vec![0.0; m];
    let mut cum_regret = 0.0;
    let mut cum_reward = 0.0;

    for t in 1..=config.horizon {
        let chosen = policy.select(&oracle, ds, reward, &mut select_rng)?;
        env.sample_into(&mut outcome);
        observer.before_update(t, &policy, &chosen, &instance);
        let r = instance.expected_reward(&chosen);
        let feedback = Feedback::from_outcome(t, chosen, &outcome)?;
        policy.update(&feedback, &mut noise_rng)?;
        observer.after_update(t, &policy, &instance);

        cum_regret += regret_increment(alpha, config.beta, opt, r);
        cum_reward += r;
        if next_cp.peek() == Some(&t) {
            next_cp.next();
            checkpoints.push(Checkpoint {
                t,
                cum_regret,
                cum_reward,
            });
        }
    }
    if checkpoints.len() != schedule.len() {
        return Err(Error::Diagnostics(
            "checkpoint schedule not exhausted".into(),
        ));
    }

    Ok(RunResult {
        run_id: 0,
        config: config.clone(),
        instance: instance.name().to_string(),
        m,
        k: instance.k(),
        alpha,
        opt,
        checkpoints,
        pull_counts: policy.pull_counts().to_vec(),
        fallbacks: policy.fallbacks(),
        rng_audit: RngAudit {
            environment: env.rng().draws(),
            noise: noise_rng.draws(),
            selection: select_rng.draws(),
            laplace: policy.noise_draws(),
        },
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}
