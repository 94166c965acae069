//! Demonstration acquisition: human-centric batch collection and
//! robot-centric iterative aggregation.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{rollout, Actor, Control, Dataset, Provenance, RandomSource, State, Trajectory};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::learners::{Learner, Policy};
use crate::supervisors::Supervisor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HcConfig {
    pub n_demos: usize,
    pub learner: Learner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RcConfig {
    pub m_initial: usize,
    pub iterations: usize,
    pub rollouts_per_iteration: usize,
    #[serde(default)]
    pub beta: f64,
    /// Standard deviation of zero-mean Gaussian noise added to every
    /// continuous label.
    #[serde(default)]
    pub label_noise: f64,
    pub learner: Learner,
}

impl RcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid(format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.rollouts_per_iteration == 0 {
            return Err(Error::invalid("rollouts_per_iteration must be positive"));
        }
        check_noise(self.label_noise)
    }
}

fn check_noise(std: f64) -> Result<()> {
    if !(std >= 0.0 && std.is_finite()) {
        return Err(Error::invalid(format!("label noise {std} must be finite and >= 0")));
    }
    Ok(())
}

/// The supervisor as a labeler: its (possibly flipped) label plus optional
/// Gaussian noise on continuous controls.
#[derive(Debug, Clone, Copy)]
pub struct Labeler<'a> {
    pub supervisor: &'a Supervisor,
    pub noise_std: f64,
}

impl<'a> Labeler<'a> {
    pub fn new(supervisor: &'a Supervisor, noise_std: f64) -> Result<Self> {
        check_noise(noise_std)?;
        if noise_std > 0.0 && supervisor.action_set().is_some() {
            return Err(Error::invalid(
                "Gaussian label noise applies to continuous supervisors; use flip_prob instead",
            ));
        }
        Ok(Self {
            supervisor,
            noise_std,
        })
    }

    pub fn exact(supervisor: &'a Supervisor) -> Self {
        Self {
            supervisor,
            noise_std: 0.0,
        }
    }
}

impl Actor for Labeler<'_> {
    fn act(&self, state: &State, rng: &mut RandomSource) -> Result<Control> {
        let u = self.supervisor.act(state, rng)?;
        if self.noise_std == 0.0 {
            return Ok(u);
        }
        let mut f = u.as_force()?;
        let normal = Normal::new(0.0, self.noise_std).expect("validated std");
        for v in &mut f {
            *v += normal.sample(rng);
        }
        Ok(Control::Force(f))
    }
}

/// `n` rollouts of the supervisor's own policy; every executed pair is kept.
pub fn hc_collect(
    env: &Environment,
    supervisor: &Supervisor,
    n: usize,
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<(Dataset, Vec<Trajectory>)> {
    hc_collect_with(env, &Labeler::exact(supervisor), n, horizon, rng)
}

/// As [`hc_collect`], but the demonstrator executes (and records) the
/// labeler's noisy controls.
pub fn hc_collect_with(
    env: &Environment,
    labeler: &Labeler<'_>,
    n: usize,
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<(Dataset, Vec<Trajectory>)> {
    if n == 0 {
        return Err(Error::invalid("need at least one demonstration"));
    }
    let mut data = Dataset::new();
    let mut trajs = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rollout(env, labeler, horizon, rng)?;
        data.extend_from_trajectory(&t, Provenance::InitialDemo);
        trajs.push(t);
    }
    Ok((data, trajs))
}

pub fn hc_train(
    env: &Environment,
    data: &Dataset,
    learner: &Learner,
    rng: &mut RandomSource,
) -> Result<Policy> {
    learner.fit(env, data, rng)
}

#[derive(Debug, Clone)]
pub struct RcOutcome {
    pub policy: Policy,
    pub dataset: Dataset,
    /// `policies[k]` was fit after iteration `k`; index 0 is the HC fit.
    pub policies: Vec<Policy>,
    /// Aggregate size after each fit, aligned with `policies`.
    pub dataset_sizes: Vec<usize>,
    /// Trajectories (rollout states, stored labels) in collection order,
    /// initial demonstrations first.
    pub trajectories: Vec<Trajectory>,
}

pub fn rc_dagger(
    env: &Environment,
    supervisor: &Supervisor,
    cfg: &RcConfig,
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<RcOutcome> {
    cfg.validate()?;
    let schedule = vec![cfg.rollouts_per_iteration; cfg.iterations];
    rc_dagger_scheduled(env, supervisor, cfg, &schedule, horizon, rng)
}

/// DAgger with `schedule[k]` rollouts in iteration `k`; `cfg.iterations`
/// and `cfg.rollouts_per_iteration` are ignored.
pub fn rc_dagger_scheduled(
    env: &Environment,
    supervisor: &Supervisor,
    cfg: &RcConfig,
    schedule: &[usize],
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<RcOutcome> {
    rc_dagger_observed(env, supervisor, cfg, schedule, horizon, rng, |_, _| {})
}

/// As [`rc_dagger_scheduled`], calling `observe(k, &policy)` after each fit.
pub fn rc_dagger_observed(
    env: &Environment,
    supervisor: &Supervisor,
    cfg: &RcConfig,
    schedule: &[usize],
    horizon: usize,
    rng: &mut RandomSource,
    mut observe: impl FnMut(usize, &Policy),
) -> Result<RcOutcome> {
    if !(0.0..=1.0).contains(&cfg.beta) {
        return Err(Error::invalid(format!("beta {} outside [0, 1]", cfg.beta)));
    }
    if cfg.m_initial == 0 {
        return Err(Error::invalid("robot-centric sampling needs m_initial >= 1"));
    }
    let labeler = Labeler::new(supervisor, cfg.label_noise)?;
    let (mut data, mut trajectories) = hc_collect_with(env, &labeler, cfg.m_initial, horizon, rng)?;
    let mut policy = hc_train(env, &data, &cfg.learner, rng)?;
    observe(0, &policy);
    let mut policies = vec![policy.clone()];
    let mut sizes = vec![data.len()];
    for (k, &rollouts) in schedule.iter().enumerate() {
        let mixer = Mixer {
            policy: &policy,
            labeler: &labeler,
            beta: cfg.beta,
        };
        for _ in 0..rollouts {
            let labeled = labeled_rollout(env, &mixer, horizon, rng)?;
            data.extend_from_trajectory(&labeled, Provenance::RcIteration(k + 1));
            trajectories.push(labeled);
        }
        policy = cfg.learner.fit(env, &data, rng)?;
        observe(k + 1, &policy);
        policies.push(policy.clone());
        sizes.push(data.len());
    }
    Ok(RcOutcome {
        policy,
        dataset: data,
        policies,
        dataset_sizes: sizes,
        trajectories,
    })
}

struct Mixer<'a> {
    policy: &'a Policy,
    labeler: &'a Labeler<'a>,
    beta: f64,
}

/// Rolls out the mixture and returns the visited states paired with the
/// labeler's labels rather than the executed controls.
fn labeled_rollout(
    env: &Environment,
    mixer: &Mixer<'_>,
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let mut pairs = Vec::with_capacity(horizon + 1);
    let mut x = env.initial_state(rng);
    for t in 0..=horizon {
        let label = mixer.labeler.act(&x, rng)?;
        let executed = if mixer.beta > 0.0 && rng.random::<f64>() < mixer.beta {
            label
        } else {
            mixer.policy.act(&x, rng)?
        };
        env.check_control(&executed)?;
        pairs.push((x, label));
        if t < horizon {
            x = env.step(&x, &executed, rng)?;
        }
    }
    Trajectory::new(pairs)
}

/// Splits `total - m_initial` rollouts evenly over `cfg.iterations`, with
/// the remainder going to the last iteration.
pub fn data_equalized_schedule(total_demos: usize, cfg: &RcConfig) -> Result<Vec<usize>> {
    if total_demos < cfg.m_initial {
        return Err(Error::invalid(format!(
            "budget {total_demos} is below the {} initial demonstrations",
            cfg.m_initial
        )));
    }
    let rest = total_demos - cfg.m_initial;
    if rest == 0 {
        return Ok(Vec::new());
    }
    if cfg.iterations == 0 {
        return Err(Error::invalid(
            "budget exceeds m_initial but no RC iterations are configured",
        ));
    }
    let k = cfg.iterations;
    let mut out = vec![rest / k; k];
    out[k - 1] += rest % k;
    Ok(out)
}
