//! Exact and Monte Carlo checks of the DAG counterexample: majority-vote
//! HC converges to always-left, while RC stays at `R` whenever the initial
//! demonstrations produce an `R` majority.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::domain::{Control, Controller, DagNode, RandomSource, Side, State};
use crate::envs::{DagEnv, Environment};
use crate::error::{Error, Result};
use crate::learners::{fit_majority_vote, Learner};
use crate::sampling::{hc_collect, rc_dagger_observed, RcConfig};
use crate::supervisors::Supervisor;

/// Largest `m` accepted by the exact tail.
pub const MAX_EXACT_M: usize = 10_000;

/// RC iterations run after the initial fit to confirm absorption.
pub const ABSORPTION_ITERATIONS: usize = 3;

/// Smallest count of right-branch demonstrations that gives `R` a strict
/// majority among `m` demonstrations: `floor(3m/4) + 1`.
pub fn stuck_threshold(m: usize) -> usize {
    3 * m / 4 + 1
}

fn check_mu(mu: f64, max: f64) -> Result<()> {
    if !(0.0..=max).contains(&mu) {
        return Err(Error::invalid(format!("mu {mu} outside [0, {max}]")));
    }
    Ok(())
}

/// `P(Binomial(m, mu) >= floor(3m/4) + 1)`, summed in log space.
pub fn rc_stuck_probability_exact(m: usize, mu: f64) -> Result<f64> {
    if m == 0 || m > MAX_EXACT_M {
        return Err(Error::invalid(format!("m {m} outside [1, {MAX_EXACT_M}]")));
    }
    check_mu(mu, 0.25)?;
    Ok(binomial_upper_tail(m, mu, stuck_threshold(m)))
}

/// `P(Binomial(m, p) >= k)`.
pub(crate) fn binomial_upper_tail(m: usize, p: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > m || p == 0.0 {
        return 0.0;
    }
    if p == 1.0 {
        return 1.0;
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let ln_m = ln_gamma(m as f64 + 1.0);
    let terms: Vec<f64> = (k..=m)
        .map(|j| {
            ln_m - ln_gamma(j as f64 + 1.0) - ln_gamma((m - j) as f64 + 1.0)
                + j as f64 * lp
                + (m - j) as f64 * lq
        })
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    (top + sum.ln()).exp().min(1.0)
}

/// Standard normal upper tail `Q(z) = 1 - Phi(z)`.
pub fn normal_upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailBound {
    pub value: f64,
    /// Whether the parameters fall inside Slud's regime, where the value
    /// is a guaranteed lower bound on the binomial tail.
    pub valid: bool,
}

/// Slud's Gaussian lower bound on `P(Binomial(m, mu) >= k)`:
/// `Q((k - m mu) / sqrt(m mu (1 - mu)))`.
///
/// Valid when `m mu <= k <= m` and `mu <= 1/4`, or when
/// `m mu <= k <= m (1 - mu)` and `mu <= 1/2`.
pub fn gaussian_tail_bound_at(m: usize, mu: f64, k: usize) -> Result<TailBound> {
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    if !(mu > 0.0 && mu <= 0.5) {
        return Err(Error::invalid(format!("mu {mu} outside (0, 1/2]")));
    }
    let (mf, kf) = (m as f64, k as f64);
    let z = (kf - mu * mf) / (mf * mu * (1.0 - mu)).sqrt();
    let lower_ok = kf >= mu * mf && k <= m;
    let valid = lower_ok && (mu <= 0.25 || kf <= mf * (1.0 - mu));
    Ok(TailBound {
        value: normal_upper_tail(z),
        valid,
    })
}

/// [`gaussian_tail_bound_at`] with `k = floor(3m/4) + 1`.
pub fn gaussian_tail_bound(m: usize, mu: f64) -> Result<TailBound> {
    gaussian_tail_bound_at(m, mu, stuck_threshold(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McStuck {
    pub trials: usize,
    /// Fraction of trials whose initial fit was `R` and stayed `R`.
    pub estimate: f64,
    pub stderr: f64,
    /// Trials that were `R` at some fit and `L` at a later one.
    pub absorption_violations: usize,
    /// Trials that started at `L` and reached `R` during the RC iterations.
    pub late_flips: usize,
}

fn is_right(policy: &impl Controller) -> bool {
    policy.control(&State::Dag(DagNode::Root)).ok() == Some(Control::Dag(Side::R))
}

#[derive(Default, Clone, Copy)]
struct TrialOutcome {
    stuck: bool,
    violation: bool,
    late_flip: bool,
}

/// Runs `m` HC demonstrations, the majority-vote fit and
/// [`ABSORPTION_ITERATIONS`] RC iterations per trial.
///
/// Trial `i` draws from `RandomSource::child(seed, i)`, so the result does
/// not depend on the thread count.
pub fn rc_stuck_probability_mc(m: usize, mu: f64, trials: usize, seed: u64) -> Result<McStuck> {
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    if m == 0 {
        return Err(Error::invalid("m must be positive"));
    }
    let env = Environment::Dag(DagEnv::new(mu)?);
    let cfg = RcConfig {
        m_initial: m,
        iterations: ABSORPTION_ITERATIONS,
        rollouts_per_iteration: 1,
        beta: 0.0,
        label_noise: 0.0,
        learner: Learner::MajorityVote,
    };
    let schedule = [1; ABSORPTION_ITERATIONS];
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomSource::child(seed, i as u64);
            let mut initial_r = false;
            let mut seen_r = false;
            let mut out = TrialOutcome::default();
            rc_dagger_observed(&env, &Supervisor::Dag, &cfg, &schedule, DagEnv::HORIZON, &mut rng, |k, p| {
                let r = is_right(p);
                if k == 0 {
                    initial_r = r;
                }
                out.violation |= seen_r && !r;
                out.late_flip |= !initial_r && r;
                seen_r |= r;
            })?;
            out.stuck = initial_r && !out.violation;
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let stuck = outcomes.iter().filter(|o| o.stuck).count();
    let p = stuck as f64 / trials as f64;
    Ok(McStuck {
        trials,
        estimate: p,
        stderr: (p * (1.0 - p) / trials as f64).sqrt(),
        absorption_violations: outcomes.iter().filter(|o| o.violation).count(),
        late_flips: outcomes.iter().filter(|o| o.late_flip).count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n: usize,
    /// Estimated probability that majority vote over `n` demos picks `L`.
    pub p_left: f64,
    pub stderr: f64,
}

/// Monte Carlo `P(theta_HC = L)` for each demonstration count.
pub fn hc_convergence_curve(
    mu: f64,
    n_values: &[usize],
    trials: usize,
    seed: u64,
) -> Result<Vec<CurvePoint>> {
    if n_values.is_empty() || trials == 0 {
        return Err(Error::invalid("need at least one n and one trial"));
    }
    let env = Environment::Dag(DagEnv::new(mu)?);
    n_values
        .iter()
        .map(|&n| {
            let left = (0..trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = RandomSource::child(seed, i as u64).derive(n as u64);
                    let (data, _) = hc_collect(&env, &Supervisor::Dag, n, DagEnv::HORIZON, &mut rng)?;
                    Ok(fit_majority_vote(&data)?.side == Side::L)
                })
                .collect::<Result<Vec<bool>>>()?
                .into_iter()
                .filter(|l| *l)
                .count();
            let p = left as f64 / trials as f64;
            Ok(CurvePoint {
                n,
                p_left: p,
                stderr: (p * (1.0 - p) / trials as f64).sqrt(),
            })
        })
        .collect()
}

/// One row of the theorem table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StuckProbability {
    pub m: usize,
    pub mu: f64,
    pub exact: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub gaussian_bound: f64,
    pub bound_valid: bool,
}

pub fn stuck_table(ms: &[usize], mu: f64, trials: usize, seed: u64) -> Result<Vec<StuckProbability>> {
    ms.iter()
        .map(|&m| {
            let exact = rc_stuck_probability_exact(m, mu)?;
            let mc = rc_stuck_probability_mc(m, mu, trials, RandomSource::new(seed).derive(m as u64).seed())?;
            let bound = if mu > 0.0 {
                gaussian_tail_bound(m, mu)?
            } else {
                TailBound { value: 0.0, valid: false }
            };
            Ok(StuckProbability {
                m,
                mu,
                exact,
                mc_estimate: mc.estimate,
                mc_stderr: mc.stderr,
                gaussian_bound: bound.value,
                bound_valid: bound.valid,
            })
        })
        .collect()
}
