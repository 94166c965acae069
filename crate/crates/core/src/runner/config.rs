//! Experiment configuration.
//!
//! ```json
//! {
//!   "experiment": "grid-expressiveness",
//!   "learner": {"kind": "linear"},
//!   "schedule": [1, 5, 10, 20, 30, 40, 50],
//!   "trials": 100,
//!   "seed": 7,
//!   "output": "results/grid.csv"
//! }
//! ```
//!
//! Omitted fields take per-experiment defaults; unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::envs::{DagEnv, GridWorld, PointMassEnv};
use crate::error::{Error, Result};
use crate::learners::{Learner, LinearConfig, DEFAULT_MAX_DEPTH, DEFAULT_RIDGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GridExpressiveness,
    GridNoisy,
    PointmassConvergence,
    Theorem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub learner: Option<Learner>,
    /// Trajectory budgets, strictly increasing.
    #[serde(default)]
    pub schedule: Option<Vec<usize>>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub n_eval: Option<usize>,
    #[serde(default)]
    pub rc: RcSettings,
    #[serde(default)]
    pub env: EnvOverrides,
    #[serde(default)]
    pub theorem: TheoremSettings,
    pub output: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RcSettings {
    pub m_initial: usize,
    pub rollouts_per_iteration: usize,
    /// When set, every budget gets its own run with this many iterations
    /// and an evenly split rollout schedule. When unset, a single run adds
    /// `rollouts_per_iteration` trajectories per iteration and each budget
    /// reads off the matching intermediate policy.
    pub iterations: Option<usize>,
    pub beta: f64,
}

impl Default for RcSettings {
    fn default() -> Self {
        Self {
            m_initial: 1,
            rollouts_per_iteration: 1,
            iterations: None,
            beta: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvOverrides {
    pub grid_size: Option<usize>,
    pub slip_prob: Option<f64>,
    pub penalty_frac: Option<f64>,
    pub flip_prob: Option<f64>,
    pub noise_var: Option<f64>,
    /// Gaussian label noise standard deviation for the point mass.
    pub label_noise: Option<f64>,
    pub horizon: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TheoremSettings {
    pub m_values: Vec<usize>,
    pub mu: f64,
    pub trials: usize,
}

impl Default for TheoremSettings {
    fn default() -> Self {
        Self {
            m_values: vec![1, 2, 3, 4, 8, 12],
            mu: DagEnv::default().mu,
            trials: 100_000,
        }
    }
}

pub const DEFAULT_N_EVAL: usize = 50;
pub const DEFAULT_FLIP_PROB: f64 = 0.3;
/// Label noise used by the point-mass convergence experiment.
pub const DEFAULT_POINTMASS_LABEL_NOISE: f64 = 2.0;

pub fn default_grid_schedule() -> Vec<usize> {
    std::iter::once(1).chain((5..=50).step_by(5)).collect()
}

pub fn default_pointmass_schedule() -> Vec<usize> {
    (5..=50).step_by(5).collect()
}

/// Fully defaulted and validated settings for a demonstration experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Plan {
    pub kind: ExperimentKind,
    pub learner: Learner,
    pub schedule: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub n_eval: usize,
    pub rc: RcSettings,
    pub grid_size: usize,
    pub slip_prob: f64,
    pub penalty_frac: f64,
    pub flip_prob: Option<f64>,
    pub noise_var: f64,
    pub label_noise: f64,
    pub horizon: usize,
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| cfg_err(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate_theorem(&self) -> Result<()> {
        let t = &self.theorem;
        if t.m_values.is_empty() || t.m_values.contains(&0) {
            return Err(cfg_err("theorem.m_values must be nonempty and positive"));
        }
        if !(0.0..=0.25).contains(&t.mu) {
            return Err(cfg_err(format!("theorem.mu {} outside [0, 1/4]", t.mu)));
        }
        if t.trials == 0 {
            return Err(cfg_err("theorem.trials must be positive"));
        }
        Ok(())
    }

    /// Applies defaults and checks every constraint that does not need a
    /// generated environment.
    pub fn plan(&self) -> Result<Plan> {
        let kind = self.experiment;
        if kind == ExperimentKind::Theorem {
            return Err(cfg_err("theorem runs have no demonstration plan"));
        }
        let grid = kind != ExperimentKind::PointmassConvergence;
        let learner = self.learner.clone().unwrap_or(match kind {
            ExperimentKind::GridExpressiveness => Learner::Linear {
                config: LinearConfig::default(),
            },
            ExperimentKind::GridNoisy => Learner::Tree {
                max_depth: DEFAULT_MAX_DEPTH,
            },
            _ => Learner::LeastSquares {
                ridge: DEFAULT_RIDGE,
            },
        });
        let fits = matches!(
            (&learner, grid),
            (Learner::Linear { .. } | Learner::Tree { .. }, true) | (Learner::LeastSquares { .. }, false)
        );
        if !fits {
            return Err(cfg_err(format!("learner {} does not fit {kind:?}", learner.name())));
        }
        let schedule = self.schedule.clone().unwrap_or_else(|| {
            if grid {
                default_grid_schedule()
            } else {
                default_pointmass_schedule()
            }
        });
        if schedule.is_empty() || schedule[0] == 0 {
            return Err(cfg_err("schedule must be nonempty with positive budgets"));
        }
        if schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(cfg_err("schedule must be strictly increasing"));
        }
        let trials = self.trials.unwrap_or(if grid { 100 } else { 200 });
        if trials == 0 {
            return Err(cfg_err("trials must be at least 1"));
        }
        let n_eval = self.n_eval.unwrap_or(DEFAULT_N_EVAL);
        if n_eval == 0 {
            return Err(cfg_err("n_eval must be at least 1"));
        }
        let rc = self.rc.clone();
        if rc.m_initial == 0 || rc.rollouts_per_iteration == 0 {
            return Err(cfg_err("rc.m_initial and rc.rollouts_per_iteration must be positive"));
        }
        if !(0.0..=1.0).contains(&rc.beta) {
            return Err(cfg_err(format!("rc.beta {} outside [0, 1]", rc.beta)));
        }
        for &b in &schedule {
            if b < rc.m_initial {
                return Err(cfg_err(format!("budget {b} is below rc.m_initial {}", rc.m_initial)));
            }
            if rc.iterations.is_none() && !(b - rc.m_initial).is_multiple_of(rc.rollouts_per_iteration) {
                return Err(cfg_err(format!(
                    "budget {b} is not reachable with {} rollouts per iteration",
                    rc.rollouts_per_iteration
                )));
            }
            if rc.iterations == Some(0) && b > rc.m_initial {
                return Err(cfg_err("rc.iterations = 0 only allows budgets equal to m_initial"));
            }
        }
        let e = &self.env;
        let slip_prob = e.slip_prob.unwrap_or(GridWorld::DEFAULT_SLIP);
        if !(0.0..=1.0).contains(&slip_prob) {
            return Err(cfg_err("env.slip_prob outside [0, 1]"));
        }
        let penalty_frac = e.penalty_frac.unwrap_or(GridWorld::DEFAULT_PENALTY_FRAC);
        if !(0.0..1.0).contains(&penalty_frac) {
            return Err(cfg_err("env.penalty_frac outside [0, 1)"));
        }
        let grid_size = e.grid_size.unwrap_or(GridWorld::DEFAULT_SIZE);
        if grid_size < 2 {
            return Err(cfg_err("env.grid_size must be at least 2"));
        }
        let flip_prob = match (kind, e.flip_prob) {
            (ExperimentKind::GridNoisy, p) => Some(p.unwrap_or(DEFAULT_FLIP_PROB)),
            (ExperimentKind::GridExpressiveness, p) => p,
            (_, Some(_)) => return Err(cfg_err("env.flip_prob applies only to grid experiments")),
            (_, None) => None,
        };
        if flip_prob.is_some_and(|p| !(0.0..=1.0).contains(&p)) {
            return Err(cfg_err("env.flip_prob outside [0, 1]"));
        }
        let noise_var = e.noise_var.unwrap_or(PointMassEnv::DEFAULT_NOISE_VAR);
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(cfg_err("env.noise_var must be finite and >= 0"));
        }
        let label_noise = match (grid, e.label_noise) {
            (true, Some(_)) => return Err(cfg_err("env.label_noise applies only to the point mass")),
            (true, None) => 0.0,
            (false, v) => v.unwrap_or(DEFAULT_POINTMASS_LABEL_NOISE),
        };
        if !(label_noise >= 0.0 && label_noise.is_finite()) {
            return Err(cfg_err("env.label_noise must be finite and >= 0"));
        }
        let horizon = e.horizon.unwrap_or(if grid {
            GridWorld::DEFAULT_HORIZON
        } else {
            PointMassEnv::DEFAULT_HORIZON
        });
        if horizon == 0 {
            return Err(cfg_err("env.horizon must be at least 1"));
        }
        Ok(Plan {
            kind,
            learner,
            schedule,
            trials,
            seed: self.seed,
            n_eval,
            rc,
            grid_size,
            slip_prob,
            penalty_frac,
            flip_prob,
            noise_var,
            label_noise,
            horizon,
        })
    }
}
