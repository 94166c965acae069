//! Policy classes and the learners that fit them to aggregated data.

mod least_squares;
mod linear;
mod majority;
mod tree;

pub use least_squares::{fit_least_squares, AffinePolicy, DEFAULT_RIDGE};
pub use linear::{fit_linear_classifier, fit_traced, GridFeatures, LinearClassifier, LinearConfig};
pub use majority::{fit_majority_vote, ConstantPolicy};
pub use tree::{fit_decision_tree, DecisionTree, TreeNode, DEFAULT_MAX_DEPTH};

use serde::{Deserialize, Serialize};

use crate::domain::{Actor, Control, Controller, Dataset, RandomSource, State};
use crate::envs::Environment;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "kebab-case")]
pub enum Policy {
    Linear(LinearClassifier),
    Tree(DecisionTree),
    Affine(AffinePolicy),
    Constant(ConstantPolicy),
}

impl Controller for Policy {
    fn control(&self, state: &State) -> Result<Control> {
        match self {
            Policy::Linear(p) => p.predict(state),
            Policy::Tree(p) => p.predict(state),
            Policy::Affine(p) => p.predict(state),
            Policy::Constant(p) => {
                state.as_dag()?;
                Ok(Control::Dag(p.side))
            }
        }
    }
}

impl Actor for Policy {
    fn act(&self, state: &State, _rng: &mut RandomSource) -> Result<Control> {
        self.control(state)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Learner {
    Linear {
        #[serde(default)]
        config: LinearConfig,
    },
    Tree {
        #[serde(default = "default_depth")]
        max_depth: usize,
    },
    LeastSquares {
        #[serde(default = "default_ridge")]
        ridge: f64,
    },
    MajorityVote,
}

fn default_depth() -> usize {
    DEFAULT_MAX_DEPTH
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

impl Learner {
    /// Fits a policy; `rng` is only consumed by the stochastic learners.
    pub fn fit(&self, env: &Environment, data: &Dataset, rng: &mut RandomSource) -> Result<Policy> {
        match (self, env) {
            (Learner::Linear { config }, Environment::Grid(w)) => {
                let features = GridFeatures {
                    width: w.width,
                    height: w.height,
                };
                fit_linear_classifier(data, config, features, rng).map(Policy::Linear)
            }
            (Learner::Tree { max_depth }, Environment::Grid(_)) => {
                fit_decision_tree(data, *max_depth).map(Policy::Tree)
            }
            (Learner::LeastSquares { ridge }, Environment::PointMass(_)) => {
                fit_least_squares(data, *ridge).map(Policy::Affine)
            }
            (Learner::MajorityVote, Environment::Dag(_)) => {
                fit_majority_vote(data).map(Policy::Constant)
            }
            (l, _) => Err(Error::Config(format!(
                "learner {} does not apply to this environment",
                l.name()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Learner::Linear { .. } => "linear",
            Learner::Tree { .. } => "tree",
            Learner::LeastSquares { .. } => "least-squares",
            Learner::MajorityVote => "majority-vote",
        }
    }
}
