//! Benchmark environments: stochastic grid world, two-region point mass and
//! the two-level decision DAG.

mod dag;
mod grid;
mod point_mass;

pub use dag::DagEnv;
pub use grid::{gridworld_generate, GridWorld, GOAL_REWARD, PENALTY_REWARD};
pub use point_mass::{PointMassEnv, Region};

use crate::domain::{mismatch, ActionSet, Control, RandomSource, State};
use crate::error::Result;

#[derive(Debug, Clone)]
pub enum Environment {
    Grid(GridWorld),
    PointMass(PointMassEnv),
    Dag(DagEnv),
}

impl Environment {
    pub fn initial_state(&self, rng: &mut RandomSource) -> State {
        match self {
            Environment::Grid(w) => State::Grid(w.sample_start(rng)),
            Environment::PointMass(p) => State::PointMass(p.start),
            Environment::Dag(_) => State::Dag(crate::domain::DagNode::Root),
        }
    }

    pub fn step(&self, state: &State, control: &Control, rng: &mut RandomSource) -> Result<State> {
        match self {
            Environment::Grid(w) => {
                let next = w.step(state.as_cell()?, control.as_grid()?, rng);
                Ok(State::Grid(next))
            }
            Environment::PointMass(p) => {
                let next = p.step(&state.as_point_mass()?, &control.as_force()?, rng)?;
                Ok(State::PointMass(next))
            }
            Environment::Dag(d) => {
                let next = d.step(state.as_dag()?, control.as_side()?, rng)?;
                Ok(State::Dag(next))
            }
        }
    }

    /// Errors unless `control` is the variant this environment consumes.
    pub fn check_control(&self, control: &Control) -> Result<()> {
        match (self, control) {
            (Environment::Grid(_), Control::Grid(_))
            | (Environment::PointMass(_), Control::Force(_))
            | (Environment::Dag(_), Control::Dag(_)) => Ok(()),
            (env, c) => Err(mismatch(env.control_name(), c.variant_name())),
        }
    }

    fn control_name(&self) -> &'static str {
        match self {
            Environment::Grid(_) => "grid",
            Environment::PointMass(_) => "force",
            Environment::Dag(_) => "dag",
        }
    }

    pub fn horizon(&self) -> usize {
        match self {
            Environment::Grid(w) => w.horizon,
            Environment::PointMass(p) => p.horizon,
            Environment::Dag(_) => DagEnv::HORIZON,
        }
    }

    pub fn action_set(&self) -> Option<ActionSet> {
        match self {
            Environment::Grid(_) => Some(ActionSet::Grid),
            Environment::PointMass(_) => None,
            Environment::Dag(_) => Some(ActionSet::Dag),
        }
    }
}
