//! Algorithmic supervisors: value-iteration greedy for the grid world,
//! switching LQR for the point mass, the greedy DAG labeler, and a
//! label-flipping wrapper for discrete supervisors.

mod lqr;
mod value_iteration;

pub use lqr::{dare_residual, solve_lqr, spectral_radius, switching_lqr_supervisor, LqrGain, SwitchingLqr};
pub use value_iteration::{
    bellman_sweep, value_iteration, value_iteration_from, vi_greedy_action, ValueFunction,
};

use rand::Rng;

use crate::domain::{
    ActionSet, Actor, Control, Controller, DagNode, GridAction, RandomSource, Side,
    State,
};
use crate::envs::GridWorld;
use crate::error::{Error, Result};

/// Discount used for grid supervisors.
pub const GRID_GAMMA: f64 = 0.99;
pub const GRID_VI_TOL: f64 = 1e-6;
pub const GRID_VI_MAX_SWEEPS: usize = 100_000;

/// The greedy value-iteration policy, tabulated over every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSupervisor {
    pub width: usize,
    pub height: usize,
    actions: Vec<GridAction>,
    pub values: ValueFunction,
}

impl GridSupervisor {
    pub fn solve(world: &GridWorld) -> Result<Self> {
        let vf = value_iteration(world, GRID_GAMMA, GRID_VI_TOL, GRID_VI_MAX_SWEEPS)?;
        Ok(Self::from_values(world, vf))
    }

    pub fn from_values(world: &GridWorld, vf: ValueFunction) -> Self {
        let actions = (0..world.num_cells())
            .map(|i| vi_greedy_action(&vf, world, world.cell(i)))
            .collect();
        Self {
            width: world.width,
            height: world.height,
            actions,
            values: vf,
        }
    }

    pub fn action(&self, state: &State) -> Result<GridAction> {
        let c = state.as_cell()?;
        if c.col >= self.width || c.row >= self.height {
            return Err(Error::invalid(format!("cell {c:?} outside the grid")));
        }
        Ok(self.actions[c.row * self.width + c.col])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Supervisor {
    Grid(GridSupervisor),
    SwitchingLqr(SwitchingLqr),
    Dag,
    /// Replaces the inner label with a uniformly random action with
    /// probability `flip_prob`.
    Noisy {
        inner: Box<Supervisor>,
        flip_prob: f64,
    },
}

impl Supervisor {
    pub fn noisy(inner: Supervisor, flip_prob: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip_prob) {
            return Err(Error::invalid(format!("flip_prob {flip_prob} outside [0, 1]")));
        }
        if inner.action_set().is_none() {
            return Err(Error::invalid(
                "label flipping applies only to discrete-action supervisors",
            ));
        }
        Ok(Supervisor::Noisy {
            inner: Box::new(inner),
            flip_prob,
        })
    }

    pub fn action_set(&self) -> Option<ActionSet> {
        match self {
            Supervisor::Grid(_) => Some(ActionSet::Grid),
            Supervisor::SwitchingLqr(_) => None,
            Supervisor::Dag => Some(ActionSet::Dag),
            Supervisor::Noisy { inner, .. } => inner.action_set(),
        }
    }
}

/// `L` at the root and in the left subtree, `R` in the right subtree.
pub fn dag_supervisor(node: DagNode) -> Side {
    if node.in_right_subtree() {
        Side::R
    } else {
        Side::L
    }
}

/// With probability `flip_prob` a uniform draw from the full action set
/// (which can coincide with the inner label), otherwise the inner label.
pub fn noisy_supervisor(
    inner: &Supervisor,
    flip_prob: f64,
    state: &State,
    rng: &mut RandomSource,
) -> Result<Control> {
    let set = inner.action_set().ok_or_else(|| {
        Error::invalid("label flipping applies only to discrete-action supervisors")
    })?;
    if rng.random::<f64>() < flip_prob {
        Ok(set.action(rng.random_range(0..set.len())))
    } else {
        inner.act(state, rng)
    }
}

impl Controller for Supervisor {
    /// The noise-free label.
    fn control(&self, state: &State) -> Result<Control> {
        match self {
            Supervisor::Grid(g) => Ok(Control::Grid(g.action(state)?)),
            Supervisor::SwitchingLqr(s) => Ok(Control::Force(s.control(&state.as_point_mass()?))),
            Supervisor::Dag => {
                let node = state.as_dag()?;
                Ok(Control::Dag(dag_supervisor(node)))
            }
            Supervisor::Noisy { inner, .. } => inner.control(state),
        }
    }
}

impl Actor for Supervisor {
    fn act(&self, state: &State, rng: &mut RandomSource) -> Result<Control> {
        match self {
            Supervisor::Noisy { inner, flip_prob } => {
                noisy_supervisor(inner, *flip_prob, state, rng)
            }
            other => other.control(state),
        }
    }
}
