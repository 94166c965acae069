//! Types shared by every module, rollouts and the surrogate losses.

mod loss;
mod rng;
mod rollout;
mod types;

pub use loss::{states_loss, surrogate_loss, surrogate_loss_per_dim, trajectory_loss};
pub use rng::RandomSource;
pub use rollout::rollout;
pub use types::{
    ActionSet, Cell, Control, DagNode, Dataset, Force, GridAction, PointMassState, Provenance,
    Sample, Side, State, Trajectory,
};

pub(crate) use types::mismatch;

use crate::error::Result;

/// A deterministic map from states to controls.
pub trait Controller {
    fn control(&self, state: &State) -> Result<Control>;
}

/// Something that picks the control to execute; may draw from `rng`.
pub trait Actor {
    fn act(&self, state: &State, rng: &mut RandomSource) -> Result<Control>;
}
