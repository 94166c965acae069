use rand::Rng;

use crate::domain::{DagNode, RandomSource, Side};
use crate::error::{Error, Result};

/// Two-level binary DAG rooted at a deterministic start node.
///
/// Choosing `L` at the root lands on the right child with probability `mu`;
/// every other transition is deterministic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DagEnv {
    pub mu: f64,
}

impl DagEnv {
    /// Three decision epochs: root, first level, leaves.
    pub const HORIZON: usize = 2;

    /// `mu` must lie in `[0, 1/2)` so that always-left stays the unique optimum.
    pub fn new(mu: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&mu) {
            return Err(Error::invalid(format!("mu {mu} outside [0, 1/2)")));
        }
        Ok(Self { mu })
    }

    pub fn step(&self, node: DagNode, theta: Side, rng: &mut RandomSource) -> Result<DagNode> {
        if node.is_leaf() {
            return Err(Error::LeafStep(node.name()));
        }
        let side = match (node, theta) {
            (DagNode::Root, Side::L) if rng.random::<f64>() < self.mu => Side::R,
            (_, side) => side,
        };
        Ok(node.child(side).expect("internal node"))
    }
}

impl Default for DagEnv {
    fn default() -> Self {
        Self { mu: 0.25 }
    }
}
