use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A grid cell. `col` grows to the right, `row` grows "forward".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub col: usize,
    pub row: usize,
}

impl Cell {
    pub const fn new(col: usize, row: usize) -> Self {
        Self { col, row }
    }
}

/// Nodes of the two-level decision DAG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DagNode {
    Root,
    L,
    R,
    LL,
    LR,
    RL,
    RR,
}

impl DagNode {
    pub const ALL: [DagNode; 7] = [
        DagNode::Root,
        DagNode::L,
        DagNode::R,
        DagNode::LL,
        DagNode::LR,
        DagNode::RL,
        DagNode::RR,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            DagNode::Root => "root",
            DagNode::L => "l",
            DagNode::R => "r",
            DagNode::LL => "ll",
            DagNode::LR => "lr",
            DagNode::RL => "rl",
            DagNode::RR => "rr",
        }
    }

    /// `None` for leaves.
    pub fn child(self, side: Side) -> Option<DagNode> {
        use DagNode::*;
        match (self, side) {
            (Root, Side::L) => Some(L),
            (Root, Side::R) => Some(R),
            (L, Side::L) => Some(LL),
            (L, Side::R) => Some(LR),
            (R, Side::L) => Some(RL),
            (R, Side::R) => Some(RR),
            _ => None,
        }
    }

    pub fn is_leaf(self) -> bool {
        self.child(Side::L).is_none()
    }

    /// Whether the node sits in the subtree under the root's right child.
    pub fn in_right_subtree(self) -> bool {
        matches!(self, DagNode::R | DagNode::RL | DagNode::RR)
    }
}

/// Point-mass state `(x, y, vx, vy)`.
pub type PointMassState = [f64; 4];

/// Force `(fx, fy)`.
pub type Force = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum State {
    Grid(Cell),
    PointMass(PointMassState),
    Dag(DagNode),
}

impl State {
    pub fn variant_name(&self) -> &'static str {
        match self {
            State::Grid(_) => "grid",
            State::PointMass(_) => "point-mass",
            State::Dag(_) => "dag",
        }
    }

    pub fn as_cell(&self) -> Result<Cell> {
        match self {
            State::Grid(c) => Ok(*c),
            other => Err(mismatch("grid", other.variant_name())),
        }
    }

    pub fn as_point_mass(&self) -> Result<PointMassState> {
        match self {
            State::PointMass(s) => Ok(*s),
            other => Err(mismatch("point-mass", other.variant_name())),
        }
    }

    pub fn as_dag(&self) -> Result<DagNode> {
        match self {
            State::Dag(n) => Ok(*n),
            other => Err(mismatch("dag", other.variant_name())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GridAction {
    Left,
    Right,
    Forward,
    Backward,
    Stay,
}

impl GridAction {
    /// Fixed order; also the tie-break order everywhere.
    pub const ALL: [GridAction; 5] = [
        GridAction::Left,
        GridAction::Right,
        GridAction::Forward,
        GridAction::Backward,
        GridAction::Stay,
    ];

    pub fn delta(self) -> (isize, isize) {
        match self {
            GridAction::Left => (-1, 0),
            GridAction::Right => (1, 0),
            GridAction::Forward => (0, 1),
            GridAction::Backward => (0, -1),
            GridAction::Stay => (0, 0),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub const ALL: [Side; 2] = [Side::L, Side::R];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum Control {
    Grid(GridAction),
    Dag(Side),
    Force(Force),
}

impl Control {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Control::Grid(_) => "grid",
            Control::Dag(_) => "dag",
            Control::Force(_) => "force",
        }
    }

    /// Position in the owning discrete action set, `None` for forces.
    pub fn discrete_index(&self) -> Option<usize> {
        match self {
            Control::Grid(a) => Some(a.index()),
            Control::Dag(s) => Some(s.index()),
            Control::Force(_) => None,
        }
    }

    pub fn as_force(&self) -> Result<Force> {
        match self {
            Control::Force(f) => Ok(*f),
            other => Err(mismatch("force", other.variant_name())),
        }
    }

    pub fn as_grid(&self) -> Result<GridAction> {
        match self {
            Control::Grid(a) => Ok(*a),
            other => Err(mismatch("grid", other.variant_name())),
        }
    }

    pub fn as_side(&self) -> Result<Side> {
        match self {
            Control::Dag(s) => Ok(*s),
            other => Err(mismatch("dag", other.variant_name())),
        }
    }
}

/// A finite, ordered action set declared by a discrete environment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionSet {
    Grid,
    Dag,
}

impl ActionSet {
    pub fn len(self) -> usize {
        match self {
            ActionSet::Grid => GridAction::ALL.len(),
            ActionSet::Dag => Side::ALL.len(),
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn action(self, index: usize) -> Control {
        match self {
            ActionSet::Grid => Control::Grid(GridAction::ALL[index]),
            ActionSet::Dag => Control::Dag(Side::ALL[index]),
        }
    }

    /// Index of `control` in this set, or a mismatch error.
    pub fn index_of(self, control: &Control) -> Result<usize> {
        match (self, control) {
            (ActionSet::Grid, Control::Grid(a)) => Ok(a.index()),
            (ActionSet::Dag, Control::Dag(s)) => Ok(s.index()),
            (set, other) => Err(mismatch(set.variant_name(), other.variant_name())),
        }
    }

    pub fn variant_name(self) -> &'static str {
        match self {
            ActionSet::Grid => "grid",
            ActionSet::Dag => "dag",
        }
    }
}

pub(crate) fn mismatch(expected: &'static str, found: &'static str) -> Error {
    Error::VariantMismatch { expected, found }
}

/// `T + 1` state/control pairs from one rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pairs: Vec<(State, Control)>,
}

impl Trajectory {
    pub fn new(pairs: Vec<(State, Control)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::invalid("trajectory needs at least one pair"));
        }
        let s0 = pairs[0].0.variant_name();
        let u0 = pairs[0].1.variant_name();
        for (s, u) in &pairs {
            if s.variant_name() != s0 {
                return Err(mismatch(s0, s.variant_name()));
            }
            if u.variant_name() != u0 {
                return Err(mismatch(u0, u.variant_name()));
            }
        }
        Ok(Self { pairs })
    }

    pub fn pairs(&self) -> &[(State, Control)] {
        &self.pairs
    }

    pub fn horizon(&self) -> usize {
        self.pairs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &State> + '_ {
        self.pairs.iter().map(|(s, _)| s)
    }
}

/// Where a labeled pair came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", content = "iteration", rename_all = "kebab-case")]
pub enum Provenance {
    InitialDemo,
    RcIteration(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub state: State,
    pub label: Control,
    pub provenance: Provenance,
}

/// Aggregated `(state, supervisor label)` pairs. Append-only.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    items: Vec<Sample>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, state: State, label: Control, provenance: Provenance) {
        self.items.push(Sample {
            state,
            label,
            provenance,
        });
    }

    pub fn extend_from_trajectory(&mut self, traj: &Trajectory, provenance: Provenance) {
        for (s, u) in traj.pairs() {
            self.push(*s, *u, provenance);
        }
    }

    pub fn items(&self) -> &[Sample] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// The first `n` items as a new dataset.
    pub fn prefix(&self, n: usize) -> Dataset {
        Dataset {
            items: self.items[..n.min(self.items.len())].to_vec(),
        }
    }

    pub fn from_samples(items: Vec<Sample>) -> Self {
        Self { items }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dag_children() {
        assert_eq!(DagNode::Root.child(Side::R), Some(DagNode::R));
        assert_eq!(DagNode::L.child(Side::L), Some(DagNode::LL));
        assert!(DagNode::RR.is_leaf());
        assert!(!DagNode::Root.is_leaf());
        assert!(DagNode::RL.in_right_subtree());
        assert!(!DagNode::LR.in_right_subtree());
    }

    #[test]
    fn trajectory_rejects_mixed_variants() {
        let pairs = vec![
            (State::Dag(DagNode::Root), Control::Dag(Side::L)),
            (State::Grid(Cell::new(0, 0)), Control::Dag(Side::L)),
        ];
        assert!(matches!(
            Trajectory::new(pairs),
            Err(Error::VariantMismatch { .. })
        ));
        assert!(Trajectory::new(vec![]).is_err());
    }

    #[test]
    fn action_set_round_trip() {
        for set in [ActionSet::Grid, ActionSet::Dag] {
            for i in 0..set.len() {
                assert_eq!(set.index_of(&set.action(i)).unwrap(), i);
            }
        }
        assert!(ActionSet::Dag
            .index_of(&Control::Grid(GridAction::Left))
            .is_err());
    }
}
