use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Cell, GridAction, RandomSource};
use crate::error::{Error, Result};

pub const GOAL_REWARD: f64 = 10.0;
pub const PENALTY_REWARD: f64 = -10.0;

/// A stochastic grid world.
///
/// Rewards are collected on every timestep the agent occupies a cell; neither
/// the goal nor the penalties end an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridWorldDoc", into = "GridWorldDoc")]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    pub goal: Cell,
    penalties: Vec<Cell>,
    pub slip_prob: f64,
    pub horizon: usize,
    penalty_mask: Vec<bool>,
    starts: Vec<Cell>,
}

/// On-disk form: `{width, height, goal: [c, r], penalties: [[c, r], ...], slip_prob}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridWorldDoc {
    width: usize,
    height: usize,
    goal: [usize; 2],
    penalties: Vec<[usize; 2]>,
    slip_prob: f64,
}

impl TryFrom<GridWorldDoc> for GridWorld {
    type Error = Error;

    fn try_from(doc: GridWorldDoc) -> Result<Self> {
        GridWorld::new(
            doc.width,
            doc.height,
            Cell::new(doc.goal[0], doc.goal[1]),
            doc.penalties.iter().map(|p| Cell::new(p[0], p[1])).collect(),
            doc.slip_prob,
        )
    }
}

impl From<GridWorld> for GridWorldDoc {
    fn from(w: GridWorld) -> Self {
        GridWorldDoc {
            width: w.width,
            height: w.height,
            goal: [w.goal.col, w.goal.row],
            penalties: w.penalties.iter().map(|c| [c.col, c.row]).collect(),
            slip_prob: w.slip_prob,
        }
    }
}

impl GridWorld {
    pub const DEFAULT_SIZE: usize = 15;
    pub const DEFAULT_SLIP: f64 = 0.16;
    pub const DEFAULT_PENALTY_FRAC: f64 = 0.08;
    pub const DEFAULT_HORIZON: usize = 30;

    pub fn new(
        width: usize,
        height: usize,
        goal: Cell,
        mut penalties: Vec<Cell>,
        slip_prob: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("grid dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&slip_prob) {
            return Err(Error::invalid(format!("slip_prob {slip_prob} outside [0, 1]")));
        }
        let in_bounds = |c: &Cell| c.col < width && c.row < height;
        if !in_bounds(&goal) {
            return Err(Error::invalid(format!("goal {goal:?} out of bounds")));
        }
        penalties.sort();
        penalties.dedup();
        let mut penalty_mask = vec![false; width * height];
        for p in &penalties {
            if !in_bounds(p) {
                return Err(Error::invalid(format!("penalty {p:?} out of bounds")));
            }
            if *p == goal {
                return Err(Error::invalid("goal cannot be a penalty cell"));
            }
            penalty_mask[p.row * width + p.col] = true;
        }
        let mut starts: Vec<Cell> = (0..width * height)
            .map(|i| Cell::new(i % width, i / width))
            .filter(|c| !penalty_mask[c.row * width + c.col] && *c != goal)
            .collect();
        if starts.is_empty() {
            starts.push(goal);
        }
        Ok(Self {
            width,
            height,
            goal,
            penalties,
            slip_prob,
            horizon: Self::DEFAULT_HORIZON,
            penalty_mask,
            starts,
        })
    }

    pub fn penalties(&self) -> &[Cell] {
        &self.penalties
    }

    pub fn num_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn index(&self, c: Cell) -> usize {
        c.row * self.width + c.col
    }

    pub fn cell(&self, index: usize) -> Cell {
        Cell::new(index % self.width, index / self.width)
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.col < self.width && c.row < self.height
    }

    pub fn is_penalty(&self, c: Cell) -> bool {
        self.penalty_mask[self.index(c)]
    }

    /// Cells neither goal nor penalty; the start distribution is uniform over these.
    pub fn free_cells(&self) -> &[Cell] {
        &self.starts
    }

    pub fn reward(&self, c: Cell) -> f64 {
        if c == self.goal {
            GOAL_REWARD
        } else if self.is_penalty(c) {
            PENALTY_REWARD
        } else {
            0.0
        }
    }

    /// Applies a direction, staying put if it would leave the grid.
    pub fn shift(&self, c: Cell, a: GridAction) -> Cell {
        let (dc, dr) = a.delta();
        let col = c.col as isize + dc;
        let row = c.row as isize + dr;
        if col < 0 || row < 0 || col >= self.width as isize || row >= self.height as isize {
            c
        } else {
            Cell::new(col as usize, row as usize)
        }
    }

    /// Outcome directions for `intended`: it with probability `1 - slip`, and
    /// each of the other four directions with probability `slip / 4`.
    pub fn transitions(&self, c: Cell, intended: GridAction) -> [(Cell, f64); 5] {
        let other = self.slip_prob / 4.0;
        GridAction::ALL.map(|a| {
            let p = if a == intended {
                1.0 - self.slip_prob
            } else {
                other
            };
            (self.shift(c, a), p)
        })
    }

    pub fn step(&self, c: Cell, intended: GridAction, rng: &mut RandomSource) -> Cell {
        let slipped = rng.random::<f64>() < self.slip_prob;
        let direction = if slipped {
            let j = rng.random_range(0..4);
            GridAction::ALL
                .into_iter()
                .filter(|a| *a != intended)
                .nth(j)
                .expect("four alternatives")
        } else {
            intended
        };
        self.shift(c, direction)
    }

    pub fn sample_start(&self, rng: &mut RandomSource) -> Cell {
        self.starts[rng.random_range(0..self.starts.len())]
    }
}

/// Draws `floor(penalty_frac * width * height)` penalties without replacement,
/// then a goal uniformly from the remaining cells.
pub fn gridworld_generate(
    rng: &mut RandomSource,
    width: usize,
    height: usize,
    penalty_frac: f64,
) -> Result<GridWorld> {
    let n = width * height;
    if n < 2 {
        return Err(Error::invalid("grid needs at least two cells"));
    }
    if !(0.0..1.0).contains(&penalty_frac) {
        return Err(Error::invalid(format!(
            "penalty_frac {penalty_frac} outside [0, 1)"
        )));
    }
    // The epsilon absorbs representation error such as 0.08 * 225 = 17.999...
    let n_pen = (penalty_frac * n as f64 + 1e-9).floor() as usize;
    if n_pen >= n {
        return Err(Error::invalid("penalty fraction leaves no room for a goal"));
    }
    let picked = sample(rng, n, n_pen + 1).into_vec();
    let to_cell = |i: usize| Cell::new(i % width, i / width);
    let penalties = picked[..n_pen].iter().map(|&i| to_cell(i)).collect();
    let goal = to_cell(picked[n_pen]);
    GridWorld::new(width, height, goal, penalties, GridWorld::DEFAULT_SLIP)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(slip: f64) -> GridWorld {
        GridWorld::new(15, 15, Cell::new(10, 10), vec![Cell::new(2, 2)], slip).unwrap()
    }

    #[test]
    fn generate_counts() {
        let mut rng = RandomSource::new(1);
        let w = gridworld_generate(&mut rng, 15, 15, 0.08).unwrap();
        assert_eq!(w.penalties().len(), 18);
        assert!(!w.is_penalty(w.goal));
        assert_eq!(w.free_cells().len(), 206);
    }

    #[test]
    fn generate_tiny() {
        let mut rng = RandomSource::new(5);
        let w = gridworld_generate(&mut rng, 2, 1, 0.0).unwrap();
        assert!(w.penalties().is_empty());
        assert!(w.goal == Cell::new(0, 0) || w.goal == Cell::new(1, 0));
    }

    #[test]
    fn generate_is_deterministic() {
        let a = gridworld_generate(&mut RandomSource::new(9), 15, 15, 0.08).unwrap();
        let b = gridworld_generate(&mut RandomSource::new(9), 15, 15, 0.08).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn generate_rejects_full_penalty() {
        let mut rng = RandomSource::new(1);
        assert_eq!(gridworld_generate(&mut rng, 2, 1, 0.99).unwrap().penalties().len(), 1);
        assert!(gridworld_generate(&mut rng, 1, 1, 0.0).is_err());
        assert!(gridworld_generate(&mut rng, 3, 3, 1.0).is_err());
    }

    #[test]
    fn deterministic_moves() {
        let w = world(0.0);
        let mut rng = RandomSource::new(0);
        assert_eq!(w.step(Cell::new(3, 3), GridAction::Forward, &mut rng), Cell::new(3, 4));
        assert_eq!(w.step(Cell::new(0, 0), GridAction::Left, &mut rng), Cell::new(0, 0));
        assert_eq!(w.step(Cell::new(14, 14), GridAction::Right, &mut rng), Cell::new(14, 14));
    }

    #[test]
    fn slip_frequency() {
        let w = world(0.16);
        let mut rng = RandomSource::new(123);
        let n = 100_000;
        let moved = (0..n)
            .filter(|_| w.step(Cell::new(7, 7), GridAction::Stay, &mut rng) != Cell::new(7, 7))
            .count();
        let freq = moved as f64 / n as f64;
        assert!((freq - 0.16).abs() <= 0.004, "freq {freq}");
    }

    #[test]
    fn transitions_sum_to_one() {
        let w = world(0.16);
        for a in GridAction::ALL {
            let total: f64 = w.transitions(Cell::new(0, 0), a).iter().map(|t| t.1).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rewards() {
        let w = world(0.16);
        assert_eq!(w.reward(Cell::new(10, 10)), 10.0);
        assert_eq!(w.reward(Cell::new(2, 2)), -10.0);
        assert_eq!(w.reward(Cell::new(5, 5)), 0.0);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let w = world(0.16);
        let text = serde_json::to_string(&w).unwrap();
        assert!(text.contains("\"goal\":[10,10]"));
        let back: GridWorld = serde_json::from_str(&text).unwrap();
        assert_eq!(back, w);
        let bad = r#"{"width":3,"height":3,"goal":[1,1],"penalties":[[1,1]],"slip_prob":0.1}"#;
        assert!(serde_json::from_str::<GridWorld>(bad).is_err());
    }

    #[test]
    fn step_stays_in_neighborhood() {
        let w = world(1.0);
        let mut rng = RandomSource::new(4);
        for i in 0..w.num_cells() {
            let c = w.cell(i);
            for a in GridAction::ALL {
                let n = w.step(c, a, &mut rng);
                assert!(w.in_bounds(n));
                let d = c.col.abs_diff(n.col) + c.row.abs_diff(n.row);
                assert!(d <= 1);
            }
        }
    }
}
