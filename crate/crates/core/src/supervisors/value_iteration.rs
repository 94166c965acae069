use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::domain::{Cell, GridAction};
use crate::envs::GridWorld;
use crate::error::{Error, Result};

/// Values with `|Q(s, a) - Q(s, best)|` at or below this count as ties.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ValueFunction {
    pub width: usize,
    pub height: usize,
    /// Row-major, indexed like [`GridWorld::index`].
    pub values: Vec<f64>,
    pub gamma: f64,
    /// Max-norm change of the final sweep.
    pub residual: f64,
    pub sweeps: usize,
}

impl ValueFunction {
    pub fn value(&self, c: Cell) -> f64 {
        self.values[c.row * self.width + c.col]
    }
}

impl Serialize for ValueFunction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc<'a> {
            width: usize,
            height: usize,
            gamma: f64,
            residual: f64,
            sweeps: usize,
            values: &'a BTreeMap<String, f64>,
        }
        let values: BTreeMap<String, f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("{},{}", i % self.width, i / self.width), *v))
            .collect();
        Doc {
            width: self.width,
            height: self.height,
            gamma: self.gamma,
            residual: self.residual,
            sweeps: self.sweeps,
            values: &values,
        }
        .serialize(serializer)
    }
}

/// Expected next-state value of taking `a` in `c`.
fn expected_next(world: &GridWorld, values: &[f64], c: Cell, a: GridAction) -> f64 {
    world
        .transitions(c, a)
        .iter()
        .map(|(next, p)| p * values[world.index(*next)])
        .sum()
}

/// One synchronous Bellman optimality backup.
pub fn bellman_sweep(world: &GridWorld, gamma: f64, values: &[f64]) -> Vec<f64> {
    (0..world.num_cells())
        .map(|i| {
            let c = world.cell(i);
            let best = GridAction::ALL
                .iter()
                .map(|a| expected_next(world, values, c, *a))
                .fold(f64::NEG_INFINITY, f64::max);
            world.reward(c) + gamma * best
        })
        .collect()
}

pub fn value_iteration(
    world: &GridWorld,
    gamma: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<ValueFunction> {
    value_iteration_from(world, gamma, tol, max_sweeps, 0.0)
}

/// Value iteration starting from a constant value everywhere.
pub fn value_iteration_from(
    world: &GridWorld,
    gamma: f64,
    tol: f64,
    max_sweeps: usize,
    init: f64,
) -> Result<ValueFunction> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid(format!("discount {gamma} outside (0, 1)")));
    }
    if tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let mut values = vec![init; world.num_cells()];
    let mut residual = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        let next = bellman_sweep(world, gamma, &values);
        residual = next
            .iter()
            .zip(&values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        values = next;
        if residual <= tol {
            return Ok(ValueFunction {
                width: world.width,
                height: world.height,
                values,
                gamma,
                residual,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "value iteration",
        iterations: max_sweeps,
        residual,
    })
}

/// Greedy action under `vf`; ties go to the earliest action in [`GridAction::ALL`].
pub fn vi_greedy_action(vf: &ValueFunction, world: &GridWorld, c: Cell) -> GridAction {
    let q: Vec<f64> = GridAction::ALL
        .iter()
        .map(|a| expected_next(world, &vf.values, c, *a))
        .collect();
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    GridAction::ALL
        .into_iter()
        .zip(q)
        .find(|(_, v)| *v >= best - TIE_TOLERANCE)
        .map(|(a, _)| a)
        .expect("five actions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::RandomSource;
    use crate::envs::gridworld_generate;

    #[test]
    fn single_goal_cell() {
        // 1x1 grids cannot come out of the generator; build one directly.
        let w = GridWorld::new(1, 1, Cell::new(0, 0), vec![], 0.16).unwrap();
        let vf = value_iteration(&w, 0.9, 1e-10, 10_000).unwrap();
        assert!((vf.values[0] - 100.0).abs() < 1e-8);
    }

    #[test]
    fn two_cell_hand_backup() {
        let w = GridWorld::new(2, 1, Cell::new(1, 0), vec![], 0.0).unwrap();
        let vf = value_iteration(&w, 0.5, 1e-12, 10_000).unwrap();
        assert!((vf.value(Cell::new(0, 0)) - 10.0).abs() < 1e-9);
        assert!((vf.value(Cell::new(1, 0)) - 20.0).abs() < 1e-9);
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(0, 0)), GridAction::Right);
        // Every move from the goal clamps in place; the first action wins the tie.
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(1, 0)), GridAction::Right);
    }

    #[test]
    fn extra_sweep_is_a_fixed_point() {
        let w = gridworld_generate(&mut RandomSource::new(3), 15, 15, 0.08).unwrap();
        let vf = value_iteration(&w, 0.99, 1e-6, 100_000).unwrap();
        assert!(vf.residual <= 1e-6);
        let again = bellman_sweep(&w, 0.99, &vf.values);
        let change = again
            .iter()
            .zip(&vf.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(change <= 1e-6);
    }

    #[test]
    fn non_convergence_reports_residual() {
        let w = gridworld_generate(&mut RandomSource::new(3), 15, 15, 0.08).unwrap();
        match value_iteration(&w, 0.99, 1e-6, 3) {
            Err(Error::NoConvergence { residual, iterations, .. }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn monotone_from_minimal_value() {
        let w = gridworld_generate(&mut RandomSource::new(8), 15, 15, 0.08).unwrap();
        let gamma = 0.99;
        let mut values = vec![-10.0 / (1.0 - gamma); w.num_cells()];
        for _ in 0..300 {
            let next = bellman_sweep(&w, gamma, &values);
            for (n, v) in next.iter().zip(&values) {
                assert!(n >= &(v - 1e-9));
            }
            values = next;
        }
    }

    #[test]
    fn greedy_examples() {
        // Goal at (2, 2) in an empty, slip-free 5x5 world.
        let w = GridWorld::new(5, 5, Cell::new(2, 2), vec![], 0.0).unwrap();
        let vf = value_iteration(&w, 0.9, 1e-12, 10_000).unwrap();
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(1, 2)), GridAction::Right);
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(3, 2)), GridAction::Left);
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(2, 1)), GridAction::Forward);
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(2, 3)), GridAction::Backward);
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(2, 2)), GridAction::Stay);
        // (1, 1): Right and Forward tie; Right comes first.
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(1, 1)), GridAction::Right);
        // (3, 3): Left and Backward tie; Left comes first.
        assert_eq!(vi_greedy_action(&vf, &w, Cell::new(3, 3)), GridAction::Left);
    }

    #[test]
    fn greedy_matches_brute_force_expectation() {
        // Independent check: enumerate the five outcomes by hand for one cell.
        let w = GridWorld::new(3, 3, Cell::new(2, 1), vec![Cell::new(1, 2)], 0.16).unwrap();
        let vf = value_iteration(&w, 0.9, 1e-12, 10_000).unwrap();
        let c = Cell::new(1, 1);
        let moves = [(0i32, 1i32), (2, 1), (1, 2), (1, 0), (1, 1)];
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (ai, _) in moves.iter().enumerate() {
            let mut e = 0.0;
            for (oi, (col, row)) in moves.iter().enumerate() {
                let p = if oi == ai { 0.84 } else { 0.04 };
                e += p * vf.value(Cell::new(*col as usize, *row as usize));
            }
            if e > best.0 + 1e-9 {
                best = (e, ai);
            }
        }
        assert_eq!(vi_greedy_action(&vf, &w, c), GridAction::ALL[best.1]);
        assert_eq!(GridAction::ALL[best.1], GridAction::Right);
    }

    #[test]
    fn json_is_cell_keyed() {
        let w = GridWorld::new(2, 1, Cell::new(1, 0), vec![], 0.0).unwrap();
        let vf = value_iteration(&w, 0.5, 1e-12, 10_000).unwrap();
        let v: serde_json::Value = serde_json::to_value(&vf).unwrap();
        assert!((v["values"]["1,0"].as_f64().unwrap() - 20.0).abs() < 1e-9);
    }
}
