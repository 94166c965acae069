//! CART-style classification tree over grid coordinates.
//!
//! Identical cells are collapsed into per-class counts before growing, which
//! gives the same splits as growing on the raw samples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{ActionSet, Control, Dataset, State};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEPTH: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum TreeNode {
    Leaf {
        action: usize,
    },
    /// Feature 0 is the column, 1 the row; `x <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub max_depth: usize,
    pub action_set: ActionSet,
}

impl DecisionTree {
    pub fn predict_index(&self, x: [f64; 2]) -> usize {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { action } => return *action,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn predict(&self, state: &State) -> Result<Control> {
        Ok(self.action_set.action(self.predict_index(features(state)?)))
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

fn features(state: &State) -> Result<[f64; 2]> {
    let c = state.as_cell()?;
    Ok([c.col as f64, c.row as f64])
}

struct Point {
    x: [f64; 2],
    counts: Vec<u64>,
}

fn gini(counts: &[u64], total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Majority class; ties go to the lowest action index.
fn majority(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, c) in counts.iter().enumerate() {
        if *c > counts[best] {
            best = i;
        }
    }
    best
}

struct Builder<'a> {
    points: &'a [Point],
    classes: usize,
    max_depth: usize,
}

impl Builder<'_> {
    fn build(&self, idx: &mut [usize], depth: usize) -> TreeNode {
        let mut counts = vec![0u64; self.classes];
        for &i in idx.iter() {
            for (c, v) in counts.iter_mut().zip(&self.points[i].counts) {
                *c += v;
            }
        }
        let total: u64 = counts.iter().sum();
        let leaf = TreeNode::Leaf {
            action: majority(&counts),
        };
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth {
            return leaf;
        }
        let Some((feature, threshold)) = self.best_split(idx, &counts, total) else {
            return leaf;
        };
        let split_at = partition(idx, |i| self.points[i].x[feature] <= threshold);
        let (l, r) = idx.split_at_mut(split_at);
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(self.build(l, depth + 1)),
            right: Box::new(self.build(r, depth + 1)),
        }
    }

    /// Lowest weighted Gini over midpoints between distinct sorted values.
    ///
    /// Zero-gain splits are accepted for impure nodes, so that
    /// XOR-like layouts can still be separated further down.
    fn best_split(&self, idx: &mut [usize], counts: &[u64], total: u64) -> Option<(usize, f64)> {
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in 0..2 {
            idx.sort_by(|&a, &b| {
                self.points[a].x[feature].total_cmp(&self.points[b].x[feature])
            });
            let mut left = vec![0u64; self.classes];
            let mut n_left = 0u64;
            for w in 0..idx.len() - 1 {
                let p = &self.points[idx[w]];
                for (c, v) in left.iter_mut().zip(&p.counts) {
                    *c += v;
                }
                n_left += p.counts.iter().sum::<u64>();
                let here = p.x[feature];
                let next = self.points[idx[w + 1]].x[feature];
                if here == next {
                    continue;
                }
                let right: Vec<u64> = counts.iter().zip(&left).map(|(t, l)| t - l).collect();
                let n_right = total - n_left;
                let score = (n_left as f64 * gini(&left, n_left)
                    + n_right as f64 * gini(&right, n_right))
                    / total as f64;
                if best.is_none_or(|(s, _, _)| score < s) {
                    best = Some((score, feature, 0.5 * (here + next)));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Moves elements satisfying `pred` to the front; returns how many there are.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut k = 0;
    for j in 0..idx.len() {
        if pred(idx[j]) {
            idx.swap(k, j);
            k += 1;
        }
    }
    k
}

pub fn fit_decision_tree(data: &Dataset, max_depth: usize) -> Result<DecisionTree> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let set = match data.items()[0].label {
        Control::Grid(_) => ActionSet::Grid,
        Control::Dag(_) => ActionSet::Dag,
        Control::Force(_) => return Err(Error::invalid("decision tree needs discrete labels")),
    };
    let mut grouped: BTreeMap<(u64, u64), Point> = BTreeMap::new();
    for s in data.items() {
        let x = features(&s.state)?;
        let label = set.index_of(&s.label)?;
        let p = grouped
            .entry((x[0].to_bits(), x[1].to_bits()))
            .or_insert_with(|| Point {
                x,
                counts: vec![0; set.len()],
            });
        p.counts[label] += 1;
    }
    let points: Vec<Point> = grouped.into_values().collect();
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let builder = Builder {
        points: &points,
        classes: set.len(),
        max_depth,
    };
    Ok(DecisionTree {
        root: builder.build(&mut idx, 0),
        max_depth,
        action_set: set,
    })
}
