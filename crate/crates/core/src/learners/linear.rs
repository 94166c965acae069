//! One-vs-rest linear SVM over normalized grid coordinates.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::domain::{ActionSet, Cell, Control, Dataset, RandomSource, State};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearConfig {
    pub lambda: f64,
    pub epochs: usize,
    /// Base learning rate; iteration `t` uses `step / sqrt(t)`.
    pub step: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            epochs: 50,
            step: 0.1,
        }
    }
}

/// Feature map `(col / (W - 1), row / (H - 1), 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridFeatures {
    pub width: usize,
    pub height: usize,
}

impl GridFeatures {
    pub fn map(&self, c: Cell) -> [f64; 3] {
        let sx = (self.width.max(2) - 1) as f64;
        let sy = (self.height.max(2) - 1) as f64;
        [c.col as f64 / sx, c.row as f64 / sy, 1.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassifier {
    /// One weight vector per action, in action-set order.
    pub weights: Vec<[f64; 3]>,
    pub action_set: ActionSet,
    pub features: GridFeatures,
    pub lambda: f64,
}

fn dot(w: &[f64; 3], x: &[f64; 3]) -> f64 {
    w[0] * x[0] + w[1] * x[1] + w[2] * x[2]
}

impl LinearClassifier {
    pub fn scores(&self, c: Cell) -> Vec<f64> {
        let x = self.features.map(c);
        self.weights.iter().map(|w| dot(w, &x)).collect()
    }

    /// Highest-scoring action index; the earliest wins ties.
    pub fn predict_index(&self, c: Cell) -> usize {
        let scores = self.scores(c);
        let mut best = 0;
        for (i, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[best] {
                best = i;
            }
        }
        best
    }

    pub fn predict(&self, state: &State) -> Result<Control> {
        Ok(self.action_set.action(self.predict_index(state.as_cell()?)))
    }

    /// Mean one-vs-rest hinge loss plus `lambda / 2 * ||w||^2`.
    pub fn objective(&self, data: &Dataset) -> Result<f64> {
        let examples = encode(data, self.action_set, self.features)?;
        Ok(objective(&self.weights, &examples, self.lambda))
    }

    pub fn training_error(&self, data: &Dataset) -> Result<f64> {
        let mut wrong = 0usize;
        for s in data.items() {
            if self.predict(&s.state)? != s.label {
                wrong += 1;
            }
        }
        Ok(wrong as f64 / data.len().max(1) as f64)
    }
}

fn encode(
    data: &Dataset,
    set: ActionSet,
    features: GridFeatures,
) -> Result<Vec<([f64; 3], usize)>> {
    data.items()
        .iter()
        .map(|s| Ok((features.map(s.state.as_cell()?), set.index_of(&s.label)?)))
        .collect()
}

fn objective(weights: &[[f64; 3]], examples: &[([f64; 3], usize)], lambda: f64) -> f64 {
    let mut hinge = 0.0;
    for (x, y) in examples {
        for (a, w) in weights.iter().enumerate() {
            let sign = if a == *y { 1.0 } else { -1.0 };
            hinge += (1.0 - sign * dot(w, x)).max(0.0);
        }
    }
    let reg: f64 = weights.iter().flatten().map(|v| v * v).sum();
    hinge / examples.len() as f64 + 0.5 * lambda * reg
}

pub fn fit_linear_classifier(
    data: &Dataset,
    cfg: &LinearConfig,
    features: GridFeatures,
    rng: &mut RandomSource,
) -> Result<LinearClassifier> {
    fit_traced(data, cfg, features, rng).map(|(c, _)| c)
}

/// Trains and also returns the averaged iterate's objective after each epoch.
pub fn fit_traced(
    data: &Dataset,
    cfg: &LinearConfig,
    features: GridFeatures,
    rng: &mut RandomSource,
) -> Result<(LinearClassifier, Vec<f64>)> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.lambda <= 0.0 || cfg.step <= 0.0 {
        return Err(Error::invalid("lambda and step must be positive"));
    }
    let set = match data.items()[0].label {
        Control::Grid(_) => ActionSet::Grid,
        Control::Dag(_) => ActionSet::Dag,
        Control::Force(_) => {
            return Err(Error::invalid("linear classifier needs discrete labels"))
        }
    };
    let examples = encode(data, set, features)?;
    let k = set.len();
    let mut w = vec![[0.0; 3]; k];
    let mut avg = vec![[0.0; 3]; k];
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut t = 0usize;
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = cfg.step / (t as f64).sqrt();
            let (x, y) = &examples[i];
            for (a, wa) in w.iter_mut().enumerate() {
                let sign = if a == *y { 1.0 } else { -1.0 };
                let active = sign * dot(wa, x) < 1.0;
                for j in 0..3 {
                    let mut g = cfg.lambda * wa[j];
                    if active {
                        g -= sign * x[j];
                    }
                    wa[j] -= eta * g;
                }
            }
            let frac = 1.0 / t as f64;
            for (av, wa) in avg.iter_mut().zip(&w) {
                for j in 0..3 {
                    av[j] += (wa[j] - av[j]) * frac;
                }
            }
        }
        trace.push(objective(&avg, &examples, cfg.lambda));
    }
    Ok((
        LinearClassifier {
            weights: avg,
            action_set: set,
            features,
            lambda: cfg.lambda,
        },
        trace,
    ))
}
