//! Ridge-regularized least squares for affine state-feedback policies.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::{Control, Dataset, Force, PointMassState, State};
use crate::error::{Error, Result};

pub const DEFAULT_RIDGE: f64 = 1e-6;

/// `u = M s + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePolicy {
    pub m: [[f64; 4]; 2],
    pub b: [f64; 2],
}

impl AffinePolicy {
    pub fn apply(&self, s: &PointMassState) -> Force {
        let mut u = self.b;
        for (ui, row) in u.iter_mut().zip(&self.m) {
            *ui += row.iter().zip(s).map(|(m, x)| m * x).sum::<f64>();
        }
        u
    }

    pub fn predict(&self, state: &State) -> Result<Control> {
        Ok(Control::Force(self.apply(&state.as_point_mass()?)))
    }
}

/// Minimizes `sum ||M s + b - u||^2 + ridge * (||M||^2 + ||b||^2)`.
///
/// With `ridge = 0` a rank-deficient design is reported as
/// [`Error::Singular`] rather than solved approximately.
pub fn fit_least_squares(data: &Dataset, ridge: f64) -> Result<AffinePolicy> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(ridge >= 0.0 && ridge.is_finite()) {
        return Err(Error::invalid(format!("ridge must be finite and >= 0, got {ridge}")));
    }
    let mut gram = SMatrix::<f64, 5, 5>::zeros();
    let mut cross = SMatrix::<f64, 5, 2>::zeros();
    for s in data.items() {
        let x = s.state.as_point_mass()?;
        let u = s.label.as_force()?;
        let z = SMatrix::<f64, 5, 1>::from_column_slice(&[x[0], x[1], x[2], x[3], 1.0]);
        gram += z * z.transpose();
        for (j, uj) in u.iter().enumerate() {
            cross.column_mut(j).axpy(*uj, &z, 1.0);
        }
    }
    gram += SMatrix::<f64, 5, 5>::identity() * ridge;
    let w = match gram.cholesky() {
        Some(ch) => ch.solve(&cross),
        None => {
            return Err(Error::Singular(
                "least-squares design is rank deficient; use a positive ridge".into(),
            ))
        }
    };
    if w.iter().any(|v| !v.is_finite()) || (ridge == 0.0 && ill_conditioned(&gram)) {
        return Err(Error::Singular(
            "least-squares design is rank deficient; use a positive ridge".into(),
        ));
    }
    let mut m = [[0.0; 4]; 2];
    for (j, row) in m.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            *v = w[(i, j)];
        }
    }
    Ok(AffinePolicy {
        m,
        b: [w[(4, 0)], w[(4, 1)]],
    })
}

fn ill_conditioned(gram: &SMatrix<f64, 5, 5>) -> bool {
    let ev = gram.symmetric_eigenvalues();
    let max = ev.max();
    let min = ev.min();
    max <= 0.0 || min <= max * 1e-13
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Provenance, RandomSource};
    use proptest::prelude::*;
    use rand::Rng;

    fn data_from(planted: &AffinePolicy, states: &[PointMassState]) -> Dataset {
        let mut d = Dataset::new();
        for s in states {
            d.push(
                State::PointMass(*s),
                Control::Force(planted.apply(s)),
                Provenance::InitialDemo,
            );
        }
        d
    }

    fn random_states(n: usize, seed: u64) -> Vec<PointMassState> {
        let mut rng = RandomSource::new(seed);
        (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(-20.0..20.0)))
            .collect()
    }

    #[test]
    fn recovers_planted_map() {
        let planted = AffinePolicy {
            m: [[0.3, -1.2, 0.7, 2.0], [-0.5, 0.1, 1.5, -0.8]],
            b: [0.25, -3.0],
        };
        let fit = fit_least_squares(&data_from(&planted, &random_states(50, 1)), 0.0).unwrap();
        for i in 0..2 {
            for j in 0..4 {
                assert!((fit.m[i][j] - planted.m[i][j]).abs() < 1e-6);
            }
            assert!((fit.b[i] - planted.b[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn matches_normal_equations_oracle() {
        // Independent check: closed-form 1-D ridge with intercept when only
        // the first state coordinate varies.
        let mut d = Dataset::new();
        let xs = [1.0, 2.0, 4.0, 7.0];
        let ys = [1.0, 3.0, 2.0, 5.0];
        for (x, y) in xs.iter().zip(ys) {
            d.push(
                State::PointMass([*x, 0.0, 0.0, 0.0]),
                Control::Force([y, 0.0]),
                Provenance::InitialDemo,
            );
        }
        let lam = 0.5;
        let (sxx, sx, n) = (
            xs.iter().map(|x| x * x).sum::<f64>(),
            xs.iter().sum::<f64>(),
            xs.len() as f64,
        );
        let (sxy, sy) = (xs.iter().zip(ys).map(|(x, y)| x * y).sum::<f64>(), ys.iter().sum::<f64>());
        let (a, b, c, dd) = (sxx + lam, sx, sx, n + lam);
        let det = a * dd - b * c;
        let slope = (dd * sxy - b * sy) / det;
        let icpt = (a * sy - c * sxy) / det;
        let fit = fit_least_squares(&d, lam).unwrap();
        assert!((fit.m[0][0] - slope).abs() < 1e-12);
        assert!((fit.b[0] - icpt).abs() < 1e-12);
    }

    #[test]
    fn identical_states_at_origin_give_mean_bias() {
        let mut d = Dataset::new();
        for u in [[1.0, -2.0], [3.0, 0.0], [2.0, 5.0]] {
            d.push(State::PointMass([0.0; 4]), Control::Force(u), Provenance::InitialDemo);
        }
        let fit = fit_least_squares(&d, 1e-9).unwrap();
        assert!(fit.m.iter().flatten().all(|v| v.abs() < 1e-6));
        assert!((fit.b[0] - 2.0).abs() < 1e-6 && (fit.b[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rank_deficient_without_ridge_errors() {
        let mut d = Dataset::new();
        for _ in 0..3 {
            d.push(
                State::PointMass([1.0, 2.0, 0.0, 0.0]),
                Control::Force([1.0, 1.0]),
                Provenance::InitialDemo,
            );
        }
        assert!(matches!(fit_least_squares(&d, 0.0), Err(Error::Singular(_))));
        assert!(fit_least_squares(&d, 1e-3).is_ok());
    }

    #[test]
    fn empty_and_wrong_variant_error() {
        assert!(matches!(fit_least_squares(&Dataset::new(), 1e-3), Err(Error::EmptyDataset)));
        let mut d = Dataset::new();
        d.push(
            State::Grid(crate::domain::Cell::new(0, 0)),
            Control::Force([0.0, 0.0]),
            Provenance::InitialDemo,
        );
        assert!(matches!(fit_least_squares(&d, 1e-3), Err(Error::VariantMismatch { .. })));
    }

    proptest! {
        #[test]
        fn residual_is_orthogonal_to_design(seed in 0u64..1000) {
            let mut rng = RandomSource::new(seed);
            let states = random_states(12, seed + 7);
            let mut d = Dataset::new();
            for s in &states {
                let u = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
                d.push(State::PointMass(*s), Control::Force(u), Provenance::InitialDemo);
            }
            let fit = fit_least_squares(&d, 0.0).unwrap();
            // Normal equations: sum_k r_k z_k = 0 for z = (s, 1).
            for j in 0..2 {
                let mut g = [0.0; 5];
                for smp in d.items() {
                    let s = smp.state.as_point_mass().unwrap();
                    let r = fit.apply(&s)[j] - smp.label.as_force().unwrap()[j];
                    for i in 0..4 { g[i] += r * s[i]; }
                    g[4] += r;
                }
                for v in g { prop_assert!(v.abs() < 1e-6); }
            }
        }
    }
}
