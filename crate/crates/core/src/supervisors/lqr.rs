use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::domain::{Force, PointMassState};
use crate::envs::{PointMassEnv, Region};
use crate::error::{Error, Result};

/// Infinite-horizon discrete LQR solution; the control law is `u = -K x`.
#[derive(Debug, Clone, PartialEq)]
pub struct LqrGain {
    pub k: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
    pub iterations: usize,
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl Serialize for LqrGain {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Doc {
            k: Vec<Vec<f64>>,
            p: Vec<Vec<f64>>,
            q: Vec<Vec<f64>>,
            r: Vec<Vec<f64>>,
            iterations: usize,
        }
        Doc {
            k: rows(&self.k),
            p: rows(&self.p),
            q: rows(&self.q),
            r: rows(&self.r),
            iterations: self.iterations,
        }
        .serialize(serializer)
    }
}

fn riccati_terms(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let bt_p = b.transpose() * p;
    let gram = r + &bt_p * b;
    let rhs = &bt_p * a;
    let k = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("R + B'PB is singular".into()))?;
    // A'PB K = A'PB (R + B'PB)^-1 B'PA
    let correction = a.transpose() * p * b * &k;
    Ok((k, correction))
}

/// Fixed-point iteration of the discrete algebraic Riccati equation from `P = Q`.
pub fn solve_lqr(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<LqrGain> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::invalid("LQR matrix shapes are inconsistent"));
    }
    if r.clone().cholesky().is_none() {
        return Err(Error::invalid("control cost must be symmetric positive definite"));
    }
    let mut p = q.clone();
    let mut change = f64::INFINITY;
    for it in 1..=max_iter {
        let (_, correction) = riccati_terms(a, b, r, &p)?;
        let mut next = q + a.transpose() * &p * a - correction;
        next = (&next + next.transpose()) * 0.5;
        change = (&next - &p).amax();
        p = next;
        if !change.is_finite() {
            break;
        }
        if change <= tol {
            let (k, _) = riccati_terms(a, b, r, &p)?;
            return Ok(LqrGain {
                k,
                p,
                q: q.clone(),
                r: r.clone(),
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        what: "riccati iteration",
        iterations: max_iter,
        residual: change,
    })
}

/// Frobenius norm of `P - (Q + A'PA - A'PB (R + B'PB)^-1 B'PA)`.
pub fn dare_residual(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    p: &DMatrix<f64>,
) -> Result<f64> {
    let (_, correction) = riccati_terms(a, b, r, p)?;
    let rhs = q + a.transpose() * p * a - correction;
    Ok((p - rhs).norm())
}

pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// One LQR controller per point-mass region, switched on the current state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchingLqr {
    pub region1: LqrGain,
    pub region2: LqrGain,
    pub region_threshold: f64,
}

impl SwitchingLqr {
    pub const TOL: f64 = 1e-12;
    pub const MAX_ITER: usize = 100_000;

    /// Identity state and control costs.
    pub fn for_env(env: &PointMassEnv) -> Result<Self> {
        Self::with_costs(env, &DMatrix::identity(4, 4), &DMatrix::identity(2, 2))
    }

    pub fn with_costs(env: &PointMassEnv, q: &DMatrix<f64>, r: &DMatrix<f64>) -> Result<Self> {
        let a = DMatrix::from_iterator(4, 4, env.a.iter().copied());
        let b1 = DMatrix::from_iterator(4, 2, env.b1.iter().copied());
        let b2 = DMatrix::from_iterator(4, 2, env.b2.iter().copied());
        Ok(Self {
            region1: solve_lqr(&a, &b1, q, r, Self::TOL, Self::MAX_ITER)?,
            region2: solve_lqr(&a, &b2, q, r, Self::TOL, Self::MAX_ITER)?,
            region_threshold: env.region_threshold,
        })
    }

    pub fn region_of(&self, s: &PointMassState) -> Region {
        if s[0] > self.region_threshold && s[1] > self.region_threshold {
            Region::Two
        } else {
            Region::One
        }
    }

    pub fn gain(&self, region: Region) -> &LqrGain {
        match region {
            Region::One => &self.region1,
            Region::Two => &self.region2,
        }
    }

    pub fn control(&self, s: &PointMassState) -> Force {
        switching_lqr_supervisor((&self.region1, &self.region2), self.region_threshold, s)
    }
}

/// `u = -K_i s`, with `i` the region containing `s`.
pub fn switching_lqr_supervisor(
    gains: (&LqrGain, &LqrGain),
    region_threshold: f64,
    s: &PointMassState,
) -> Force {
    let in_two = s[0] > region_threshold && s[1] > region_threshold;
    let k = if in_two { &gains.1.k } else { &gains.0.k };
    let u = -(k * DVector::from_column_slice(s));
    [u[0], u[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::RandomSource;
    use rand::Rng;

    fn scalar(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_golden_ratio() {
        let g = solve_lqr(&scalar(1.0), &scalar(1.0), &scalar(1.0), &scalar(1.0), 1e-14, 10_000)
            .unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((g.p[(0, 0)] - phi).abs() < 1e-9);
        assert!((g.k[(0, 0)] - phi / (1.0 + phi)).abs() < 1e-9);
        assert!((g.k[(0, 0)] - 0.618034).abs() < 1e-6);
    }

    #[test]
    fn no_actuation_gives_lyapunov_solution() {
        let g = solve_lqr(&scalar(0.5), &scalar(0.0), &scalar(1.0), &scalar(1.0), 1e-14, 10_000)
            .unwrap();
        assert_eq!(g.k[(0, 0)], 0.0);
        assert!((g.p[(0, 0)] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unstabilizable_does_not_converge() {
        let r = solve_lqr(&scalar(2.0), &scalar(0.0), &scalar(1.0), &scalar(1.0), 1e-12, 500);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn point_mass_gains_are_stabilizing() {
        let env = PointMassEnv::default();
        let sup = SwitchingLqr::for_env(&env).unwrap();
        let a = DMatrix::from_iterator(4, 4, env.a.iter().copied());
        for (g, b) in [(&sup.region1, env.b1), (&sup.region2, env.b2)] {
            let b = DMatrix::from_iterator(4, 2, b.iter().copied());
            let res = dare_residual(&a, &b, &g.q, &g.r, &g.p).unwrap();
            assert!(res <= 1e-8, "residual {res}");
            assert!((&g.p - g.p.transpose()).amax() <= 1e-9);
            assert!(g.p.clone().cholesky().is_some());
            let closed = &a - &b * &g.k;
            assert!(spectral_radius(&closed) < 1.0);
        }
    }

    #[test]
    fn switching_law() {
        let env = PointMassEnv::default();
        let sup = SwitchingLqr::for_env(&env).unwrap();
        assert_eq!(sup.control(&[0.0; 4]), [0.0, 0.0]);
        let s = [13.0, 13.0, 0.0, 0.0];
        let expected = -(&sup.region2.k * DVector::from_column_slice(&s));
        assert_eq!(sup.control(&s), [expected[0], expected[1]]);
        let s = [1.0, -2.0, 0.5, 0.1];
        let u = sup.control(&s);
        let u2 = sup.control(&s.map(|v| 2.0 * v));
        assert!((u2[0] - 2.0 * u[0]).abs() < 1e-12 && (u2[1] - 2.0 * u[1]).abs() < 1e-12);
    }

    /// Simulated 200-step quadratic cost of `u = -K x` from a fixed start.
    fn rollout_cost(a: &DMatrix<f64>, b: &DMatrix<f64>, k: &DMatrix<f64>, x0: &DVector<f64>) -> f64 {
        let mut x = x0.clone();
        let mut cost = 0.0;
        for _ in 0..200 {
            let u = -(k * &x);
            cost += x.norm_squared() + u.norm_squared();
            x = a * &x + b * &u;
        }
        cost
    }

    #[test]
    fn gain_is_locally_optimal_on_random_systems() {
        let mut rng = RandomSource::new(99);
        let q = DMatrix::identity(2, 2);
        let r = DMatrix::identity(1, 1);
        let mut checked = 0;
        while checked < 20 {
            let a = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.2..1.2));
            let b = DMatrix::from_fn(2, 1, |_, _| rng.random_range(-1.0..1.0));
            let Ok(g) = solve_lqr(&a, &b, &q, &r, 1e-13, 100_000) else {
                continue;
            };
            // Average over the unit basis so cost reflects the full P.
            let cost = |k: &DMatrix<f64>| {
                (0..2)
                    .map(|i| rollout_cost(&a, &b, k, &DVector::from_fn(2, |j, _| (i == j) as u8 as f64)))
                    .sum::<f64>()
            };
            let base = cost(&g.k);
            for idx in 0..g.k.len() {
                for delta in [-0.01, 0.01] {
                    let mut k = g.k.clone();
                    k[idx] += delta;
                    assert!(cost(&k) >= base - 1e-9 * base.max(1.0), "perturbation lowered cost");
                }
            }
            checked += 1;
        }
    }
}
