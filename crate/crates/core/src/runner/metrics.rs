//! Evaluation metrics: normalized performance, held-out surrogate loss and
//! Pearson correlation.

use serde::Serialize;

use crate::domain::{rollout, surrogate_loss_per_dim, Actor, Controller, Dataset, RandomSource, State};
use crate::envs::{Environment, GOAL_REWARD, PENALTY_REWARD};
use crate::error::{Error, Result};

/// Cumulative reward (grid) or cumulative quadratic cost (point mass) of a
/// single rollout. A point-mass rollout that blows up costs `+inf`.
pub fn episode_return<A: Actor + ?Sized>(
    env: &Environment,
    actor: &A,
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<f64> {
    let traj = match rollout(env, actor, horizon, rng) {
        Ok(t) => t,
        Err(Error::NonFinite(_)) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let mut total = 0.0;
    for (s, u) in traj.pairs() {
        total += match (env, s) {
            (Environment::Grid(w), State::Grid(c)) => w.reward(*c),
            (Environment::PointMass(_), State::PointMass(x)) => {
                let f = u.as_force()?;
                x.iter().map(|v| v * v).sum::<f64>() + f[0] * f[0] + f[1] * f[1]
            }
            _ => return Err(Error::invalid("returns are defined for grid and point-mass rollouts")),
        };
    }
    Ok(if total.is_finite() { total } else { f64::INFINITY })
}

/// Returns of `n_eval` rollouts; rollout `i` uses `RandomSource::child(seed, i)`
/// so two actors evaluated with the same seed share start states and noise
/// draws as far as their controls allow.
pub fn paired_returns<A: Actor + ?Sized>(
    env: &Environment,
    actor: &A,
    n_eval: usize,
    horizon: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_eval == 0 {
        return Err(Error::invalid("n_eval must be positive"));
    }
    (0..n_eval)
        .map(|i| episode_return(env, actor, horizon, &mut RandomSource::child(seed, i as u64)))
        .collect()
}

pub(crate) fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Normalized {
    pub value: f64,
    pub baseline_shifted: bool,
}

/// Grid supervisors whose mean return is below one goal visit get both
/// returns shifted by the worst possible return before dividing.
pub fn grid_shift_needed(baseline: f64) -> bool {
    baseline < GOAL_REWARD
}

/// Grid: `policy / supervisor`, shifted when [`grid_shift_needed`] and
/// `allow_shift` is set. Point mass: `supervisor cost / policy cost`.
pub fn normalize(
    env: &Environment,
    policy_mean: f64,
    supervisor_mean: f64,
    horizon: usize,
    allow_shift: bool,
) -> Result<Normalized> {
    match env {
        Environment::Grid(_) => {
            if !grid_shift_needed(supervisor_mean) {
                return Ok(Normalized {
                    value: policy_mean / supervisor_mean,
                    baseline_shifted: false,
                });
            }
            if !allow_shift {
                return Err(Error::DegenerateBaseline(supervisor_mean));
            }
            let floor = -PENALTY_REWARD * (horizon + 1) as f64;
            Ok(Normalized {
                value: (policy_mean + floor) / (supervisor_mean + floor),
                baseline_shifted: true,
            })
        }
        Environment::PointMass(_) => {
            if !(supervisor_mean > 0.0 && supervisor_mean.is_finite()) {
                return Err(Error::DegenerateBaseline(supervisor_mean));
            }
            let value = if policy_mean.is_finite() { supervisor_mean / policy_mean } else { 0.0 };
            Ok(Normalized {
                value,
                baseline_shifted: false,
            })
        }
        Environment::Dag(_) => Err(Error::invalid("no performance metric for the DAG")),
    }
}

/// Mean return of `policy` relative to the noise-free supervisor over
/// `n_eval` paired rollouts seeded from `rng`.
pub fn normalized_performance<P, S>(
    policy: &P,
    env: &Environment,
    supervisor: &S,
    n_eval: usize,
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<Normalized>
where
    P: Actor + ?Sized,
    S: Controller + ?Sized,
{
    use rand::RngCore;
    let seed = rng.next_u64();
    let base = paired_returns(env, &Exact(supervisor), n_eval, horizon, seed)?;
    let pol = paired_returns(env, policy, n_eval, horizon, seed)?;
    normalize(env, mean(&pol), mean(&base), horizon, true)
}

/// Runs a controller without drawing anything from the rollout stream.
pub struct Exact<'a, C: ?Sized>(pub &'a C);

impl<C: Controller + ?Sized> Actor for Exact<'_, C> {
    fn act(&self, state: &State, _rng: &mut RandomSource) -> Result<crate::domain::Control> {
        self.0.control(state)
    }
}

/// Mean per-dimension surrogate loss of `policy` against the stored labels.
pub fn heldout_surrogate_loss<P: Controller + ?Sized>(policy: &P, heldout: &Dataset) -> Result<Vec<f64>> {
    if heldout.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut sums: Vec<f64> = Vec::new();
    for s in heldout.items() {
        let l = surrogate_loss_per_dim(&policy.control(&s.state)?, &s.label)?;
        if sums.is_empty() {
            sums = vec![0.0; l.len()];
        }
        for (a, b) in sums.iter_mut().zip(l) {
            *a += b;
        }
    }
    let n = heldout.len() as f64;
    Ok(sums.into_iter().map(|v| v / n).collect())
}

/// Sample Pearson correlation.
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::invalid("need two sequences of equal length >= 2"));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("a sequence has zero variance"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Cell, Control, GridAction, Provenance};
    use crate::envs::{gridworld_generate, GridWorld, PointMassEnv};
    use crate::learners::{AffinePolicy, Policy};
    use crate::supervisors::{GridSupervisor, Supervisor, SwitchingLqr};
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        assert!((pearson_correlation(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&[1.0, 2.0, 3.0], &[6.0, 4.0, 2.0]).unwrap() + 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            pearson_correlation(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::UndefinedCorrelation(_))
        ));
        assert!(pearson_correlation(&[1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn pearson_affine_invariance(
            a in prop::collection::vec(-100.0f64..100.0, 3..30),
            c in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
            d in -50.0f64..50.0,
        ) {
            let spread = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - a.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-3);
            prop_assert!((pearson_correlation(&a, &a).unwrap() - 1.0).abs() < 1e-9);
            let b: Vec<f64> = a.iter().map(|x| c * x + d).collect();
            prop_assert!((pearson_correlation(&a, &b).unwrap() - c.signum()).abs() < 1e-9);
        }

        #[test]
        fn per_dim_losses_add_up(seed in 0u64..200) {
            use rand::Rng;
            let mut rng = RandomSource::new(seed);
            let mut d = Dataset::new();
            for _ in 0..10 {
                let s: [f64; 4] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
                let u = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
                d.push(State::PointMass(s), Control::Force(u), Provenance::InitialDemo);
            }
            let p = AffinePolicy { m: [[0.1, 0.2, 0.3, 0.4], [-0.5, 0.0, 0.5, 1.0]], b: [0.5, -0.5] };
            let per = heldout_surrogate_loss(&Policy::Affine(p.clone()), &d).unwrap();
            let total: f64 = d.items().iter().map(|s| {
                crate::domain::surrogate_loss(&p.predict(&s.state).unwrap(), &s.label).unwrap()
            }).sum::<f64>() / d.len() as f64;
            prop_assert!((per[0] + per[1] - total).abs() < 1e-9);
        }
    }

    #[test]
    fn heldout_examples() {
        let mut d = Dataset::new();
        for s in [[1.0, 0.0, 0.0, 0.0], [0.0, 3.0, -1.0, 2.0]] {
            d.push(State::PointMass(s), Control::Force([1.0, 1.0]), Provenance::InitialDemo);
        }
        let zero = Policy::Affine(AffinePolicy { m: [[0.0; 4]; 2], b: [0.0; 2] });
        assert_eq!(heldout_surrogate_loss(&zero, &d).unwrap(), vec![1.0, 1.0]);
        let one = Policy::Affine(AffinePolicy { m: [[0.0; 4]; 2], b: [1.0; 2] });
        assert_eq!(heldout_surrogate_loss(&one, &d).unwrap(), vec![0.0, 0.0]);
        assert!(matches!(heldout_surrogate_loss(&one, &Dataset::new()), Err(Error::EmptyDataset)));
    }

    #[test]
    fn supervisor_against_itself_is_one() {
        for seed in 0..5 {
            let w = gridworld_generate(&mut RandomSource::new(seed), 15, 15, 0.08).unwrap();
            let sup = Supervisor::Grid(GridSupervisor::solve(&w).unwrap());
            let env = Environment::Grid(w);
            let r = normalized_performance(&Exact(&sup), &env, &sup, 50, 30, &mut RandomSource::new(1))
                .unwrap();
            assert_eq!(r.value, 1.0);
        }
        let pm = PointMassEnv::default();
        let sup = Supervisor::SwitchingLqr(SwitchingLqr::for_env(&pm).unwrap());
        let env = Environment::PointMass(pm);
        let r = normalized_performance(&Exact(&sup), &env, &sup, 20, 35, &mut RandomSource::new(2)).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn never_reaching_goal_scores_lower() {
        let w = GridWorld::new(8, 8, Cell::new(7, 7), vec![], 0.0).unwrap();
        let sup = Supervisor::Grid(GridSupervisor::solve(&w).unwrap());
        let env = Environment::Grid(w);
        let stay = StayPut;
        let r = normalized_performance(&stay, &env, &sup, 30, 30, &mut RandomSource::new(4)).unwrap();
        assert!(r.value < 1.0);
    }

    struct StayPut;
    impl Actor for StayPut {
        fn act(&self, _: &State, _: &mut RandomSource) -> Result<Control> {
            Ok(Control::Grid(GridAction::Stay))
        }
    }

    #[test]
    fn degenerate_baseline() {
        let env = Environment::Grid(GridWorld::new(3, 3, Cell::new(0, 0), vec![], 0.0).unwrap());
        assert!(matches!(normalize(&env, 0.0, 0.0, 30, false), Err(Error::DegenerateBaseline(_))));
        let n = normalize(&env, -10.0, 0.0, 30, true).unwrap();
        assert!(n.baseline_shifted);
        assert!((n.value - 300.0 / 310.0).abs() < 1e-12);
        let n = normalize(&env, 50.0, 100.0, 30, true).unwrap();
        assert!(!n.baseline_shifted && n.value == 0.5);
    }

    #[test]
    fn diverging_point_mass_policy_scores_zero() {
        let pm = PointMassEnv::default();
        let sup = Supervisor::SwitchingLqr(SwitchingLqr::for_env(&pm).unwrap());
        let env = Environment::PointMass(pm);
        let wild = Policy::Affine(AffinePolicy { m: [[1e150, 0.0, 0.0, 0.0], [0.0; 4]], b: [0.0; 2] });
        let r = normalized_performance(&wild, &env, &sup, 5, 35, &mut RandomSource::new(0)).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
