use super::types::{mismatch, Control, State, Trajectory};
use super::Controller;
use crate::error::Result;

/// 0/1 disagreement for discrete controls, squared Euclidean distance for forces.
pub fn surrogate_loss(u1: &Control, u2: &Control) -> Result<f64> {
    Ok(surrogate_loss_per_dim(u1, u2)?.iter().sum())
}

/// Loss split by control dimension. Discrete controls have a single dimension.
pub fn surrogate_loss_per_dim(u1: &Control, u2: &Control) -> Result<Vec<f64>> {
    match (u1, u2) {
        (Control::Grid(a), Control::Grid(b)) => Ok(vec![indicator(a != b)]),
        (Control::Dag(a), Control::Dag(b)) => Ok(vec![indicator(a != b)]),
        (Control::Force(a), Control::Force(b)) => {
            Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect())
        }
        (a, b) => Err(mismatch(a.variant_name(), b.variant_name())),
    }
}

fn indicator(differs: bool) -> f64 {
    if differs {
        1.0
    } else {
        0.0
    }
}

/// Total surrogate loss of `policy` against `supervisor` over `states`.
pub fn states_loss<'a, P, S, I>(policy: &P, supervisor: &S, states: I) -> Result<f64>
where
    P: Controller + ?Sized,
    S: Controller + ?Sized,
    I: IntoIterator<Item = &'a State>,
{
    let mut total = 0.0;
    for s in states {
        total += surrogate_loss(&policy.control(s)?, &supervisor.control(s)?)?;
    }
    Ok(total)
}

/// `J(theta, tau)`: summed disagreement over every state in the trajectory.
pub fn trajectory_loss<P, S>(policy: &P, supervisor: &S, traj: &Trajectory) -> Result<f64>
where
    P: Controller + ?Sized,
    S: Controller + ?Sized,
{
    states_loss(policy, supervisor, traj.states())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{GridAction, Side};
    use proptest::prelude::*;

    #[test]
    fn discrete_examples() {
        let l = Control::Grid(GridAction::Left);
        let r = Control::Grid(GridAction::Right);
        assert_eq!(surrogate_loss(&l, &l).unwrap(), 0.0);
        assert_eq!(surrogate_loss(&l, &r).unwrap(), 1.0);
        assert_eq!(
            surrogate_loss(&Control::Dag(Side::L), &Control::Dag(Side::R)).unwrap(),
            1.0
        );
    }

    #[test]
    fn continuous_unit_distance() {
        let a = Control::Force([1.0, 0.0]);
        let b = Control::Force([0.0, 0.0]);
        assert_eq!(surrogate_loss(&a, &b).unwrap(), 1.0);
        assert_eq!(surrogate_loss_per_dim(&a, &b).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn mismatch_is_an_error() {
        let err = surrogate_loss(&Control::Dag(Side::L), &Control::Force([0.0, 0.0]));
        assert!(matches!(
            err,
            Err(crate::error::Error::VariantMismatch { .. })
        ));
    }

    fn force() -> impl Strategy<Value = Control> {
        (-1e3..1e3f64, -1e3..1e3f64).prop_map(|(a, b)| Control::Force([a, b]))
    }

    fn grid() -> impl Strategy<Value = Control> {
        (0usize..5).prop_map(|i| Control::Grid(GridAction::ALL[i]))
    }

    proptest! {
        #[test]
        fn force_loss_symmetric_and_zero_on_diagonal(u in force(), v in force()) {
            prop_assert_eq!(surrogate_loss(&u, &u).unwrap(), 0.0);
            prop_assert_eq!(surrogate_loss(&u, &v).unwrap(), surrogate_loss(&v, &u).unwrap());
            prop_assert!(surrogate_loss(&u, &v).unwrap() >= 0.0);
        }

        #[test]
        fn grid_loss_symmetric_and_zero_on_diagonal(u in grid(), v in grid()) {
            prop_assert_eq!(surrogate_loss(&u, &u).unwrap(), 0.0);
            prop_assert_eq!(surrogate_loss(&u, &v).unwrap(), surrogate_loss(&v, &u).unwrap());
        }
    }
}
