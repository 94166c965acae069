use super::types::Trajectory;
use super::{Actor, RandomSource};
use crate::envs::Environment;
use crate::error::{Error, Result};

/// Rolls `actor` out for `horizon` steps, returning `horizon + 1` pairs.
///
/// The recorded control at index `t` is what the actor chose at `x_t`, even
/// when the environment's dynamics slip.
pub fn rollout<A: Actor + ?Sized>(
    env: &Environment,
    actor: &A,
    horizon: usize,
    rng: &mut RandomSource,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    let mut pairs = Vec::with_capacity(horizon + 1);
    let mut state = env.initial_state(rng);
    for t in 0..=horizon {
        let control = actor.act(&state, rng)?;
        env.check_control(&control)?;
        pairs.push((state, control));
        if t < horizon {
            state = env.step(&state, &control, rng)?;
        }
    }
    Trajectory::new(pairs)
}
