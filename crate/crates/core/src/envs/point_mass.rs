use nalgebra::{Matrix4, Matrix4x2, Vector2, Vector4};
use rand_distr::{Distribution, Normal};

use crate::domain::{Force, PointMassState, RandomSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Mass 1.
    One,
    /// Mass 4; `x > 12` and `y > 12`.
    Two,
}

/// Double-integrator point mass whose mass changes in the upper-right region.
///
/// State ordering is `(x, y, vx, vy)`; positions advance by the velocity from
/// before the update, and velocities by `force / mass`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMassEnv {
    pub a: Matrix4<f64>,
    pub b1: Matrix4x2<f64>,
    pub b2: Matrix4x2<f64>,
    /// Variance of the isotropic Gaussian added to all four state components.
    pub noise_var: f64,
    pub region_threshold: f64,
    pub start: PointMassState,
    pub horizon: usize,
}

impl Default for PointMassEnv {
    fn default() -> Self {
        Self {
            a: Self::dynamics(),
            b1: Self::input_matrix(1.0),
            b2: Self::input_matrix(4.0),
            noise_var: Self::DEFAULT_NOISE_VAR,
            region_threshold: 12.0,
            start: [-15.0, -10.0, 0.0, 0.0],
            horizon: Self::DEFAULT_HORIZON,
        }
    }
}

impl PointMassEnv {
    pub const DEFAULT_NOISE_VAR: f64 = 0.1;
    pub const DEFAULT_HORIZON: usize = 35;

    pub fn with_noise(noise_var: f64) -> Self {
        Self {
            noise_var,
            ..Self::default()
        }
    }

    pub fn dynamics() -> Matrix4<f64> {
        let mut a = Matrix4::identity();
        a[(0, 2)] = 1.0;
        a[(1, 3)] = 1.0;
        a
    }

    pub fn input_matrix(mass: f64) -> Matrix4x2<f64> {
        let mut b = Matrix4x2::zeros();
        b[(2, 0)] = 1.0 / mass;
        b[(3, 1)] = 1.0 / mass;
        b
    }

    pub fn region_of(&self, s: &PointMassState) -> Region {
        if s[0] > self.region_threshold && s[1] > self.region_threshold {
            Region::Two
        } else {
            Region::One
        }
    }

    pub fn input_for(&self, region: Region) -> &Matrix4x2<f64> {
        match region {
            Region::One => &self.b1,
            Region::Two => &self.b2,
        }
    }

    /// Noise-free part of the transition.
    pub fn mean_next(&self, s: &PointMassState, u: &Force) -> PointMassState {
        let b = self.input_for(self.region_of(s));
        let next = self.a * Vector4::from(*s) + b * Vector2::from(*u);
        next.into()
    }

    pub fn step(
        &self,
        s: &PointMassState,
        u: &Force,
        rng: &mut RandomSource,
    ) -> Result<PointMassState> {
        if s.iter().chain(u).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(*s));
        }
        let mut next = self.mean_next(s, u);
        if self.noise_var > 0.0 {
            let normal = Normal::new(0.0, self.noise_var.sqrt())
                .map_err(|e| Error::invalid(e.to_string()))?;
            for v in next.iter_mut() {
                *v += normal.sample(rng);
            }
        }
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(next));
        }
        Ok(next)
    }
}
