//! Benchmarks for human-centric versus robot-centric demonstration sampling
//! in imitation learning.

pub mod domain;
pub mod envs;
pub mod error;
pub mod learners;
pub mod runner;
pub mod sampling;
pub mod supervisors;
pub mod theorem;

pub use error::{Error, Result};
