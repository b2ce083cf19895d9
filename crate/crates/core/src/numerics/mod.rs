//! Dense matrices and seeded random streams.

mod matrix;
mod rng;

pub use matrix::{dot, solve_spd, squared_distance, Matrix};
pub use rng::{sample_gaussian, sample_uniform, streams, Rng};
