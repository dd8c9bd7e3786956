//! Dense row-major matrices and the seeded random stream used everywhere
//! else in the crate.

mod matrix;
mod rng;

pub use matrix::{dot, Matrix};
pub use rng::{gaussian_sample, seeded_shuffle, RngStream};
