//! Semidefinite representations of convex hulls of quadratic images.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod ops;
pub mod quadratic;
pub mod repr;
pub mod sdp;
pub mod verify;

pub use error::{Error, Result};
