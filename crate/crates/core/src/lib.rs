//! Chance-constrained biomass blending: centralized and leader-follower
//! supply-chain models solved by sample average approximation on a built-in
//! simplex core, with a-posteriori statistical validation.

pub mod centralized;
pub mod cli;
pub mod decentralized;
pub mod error;
pub mod lp;
pub mod model;
pub mod sampling;
pub mod validation;

pub use error::{BlendError, Result};
