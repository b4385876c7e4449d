//! Time-resolved two-photon coincidence spectroscopy with entangled pairs.
//!
//! The crate evaluates the interferometric coincidence signal C(τ, T, s) of a
//! multi-level exciton system probed by a time-entangled photon pair sent
//! through a Hong-Ou-Mandel detection stage.

pub mod model;
pub mod biphoton;
pub mod pathways;
pub mod signal;
pub mod oracle;
pub mod cli;
