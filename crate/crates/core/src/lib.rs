//! Minimum-size k-coverage sensor network synthesis on obstructed grids.

pub mod convex;
pub mod covering;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod graphs;
pub mod hierarchy;
pub mod par;
pub mod placement;
#[cfg(test)]
mod proptests;
pub mod sat;
pub mod scenario;
pub mod smc;
