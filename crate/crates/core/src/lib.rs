//! Closed-form predictor and desk-scale simulator for random covering sets.
//!
//! A random covering set is the limsup of randomly placed generators
//! `x_n + A_n` on the torus `[-1/2, 1/2)^d`. This crate evaluates the
//! dimension and hitting-regime formulas for ball and rectangle generators
//! ([`predictor`]) and checks them with seeded simulations on dyadic
//! occupancy grids ([`coversim`], [`percolation`]).
//!
//! The crate is `no_std` and only needs `alloc`. IO, configuration files and
//! thread pools live in the companion `covset` crate, which plugs into the
//! [`exec::ReplicaExecutor`] trait to run replicas in parallel.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod coversim;
pub mod error;
pub mod exec;
pub mod geometry;
pub mod grid;
pub(crate) mod math;
pub mod percolation;
pub mod predictor;
pub mod radii;
pub mod sampler;
pub mod stats;
pub mod targets;

pub use error::{Error, Result};
