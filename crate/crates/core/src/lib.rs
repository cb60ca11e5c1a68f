//! Algorithms for turning face-embedding records into a weighted image
//! co-appearance network and analysing it.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! pipeline and the command-line front end live in the `coappear` crate.
//!
//! Module map:
//!
//! - [`model`]: face, image and watchlist records.
//! - [`cluster`]: similarity graph, Chinese Whispers, Rand/AMI evaluation.
//! - [`build`]: co-appearance graph construction, LCC, time slices.
//! - [`metrics`]: centralities, power-law fit, clustering, small-world S.
//! - [`robustness`]: node-removal simulations.
//! - [`inference`]: OLS and Welch's t-test.
//! - [`ergm`]: exponential random graph models.
//! - [`watchlist`]: matching nodes to wanted lists.
//! - [`synth`]: planted-partition corpus generator.
#![no_std]
#![warn(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod build;
pub mod cluster;
pub mod ergm;
mod error;
pub mod graph;
pub mod inference;
pub mod math;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod robustness;
pub mod synth;
pub mod watchlist;

pub use error::{Error, Result};
