//! Outlier-robust persistent homology with the median-of-means distance.
//!
//! The crate covers the whole pipeline: point clouds and the weight
//! functions evaluated on them ([`geometry`]), weighted Rips filtrations
//! ([`filtration`]), persistence diagrams ([`persistence`]), grid sublevel
//! persistence ([`grid`]), bottleneck distance and influence measures
//! ([`metrics`]), choice of the block count ([`selection`]), and the synthetic
//! data and experiment drivers used to study all of it ([`data`],
//! [`experiment`]).

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod experiment;
pub mod filtration;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod persistence;
pub mod rng;
pub mod selection;

pub use error::{Error, Result};
