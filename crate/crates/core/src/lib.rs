//! A simulation laboratory for respondent-driven sampling (RDS) on
//! attributed networks.
//!
//! The crate generates or imports attributed graphs, transforms them
//! (densifying, rewiring, adding one-way edges, weighting), simulates
//! chain-referral recruitment under configurable deviations from the
//! idealized process, computes inverse-degree and stationary-weighted
//! proportion estimates, and aggregates error metrics across Monte-Carlo
//! replications.
//!
//! Module map:
//! - [`graph`]: attributed graphs, degrees, components, partitions.
//! - [`netgen`]: synthetic generation and structural transforms.
//! - [`sampler`]: one recruitment chain under a [`sampler::SamplingConfig`].
//! - [`estimators`]: proportion estimators, transition matrices,
//!   stationary distributions, homophily indices.
//! - [`experiments`]: replicated runs, metric aggregation, grids.
//! - [`io`]: graph/result file formats and the experiment config grammar.
//! - [`cli`]: the `rds-lab` command-line front end.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod graph;
pub mod io;
pub mod netgen;
mod numeric;
pub mod sampler;

pub use error::{Error, Result};
pub use graph::{AttributedGraph, NodePartition};
pub use netgen::GeneratorSpec;
pub use sampler::{RecruitmentSample, SamplingConfig};
