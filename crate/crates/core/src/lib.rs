//! Bot detection from issue and pull-request comments, and cross-repository
//! aggregation of per-repository predictions.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! computation over in-memory values; file formats, network ingestion and the
//! command line live in the `wocp` crate.
//!
//! Pipeline:
//!
//! 1. [`corpus::validate_corpus`] turns raw comment records into a [`corpus::Corpus`],
//!    [`corpus::sample`] applies the cutoff date and per-contributor cap.
//! 2. [`patterns::compute_features`] clusters each contributor's comments into
//!    patterns and derives a [`FeatureVector`].
//! 3. [`classifier::predict`] maps features to a [`Label`].
//! 4. [`aggregation::apply_wocp`] rewrites minority labels of contributors seen in
//!    several repositories; [`aggregation::complete_unknowns`] optionally fills
//!    in `unknown` labels.
//! 5. [`evaluation`] scores prediction sets against a [`GroundTruth`].

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod aggregation;
pub mod classifier;
pub mod corpus;
mod domain;
pub mod evaluation;
pub mod patterns;
pub mod simulation;

pub use domain::*;
