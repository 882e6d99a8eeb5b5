//! Correlation tuning for binary-labeled tabular data.
//!
//! The crate measures the Phi-coefficient between each binary sensitive
//! attribute and the label, flips the sensitive value of a chosen subset of
//! privileged/favorable rows to drive that correlation toward zero (or toward
//! the value a classifier-in-the-loop search prefers), and evaluates the
//! outcome with performance, group-fairness, trade-off and rank statistics.
//!
//! Module map:
//!
//! * [`tabular`] - data model, CSV I/O, seeded splitting and fixtures
//! * [`correlation`] - contingency tables, Phi, analytic flip count
//! * [`cot`] - the tuning transforms
//! * [`classifier`] - built-in logistic regression and the classifier trait
//! * [`metrics`] - performance and (intersectional) fairness metrics
//! * [`optimizer`] - scalar particle swarm
//! * [`fairea`] - trade-off baseline and region classification
//! * [`stats`] - Mann-Whitney U and Cliff's delta
//! * [`harness`] - repeated experiments, reports and the CLI
//!
//! With the default `parallel` feature, particle evaluations, experiment runs
//! and baseline repeats are spread over a rayon pool. Results are always
//! reduced in index order, so output does not depend on the feature.

pub mod classifier;
pub mod correlation;
pub mod cot;
mod error;
pub mod fairea;
pub mod harness;
pub mod metrics;
pub mod optimizer;
pub mod par;
mod rng;
pub mod stats;
pub mod tabular;

pub use error::{Error, Result};
