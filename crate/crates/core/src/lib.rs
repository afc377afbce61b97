//! Causality-aware counterfactual features for linear structural causal
//! models.
//!
//! The crate simulates anticausal and causal prediction tasks from a
//! [`scm::LinearScm`], estimates block causal effects and residuals by least
//! squares, and regenerates features (or responses) so that only selected
//! causal pathways contribute to their association with the target. The
//! [`experiments`] module runs the dataset-shift stability study and its
//! closed-form expected-MSE oracle.

pub mod cli;
pub mod counterfactual;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod models;
pub mod regression;
pub mod rng;
pub mod scm;

pub use dataset::{Dataset, Provenance};
pub use error::{Error, Result};
pub use scm::{LinearScm, Role, Task};
