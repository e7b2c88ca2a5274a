//! Mean-field prediction and direct simulation of the spontaneous spiking
//! activity of random recurrent leaky integrate-and-fire networks.
//!
//! - [`prob`]: charge-to-firing probabilities built on the Gaussian tail.
//! - [`meanfield`]: the recursion for the expected activity, its moments,
//!   fixed points and the death threshold.
//! - [`simulator`]: seeded Monte Carlo simulation of one network.
//! - [`analysis`]: ensembles, comparisons and parameter sweeps.
//! - [`config`]: the flat key=value experiment configuration used by the CLI.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod meanfield;
pub mod prob;
pub mod simulator;

pub use error::{Error, Result};
pub use meanfield::{MeanFieldParams, MeanFieldTrace, VminMode};
pub use prob::WeightModel;
pub use simulator::SimConfig;
