//! Samplers for the Gaussian base measure and the repulsion-tilted measure:
//! exact spectral draws, Metropolis dynamics with incremental caches, and
//! importance-sampling estimators built on the exact draws.

pub mod chain;
pub mod estimators;
pub mod free_field;

pub use chain::{ChainState, Checkpoint, MCMCConfig, log_target, mcmc_step, run_sweeps};
pub use estimators::{
    PartitionEstimate, TiltedEstimate, estimate_partition, estimate_tilted_expectation,
};
pub use free_field::{drift_field, sample_drifted_field, sample_free_field};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Inverse temperature and repulsion strength of the tilted measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsParams {
    pub beta: f64,
    pub gamma: f64,
}

impl GibbsParams {
    pub fn new(beta: f64, gamma: f64) -> Result<Self> {
        let p = GibbsParams { beta, gamma };
        p.check()?;
        Ok(p)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta must be positive and finite, got {}", self.beta)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "gamma must be non-negative and finite, got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}
