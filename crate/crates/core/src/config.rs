use serde::{Deserialize, Serialize};

use crate::error::{FdeError, Result};
use crate::kernel::KernelSpec;
use crate::mi::MiEstimator;

/// Knobs shared by every KDE / mutual-information fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Evaluation points per dimension.
    pub m: usize,
    /// Holder smoothness driving the bandwidth exponents.
    pub beta: f64,
    pub kernel: KernelSpec,
    /// Truncation floor applied to every fitted density value.
    pub floor: f64,
    pub estimator: MiEstimator,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            m: 128,
            beta: 2.0,
            kernel: KernelSpec::epanechnikov(),
            floor: 1e-8,
            estimator: MiEstimator::Medium,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 8 {
            return Err(FdeError::InvalidInput(format!(
                "grid size m must be >= 8, got {}",
                self.m
            )));
        }
        if self.floor.is_nan() || self.floor <= 0.0 {
            return Err(FdeError::InvalidInput(format!(
                "floor must be positive, got {}",
                self.floor
            )));
        }
        if self.beta.is_nan() || self.beta <= 0.0 {
            return Err(FdeError::InvalidInput(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}
