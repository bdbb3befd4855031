use serde::{Deserialize, Serialize};

use super::{angular_correlation, AngularGrid, AngularKernel, JointDistribution, PhysicalConfig};
use crate::error::{Error, Result};

/// An angular environment as seen by the polarization probe: its joint
/// distribution plus the scalars reported alongside trace-distance curves.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub config: Option<PhysicalConfig>,
    pub distribution: JointDistribution,
    /// Signed correlation coefficient; `None` when a marginal variance vanishes.
    pub correlation: Option<f64>,
    /// Angular purity; `None` when only the distribution is known.
    pub purity: Option<f64>,
}

/// Scalars describing an [`Environment`], for serialization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSummary {
    pub config: Option<PhysicalConfig>,
    pub correlation: Option<f64>,
    pub purity: Option<f64>,
    pub delta_std: f64,
}

fn correlation_or_none(jd: &JointDistribution) -> Result<Option<f64>> {
    match angular_correlation(jd) {
        Ok(c) => Ok(Some(c)),
        Err(Error::DegenerateVariance(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

impl Environment {
    pub fn from_config(cfg: &PhysicalConfig, grid: &AngularGrid) -> Result<Self> {
        Self::from_kernel(&AngularKernel::new(cfg, grid)?)
    }

    pub fn from_kernel(kernel: &AngularKernel) -> Result<Self> {
        let distribution = kernel.joint_distribution()?;
        Ok(Self {
            config: Some(*kernel.config()),
            correlation: correlation_or_none(&distribution)?,
            purity: Some(kernel.purity()),
            distribution,
        })
    }

    pub fn from_distribution(distribution: JointDistribution) -> Result<Self> {
        Ok(Self {
            config: None,
            correlation: correlation_or_none(&distribution)?,
            purity: None,
            distribution,
        })
    }

    pub fn summary(&self) -> EnvironmentSummary {
        EnvironmentSummary {
            config: self.config,
            correlation: self.correlation,
            purity: self.purity,
            delta_std: self.distribution.delta_std(),
        }
    }
}
