//! Angular (momentum) state of the down-converted photon pair.
//!
//! The pair is described on the rotated coordinates `u = θs + θi` and
//! `δ = θs − θi`. To first order the phase-matching Sinc depends on `u` only and the
//! pump overlap integrated over the signal frequency window depends on `δ` only, so
//! the joint distribution factorizes as `P(u, δ) ∝ Sinc²(a·u) · G(δ)`.

mod config;
mod distribution;
mod environment;
mod kernel;
mod kinematics;

pub use config::{AngularGrid, PhysicalConfig};
pub use distribution::{angular_correlation, joint_angular_distribution, JointDistribution};
pub use environment::{Environment, EnvironmentSummary};
pub use kernel::{angular_purity, AngularKernel};
pub use kinematics::{
    delta_spread, longitudinal_mismatch, pump_amplitude, pump_angular_frequency, sinc,
    transverse_mismatch, wavelength_window_to_freq, SPEED_OF_LIGHT,
};

/// Smallest accepted `n_theta` for physical distributions.
pub const MIN_GRID_POINTS: usize = 65;
