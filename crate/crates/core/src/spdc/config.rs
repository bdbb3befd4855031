use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical configuration of one angular environment. All fields are SI
/// (metres, radians, inverse metres).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub pump_wavelength: f64,
    /// Central emission angle of signal and idler.
    pub theta0: f64,
    pub crystal_length: f64,
    /// FWHM of `|F̃(Δk⊥)|²`.
    pub pump_dk_fwhm: f64,
    /// Width `Δλ` of the signal spectral window.
    pub spectral_width: f64,
    pub signal_center_wavelength: f64,
}

impl Default for PhysicalConfig {
    fn default() -> Self {
        Self {
            pump_wavelength: 405e-9,
            theta0: 3f64.to_radians(),
            crystal_length: 1e-3,
            pump_dk_fwhm: 18e3,
            spectral_width: 10e-9,
            signal_center_wavelength: 810e-9,
        }
    }
}

impl PhysicalConfig {
    pub fn with_spectral_width_nm(mut self, nm: f64) -> Self {
        self.spectral_width = nm / 1e9;
        self
    }

    pub fn with_pump_dk_inv_mm(mut self, inv_mm: f64) -> Self {
        self.pump_dk_fwhm = inv_mm * 1e3;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pump_wavelength", self.pump_wavelength),
            ("theta0", self.theta0),
            ("crystal_length", self.crystal_length),
            ("pump_dk_fwhm", self.pump_dk_fwhm),
            ("spectral_width", self.spectral_width),
            ("signal_center_wavelength", self.signal_center_wavelength),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::out_of_range(name, v, "must be positive and finite"));
            }
        }
        if self.spectral_width >= self.signal_center_wavelength {
            return Err(Error::out_of_range(
                "spectral_width",
                self.spectral_width,
                "must be smaller than the signal center wavelength",
            ));
        }
        Ok(())
    }
}

/// Discretization of the angular plane and of the signal frequency window.
///
/// Both rotated axes `u = θs + θi` and `δ = θs − θi` carry `n_theta` midpoint cells on
/// `[-2·theta_max, 2·theta_max]`, so the truncation window is
/// `|θs ± θi| ≤ 2·theta_max`. The frequency window uses an `n_omega`-point
/// Gauss–Legendre rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    pub theta_max: f64,
    pub n_theta: usize,
    pub n_omega: usize,
}

impl Default for AngularGrid {
    fn default() -> Self {
        Self {
            theta_max: 30e-3,
            n_theta: 513,
            n_omega: 129,
        }
    }
}

impl AngularGrid {
    pub fn new(theta_max: f64, n_theta: usize, n_omega: usize) -> Result<Self> {
        let g = Self {
            theta_max,
            n_theta,
            n_omega,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta_max.is_finite() && self.theta_max > 0.0) {
            return Err(Error::out_of_range("theta_max", self.theta_max, "must be positive"));
        }
        if self.n_theta.is_multiple_of(2) {
            return Err(Error::out_of_range("n_theta", self.n_theta as f64, "must be odd"));
        }
        if self.n_omega.is_multiple_of(2) {
            return Err(Error::out_of_range("n_omega", self.n_omega as f64, "must be odd"));
        }
        Ok(())
    }

    /// Same window with roughly twice the points on every axis.
    pub fn refined(&self) -> Self {
        Self {
            theta_max: self.theta_max,
            n_theta: 2 * self.n_theta - 1,
            n_omega: 2 * self.n_omega - 1,
        }
    }

    /// Cell width on the `u` and `δ` axes.
    pub fn spacing(&self) -> f64 {
        4.0 * self.theta_max / self.n_theta as f64
    }

    /// Cell centers, exactly antisymmetric about the middle node.
    pub fn axis(&self) -> Vec<f64> {
        let h = self.spacing();
        let mid = (self.n_theta / 2) as i64;
        (0..self.n_theta as i64).map(|k| (k - mid) as f64 * h).collect()
    }

    /// Area of one grid cell in the `(θs, θi)` plane.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        0.5 * h * h
    }
}
