use std::f64::consts::{LN_2, PI};

use super::PhysicalConfig;
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// `sin(x)/x`, with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Central pump angular frequency `ω_p⁰ = 2πc/λ_p`.
pub fn pump_angular_frequency(cfg: &PhysicalConfig) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT / cfg.pump_wavelength
}

/// First-order longitudinal phase mismatch `Δk∥ = −(ω_p⁰ θ⁰ / 2c)(θs + θi)`.
pub fn longitudinal_mismatch(theta_s: f64, theta_i: f64, cfg: &PhysicalConfig) -> f64 {
    -pump_angular_frequency(cfg) * cfg.theta0 / (2.0 * SPEED_OF_LIGHT) * (theta_s + theta_i)
}

/// First-order transverse mismatch `Δk⊥ = (ω_p⁰/2c)(θs − θi) + 2θ⁰ω_s/c`.
pub fn transverse_mismatch(theta_s: f64, theta_i: f64, omega_s: f64, cfg: &PhysicalConfig) -> f64 {
    pump_angular_frequency(cfg) / (2.0 * SPEED_OF_LIGHT) * (theta_s - theta_i)
        + 2.0 * cfg.theta0 * omega_s / SPEED_OF_LIGHT
}

/// Gaussian pump spectrum `F̃(k) = exp(−2 ln2 · k²/Δk²)`; `|F̃|²` has FWHM `Δk`.
pub fn pump_amplitude(k_perp: f64, cfg: &PhysicalConfig) -> f64 {
    let dk = cfg.pump_dk_fwhm;
    (-2.0 * LN_2 * k_perp * k_perp / (dk * dk)).exp()
}

/// Half-width `Ω = πc·Δλ/λ²` of the angular-frequency window selected by a
/// wavelength window of width `width` centered at `center`.
pub fn wavelength_window_to_freq(width: f64, center: f64) -> Result<f64> {
    if !(width > 0.0 && center > 0.0 && width < center) {
        return Err(Error::out_of_range(
            "spectral_width",
            width,
            "must satisfy 0 < width < center",
        ));
    }
    Ok(PI * SPEED_OF_LIGHT * width / (center * center))
}

/// Standard deviation of the untruncated `δ`-marginal: a Gaussian of FWHM
/// `Δk·2c/ω_p⁰` convolved with a box of half-width `(4θ⁰/ω_p⁰)·Ω`.
pub fn delta_spread(cfg: &PhysicalConfig) -> Result<f64> {
    let wp = pump_angular_frequency(cfg);
    let omega = wavelength_window_to_freq(cfg.spectral_width, cfg.signal_center_wavelength)?;
    let fwhm = cfg.pump_dk_fwhm * 2.0 * SPEED_OF_LIGHT / wp;
    let sigma_g = fwhm / (2.0 * (2.0 * LN_2).sqrt());
    let half = 4.0 * cfg.theta0 / wp * omega;
    Ok((sigma_g * sigma_g + half * half / 3.0).sqrt())
}
