use std::fmt;
use std::sync::Arc;

use gauss_quad::GaussLegendre;
use num_complex::Complex64;

use super::kinematics::{
    longitudinal_mismatch, pump_amplitude, transverse_mismatch, wavelength_window_to_freq,
};
use super::{sinc, AngularGrid, JointDistribution, PhysicalConfig, MIN_GRID_POINTS};
use crate::error::{Error, Result};

/// Edge-to-peak ratio of `G(δ)` above which the window is considered too narrow.
const EDGE_RATIO: f64 = 1e-6;

type PhaseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Angular kernel `h(θ; θ′) = S(u) S(u′) ∫ F̃(Δk⊥) F̃(Δk⊥′) dω_s` in factored form.
///
/// `S(u) = Sinc(Δk∥ L/2)` is kept as a vector over the `u` axis and the frequency
/// integral as a matrix of pump amplitudes over `(δ, ω_m)` with the Gauss–Legendre
/// weights `w_m`. Two optional phase decorations alter the off-diagonal coherences
/// while leaving the diagonal `h(θ; θ)` untouched:
///
/// * a spectral tilt `t`, multiplying each frequency component by `exp(i·t·ω·u)`;
///   this dephases the frequency modes against each other and lowers the purity;
/// * an arbitrary coherence phase `φ(θs, θi)`, entering as `exp(i(φ(θ) − φ(θ′)))`.
#[derive(Clone)]
pub struct AngularKernel {
    cfg: PhysicalConfig,
    grid: AngularGrid,
    sinc_u: Vec<f64>,
    omega: Vec<f64>,
    weights: Vec<f64>,
    /// `n_theta × n_omega`, row-major over δ.
    modes: Vec<f64>,
    spectral_tilt: f64,
    coherence_phase: Option<PhaseFn>,
}

impl fmt::Debug for AngularKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AngularKernel")
            .field("cfg", &self.cfg)
            .field("grid", &self.grid)
            .field("spectral_tilt", &self.spectral_tilt)
            .field("coherence_phase", &self.coherence_phase.is_some())
            .finish()
    }
}

/// Gauss–Legendre nodes and weights on `[-half, half]`.
fn frequency_rule(n: usize, half: f64) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0 * half]);
    }
    let rule = GaussLegendre::new(n).expect("n >= 2");
    let mut pairs = rule.as_node_weight_pairs().to_vec();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.iter().map(|&(x, w)| (x * half, w * half)).unzip()
}

impl AngularKernel {
    /// Builds the kernel and checks that the grid resolves it: at least
    /// [`MIN_GRID_POINTS`] points per axis, and a `δ`-window wide enough that the
    /// marginal at its edge is below `1e-6` of the peak.
    pub fn new(cfg: &PhysicalConfig, grid: &AngularGrid) -> Result<Self> {
        if grid.n_theta < MIN_GRID_POINTS {
            return Err(Error::GridTooCoarse(grid.n_theta));
        }
        let kernel = Self::assemble(cfg, grid)?;
        let g = kernel.delta_weights();
        let peak = g.iter().cloned().fold(0.0, f64::max);
        let edge = g[0].max(g[g.len() - 1]) / peak;
        if edge.is_nan() || edge >= EDGE_RATIO {
            return Err(Error::WindowTooNarrow(edge));
        }
        Ok(kernel)
    }

    /// Builds the kernel without resolution checks.
    pub(crate) fn assemble(cfg: &PhysicalConfig, grid: &AngularGrid) -> Result<Self> {
        cfg.validate()?;
        grid.validate()?;
        let half = wavelength_window_to_freq(cfg.spectral_width, cfg.signal_center_wavelength)?;
        let (omega, weights) = frequency_rule(grid.n_omega, half);
        let axis = grid.axis();
        // Δk∥ depends on θs + θi only: evaluate at θs = θi = u/2
        let sinc_u = axis
            .iter()
            .map(|&u| sinc(longitudinal_mismatch(0.5 * u, 0.5 * u, cfg) * cfg.crystal_length / 2.0))
            .collect();
        let mut modes = Vec::with_capacity(axis.len() * omega.len());
        for &d in &axis {
            for &w in &omega {
                modes.push(pump_amplitude(transverse_mismatch(d, 0.0, w, cfg), cfg));
            }
        }
        Ok(Self {
            cfg: *cfg,
            grid: *grid,
            sinc_u,
            omega,
            weights,
            modes,
            spectral_tilt: 0.0,
            coherence_phase: None,
        })
    }

    /// Multiplies frequency component `ω` by `exp(i·tilt·ω·u)` (tilt in seconds).
    pub fn with_spectral_tilt(mut self, tilt: f64) -> Self {
        self.spectral_tilt = tilt;
        self
    }

    /// Decorates the kernel with `exp(i(φ(θs, θi) − φ(θs′, θi′)))`.
    pub fn with_coherence_phase(mut self, phase: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        self.coherence_phase = Some(Arc::new(phase));
        self
    }

    pub fn config(&self) -> &PhysicalConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    fn mode(&self, delta: usize, m: usize) -> f64 {
        self.modes[delta * self.omega.len() + m]
    }

    /// `G(δ) = ∫ |F̃(Δk⊥)|² dω` on the `δ` axis, symmetrized so that
    /// `G(δ) = G(−δ)` holds bit for bit.
    pub fn delta_weights(&self) -> Vec<f64> {
        let n = self.grid.n_theta;
        let raw: Vec<f64> = (0..n)
            .map(|b| {
                (0..self.omega.len())
                    .map(|m| self.weights[m] * self.mode(b, m).powi(2))
                    .sum()
            })
            .collect();
        (0..n).map(|b| 0.5 * (raw[b] + raw[n - 1 - b])).collect()
    }

    /// `h(θ; θ′)` between nodes given as `(u index, δ index)`.
    pub fn entry(&self, node: (usize, usize), other: (usize, usize)) -> Complex64 {
        let axis = self.grid.axis();
        let (u, u2) = (axis[node.0], axis[other.0]);
        let mut overlap = Complex64::new(0.0, 0.0);
        for m in 0..self.omega.len() {
            let amp = self.weights[m] * self.mode(node.1, m) * self.mode(other.1, m);
            let phase = self.spectral_tilt * self.omega[m] * (u - u2);
            overlap += Complex64::from_polar(amp, phase);
        }
        let mut h = overlap * self.sinc_u[node.0] * self.sinc_u[other.0];
        if let Some(phi) = &self.coherence_phase {
            let (d, d2) = (axis[node.1], axis[other.1]);
            let theta = |u: f64, d: f64| (0.5 * (u + d), 0.5 * (u - d));
            let (s1, i1) = theta(u, d);
            let (s2, i2) = theta(u2, d2);
            h *= Complex64::from_polar(1.0, phi(s1, i1) - phi(s2, i2));
        }
        h
    }

    /// Normalized diagonal `P(θ) = h(θ; θ)`. Off-diagonal phases cancel on the
    /// diagonal, so only `S(u)²` and `G(δ)` enter.
    pub fn joint_distribution(&self) -> Result<JointDistribution> {
        let u_profile: Vec<f64> = self.sinc_u.iter().map(|s| s * s).collect();
        JointDistribution::separable(self.grid, &u_profile, &self.delta_weights())
    }

    /// `Tr ρ_E²` of the trace-normalized kernel.
    ///
    /// With frequency modes `v_m(θ) = S(u)·e^{i t ω_m u}·F̃_m(δ)` the operator is
    /// `Σ_m w_m |v_m⟩⟨v_m|`, so the purity reduces to a double sum over mode
    /// overlaps. The coherence phase is a diagonal unitary and drops out.
    pub fn purity(&self) -> f64 {
        let nw = self.omega.len();
        let n = self.grid.n_theta;
        let axis = self.grid.axis();
        let s2: Vec<f64> = self.sinc_u.iter().map(|s| s * s).collect();
        let s2_total: f64 = s2.iter().sum();

        // overlaps of the δ factors
        let mut gram = vec![0.0; nw * nw];
        for b in 0..n {
            let row = &self.modes[b * nw..(b + 1) * nw];
            for m in 0..nw {
                for k in m..nw {
                    gram[m * nw + k] += row[m] * row[k];
                }
            }
        }

        let mut num = 0.0;
        for m in 0..nw {
            for k in m..nw {
                let u_overlap = if self.spectral_tilt == 0.0 || m == k {
                    s2_total * s2_total
                } else {
                    let dk = self.spectral_tilt * (self.omega[m] - self.omega[k]);
                    let z: Complex64 = axis
                        .iter()
                        .zip(&s2)
                        .map(|(&u, &w)| Complex64::from_polar(w, dk * u))
                        .sum();
                    z.norm_sqr()
                };
                let term = self.weights[m] * self.weights[k] * gram[m * nw + k].powi(2) * u_overlap;
                num += if m == k { term } else { 2.0 * term };
            }
        }
        let trace: f64 = s2_total * self.delta_weights().iter().sum::<f64>();
        num / (trace * trace)
    }
}

/// Purity of the angular state of an environment.
pub fn angular_purity(cfg: &PhysicalConfig, grid: &AngularGrid) -> Result<f64> {
    Ok(AngularKernel::new(cfg, grid)?.purity())
}
