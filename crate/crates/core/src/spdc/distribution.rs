use serde::{Deserialize, Serialize};

use super::{AngularGrid, AngularKernel, PhysicalConfig};
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-9;
const MIN_VARIANCE: f64 = 1e-18;

/// Normalized joint angular density `P(θs, θi)` on the rotated `(u, δ)` lattice,
/// together with its exact discrete `δ`-marginal.
///
/// `density` is stored row-major with `u` as the slow index. It integrates to one
/// against [`AngularGrid::cell_area`]; `q_delta` integrates to one against the `δ`
/// cell width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    grid: AngularGrid,
    density: Vec<f64>,
    q_delta: Vec<f64>,
}

impl JointDistribution {
    /// Normalizes a nonnegative density sampled on the grid nodes. The input must be
    /// symmetric under `θs ↔ θi` (that is `δ → −δ`) to within `1e-9` of its peak.
    pub fn from_density(grid: AngularGrid, mut density: Vec<f64>) -> Result<Self> {
        grid.validate()?;
        let n = grid.n_theta;
        if density.len() != n * n {
            return Err(Error::DimensionMismatch(density.len(), n * n));
        }
        if let Some(&bad) = density.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::out_of_range("density", bad, "must be finite and nonnegative"));
        }
        let peak = density.iter().cloned().fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::out_of_range("density", 0.0, "has no mass"));
        }
        let mut asym = 0.0_f64;
        for a in 0..n {
            for b in 0..n / 2 {
                asym = asym.max((density[a * n + b] - density[a * n + n - 1 - b]).abs());
            }
        }
        if asym > SYMMETRY_TOL * peak {
            return Err(Error::Asymmetric(asym / peak));
        }

        let mass: f64 = density.iter().sum::<f64>() * grid.cell_area();
        density.iter_mut().for_each(|x| *x /= mass);

        // ∫ P dθs along fixed δ = ∫ P du / 2
        let h = grid.spacing();
        let q_delta = (0..n)
            .map(|b| (0..n).map(|a| density[a * n + b]).sum::<f64>() * 0.5 * h)
            .collect();
        Ok(Self {
            grid,
            density,
            q_delta,
        })
    }

    /// `P(u, δ) ∝ u_profile(u) · delta_profile(δ)`.
    pub fn separable(grid: AngularGrid, u_profile: &[f64], delta_profile: &[f64]) -> Result<Self> {
        let n = grid.n_theta;
        if u_profile.len() != n || delta_profile.len() != n {
            return Err(Error::DimensionMismatch(u_profile.len().max(delta_profile.len()), n));
        }
        let density = u_profile
            .iter()
            .flat_map(|&s| delta_profile.iter().map(move |&g| s * g))
            .collect();
        Self::from_density(grid, density)
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    /// `P` at node `(u index, δ index)`.
    pub fn density(&self, u: usize, delta: usize) -> f64 {
        self.density[u * self.grid.n_theta + delta]
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn q_delta(&self) -> &[f64] {
        &self.q_delta
    }

    /// `Σ P · cellArea`.
    pub fn mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.grid.cell_area()
    }

    /// Root-mean-square of `δ` under `q_delta` (its mean is zero by symmetry).
    pub fn delta_std(&self) -> f64 {
        let h = self.grid.spacing();
        self.grid
            .axis()
            .iter()
            .zip(&self.q_delta)
            .map(|(d, q)| d * d * q * h)
            .sum::<f64>()
            .sqrt()
    }
}

/// Physical joint distribution of an environment; see [`AngularKernel`].
pub fn joint_angular_distribution(cfg: &PhysicalConfig, grid: &AngularGrid) -> Result<JointDistribution> {
    AngularKernel::new(cfg, grid)?.joint_distribution()
}

/// Pearson correlation of `θs` and `θi` under `jd`, by discrete sums over the grid.
pub fn angular_correlation(jd: &JointDistribution) -> Result<f64> {
    let grid = jd.grid();
    let n = grid.n_theta;
    let axis = grid.axis();
    let w = grid.cell_area();
    let (mut m_s, mut m_i, mut m_ss, mut m_ii, mut m_si) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (a, &u) in axis.iter().enumerate() {
        for (b, &d) in axis.iter().enumerate() {
            let p = jd.density[a * n + b] * w;
            if p == 0.0 {
                continue;
            }
            let ts = 0.5 * (u + d);
            let ti = 0.5 * (u - d);
            m_s += p * ts;
            m_i += p * ti;
            m_ss += p * ts * ts;
            m_ii += p * ti * ti;
            m_si += p * ts * ti;
        }
    }
    let v_s = m_ss - m_s * m_s;
    let v_i = m_ii - m_i * m_i;
    if v_s < MIN_VARIANCE || v_i < MIN_VARIANCE {
        return Err(Error::DegenerateVariance(v_s.min(v_i)));
    }
    Ok((m_si - m_s * m_i) / (v_s * v_i).sqrt())
}
