//! Polarization probe: the `(α, γ)` state family, its evolution under the linear
//! phase `exp(iβ(θs − θi))` applied to the `VV` component, and the trace distance
//! between two evolved probes.
//!
//! Basis order throughout is `{HH, HV, VH, VV}`. The `HV`/`VH` sectors are never
//! populated.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{trace_distance, ComplexMatrix, DensityMatrix};
use crate::spdc::{Environment, EnvironmentSummary, JointDistribution};

const HH: usize = 0;
const VV: usize = 3;

/// `ρ_S = γ|ψ⟩⟨ψ| + (1 − γ)ρ^m` with `|ψ⟩ = cos α|HH⟩ + sin α|VV⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationPrep {
    pub alpha: f64,
    pub gamma: f64,
}

impl PolarizationPrep {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        let p = Self { alpha, gamma };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=FRAC_PI_2).contains(&self.alpha) {
            return Err(Error::out_of_range("alpha", self.alpha, "must lie in [0, pi/2]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::out_of_range("gamma", self.gamma, "must lie in [0, 1]"));
        }
        Ok(())
    }

    /// `γ sin 2α`, the initial `HH–VV` coherence amplitude.
    pub fn coherence(&self) -> f64 {
        self.gamma * (2.0 * self.alpha).sin()
    }

    /// Closed-form purity `1 − ½(1 − γ²) sin²2α`.
    pub fn purity(&self) -> f64 {
        1.0 - 0.5 * (1.0 - self.gamma * self.gamma) * (2.0 * self.alpha).sin().powi(2)
    }

    /// Closed-form concurrence `γ |sin 2α|`.
    pub fn concurrence(&self) -> f64 {
        self.gamma * (2.0 * self.alpha).sin().abs()
    }
}

/// Sampled values of the evolution parameter `β`, in inverse radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EvolutionSpec {
    beta_values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for EvolutionSpec {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EvolutionSpec> for Vec<f64> {
    fn from(s: EvolutionSpec) -> Self {
        s.beta_values
    }
}

impl EvolutionSpec {
    /// Nonempty, strictly ascending, starting at exactly 0.
    pub fn new(beta_values: Vec<f64>) -> Result<Self> {
        match beta_values.first() {
            None => return Err(Error::InvalidEvolution("no beta values")),
            Some(&b) if b != 0.0 => return Err(Error::InvalidEvolution("first beta must be 0")),
            _ => {}
        }
        if beta_values.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidEvolution("beta values must be finite"));
        }
        if beta_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidEvolution("beta values must be strictly ascending"));
        }
        Ok(Self { beta_values })
    }

    /// `points` values evenly spaced on `[0, beta_max]`.
    pub fn linear(beta_max: f64, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidEvolution("need at least one point"));
        }
        if points == 1 {
            return Self::new(vec![0.0]);
        }
        if !(beta_max.is_finite() && beta_max > 0.0) {
            return Err(Error::InvalidEvolution("beta_max must be positive"));
        }
        let step = beta_max / (points - 1) as f64;
        Self::new((0..points).map(|k| k as f64 * step).collect())
    }

    /// Range long enough for both coherences to decay: `β_max = 6 / min(σ₁, σ₂)`
    /// where `σ_k` is the spread of the `δ`-marginal of environment `k`.
    pub fn auto(delta_std_1: f64, delta_std_2: f64, points: usize) -> Result<Self> {
        let sigma = delta_std_1.min(delta_std_2);
        if sigma.is_nan() || sigma <= 0.0 {
            return Err(Error::InvalidEvolution("delta spread must be positive"));
        }
        Self::linear(6.0 / sigma, points)
    }

    pub fn values(&self) -> &[f64] {
        &self.beta_values
    }
}

/// Density matrix of the prepared probe.
pub fn prepare_polarization(prep: &PolarizationPrep) -> Result<DensityMatrix> {
    prep.validate()?;
    state_with_coherence(prep.alpha, 0.5 * prep.coherence())
}

fn state_with_coherence(alpha: f64, coherence: f64) -> Result<DensityMatrix> {
    let (s, c) = alpha.sin_cos();
    let mut data = vec![Complex64::new(0.0, 0.0); 16];
    data[HH * 4 + HH] = Complex64::new(c * c, 0.0);
    data[VV * 4 + VV] = Complex64::new(s * s, 0.0);
    data[HH * 4 + VV] = Complex64::new(coherence, 0.0);
    data[VV * 4 + HH] = Complex64::new(coherence, 0.0);
    DensityMatrix::new(ComplexMatrix::from_vec(4, data)?)
}

/// `ε(β) = γ sin 2α Σ_δ cos(βδ) q(δ) Δδ`, normalized by the discrete mass of `q` so
/// that `ε(0) = γ sin 2α` exactly.
pub fn epsilon(beta: f64, prep: &PolarizationPrep, jd: &JointDistribution) -> f64 {
    let axis = jd.grid().axis();
    let q = jd.q_delta();
    let mut re = 0.0;
    let mut mass = 0.0;
    for (&d, &w) in axis.iter().zip(q) {
        re += (beta * d).cos() * w;
        mass += w;
    }
    if cfg!(debug_assertions) {
        let im: f64 = axis.iter().zip(q).map(|(&d, &w)| (beta * d).sin() * w).sum();
        debug_assert!(
            (im / mass).abs() < 1e-10,
            "imaginary part of epsilon is {im:e} for an even marginal"
        );
    }
    prep.coherence() * (re / mass)
}

/// `ρ(β)`: the prepared diagonal with `HH–VV` coherence `ε(β)/2`.
pub fn evolved_state(beta: f64, prep: &PolarizationPrep, jd: &JointDistribution) -> Result<DensityMatrix> {
    prep.validate()?;
    state_with_coherence(prep.alpha, 0.5 * epsilon(beta, prep, jd))
}

/// Coincidence probability `⟨φs, φi|ρ|φs, φi⟩` for linear polarizers at angles
/// `φs`, `φi` (radians from H).
pub fn coincidence_probability(rho: &DensityMatrix, phi_s: f64, phi_i: f64) -> Result<f64> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch(rho.dim(), 4));
    }
    let (ss, cs) = phi_s.sin_cos();
    let (si, ci) = phi_i.sin_cos();
    let v = [cs * ci, cs * si, ss * ci, ss * si];
    let mut p = Complex64::new(0.0, 0.0);
    for i in 0..4 {
        for j in 0..4 {
            p += rho.get(i, j) * v[i] * v[j];
        }
    }
    Ok(p.re)
}

/// Contrast between the `(45°, 45°)` and `(45°, −45°)` coincidence probabilities,
/// reported as a magnitude.
pub fn visibility(rho: &DensityMatrix) -> Result<f64> {
    let q = std::f64::consts::FRAC_PI_4;
    let aligned = coincidence_probability(rho, q, q)?;
    let crossed = coincidence_probability(rho, q, -q)?;
    if aligned < 1e-15 && crossed < 1e-15 {
        return Err(Error::DegenerateDenominator);
    }
    Ok(((aligned - crossed) / (aligned + crossed)).abs())
}

/// `D(β) = √((cos²α₁ − cos²α₂)² + (ε₁(β) − ε₂(β))²/4)`.
pub fn trace_distance_closed(
    beta: f64,
    prep1: &PolarizationPrep,
    jd1: &JointDistribution,
    prep2: &PolarizationPrep,
    jd2: &JointDistribution,
) -> f64 {
    closed_form(prep1, prep2, epsilon(beta, prep1, jd1), epsilon(beta, prep2, jd2))
}

fn closed_form(prep1: &PolarizationPrep, prep2: &PolarizationPrep, eps1: f64, eps2: f64) -> f64 {
    let pop = prep1.alpha.cos().powi(2) - prep2.alpha.cos().powi(2);
    let coh = eps1 - eps2;
    (pop * pop + 0.25 * coh * coh).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceDistanceRecord {
    pub beta: f64,
    pub eps_1: f64,
    pub eps_2: f64,
    pub d_closed: f64,
    pub d_eig: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMetadata {
    pub prep_1: PolarizationPrep,
    pub prep_2: PolarizationPrep,
    pub env_1: EnvironmentSummary,
    pub env_2: EnvironmentSummary,
}

/// `D(β)` sampled along an [`EvolutionSpec`], by the closed form and by the
/// eigenvalues of `ρ₁(β) − ρ₂(β)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDistanceCurve {
    pub records: Vec<TraceDistanceRecord>,
    pub metadata: CurveMetadata,
}

impl TraceDistanceCurve {
    pub fn initial(&self) -> f64 {
        self.records[0].d_closed
    }

    pub fn maximum(&self) -> f64 {
        self.records.iter().map(|r| r.d_closed).fold(f64::NEG_INFINITY, f64::max)
    }

    /// `max_β D − D(0)`.
    pub fn max_increase(&self) -> f64 {
        self.maximum() - self.initial()
    }

    /// Largest `|d_closed − d_eig|` over the samples.
    pub fn route_gap(&self) -> f64 {
        self.records.iter().map(|r| (r.d_closed - r.d_eig).abs()).fold(0.0, f64::max)
    }
}

pub fn compute_curve(
    spec: &EvolutionSpec,
    prep1: &PolarizationPrep,
    env1: &Environment,
    prep2: &PolarizationPrep,
    env2: &Environment,
) -> Result<TraceDistanceCurve> {
    prep1.validate()?;
    prep2.validate()?;
    let (jd1, jd2) = (&env1.distribution, &env2.distribution);
    let records = spec
        .values()
        .par_iter()
        .map(|&beta| {
            let eps_1 = epsilon(beta, prep1, jd1);
            let eps_2 = epsilon(beta, prep2, jd2);
            let rho1 = state_with_coherence(prep1.alpha, 0.5 * eps_1)?;
            let rho2 = state_with_coherence(prep2.alpha, 0.5 * eps_2)?;
            Ok(TraceDistanceRecord {
                beta,
                eps_1,
                eps_2,
                d_closed: closed_form(prep1, prep2, eps_1, eps_2),
                d_eig: trace_distance(&rho1, &rho2)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceDistanceCurve {
        records,
        metadata: CurveMetadata {
            prep_1: *prep1,
            prep_2: *prep2,
            env_1: env1.summary(),
            env_2: env2.summary(),
        },
    })
}
