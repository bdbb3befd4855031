//! Scenario definitions for the trace-distance figures, sweep execution and
//! result serialization.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probe::{compute_curve, EvolutionSpec, PolarizationPrep, TraceDistanceCurve};
use crate::spdc::{delta_spread, AngularGrid, AngularKernel, Environment, PhysicalConfig};

/// Number of `β` samples in builtin scenarios.
pub const DEFAULT_BETA_POINTS: usize = 401;

pub const CURVE_HEADER: [&str; 5] = ["beta", "eps_1", "eps_2", "D_closed", "D_eig"];
pub const SUMMARY_HEADER: [&str; 6] = ["scenario", "C2", "purity_E2", "D0", "Dmax", "delta_D_max"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    pub prep1: PolarizationPrep,
    pub prep2: PolarizationPrep,
    pub env1: PhysicalConfig,
    pub env2: PhysicalConfig,
    pub grid: AngularGrid,
    pub evolution: EvolutionSpec,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() || self.id.contains(['/', '\\']) {
            return Err(Error::Config {
                path: "id".into(),
                message: format!("`{}` is not a usable scenario id", self.id),
            });
        }
        self.prep1.validate()?;
        self.prep2.validate()?;
        self.env1.validate()?;
        self.env2.validate()?;
        self.grid.validate()
    }
}

/// Curve of one scenario plus the scalars read off it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scenario: String,
    pub curve: TraceDistanceCurve,
    pub d0: f64,
    pub d_max: f64,
    pub delta_d_max: f64,
    /// Angular correlation of environment 2.
    pub c2: Option<f64>,
    /// Angular purity of environment 2.
    pub purity_e2: Option<f64>,
}

impl SweepResult {
    pub fn from_curve(scenario: impl Into<String>, curve: TraceDistanceCurve) -> Self {
        let d0 = curve.initial();
        let d_max = curve.maximum();
        Self {
            scenario: scenario.into(),
            c2: curve.metadata.env_2.correlation,
            purity_e2: curve.metadata.env_2.purity,
            d0,
            d_max,
            delta_d_max: d_max - d0,
            curve,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    Fig3a,
    Fig3b,
    Fig3c,
    Fig3d,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Fig3a, Family::Fig3b, Family::Fig3c, Family::Fig3d];

    pub fn tag(self) -> &'static str {
        match self {
            Family::Fig3a => "fig3a",
            Family::Fig3b => "fig3b",
            Family::Fig3c => "fig3c",
            Family::Fig3d => "fig3d",
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        let key = key.strip_prefix("fig").unwrap_or(&key);
        match key {
            "3a" => Ok(Family::Fig3a),
            "3b" => Ok(Family::Fig3b),
            "3c" => Ok(Family::Fig3c),
            "3d" => Ok(Family::Fig3d),
            _ => Err(Error::Config {
                path: "family".into(),
                message: format!("unknown figure family `{s}`"),
            }),
        }
    }
}

/// Probe 1 of every builtin scenario: `α₁ = π/4`, `γ₁ = 0.91`.
pub fn baseline_prep1() -> PolarizationPrep {
    PolarizationPrep { alpha: FRAC_PI_4, gamma: 0.91 }
}

/// Probe 2 of families (c) and (d): `α₂ = π/4`, `γ₂ = 0.96`.
pub fn baseline_prep2() -> PolarizationPrep {
    PolarizationPrep { alpha: FRAC_PI_4, gamma: 0.96 }
}

/// Environment with the default crystal and pump, a spectral window of `width_nm`
/// and a pump spread of `dk_inv_mm`.
pub fn environment_config(width_nm: f64, dk_inv_mm: f64) -> PhysicalConfig {
    PhysicalConfig::default()
        .with_spectral_width_nm(width_nm)
        .with_pump_dk_inv_mm(dk_inv_mm)
}

/// `β` grid long enough for the slower of the given environments' coherences to
/// vanish, from the analytic `δ` spreads.
pub fn evolution_for(envs: &[PhysicalConfig], points: usize) -> Result<EvolutionSpec> {
    let mut sigma = f64::INFINITY;
    for env in envs {
        sigma = sigma.min(delta_spread(env)?);
    }
    EvolutionSpec::auto(sigma, sigma, points)
}

fn scenario(
    id: String,
    prep2: PolarizationPrep,
    env1: PhysicalConfig,
    env2: PhysicalConfig,
) -> Result<Scenario> {
    Ok(Scenario {
        id,
        prep1: baseline_prep1(),
        prep2,
        env1,
        env2,
        grid: AngularGrid::default(),
        evolution: evolution_for(&[env1, env2], DEFAULT_BETA_POINTS)?,
    })
}

/// The three scenarios of a family, ordered as its varied parameter is listed:
/// `γ₂` = 0.96, 0.73, 0.52 (3a); `α₂` = π/4, 0.675, 0.575 (3b);
/// `Δk₂` = 18, 24, 29 mm⁻¹ (3c); `Δλ₂` = 10, 20, 30 nm (3d).
pub fn builtin_scenarios(family: Family) -> Result<Vec<Scenario>> {
    let env1 = environment_config(45.0, 18.0);
    let narrow = environment_config(10.0, 18.0);
    let tag = family.tag();
    match family {
        Family::Fig3a => [0.96, 0.73, 0.52]
            .iter()
            .map(|&g| {
                let prep2 = PolarizationPrep { alpha: FRAC_PI_4, gamma: g };
                scenario(format!("{tag}_gamma2_{}", digits(g)), prep2, env1, narrow)
            })
            .collect(),
        Family::Fig3b => [(FRAC_PI_4, "pi4"), (0.675, "0675"), (0.575, "0575")]
            .iter()
            .map(|&(a, name)| {
                let prep2 = PolarizationPrep { alpha: a, gamma: 0.96 };
                scenario(format!("{tag}_alpha2_{name}"), prep2, env1, narrow)
            })
            .collect(),
        Family::Fig3c => [18.0, 24.0, 29.0]
            .iter()
            .map(|&dk| {
                let env2 = environment_config(10.0, dk);
                scenario(format!("{tag}_dk2_{dk}"), baseline_prep2(), env1, env2)
            })
            .collect(),
        Family::Fig3d => [10.0, 20.0, 30.0]
            .iter()
            .map(|&w| {
                let env2 = environment_config(w, 18.0);
                scenario(format!("{tag}_dl2_{w}"), baseline_prep2(), env1, env2)
            })
            .collect(),
    }
}

/// `0.96` → `"096"`.
fn digits(x: f64) -> String {
    format!("{x}").replace('.', "")
}

/// Base scenario and the six `env2` variants of figure 4: the `Δk₂` sweep of
/// family 3c followed by the `Δλ₂` sweep of 3d, sharing one `β` grid.
pub fn figure4_inputs() -> Result<(Scenario, Vec<PhysicalConfig>)> {
    let env1 = environment_config(45.0, 18.0);
    let variants: Vec<PhysicalConfig> = [(10.0, 18.0), (10.0, 24.0), (10.0, 29.0), (10.0, 18.0), (20.0, 18.0), (30.0, 18.0)]
        .iter()
        .map(|&(w, dk)| environment_config(w, dk))
        .collect();
    let mut all = variants.clone();
    all.push(env1);
    let base = Scenario {
        id: "fig4".into(),
        prep1: baseline_prep1(),
        prep2: baseline_prep2(),
        env1,
        env2: env1,
        grid: AngularGrid::default(),
        evolution: evolution_for(&all, DEFAULT_BETA_POINTS)?,
    };
    Ok((base, variants))
}

/// Runs one scenario. Deterministic: no randomness, and the curve is ordered by `β`.
pub fn run_scenario(s: &Scenario) -> Result<SweepResult> {
    s.validate()?;
    let env1 = Environment::from_config(&s.env1, &s.grid)?;
    let env2 = if s.env2 == s.env1 {
        env1.clone()
    } else {
        Environment::from_config(&s.env2, &s.grid)?
    };
    run_with_environments(s, &env1, &env2)
}

/// Runs a scenario against prebuilt environments; `s.env1`, `s.env2` and `s.grid`
/// are not consulted.
pub fn run_with_environments(s: &Scenario, env1: &Environment, env2: &Environment) -> Result<SweepResult> {
    let curve = compute_curve(&s.evolution, &s.prep1, env1, &s.prep2, env2)?;
    Ok(SweepResult::from_curve(s.id.clone(), curve))
}

/// Runs a scenario against explicit kernels, e.g. ones carrying extra phases.
pub fn run_with_kernels(s: &Scenario, k1: &AngularKernel, k2: &AngularKernel) -> Result<SweepResult> {
    run_with_environments(s, &Environment::from_kernel(k1)?, &Environment::from_kernel(k2)?)
}

/// Runs scenarios in parallel; results come back sorted by id.
pub fn run_all(scenarios: &[Scenario]) -> Result<Vec<SweepResult>> {
    let mut seen = BTreeSet::new();
    for s in scenarios {
        if !seen.insert(s.id.as_str()) {
            return Err(Error::DuplicateScenario(s.id.clone()));
        }
    }
    let mut results = scenarios.par_iter().map(run_scenario).collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    Ok(results)
}

/// One result per `env2` variant of `base`, sorted by `|C₂|` (ties keep input
/// order). Variant `k` gets the id `<base id>_v<k>`.
pub fn figure4_dataset(base: &Scenario, variants: &[PhysicalConfig]) -> Result<Vec<SweepResult>> {
    if variants.is_empty() {
        return Err(Error::Config {
            path: "variants".into(),
            message: "at least one environment variant is required".into(),
        });
    }
    base.validate()?;
    let env1 = Environment::from_config(&base.env1, &base.grid)?;
    let mut results = variants
        .par_iter()
        .enumerate()
        .map(|(k, cfg)| {
            let s = Scenario {
                id: format!("{}_v{k}", base.id),
                env2: *cfg,
                ..base.clone()
            };
            s.validate()?;
            let env2 = Environment::from_config(cfg, &base.grid)?;
            run_with_environments(&s, &env1, &env2)
        })
        .collect::<Result<Vec<_>>>()?;
    let key = |r: &SweepResult| r.c2.map_or(f64::INFINITY, f64::abs);
    results.sort_by(|a, b| key(a).total_cmp(&key(b)));
    Ok(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Svg => "svg",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "svg" => Ok(OutputFormat::Svg),
            _ => Err(Error::UnknownFormat(s.to_string())),
        }
    }
}

/// Writes `<scenario>.<ext>` per result and `summary.<ext>` into `dir`, creating it
/// if needed. Results are written in the order given.
pub fn write_outputs(results: &[SweepResult], format: OutputFormat, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let ext = format.extension();
    for r in results {
        let path = dir.join(format!("{}.{ext}", r.scenario));
        match format {
            OutputFormat::Csv => fs::write(path, curve_csv(r)?)?,
            OutputFormat::Json => fs::write(path, serde_json::to_string_pretty(r)?)?,
            OutputFormat::Svg => fs::write(path, curve_svg(std::slice::from_ref(r), &r.scenario))?,
        }
    }
    let summary = dir.join(format!("summary.{ext}"));
    match format {
        OutputFormat::Csv => fs::write(summary, summary_csv(results)?)?,
        OutputFormat::Json => fs::write(summary, serde_json::to_string_pretty(results)?)?,
        OutputFormat::Svg => fs::write(summary, curve_svg(results, "trace distance"))?,
    }
    Ok(())
}

/// Reads a `summary.json` written by [`write_outputs`].
pub fn read_json_summary(path: &Path) -> Result<Vec<SweepResult>> {
    Ok(serde_json::from_slice(&fs::read(path)?)?)
}

fn csv_bytes(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

/// Curve table with the columns of [`CURVE_HEADER`].
pub fn curve_csv(r: &SweepResult) -> Result<Vec<u8>> {
    csv_bytes(
        &CURVE_HEADER,
        r.curve.records.iter().map(|rec| {
            [rec.beta, rec.eps_1, rec.eps_2, rec.d_closed, rec.d_eig]
                .iter()
                .map(f64::to_string)
                .collect()
        }),
    )
}

/// One row per result with the columns of [`SUMMARY_HEADER`].
pub fn summary_csv(results: &[SweepResult]) -> Result<Vec<u8>> {
    csv_bytes(
        &SUMMARY_HEADER,
        results.iter().map(|r| {
            vec![
                r.scenario.clone(),
                opt(r.c2),
                opt(r.purity_e2),
                r.d0.to_string(),
                r.d_max.to_string(),
                r.delta_d_max.to_string(),
            ]
        }),
    )
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// `D(β)` of each result as a polyline on shared axes.
pub fn curve_svg(results: &[SweepResult], title: &str) -> String {
    let (w, h, pad) = (640.0, 400.0, 56.0);
    let beta_max = results
        .iter()
        .flat_map(|r| r.curve.records.last().map(|rec| rec.beta))
        .fold(0.0, f64::max);
    let ds = results.iter().flat_map(|r| r.curve.records.iter().map(|rec| rec.d_closed));
    let (lo, hi) = ds.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (0.0, 1.0) };
    let span = hi - lo;
    let (lo, hi) = (lo - 0.05 * span, hi + 0.05 * span);
    let x = |b: f64| pad + if beta_max > 0.0 { b / beta_max } else { 0.0 } * (w - 2.0 * pad);
    let y = |d: f64| h - pad - (d - lo) / (hi - lo) * (h - 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{pad} {pad} V{} H{}" fill="none" stroke="black"/>"#,
        h - pad,
        w - pad
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">β (rad⁻¹)</text>"#, w / 2.0, h - 14.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">D(β)</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (v, anchor, px, py) in [
        (lo, "end", pad - 6.0, y(lo)),
        (hi, "end", pad - 6.0, y(hi)),
    ] {
        let _ = writeln!(s, r#"<text x="{px}" y="{py:.2}" text-anchor="{anchor}" font-size="11">{v:.4}</text>"#);
    }
    let _ = writeln!(s, r#"<text x="{pad}" y="{}" text-anchor="middle" font-size="11">0</text>"#, h - pad + 16.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="11">{beta_max:.1}</text>"#,
        w - pad,
        h - pad + 16.0
    );
    for (k, r) in results.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = r
            .curve
            .records
            .iter()
            .map(|rec| format!("{:.2},{:.2}", x(rec.beta), y(rec.d_closed)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            w - pad - 150.0,
            pad + 14.0 * (k as f64 + 1.0),
            escape(&r.scenario)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
