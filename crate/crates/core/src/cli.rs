//! Command-line front end: JSON run configs with explicit units, subcommand
//! dispatch and the self-test mode.

use std::ffi::OsString;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{
    builtin_scenarios, figure4_dataset, figure4_inputs, run_all, write_outputs, Family, OutputFormat, Scenario,
    DEFAULT_BETA_POINTS,
};
use crate::probe::{EvolutionSpec, PolarizationPrep};
use crate::spdc::{delta_spread, AngularGrid, PhysicalConfig};

pub const THREADS_ENV: &str = "SPDCPROBE_THREADS";

/// One angular environment, in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub pump_wavelength_nm: f64,
    pub theta0_deg: f64,
    pub crystal_length_mm: f64,
    pub pump_dk_inv_mm: f64,
    pub spectral_width_nm: f64,
    pub signal_center_wavelength_nm: f64,
}

impl EnvConfig {
    fn with_width(spectral_width_nm: f64) -> Self {
        Self {
            pump_wavelength_nm: 405.0,
            theta0_deg: 3.0,
            crystal_length_mm: 1.0,
            pump_dk_inv_mm: 18.0,
            spectral_width_nm,
            signal_center_wavelength_nm: 810.0,
        }
    }

    fn validate(&self, path: &str) -> Result<()> {
        for (key, v) in [
            ("pump_wavelength_nm", self.pump_wavelength_nm),
            ("theta0_deg", self.theta0_deg),
            ("crystal_length_mm", self.crystal_length_mm),
            ("pump_dk_inv_mm", self.pump_dk_inv_mm),
            ("spectral_width_nm", self.spectral_width_nm),
            ("signal_center_wavelength_nm", self.signal_center_wavelength_nm),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::out_of_range(format!("{path}.{key}"), v, "must be positive and finite"));
            }
        }
        if self.theta0_deg >= 90.0 {
            return Err(Error::out_of_range(format!("{path}.theta0_deg"), self.theta0_deg, "must be below 90"));
        }
        if self.spectral_width_nm >= self.signal_center_wavelength_nm {
            return Err(Error::out_of_range(
                format!("{path}.spectral_width_nm"),
                self.spectral_width_nm,
                "must be smaller than signal_center_wavelength_nm",
            ));
        }
        Ok(())
    }

    pub fn to_physical(&self) -> PhysicalConfig {
        PhysicalConfig {
            pump_wavelength: self.pump_wavelength_nm / 1e9,
            theta0: self.theta0_deg.to_radians(),
            crystal_length: self.crystal_length_mm / 1e3,
            pump_dk_fwhm: self.pump_dk_inv_mm * 1e3,
            spectral_width: self.spectral_width_nm / 1e9,
            signal_center_wavelength: self.signal_center_wavelength_nm / 1e9,
        }
    }
}

/// The strongly correlated environment (10 nm window); `sweep` variants start from it.
impl Default for EnvConfig {
    fn default() -> Self {
        Self::with_width(10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub alpha_rad: f64,
    pub gamma: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { alpha_rad: FRAC_PI_4, gamma: 0.91 }
    }
}

impl ProbeConfig {
    fn validate(&self, path: &str) -> Result<()> {
        if !(0.0..=FRAC_PI_2).contains(&self.alpha_rad) {
            return Err(Error::out_of_range(format!("{path}.alpha_rad"), self.alpha_rad, "must lie in [0, pi/2]"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::out_of_range(format!("{path}.gamma"), self.gamma, "must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn to_prep(&self) -> PolarizationPrep {
        PolarizationPrep { alpha: self.alpha_rad, gamma: self.gamma }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub theta_max_mrad: f64,
    pub n_theta: usize,
    pub n_omega: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = AngularGrid::default();
        Self { theta_max_mrad: g.theta_max * 1e3, n_theta: g.n_theta, n_omega: g.n_omega }
    }
}

impl GridConfig {
    fn validate(&self, path: &str) -> Result<()> {
        if !(self.theta_max_mrad.is_finite() && self.theta_max_mrad > 0.0) {
            return Err(Error::out_of_range(format!("{path}.theta_max_mrad"), self.theta_max_mrad, "must be positive"));
        }
        if self.n_theta.is_multiple_of(2) {
            return Err(Error::out_of_range(format!("{path}.n_theta"), self.n_theta as f64, "must be odd"));
        }
        if self.n_omega.is_multiple_of(2) {
            return Err(Error::out_of_range(format!("{path}.n_omega"), self.n_omega as f64, "must be odd"));
        }
        Ok(())
    }

    pub fn to_grid(&self) -> AngularGrid {
        AngularGrid { theta_max: self.theta_max_mrad / 1e3, n_theta: self.n_theta, n_omega: self.n_omega }
    }
}

/// `β` sampling. Without `beta_max_per_rad` the range is chosen from the
/// environments' `δ` spreads.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    pub points: usize,
    pub beta_max_per_rad: Option<f64>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self { points: DEFAULT_BETA_POINTS, beta_max_per_rad: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub format: OutputFormat,
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { format: OutputFormat::Csv, dir: PathBuf::from("out") }
    }
}

/// Full run description. Every key is optional; omitted ones take the baseline
/// of the trace-distance experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub id: String,
    pub env1: EnvConfig,
    pub env2: EnvConfig,
    pub probe1: ProbeConfig,
    pub probe2: ProbeConfig,
    pub grid: GridConfig,
    pub evolution: EvolutionConfig,
    pub output: OutputConfig,
    /// Builtin family (`3a`–`3d`, `4`) used by `figure` when `--id` is absent.
    pub figure: Option<String>,
    /// `env2` variants for `sweep`.
    pub variants: Vec<EnvConfig>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            id: "simulate".into(),
            env1: EnvConfig::with_width(45.0),
            env2: EnvConfig::with_width(10.0),
            probe1: ProbeConfig { alpha_rad: FRAC_PI_4, gamma: 0.91 },
            probe2: ProbeConfig { alpha_rad: FRAC_PI_4, gamma: 0.96 },
            grid: GridConfig::default(),
            evolution: EvolutionConfig::default(),
            output: OutputConfig::default(),
            figure: None,
            variants: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::Config { path: "id".into(), message: "must not be empty".into() });
        }
        self.env1.validate("env1")?;
        self.env2.validate("env2")?;
        self.probe1.validate("probe1")?;
        self.probe2.validate("probe2")?;
        self.grid.validate("grid")?;
        for (k, v) in self.variants.iter().enumerate() {
            v.validate(&format!("variants[{k}]"))?;
        }
        if self.evolution.points == 0 {
            return Err(Error::out_of_range("evolution.points", 0.0, "must be at least 1"));
        }
        if let Some(b) = self.evolution.beta_max_per_rad {
            if !(b.is_finite() && b > 0.0) {
                return Err(Error::out_of_range("evolution.beta_max_per_rad", b, "must be positive"));
            }
        }
        if let Some(f) = &self.figure {
            parse_figure(f).map_err(|_| Error::Config {
                path: "figure".into(),
                message: format!("unknown figure `{f}`"),
            })?;
        }
        Ok(())
    }

    /// `β` grid for the given environments.
    pub fn evolution_spec(&self, envs: &[PhysicalConfig]) -> Result<EvolutionSpec> {
        match self.evolution.beta_max_per_rad {
            Some(b) => EvolutionSpec::linear(b, self.evolution.points),
            None => {
                let mut sigma = f64::INFINITY;
                for env in envs {
                    sigma = sigma.min(delta_spread(env)?);
                }
                EvolutionSpec::auto(sigma, sigma, self.evolution.points)
            }
        }
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let (e1, e2) = (self.env1.to_physical(), self.env2.to_physical());
        let mut envs = vec![e1, e2];
        envs.extend(self.variants.iter().map(EnvConfig::to_physical));
        Ok(Scenario {
            id: self.id.clone(),
            prep1: self.probe1.to_prep(),
            prep2: self.probe2.to_prep(),
            env1: e1,
            env2: e2,
            grid: self.grid.to_grid(),
            evolution: self.evolution_spec(&envs)?,
        })
    }
}

/// Parses and validates a JSON run config. Omitted keys, including keys inside
/// partially given objects, take the baseline values. Schema errors carry the path
/// of the offending key.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let user: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config {
        path: String::new(),
        message: e.to_string(),
    })?;
    let mut merged = serde_json::to_value(RunConfig::default())?;
    merge(&mut merged, user);
    let cfg: RunConfig = serde_path_to_error::deserialize(merged).map_err(|e| {
        let path = e.path().to_string();
        Error::Config { path, message: e.into_inner().to_string() }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

fn merge(base: &mut serde_json::Value, over: serde_json::Value) {
    match (base, over) {
        (serde_json::Value::Object(b), serde_json::Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

pub fn serialize_config(cfg: &RunConfig) -> Result<String> {
    Ok(serde_json::to_string_pretty(cfg)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FigureId {
    Family(Family),
    Correlation,
}

fn parse_figure(s: &str) -> Result<FigureId> {
    match s.trim().to_ascii_lowercase().trim_start_matches("fig") {
        "4" => Ok(FigureId::Correlation),
        other => other.parse().map(FigureId::Family),
    }
}

#[derive(Debug, Parser)]
#[command(name = "spdcprobe", version, about = "Polarization probes of angular correlations in SPDC pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the single scenario described by a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// Run a builtin figure: 3a, 3b, 3c, 3d or 4.
    Figure {
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// Run the config's base scenario against each of its `variants`.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        format: Option<String>,
    },
    /// Run the analytic self-tests.
    Validate,
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

/// Runs the CLI with the process streams; returns the exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Exit codes: 0 on success, 1 when a run or self-test fails, 2 on usage errors.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return 2;
            }
            let _ = write!(out, "{text}");
            return 0;
        }
    };
    if let Err(msg) = configure_threads(std::env::var(THREADS_ENV).ok().as_deref()) {
        let _ = writeln!(err, "error: {msg}");
        return 2;
    }
    match execute(cli.command, out) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

/// Sizes the global rayon pool; `0` or unset keeps the default.
fn configure_threads(value: Option<&str>) -> std::result::Result<(), String> {
    let Some(v) = value else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV} must be a nonnegative integer, got `{v}`"))?;
    if n > 0 {
        // a pool configured earlier in the process stays in place
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn load_config(path: &Path) -> std::result::Result<RunConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    Ok(parse_config(&text)?)
}

fn output_target(cfg: &RunConfig, out: Option<PathBuf>, format: Option<String>) -> std::result::Result<(PathBuf, OutputFormat), Failure> {
    let format = match format {
        Some(f) => f.parse().map_err(|e: Error| Failure::Usage(e.to_string()))?,
        None => cfg.output.format,
    };
    Ok((out.unwrap_or_else(|| cfg.output.dir.clone()), format))
}

fn execute(command: Command, out: &mut dyn Write) -> std::result::Result<bool, Failure> {
    match command {
        Command::Simulate { config, out: dir, format } => {
            let cfg = load_config(&config)?;
            let (dir, format) = output_target(&cfg, dir, format)?;
            let results = run_all(&[cfg.scenario()?])?;
            write_outputs(&results, format, &dir)?;
            report(out, &results, &dir);
            Ok(true)
        }
        Command::Figure { id, config, out: dir, format } => {
            let cfg = match config {
                Some(p) => load_config(&p)?,
                None => RunConfig::default(),
            };
            let id = id
                .or_else(|| cfg.figure.clone())
                .ok_or_else(|| Failure::Usage("figure needs --id (3a, 3b, 3c, 3d or 4)".into()))?;
            let figure = parse_figure(&id).map_err(|_| Failure::Usage(format!("unknown figure `{id}`")))?;
            let (dir, format) = output_target(&cfg, dir, format)?;
            let results = match figure {
                FigureId::Family(f) => run_all(&builtin_scenarios(f)?)?,
                FigureId::Correlation => {
                    let (base, variants) = figure4_inputs()?;
                    figure4_dataset(&base, &variants)?
                }
            };
            write_outputs(&results, format, &dir)?;
            report(out, &results, &dir);
            Ok(true)
        }
        Command::Sweep { config, out: dir, format } => {
            let cfg = load_config(&config)?;
            if cfg.variants.is_empty() {
                return Err(Failure::Usage("sweep needs a nonempty `variants` list in the config".into()));
            }
            let (dir, format) = output_target(&cfg, dir, format)?;
            let variants: Vec<PhysicalConfig> = cfg.variants.iter().map(EnvConfig::to_physical).collect();
            let results = figure4_dataset(&cfg.scenario()?, &variants)?;
            write_outputs(&results, format, &dir)?;
            report(out, &results, &dir);
            Ok(true)
        }
        Command::Validate => Ok(self_test::run(out)),
    }
}

fn report(out: &mut dyn Write, results: &[crate::harness::SweepResult], dir: &Path) {
    for r in results {
        let c2 = r.c2.map_or_else(|| "n/a".to_string(), |c| format!("{c:.6}"));
        let _ = writeln!(out, "{:<24} C2 = {c2}  D0 = {:.6}  Dmax = {:.6}  delta_D_max = {:+.6}", r.scenario, r.d0, r.d_max, r.delta_d_max);
    }
    let _ = writeln!(out, "wrote {} result(s) to {}", results.len(), dir.display());
}

mod self_test {
    //! Analytic identities the numerics must reproduce.

    use std::io::Write;

    use crate::linalg::trace_distance;
    use crate::probe::{epsilon, evolved_state, trace_distance_closed, PolarizationPrep};
    use crate::spdc::{sinc, AngularGrid, AngularKernel, JointDistribution};

    fn separable(g: AngularGrid, f: impl Fn(f64) -> f64) -> JointDistribution {
        let axis = g.axis();
        let u: Vec<f64> = axis.iter().map(|x| (-0.5 * (x / 2e-3).powi(2)).exp()).collect();
        let d: Vec<f64> = axis.iter().map(|&x| f(x)).collect();
        JointDistribution::separable(g, &u, &d).expect("valid profile")
    }

    fn gaussian_fourier() -> f64 {
        let s = 1e-3;
        let jd = separable(AngularGrid::new(10e-3, 257, 3).unwrap(), |d| (-0.5 * (d / s).powi(2)).exp());
        let p = PolarizationPrep { alpha: 0.7, gamma: 0.9 };
        (0..200)
            .map(|k| {
                let beta = k as f64 * 25.0;
                (epsilon(beta, &p, &jd) - p.coherence() * (-0.5 * (beta * s).powi(2)).exp()).abs()
            })
            .fold(0.0, f64::max)
    }

    fn box_fourier() -> f64 {
        let g = AngularGrid::new(2e-3, 2049, 3).unwrap();
        let w = 2.0 * g.theta_max;
        let jd = separable(g, |_| 1.0);
        let p = PolarizationPrep { alpha: 0.6, gamma: 0.8 };
        (0..=400)
            .map(|k| {
                let beta = k as f64 * 20.0 / (400.0 * w);
                (epsilon(beta, &p, &jd) - p.coherence() * sinc(beta * w)).abs()
            })
            .fold(0.0, f64::max)
    }

    fn closed_vs_eigen() -> f64 {
        let jd1 = separable(AngularGrid::new(10e-3, 257, 3).unwrap(), |d| (-0.5 * (d / 1e-3).powi(2)).exp());
        let jd2 = separable(AngularGrid::new(10e-3, 257, 3).unwrap(), |d| (-0.5 * (d / 2.5e-3).powi(2)).exp());
        let mut worst: f64 = 0.0;
        for (a1, g1, a2, g2) in [(0.785, 0.91, 0.785, 0.96), (0.3, 0.5, 1.2, 1.0), (0.0, 1.0, 1.5, 0.2)] {
            let (p1, p2) = (PolarizationPrep { alpha: a1, gamma: g1 }, PolarizationPrep { alpha: a2, gamma: g2 });
            for k in 0..100 {
                let beta = k as f64 * 40.0;
                let closed = trace_distance_closed(beta, &p1, &jd1, &p2, &jd2);
                let eig = match (evolved_state(beta, &p1, &jd1), evolved_state(beta, &p2, &jd2)) {
                    (Ok(r1), Ok(r2)) => trace_distance(&r1, &r2).unwrap_or(f64::NAN),
                    _ => f64::NAN,
                };
                worst = worst.max((closed - eig).abs());
                if eig.is_nan() {
                    return f64::INFINITY;
                }
            }
        }
        worst
    }

    /// Relative gap between the kernel diagonal and the stored separable density.
    fn separability() -> f64 {
        let cfg = crate::spdc::PhysicalConfig::default();
        let grid = AngularGrid::new(30e-3, 129, 33).unwrap();
        let Ok(kernel) = AngularKernel::new(&cfg, &grid) else { return f64::INFINITY };
        let Ok(jd) = kernel.joint_distribution() else { return f64::INFINITY };
        let n = grid.n_theta;
        let diag: Vec<f64> = (0..n * n).map(|k| kernel.entry((k / n, k % n), (k / n, k % n)).re).collect();
        let scale = jd.densities()[0] / diag[0];
        let peak = jd.densities().iter().cloned().fold(0.0, f64::max);
        diag.iter()
            .zip(jd.densities())
            .map(|(h, p)| (h * scale - p).abs() / peak)
            .fold(0.0, f64::max)
    }

    type Check = (&'static str, fn() -> f64, f64);

    pub(super) fn run(out: &mut dyn Write) -> bool {
        let checks: [Check; 4] = [
            ("gaussian marginal -> gaussian epsilon", gaussian_fourier, 1e-6),
            ("box marginal -> sinc epsilon", box_fourier, 1e-6),
            ("closed-form D vs eigenvalue D", closed_vs_eigen, 1e-8),
            ("kernel diagonal is separable", separability, 1e-9),
        ];
        let mut ok = true;
        for (name, check, tol) in checks {
            let err = check();
            let pass = err < tol;
            ok &= pass;
            let _ = writeln!(out, "{} {name}: max error {err:.3e} (tolerance {tol:e})", if pass { "PASS" } else { "FAIL" });
        }
        ok
    }
}
