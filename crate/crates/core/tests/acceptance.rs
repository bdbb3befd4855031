//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits nonzero when a
//! criterion fails, unless that failure is listed in `KNOWN_FAILURES` with its reason.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, LN_2};
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spdc_probe::harness::{
    builtin_scenarios, environment_config, figure4_dataset, figure4_inputs, run_scenario, run_with_environments,
    run_with_kernels, Family, Scenario, SweepResult,
};
use spdc_probe::linalg::{concurrence_two_qubit, purity, trace_distance};
use spdc_probe::probe::{
    epsilon, evolved_state, prepare_polarization, trace_distance_closed, visibility, EvolutionSpec, PolarizationPrep,
};
use spdc_probe::spdc::{
    pump_angular_frequency, sinc, wavelength_window_to_freq, AngularGrid, AngularKernel, Environment,
    JointDistribution, PhysicalConfig, SPEED_OF_LIGHT,
};

/// Criteria whose stated form cannot hold for this model, with the reason.
const KNOWN_FAILURES: &[(u32, &str)] = &[(
    3,
    "the (c) ordering as stated contradicts criteria 4 and 11: C falls as the pump spread grows, \
     and the maximal increase grows with C",
)];

type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn family(f: Family) -> Vec<SweepResult> {
    builtin_scenarios(f)
        .expect("builtin scenarios")
        .iter()
        .map(|s| run_scenario(s).expect("scenario runs"))
        .collect()
}

fn deltas(results: &[SweepResult]) -> Vec<f64> {
    results.iter().map(|r| r.delta_d_max).collect()
}

fn strictly_decreasing(v: &[f64], margin: f64) -> bool {
    v.windows(2).all(|w| w[0] > w[1] + margin)
}

fn fmt(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("[{}]", parts.join(", "))
}

fn separable(grid: AngularGrid, q: impl Fn(f64) -> f64) -> JointDistribution {
    let axis = grid.axis();
    let u: Vec<f64> = axis.iter().map(|x| (-0.5 * (x / 3e-3).powi(2)).exp()).collect();
    let d: Vec<f64> = axis.iter().map(|&x| q(x)).collect();
    JointDistribution::separable(grid, &u, &d).expect("valid profile")
}

/// Random even `δ` profile: a few mirrored Gaussian pairs and possibly a box.
fn random_profile(rng: &mut ChaCha8Rng) -> (Box<dyn Fn(f64) -> f64>, f64) {
    let bumps: Vec<(f64, f64, f64)> = (0..rng.gen_range(1..=3))
        .map(|_| (rng.gen_range(0.1..1.0), rng.gen_range(0.0..3e-3), rng.gen_range(0.4e-3..2e-3)))
        .collect();
    let box_half = if rng.gen_bool(0.3) { rng.gen_range(0.5e-3..4e-3) } else { 0.0 };
    let narrowest = bumps.iter().map(|b| b.2).fold(f64::INFINITY, f64::min);
    let f = move |d: f64| {
        let mut v: f64 = bumps
            .iter()
            .map(|&(a, mu, s)| a * ((-0.5 * ((d - mu) / s).powi(2)).exp() + (-0.5 * ((d + mu) / s).powi(2)).exp()))
            .sum();
        if d.abs() <= box_half {
            v += 0.5;
        }
        v
    };
    (Box::new(f), narrowest)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let grid = AngularGrid::new(10e-3, 257, 3).unwrap();
    let mut worst: f64 = 0.0;
    let mut samples = 0usize;
    for _ in 0..200 {
        let p1 = PolarizationPrep::new(rng.gen_range(0.0..FRAC_PI_2), rng.gen_range(0.0..=1.0)).unwrap();
        let p2 = PolarizationPrep::new(rng.gen_range(0.0..FRAC_PI_2), rng.gen_range(0.0..=1.0)).unwrap();
        let (f1, s1) = random_profile(&mut rng);
        let (f2, s2) = random_profile(&mut rng);
        let (jd1, jd2) = (separable(grid, f1), separable(grid, f2));
        let spec = EvolutionSpec::auto(s1, s2, 101).unwrap();
        for &beta in spec.values() {
            let closed = trace_distance_closed(beta, &p1, &jd1, &p2, &jd2);
            let r1 = evolved_state(beta, &p1, &jd1).unwrap();
            let r2 = evolved_state(beta, &p2, &jd2).unwrap();
            worst = worst.max((closed - trace_distance(&r1, &r2).unwrap()).abs());
            samples += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-8 && secs < 10.0,
        format!("max |D_closed - D_eig| = {worst:.2e} over {samples} samples of 200 scenarios; {secs:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let s = builtin_scenarios(Family::Fig3a).unwrap().remove(0);
    let r = run_scenario(&s).unwrap();
    let d0 = r.d0;
    let late = r.curve.records.last().unwrap();
    let limit = (s.prep1.alpha.cos().powi(2) - s.prep2.alpha.cos().powi(2)).abs();
    let pass = (d0 - 0.025).abs() < 1e-9 && (late.d_closed - limit).abs() < 1e-3;
    outcome(
        pass,
        format!(
            "D(0) = {d0:.12}; D(beta_max = {:.1}) = {:.3e} vs limit {limit}",
            late.beta, late.d_closed
        ),
    )
}

fn criterion_3(c: &[SweepResult], d: &[SweepResult]) -> Outcome {
    let (dc, dd) = (deltas(c), deltas(d));
    // c holds Δk₂ = 18, 24, 29; the stated order is (29) > (24) > (18)
    let c_rev: Vec<f64> = dc.iter().rev().cloned().collect();
    let c_ok = strictly_decreasing(&c_rev, 1e-4);
    let d_ok = strictly_decreasing(&dd, 1e-4);
    outcome(
        c_ok && d_ok,
        format!(
            "(c) dDmax for dk2 = 18, 24, 29: {} -> stated increase {}; (d) dDmax for dl2 = 10, 20, 30: {} -> stated decrease {}",
            fmt(&dc),
            if c_ok { "holds" } else { "violated" },
            fmt(&dd),
            if d_ok { "holds" } else { "violated" }
        ),
    )
}

/// Ranks with ties sharing their average rank.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

fn criterion_4() -> Outcome {
    let (base, variants) = figure4_inputs().unwrap();
    let results = figure4_dataset(&base, &variants).unwrap();
    let c: Vec<f64> = results.iter().map(|r| r.c2.unwrap().abs()).collect();
    let dd = deltas(&results);
    // sorted by |C₂|; equal environments give equal |C₂| and equal ΔD_max
    let mut strict = true;
    for w in 0..results.len() - 1 {
        if c[w + 1] > c[w] {
            strict &= dd[w + 1] > dd[w];
        } else {
            strict &= dd[w + 1] == dd[w];
        }
    }
    let rank_match = ranks(&c) == ranks(&dd);
    let rho = spearman(&c, &dd);
    outcome(
        strict && rank_match,
        format!("|C2| = {}; dDmax = {}; Spearman = {rho}", fmt(&c), fmt(&dd)),
    )
}

fn criterion_5(a: &[SweepResult]) -> Outcome {
    let dd = deltas(a);
    let pass = strictly_decreasing(&dd, 0.0) && dd[2] < dd[0];
    let sign = if dd[2] > 0.0 {
        "positive"
    } else if dd[2] < 0.0 {
        "negative"
    } else {
        "zero: D never exceeds D(0)"
    };
    outcome(pass, format!("dDmax for gamma2 = 0.96, 0.73, 0.52: {}; sign at 0.52 is {sign}", fmt(&dd)))
}

fn criterion_6(b: &[SweepResult]) -> Outcome {
    let dd = deltas(b);
    outcome(dd.iter().all(|&x| x > 0.0), format!("dDmax for alpha2 = pi/4, 0.675, 0.575: {}", fmt(&dd)))
}

fn criterion_7() -> Outcome {
    let grid = AngularGrid::default();
    let envs: Vec<Environment> = [(45.0, 18.0), (10.0, 18.0), (30.0, 29.0)]
        .iter()
        .map(|&(w, dk)| Environment::from_config(&environment_config(w, dk), &grid).unwrap())
        .collect();
    let mut family_gap: f64 = 0.0;
    for env in &envs {
        let spec = EvolutionSpec::auto(env.distribution.delta_std(), env.distribution.delta_std(), 81).unwrap();
        for gamma in [0.05, 0.3, 0.52, 0.73, 0.91, 0.96, 1.0] {
            let p = PolarizationPrep::new(FRAC_PI_4, gamma).unwrap();
            for &beta in spec.values() {
                let rho = evolved_state(beta, &p, &env.distribution).unwrap();
                let eps = epsilon(beta, &p, &env.distribution).abs();
                let conc = concurrence_two_qubit(&rho).unwrap();
                let vis = visibility(&rho).unwrap();
                family_gap = family_gap.max((conc - eps).abs()).max((vis - eps).abs());
            }
        }
    }
    let mut closed_gap: f64 = 0.0;
    for i in 0..20 {
        for j in 0..20 {
            let p = PolarizationPrep::new(FRAC_PI_2 * i as f64 / 19.0, j as f64 / 19.0).unwrap();
            let rho = prepare_polarization(&p).unwrap();
            closed_gap = closed_gap
                .max((purity(&rho) - p.purity()).abs())
                .max((concurrence_two_qubit(&rho).unwrap() - p.concurrence()).abs());
        }
    }
    outcome(
        family_gap < 1e-8 && closed_gap < 1e-8,
        format!("max |C - |eps||, |V - |eps|| = {family_gap:.2e}; closed-form purity/concurrence gap on 20x20 grid = {closed_gap:.2e}"),
    )
}

fn bit_identical(a: &SweepResult, b: &SweepResult) -> bool {
    a.curve.records.len() == b.curve.records.len()
        && a.curve.records.iter().zip(&b.curve.records).all(|(x, y)| {
            [x.beta, x.eps_1, x.eps_2, x.d_closed, x.d_eig]
                .iter()
                .zip([y.beta, y.eps_1, y.eps_2, y.d_closed, y.d_eig])
                .all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

fn criterion_8() -> Outcome {
    let s = builtin_scenarios(Family::Fig3d).unwrap().remove(1);
    let k1 = AngularKernel::new(&s.env1, &s.grid).unwrap();
    let k2 = AngularKernel::new(&s.env2, &s.grid).unwrap();
    let plain = run_with_kernels(&s, &k1, &k2).unwrap();

    let phased = k2
        .clone()
        .with_coherence_phase(|ts, ti| 4e2 * ts - 7e2 * ti + 3e4 * ts * ti + 1e6 * ts.powi(3));
    let omega = wavelength_window_to_freq(s.env2.spectral_width, s.env2.signal_center_wavelength).unwrap();
    let a = pump_angular_frequency(&s.env2) * s.env2.theta0 * s.env2.crystal_length / (4.0 * SPEED_OF_LIGHT);
    let tilted = k2.clone().with_spectral_tilt(3.0 * a / omega);

    let with_phase = run_with_kernels(&s, &k1, &phased).unwrap();
    let with_tilt = run_with_kernels(&s, &k1, &tilted).unwrap();
    let (p0, pt) = (k2.purity(), tilted.purity());
    let pass = bit_identical(&plain, &with_phase) && bit_identical(&plain, &with_tilt) && (p0 - pt).abs() > 1e-3;
    outcome(
        pass,
        format!(
            "D(beta) bit-identical under coherence phase and spectral tilt; dDmax = {:.9}; env2 purity {p0:.6} -> {pt:.6} with tilt",
            plain.delta_d_max
        ),
    )
}

fn criterion_9() -> Outcome {
    let p = PolarizationPrep::new(0.7, 0.93).unwrap();

    let s = 1e-3;
    let jd = separable(AngularGrid::new(10e-3, 257, 3).unwrap(), |d| (-0.5 * (d / s).powi(2)).exp());
    let gauss = (0..=400)
        .map(|k| {
            let beta = k as f64 * 8.0 / (400.0 * s);
            (epsilon(beta, &p, &jd) - p.coherence() * (-0.5 * (beta * s).powi(2)).exp()).abs()
        })
        .fold(0.0, f64::max);

    let g = AngularGrid::new(2e-3, 2049, 3).unwrap();
    let w = 2.0 * g.theta_max;
    let jd = separable(g, |_| 1.0);
    let boxed = (0..=400)
        .map(|k| {
            let beta = k as f64 * 20.0 / (400.0 * w);
            (epsilon(beta, &p, &jd) - p.coherence() * sinc(beta * w)).abs()
        })
        .fold(0.0, f64::max);

    // physical marginal: Gaussian from the pump spread, box from the spectral window
    let mut conv: f64 = 0.0;
    for (width, dk) in [(10.0, 18.0), (45.0, 18.0), (10.0, 29.0)] {
        let cfg: PhysicalConfig = environment_config(width, dk);
        let env = Environment::from_config(&cfg, &AngularGrid::default()).unwrap();
        let wp = pump_angular_frequency(&cfg);
        let sigma_g = cfg.pump_dk_fwhm * 2.0 * SPEED_OF_LIGHT / wp / (2.0 * (2.0 * LN_2).sqrt());
        let half = 4.0 * cfg.theta0 / wp * wavelength_window_to_freq(cfg.spectral_width, cfg.signal_center_wavelength).unwrap();
        let beta_max = 6.0 / env.distribution.delta_std();
        for k in 0..=400 {
            let beta = k as f64 * beta_max / 400.0;
            let want = p.coherence() * (-0.5 * (beta * sigma_g).powi(2)).exp() * sinc(beta * half);
            conv = conv.max((epsilon(beta, &p, &env.distribution) - want).abs());
        }
    }
    outcome(
        gauss < 1e-6 && boxed < 1e-6 && conv < 1e-6,
        format!("max pointwise error: Gaussian {gauss:.2e}, box {boxed:.2e}, Gaussian*box {conv:.2e}"),
    )
}

fn scalars(r: &SweepResult) -> [f64; 5] {
    [r.c2.unwrap(), r.purity_e2.unwrap(), r.d0, r.d_max, r.delta_d_max]
}

fn criterion_10() -> Outcome {
    let mut scenarios: Vec<Scenario> = builtin_scenarios(Family::Fig3c).unwrap();
    scenarios.extend(builtin_scenarios(Family::Fig3d).unwrap().into_iter().skip(1));
    scenarios.push(builtin_scenarios(Family::Fig3a).unwrap().remove(2));
    let mut worst: f64 = 0.0;
    let mut env1_gap: f64 = 0.0;
    for s in &scenarios {
        let coarse = run_scenario(s).unwrap();
        let mut fine_s = s.clone();
        fine_s.grid = s.grid.refined();
        let e1 = Environment::from_config(&fine_s.env1, &fine_s.grid).unwrap();
        let e2 = Environment::from_config(&fine_s.env2, &fine_s.grid).unwrap();
        let fine = run_with_environments(&fine_s, &e1, &e2).unwrap();
        for (a, b) in scalars(&coarse).iter().zip(scalars(&fine)) {
            worst = worst.max((a - b).abs());
        }
        let c1 = coarse.curve.metadata.env_1;
        env1_gap = env1_gap
            .max((c1.correlation.unwrap() - e1.correlation.unwrap()).abs())
            .max((c1.purity.unwrap() - e1.purity.unwrap()).abs());
    }
    outcome(
        worst < 1e-4 && env1_gap < 1e-4,
        format!(
            "largest change of (C2, purity_E2, D0, Dmax, dDmax) on refinement {worst:.2e}; of env1 (C, purity) {env1_gap:.2e}; {} scenarios",
            scenarios.len()
        ),
    )
}

fn criterion_11() -> Outcome {
    let grid = AngularGrid::default();
    let stats = |w: f64, dk: f64| {
        let e = Environment::from_config(&environment_config(w, dk), &grid).unwrap();
        (e.correlation.unwrap(), e.purity.unwrap())
    };
    let widths: Vec<f64> = (0..=7).map(|k| 10.0 + 5.0 * k as f64).collect();
    let dks: Vec<f64> = (18..=29).map(f64::from).collect();
    let mut ok = true;
    let mut notes = Vec::new();
    for dk in [18.0, 24.0, 29.0] {
        let (c, p): (Vec<f64>, Vec<f64>) = widths.iter().map(|&w| stats(w, dk)).unzip();
        ok &= strictly_decreasing(&c, 0.0) && strictly_decreasing(&p, 0.0);
        if dk == 18.0 {
            notes.push(format!("dk = 18: C over dl 10..45 nm = {}, purity = {}", fmt(&c), fmt(&p)));
        }
    }
    for w in [10.0, 30.0, 45.0] {
        let c: Vec<f64> = dks.iter().map(|&dk| stats(w, dk).0).collect();
        ok &= strictly_decreasing(&c, 0.0);
        if w == 10.0 {
            notes.push(format!("dl = 10: C over dk 18..29 = {}", fmt(&c)));
        }
    }
    outcome(ok, notes.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let fig3a = family(Family::Fig3a);
    let fig3b = family(Family::Fig3b);
    let fig3c = family(Family::Fig3c);
    let fig3d = family(Family::Fig3d);

    let criteria: Vec<Criterion> = vec![
        (1, "closed form vs eigenvalue trace distance", Box::new(criterion_1)),
        (2, "witness baseline D(0) and late-time limit", Box::new(criterion_2)),
        (3, "panel (c) and (d) orderings of dDmax", Box::new(|| criterion_3(&fig3c, &fig3d))),
        (4, "dDmax increasing in |C2|", Box::new(criterion_4)),
        (5, "probe degradation with gamma2", Box::new(|| criterion_5(&fig3a))),
        (6, "growth under alpha imbalance", Box::new(|| criterion_6(&fig3b))),
        (7, "concurrence/visibility/coherence identities", Box::new(criterion_7)),
        (8, "independence of angular coherences", Box::new(criterion_8)),
        (9, "analytic Fourier oracles", Box::new(criterion_9)),
        (10, "discretization stability", Box::new(criterion_10)),
        (11, "environment monotonicity", Box::new(criterion_11)),
    ];

    let mut unexpected = 0;
    let mut passed = 0;
    for (id, name, run) in &criteria {
        let o = run();
        let known = KNOWN_FAILURES.iter().find(|k| k.0 == *id);
        println!("{} criterion {id:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        match (o.pass, known) {
            (true, _) => passed += 1,
            (false, Some((_, why))) => println!("     known failure, recorded: {why}"),
            (false, None) => unexpected += 1,
        }
        if o.pass && known.is_some() {
            println!("     listed as a known failure but now passes");
        }
    }
    println!(
        "{passed}/{} criteria pass, {unexpected} unexpected failure(s), {:.1} s",
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
