//! Subcommand implementations.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use log::{info, warn};
use num_complex::Complex64;
use serde::Serialize;

use emclosure::carleman::embed::demos::{lotka_volterra, riccati, rotation};
use emclosure::carleman::{
    build_m, coherent_tail_mass, coherent_vector, evolve, evolve_exact, integrate_classical, polynomialize_reduced,
    readout, Closure, FockBasis, PolySystem, ReducedLayout,
};
use emclosure::diagnostics::{compare, current_residual, energy_drift, observed_order, total_energy, CompareReport};
use emclosure::full::run_full;
use emclosure::kernel::max_abs;
use emclosure::reduced::{reconstruct_phi, run_reduced};
use emclosure::scenario::{gauss_residual, pure_gauge_wave};
use emclosure::snapshot::{read_snapshot, write_snapshot, SnapshotState};
use emclosure::{
    make_scenario, FullTrajectory, Grid1D, Params, Prepared, ReducedState, ReducedTrajectory, ScenarioKind,
    ScenarioSpec, StepNotes, Trajectory,
};

use crate::config::Config;

/// A configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

/// A check or tolerance that did not hold; maps to exit code 1.
#[derive(Debug)]
pub struct AssertionFailed(pub String);

impl fmt::Display for AssertionFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for AssertionFailed {}

/// Everything a run needs after the configuration has been resolved.
pub struct Setup {
    pub config: Config,
    pub grid: Grid1D,
    pub dt: f64,
    pub spec: ScenarioSpec,
    pub prepared: Prepared,
}

impl Setup {
    pub fn new(config: Config) -> anyhow::Result<Self> {
        config.validate().map_err(|e| ConfigError(format!("{e:#}")))?;
        let grid = config.grid().map_err(|e| ConfigError(format!("grid: {e}")))?;
        let dt = config.dt(&grid);
        if dt > 0.5 * grid.h() {
            warn!("time.dt = {dt} exceeds 0.5·h = {}; the run may be inaccurate or unstable", 0.5 * grid.h());
        }
        let spec = config.scenario.spec();
        let prepared =
            make_scenario(&spec, &config.params, &grid).map_err(|e| ConfigError(format!("scenario {}: {e}", spec.name)))?;
        Ok(Self { config, grid, dt, spec, prepared })
    }

    fn out_dir(&self) -> anyhow::Result<&Path> {
        let dir = self.config.output.dir.as_path();
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn write_config(&self, dir: &Path) -> anyhow::Result<()> {
        fs::write(dir.join("config.toml"), self.config.to_toml())?;
        Ok(())
    }
}

#[derive(Serialize)]
struct RunSummary {
    kind: &'static str,
    scenario: String,
    n: usize,
    length: f64,
    dt: f64,
    t_end: f64,
    frames: usize,
    background_charge: f64,
    energy_drift: Option<f64>,
    max_current_residual: f64,
    fallback_points: usize,
    floor_rule_points: usize,
    clamped_points: usize,
    negative_phi_points: usize,
    config: String,
}

fn totals(notes: &[StepNotes]) -> (usize, usize, usize, usize) {
    notes.iter().fold((0, 0, 0, 0), |(a, b, c, d), n| {
        (a + n.fallback_points, b + n.floor_rule_points, c + n.clamped_points, d + n.negative_phi_points)
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_frames<S>(dir: &Path, traj: &Trajectory<S>, setup: &Setup, wrap: impl Fn(&S) -> SnapshotState) -> anyhow::Result<()> {
    for (k, frame) in traj.frames.iter().enumerate() {
        let path = dir.join(format!("frame_{k:05}.bin"));
        write_snapshot(&path, &wrap(frame), &setup.prepared.params, Some(&setup.spec))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn residual_csv(rows: &[(f64, f64)]) -> String {
    let mut out = String::from("t,current_residual\n");
    for (t, r) in rows {
        out.push_str(&format!("{t:e},{r:e}\n"));
    }
    out
}

fn simulate_full(setup: &Setup) -> anyhow::Result<FullTrajectory> {
    let t = &setup.config.time;
    Ok(run_full(&setup.prepared.state, setup.dt, t.t_end, &setup.prepared.params, setup.config.output.every)?)
}

fn simulate_reduced(setup: &Setup) -> anyhow::Result<ReducedTrajectory> {
    let t = &setup.config.time;
    let s0 = setup.prepared.state.to_reduced();
    Ok(run_reduced(&s0, setup.dt, t.t_end, &setup.prepared.params, setup.config.output.every)?)
}

pub fn run_full_cmd(setup: &Setup) -> anyhow::Result<()> {
    let dir = setup.out_dir()?;
    setup.write_config(dir)?;
    let p = setup.prepared.params;
    let traj = simulate_full(setup)?;
    write_frames(dir, &traj, setup, |s| SnapshotState::Full(s.clone()))?;
    let residual = current_residual(&traj, &p)?;
    fs::write(dir.join("current_residual.csv"), residual_csv(&residual))?;
    let mut energy = String::from("t,energy\n");
    for s in &traj.frames {
        energy.push_str(&format!("{:e},{:e}\n", s.t(), total_energy(s, &p)));
    }
    fs::write(dir.join("energy.csv"), energy)?;
    let drift = energy_drift(&traj, &p);
    let (fallback, floor_rule, clamped, negative_phi) = totals(&traj.notes);
    let summary = RunSummary {
        kind: "full",
        scenario: setup.spec.name.to_string(),
        n: setup.grid.n(),
        length: setup.grid.length(),
        dt: setup.dt,
        t_end: setup.config.time.t_end,
        frames: traj.len(),
        background_charge: p.background_charge,
        energy_drift: Some(drift),
        max_current_residual: residual.iter().map(|r| r.1).fold(0.0, f64::max),
        fallback_points: fallback,
        floor_rule_points: floor_rule,
        clamped_points: clamped,
        negative_phi_points: negative_phi,
        config: setup.config.to_toml(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    println!("full run: {} frames, relative energy drift {drift:.3e}, output in {}", traj.len(), dir.display());
    Ok(())
}

pub fn run_reduced_cmd(setup: &Setup) -> anyhow::Result<()> {
    let dir = setup.out_dir()?;
    setup.write_config(dir)?;
    let p = setup.prepared.params;
    let traj = simulate_reduced(setup)?;
    write_frames(dir, &traj, setup, |s| SnapshotState::Reduced(s.clone()))?;
    let residual = current_residual(&traj, &p)?;
    fs::write(dir.join("current_residual.csv"), residual_csv(&residual))?;
    let (fallback, floor_rule, clamped, negative_phi) = totals(&traj.notes);
    if fallback > 0 {
        info!("free-field closure used at {fallback} points over the recorded frames");
    }
    let summary = RunSummary {
        kind: "reduced",
        scenario: setup.spec.name.to_string(),
        n: setup.grid.n(),
        length: setup.grid.length(),
        dt: setup.dt,
        t_end: setup.config.time.t_end,
        frames: traj.len(),
        background_charge: p.background_charge,
        energy_drift: None,
        max_current_residual: residual.iter().map(|r| r.1).fold(0.0, f64::max),
        fallback_points: fallback,
        floor_rule_points: floor_rule,
        clamped_points: clamped,
        negative_phi_points: negative_phi,
        config: setup.config.to_toml(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    println!("reduced run: {} frames, output in {}", traj.len(), dir.display());
    Ok(())
}

fn compare_runs(setup: &Setup) -> anyhow::Result<CompareReport> {
    let full = simulate_full(setup)?;
    let red = simulate_reduced(setup)?;
    Ok(compare(&full, &red)?)
}

pub fn compare_cmd(setup: &Setup, tolerance: f64) -> anyhow::Result<()> {
    let dir = setup.out_dir()?;
    setup.write_config(dir)?;
    let report = compare_runs(setup)?;
    fs::write(dir.join("compare.csv"), report.to_csv())?;
    #[derive(Serialize)]
    struct Summary {
        n: usize,
        dt: f64,
        t_end: f64,
        max_linf: f64,
        max_l2: f64,
        tolerance: f64,
        config: String,
    }
    write_json(
        &dir.join("summary.json"),
        &Summary {
            n: setup.grid.n(),
            dt: setup.dt,
            t_end: setup.config.time.t_end,
            max_linf: report.max_linf(),
            max_l2: report.max_l2(),
            tolerance,
            config: setup.config.to_toml(),
        },
    )?;
    println!("{report}");
    if report.max_linf() > tolerance {
        bail!(AssertionFailed(format!("max relative L∞ {:.3e} exceeds tolerance {tolerance:e}", report.max_linf())));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Demo {
    Riccati,
    Rotation,
    Lotka,
    ReducedTiny,
}

pub struct CarlemanArgs {
    pub demo: Demo,
    pub xi0: Vec<f64>,
    pub cutoff: u32,
    pub t_end: f64,
    /// RK4 step for the embedded evolution; the Taylor propagator when absent.
    pub dt: Option<f64>,
    pub n: usize,
    pub background_charge: f64,
}

fn tiny_reduced_state(g: Grid1D) -> ReducedState {
    let mut s = ReducedState::zeros(g);
    for j in 0..g.n() {
        let x = j as f64;
        s.b[0][j] = 1.0 + 0.1 * x;
        s.b[1][j] = 0.3 * (x + 1.0).cos();
        s.b[2][j] = -0.2;
        s.b[3][j] = 0.1;
        s.bdot[0][j] = 0.2 - 0.05 * x;
        s.bdot[1][j] = 0.1;
        s.bdot[3][j] = -0.1;
    }
    s
}

fn demo_system(args: &CarlemanArgs) -> anyhow::Result<(PolySystem, Vec<Complex64>)> {
    let xi = |defaults: &[f64]| -> anyhow::Result<Vec<Complex64>> {
        let v = if args.xi0.is_empty() { defaults.to_vec() } else { args.xi0.clone() };
        if v.len() != defaults.len() {
            bail!(ConfigError(format!("--xi0 needs {} value(s) for this system, got {}", defaults.len(), v.len())));
        }
        Ok(v.into_iter().map(|x| Complex64::new(x, 0.0)).collect())
    };
    Ok(match args.demo {
        Demo::Riccati => (riccati(), xi(&[0.5])?),
        Demo::Rotation => (rotation(), xi(&[0.3, 0.0])?),
        Demo::Lotka => (lotka_volterra(1.0, 0.5, 1.0, 0.5), xi(&[0.5, 0.4])?),
        Demo::ReducedTiny => {
            let g = Grid1D::tiny(args.n, 1.0).map_err(|e| ConfigError(format!("--n: {e}")))?;
            let p = Params { background_charge: args.background_charge, ..Params::default() };
            let sys = polynomialize_reduced(&g, &p).map_err(|e| ConfigError(e.to_string()))?;
            if !args.xi0.is_empty() {
                bail!(ConfigError("reduced-tiny builds its own initial state; --xi0 is not accepted".into()));
            }
            let lay = ReducedLayout::new(args.n, Closure::FreeField);
            let x0 = lay.pack(&tiny_reduced_state(g), &p)?.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
            (sys, x0)
        }
    })
}

pub fn carleman_cmd(args: &CarlemanArgs) -> anyhow::Result<()> {
    if args.cutoff < 1 {
        bail!(ConfigError(format!("--cutoff must be at least 1 (got {})", args.cutoff)));
    }
    if !(args.t_end >= 0.0 && args.t_end.is_finite()) {
        bail!(ConfigError(format!("--t-end must be >= 0 (got {})", args.t_end)));
    }
    if let Some(dt) = args.dt {
        if !(dt > 0.0 && dt.is_finite()) {
            bail!(ConfigError(format!("--dt must be positive (got {dt})")));
        }
    }
    let (sys, x0) = demo_system(args)?;
    let basis = FockBasis::new(sys.k(), args.cutoff);
    info!("{} modes, cutoff {}, Fock dimension {}", sys.k(), args.cutoff, basis.dim());
    let m = build_m(&sys, &basis)?;
    let v0 = coherent_vector(&x0, &basis);
    let v = match args.dt {
        Some(dt) => evolve(&m, &v0, args.t_end, dt)?,
        None => evolve_exact(&m, &v0, args.t_end)?,
    };
    let approx = readout(&v, &basis)?;
    let exact = match args.demo {
        Demo::Riccati => vec![x0[0] / (1.0 + x0[0] * args.t_end)],
        Demo::Rotation => {
            let (c, s) = (args.t_end.cos(), args.t_end.sin());
            vec![x0[0] * c + x0[1] * s, x0[1] * c - x0[0] * s]
        }
        _ => integrate_classical(&sys, &x0, args.t_end, 4000.max((args.t_end * 4000.0) as usize))?,
    };
    println!(
        "system {:?}: {} modes, cutoff {}, dimension {}, truncated initial mass {:.3e}",
        args.demo,
        sys.k(),
        args.cutoff,
        basis.dim(),
        coherent_tail_mass(&x0, &basis)
    );
    println!("{:>12}  {:>14}  {:>14}  {:>10}", "variable", "readout", "reference", "error");
    let mut worst = 0.0_f64;
    for (i, (a, e)) in approx.iter().zip(&exact).enumerate() {
        let err = (a - e).norm();
        worst = worst.max(err);
        println!("{:>12}  {:>14.10}  {:>14.10}  {err:>10.3e}", sys.names()[i], a.re, e.re);
    }
    println!("max error {worst:.3e}");
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct LadderRow {
    pub n: usize,
    pub h: f64,
    pub equivalence: f64,
    pub current_full: f64,
    pub current_reduced: f64,
    pub energy_drift: f64,
}

fn ladder_level(base: &Config, n: usize) -> anyhow::Result<LadderRow> {
    let mut config = base.clone();
    config.grid.n = n;
    config.time.dt = None;
    config.output.every = 1;
    config.output.dir = base.output.dir.join(format!("n{n}"));
    let setup = Setup::new(config)?;
    let p = setup.prepared.params;
    let full = simulate_full(&setup)?;
    let red = simulate_reduced(&setup)?;
    let report = compare(&full, &red)?;
    let dir = setup.out_dir()?;
    fs::write(dir.join("compare.csv"), report.to_csv())?;
    let worst = |r: Vec<(f64, f64)>| r.into_iter().map(|x| x.1).fold(0.0, f64::max);
    Ok(LadderRow {
        n,
        h: setup.grid.h(),
        equivalence: report.max_linf(),
        current_full: worst(current_residual(&full, &p)?),
        current_reduced: worst(current_residual(&red, &p)?),
        energy_drift: energy_drift(&full, &p),
    })
}

/// Run the scenario at every grid size with `dt = h/2`, one thread per level.
pub fn convergence_cmd(base: &Config, levels: &[usize]) -> anyhow::Result<()> {
    if levels.len() < 2 {
        bail!(ConfigError(format!("convergence needs at least two grid sizes, got {levels:?}")));
    }
    let rows: Vec<LadderRow> = std::thread::scope(|scope| {
        let handles: Vec<_> = levels.iter().map(|&n| scope.spawn(move || ladder_level(base, n))).collect();
        handles.into_iter().map(|h| h.join().expect("ladder level panicked")).collect::<anyhow::Result<_>>()
    })?;
    let order = |f: fn(&LadderRow) -> f64| -> Option<f64> {
        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.h, f(r))).collect();
        observed_order(&pts).ok()
    };
    #[derive(Serialize)]
    struct Orders {
        equivalence: Option<f64>,
        current_full: Option<f64>,
        current_reduced: Option<f64>,
        energy_drift: Option<f64>,
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        levels: &'a [LadderRow],
        observed_order: Orders,
        config: String,
    }
    let orders = Orders {
        equivalence: order(|r| r.equivalence),
        current_full: order(|r| r.current_full),
        current_reduced: order(|r| r.current_reduced),
        energy_drift: order(|r| r.energy_drift),
    };

    let dir = base.output.dir.as_path();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("config.toml"), base.to_toml())?;
    let mut csv = String::from("n,h,equivalence,current_full,current_reduced,energy_drift\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{:e},{:e},{:e},{:e},{:e}\n",
            r.n, r.h, r.equivalence, r.current_full, r.current_reduced, r.energy_drift
        ));
    }
    fs::write(dir.join("convergence.csv"), &csv)?;
    let fmt = |o: Option<f64>| o.map_or("n/a".to_string(), |v| format!("{v:.3}"));
    println!("{csv}");
    println!(
        "observed orders: equivalence {}, current (full) {}, current (reduced) {}, energy drift {}",
        fmt(orders.equivalence),
        fmt(orders.current_full),
        fmt(orders.current_reduced),
        fmt(orders.energy_drift)
    );
    write_json(&dir.join("summary.json"), &Summary { levels: &rows, observed_order: orders, config: base.to_toml() })?;
    Ok(())
}

struct CheckLine {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn check_line(name: &'static str, outcome: anyhow::Result<(bool, String)>) -> CheckLine {
    match outcome {
        Ok((pass, detail)) => CheckLine { name, pass, detail },
        Err(e) => CheckLine { name, pass: false, detail: format!("error: {e:#}") },
    }
}

fn packet_ladder(base: &Config) -> anyhow::Result<Vec<LadderRow>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = [64usize, 128].iter().map(|&n| scope.spawn(move || ladder_level(base, n))).collect();
        handles.into_iter().map(|h| h.join().expect("ladder level panicked")).collect()
    })
}

/// A quick invariant suite on small grids. Prints one line per check and
/// fails if any check fails.
pub fn check_cmd(out_dir: &Path) -> anyhow::Result<()> {
    let mut base = Config::default();
    base.time.t_end = 0.5;
    base.output.dir = out_dir.join("ladder");
    let mut lines = Vec::new();

    let ladder = packet_ladder(&base);
    let pair = |f: fn(&LadderRow) -> f64| -> anyhow::Result<(f64, f64, f64)> {
        let rows = ladder.as_ref().map_err(|e| anyhow::anyhow!("{e:#}"))?;
        let (a, b) = (f(&rows[0]), f(&rows[1]));
        Ok((a, b, observed_order(&[(rows[0].h, a), (rows[1].h, b)])?))
    };
    lines.push(check_line(
        "full/reduced equivalence",
        pair(|r| r.equivalence).map(|(a, b, p)| {
            (b <= 1e-2 && (1.6..=2.4).contains(&p), format!("N=64 {a:.2e}, N=128 {b:.2e}, order {p:.2} (2 ± 0.4)"))
        }),
    ));
    lines.push(check_line(
        "current conservation",
        pair(|r| r.current_full.max(r.current_reduced)).map(|(a, b, p)| (p >= 1.7, format!("{a:.2e} → {b:.2e}, order {p:.2} (≥ 1.7)"))),
    ));
    lines.push(check_line(
        "energy drift",
        pair(|r| r.energy_drift).map(|(a, b, p)| (p >= 1.7, format!("{a:.2e} → {b:.2e}, order {p:.2} (≥ 1.7)"))),
    ));

    lines.push(check_line("Gauss constraint", (|| {
        let g = Grid1D::new(128, 2.0 * std::f64::consts::PI)?;
        let prep = make_scenario(&ScenarioSpec::default(), &Params::default(), &g)?;
        let p = prep.params;
        let traj = run_full(&prep.state, 0.5 * g.h(), 0.5, &p, 8)?;
        let worst = traj
            .frames
            .iter()
            .map(|s| max_abs(&gauss_residual(&s.em.b[0], &s.em.bdot[1], &s.matter_intensity(), &p, &g)))
            .fold(0.0, f64::max);
        Ok((worst <= 1e-8, format!("max residual {worst:.2e} (≤ 1e-8)")))
    })()));

    lines.push(check_line("vacuum sector", (|| {
        let g = Grid1D::new(64, 2.0 * std::f64::consts::PI)?;
        let spec = ScenarioSpec::new(ScenarioKind::PureGaugeWave);
        let p = Params::default();
        let traj = run_reduced(&pure_gauge_wave(&spec, &g, 0.0), 0.5 * g.h(), 0.5, &p, 4)?;
        let mut worst = 0.0_f64;
        for s in &traj.frames {
            worst = worst.max(max_abs(&reconstruct_phi(s, &p)?));
        }
        let bound = 0.1 * g.h() * g.h();
        Ok((worst <= bound, format!("max |Φ| {worst:.2e} (≤ {bound:.2e})")))
    })()));

    lines.push(check_line("Carleman Riccati", (|| {
        let b = FockBasis::new(1, 16);
        let m = build_m(&riccati(), &b)?;
        let v = evolve_exact(&m, &coherent_vector(&[Complex64::new(0.5, 0.0)], &b), 1.0)?;
        let err = (readout(&v, &b)?[0] - 1.0 / 3.0).norm();
        Ok((err <= 1e-4, format!("cutoff 16, error {err:.2e} (≤ 1e-4)")))
    })()));

    lines.push(check_line("snapshot round trip", (|| {
        let g = Grid1D::new(32, 2.0 * std::f64::consts::PI)?;
        let spec = ScenarioSpec::default();
        let prep = make_scenario(&spec, &Params::default(), &g)?;
        fs::create_dir_all(out_dir)?;
        let path: PathBuf = out_dir.join("roundtrip.bin");
        let state = SnapshotState::Full(prep.state);
        write_snapshot(&path, &state, &prep.params, Some(&spec))?;
        let (back, _) = read_snapshot(&path)?;
        let same = back == state;
        Ok((same, format!("{} bytes, bit-exact {same}", fs::metadata(&path)?.len())))
    })()));

    let failed = lines.iter().filter(|l| !l.pass).count();
    for l in &lines {
        println!("[{}] {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    if failed > 0 {
        bail!(AssertionFailed(format!("{failed} of {} checks failed", lines.len())));
    }
    Ok(())
}
