//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints its `PASS`/`FAIL` line with the measured quantities;
//! the process exits nonzero if any criterion fails or panics.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::OnceLock;

use num_complex::Complex64;

use emclosure::carleman::embed::demos::{linear, riccati};
use emclosure::carleman::*;
use emclosure::diagnostics::{compare, current_residual, energy_drift, observed_order};
use emclosure::full::run_full;
use emclosure::kernel::max_abs;
use emclosure::reduced::{accel_reduced, phi_identity_check, reconstruct_phi, run_reduced};
use emclosure::snapshot::{read_snapshot, write_snapshot, SnapshotState};
use emclosure::*;

const LADDER: [usize; 3] = [128, 256, 512];
const T_END: f64 = 1.0;

/// Frozen regression constants for the pure-gauge period test, calibrated
/// on N ∈ {64, …, 512} where the measured values were 1.118 and 1/12.
const C_PERIOD: f64 = 1.25;
const C_VACUUM_PHI: f64 = 0.1;

static PASSED: AtomicBool = AtomicBool::new(false);

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("[{}] {id:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    PASSED.store(pass, Ordering::SeqCst);
}

struct Level {
    h: f64,
    equivalence: f64,
    current_full: f64,
    current_reduced: f64,
    drift: f64,
    identity: f64,
}

fn worst(r: &[(f64, f64)]) -> f64 {
    r.iter().map(|x| x.1).fold(0.0, f64::max)
}

fn matter_ladder() -> &'static [Level] {
    static CELL: OnceLock<Vec<Level>> = OnceLock::new();
    CELL.get_or_init(|| {
        LADDER
            .iter()
            .map(|&n| {
                let g = Grid1D::new(n, 2.0 * PI).unwrap();
                let prep = make_scenario(&ScenarioSpec::default(), &Params::default(), &g).unwrap();
                let p = prep.params;
                let dt = 0.5 * g.h();
                let full = run_full(&prep.state, dt, T_END, &p, 1).unwrap();
                let red = run_reduced(&prep.state.to_reduced(), dt, T_END, &p, 1).unwrap();
                let mut identity = 0.0_f64;
                for s in red.frames.iter().step_by(8) {
                    let acc = accel_reduced(s, &p).unwrap();
                    let chk = phi_identity_check(s, &acc.bddot, &p).unwrap();
                    assert!(chk.masked.is_empty());
                    identity = identity.max(chk.max());
                }
                Level {
                    h: g.h(),
                    equivalence: compare(&full, &red).unwrap().max_linf(),
                    current_full: worst(&current_residual(&full, &p).unwrap()),
                    current_reduced: worst(&current_residual(&red, &p).unwrap()),
                    drift: energy_drift(&full, &p),
                    identity,
                }
            })
            .collect()
    })
}

fn order_of(f: impl Fn(&Level) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = matter_ladder().iter().map(|l| (l.h, f(l))).collect();
    observed_order(&pts).unwrap()
}

fn criterion_01_oracle_equivalence() {
    let l = matter_ladder();
    let (e256, e512) = (l[1].equivalence, l[2].equivalence);
    let ratio = e256 / e512;
    report(
        1,
        "full vs reduced equivalence",
        e256 <= 1e-3 && (2.6..=5.4).contains(&ratio),
        format!("max rel L∞ N=256 {e256:.3e} (≤ 1e-3), N=512 {e512:.3e}, ratio {ratio:.2} (in [2.6, 5.4])"),
    );
}

fn criterion_02_convergence_order() {
    let p = order_of(|l| l.equivalence);
    report(2, "equivalence convergence order", (p - 2.0).abs() <= 0.3, format!("observed order {p:.3} (2.0 ± 0.3)"));
}

fn criterion_03_current_conservation() {
    let pf = order_of(|l| l.current_full);
    let pr = order_of(|l| l.current_reduced);
    report(
        3,
        "current conservation order",
        pf >= 1.7 && pr >= 1.7,
        format!("full {pf:.3}, reduced {pr:.3} (≥ 1.7)"),
    );
}

fn criterion_04_energy_drift() {
    let p = order_of(|l| l.drift);
    let drifts: Vec<String> = matter_ladder().iter().map(|l| format!("{:.2e}", l.drift)).collect();
    report(4, "canonical energy drift order", p >= 1.7, format!("drifts {drifts:?}, observed order {p:.3} (≥ 1.7)"));
}

fn criterion_05_pure_gauge_period() {
    let spec = ScenarioSpec::new(ScenarioKind::PureGaugeWave);
    let mut ok = true;
    let mut detail = Vec::new();
    for n in [128usize, 256] {
        let g = Grid1D::new(n, 2.0 * PI).unwrap();
        let prep = make_scenario(&spec, &Params::default(), &g).unwrap();
        let s0 = prep.state.to_reduced();
        let (h, dt) = (g.h(), 0.5 * g.h());
        let period = 2.0 * PI / (2.0 * PI * spec.wavenumber / g.length());
        let traj = run_reduced(&s0, dt, period, &prep.params, 4).unwrap();
        let last = traj.last().unwrap();
        let err = last
            .arrays()
            .zip(s0.arrays())
            .map(|(a, b)| max_abs(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
            .fold(0.0, f64::max);
        let phi = traj
            .frames
            .iter()
            .map(|f| max_abs(&reconstruct_phi(f, &prep.params).unwrap()))
            .fold(0.0, f64::max);
        let bound = C_PERIOD * (h * h + dt.powi(4));
        ok &= err <= bound && phi <= C_VACUUM_PHI * h * h;
        detail.push(format!("N={n}: err {err:.3e} ≤ {bound:.3e}, max|Φ| {phi:.3e} ≤ {:.3e}", C_VACUUM_PHI * h * h));
    }
    report(5, "pure-gauge period regression", ok, detail.join("; "));
}

fn criterion_06_identity() {
    let l = matter_ladder();
    let (i256, i512) = (l[1].identity, l[2].identity);
    let ratio = i256 / i512;
    let c = i256 / (l[1].h * l[1].h);
    report(
        6,
        "Φ identity residual",
        c <= 5.0 && (2.6..=5.4).contains(&ratio),
        format!("N=256 {i256:.3e} (= {c:.2}·h²), N=512 {i512:.3e}, ratio {ratio:.2} (in [2.6, 5.4])"),
    );
}

fn criterion_07_riccati() {
    let exact = 0.5 / (1.0 + 0.5);
    let errs: Vec<f64> = (4..=16)
        .step_by(2)
        .map(|n| {
            let b = FockBasis::new(1, n);
            let m = build_m(&riccati(), &b).unwrap();
            let v = evolve_exact(&m, &coherent_vector(&[Complex64::new(0.5, 0.0)], &b), 1.0).unwrap();
            (readout(&v, &b).unwrap()[0] - exact).norm()
        })
        .collect();
    let monotone = errs.windows(2).all(|w| w[1] <= w[0]);
    let last = *errs.last().unwrap();
    report(
        7,
        "Carleman Riccati cutoff convergence",
        monotone && last <= 1e-4,
        format!("errors {:?}, monotone {monotone}, N=16 {last:.3e} (≤ 1e-4)", errs.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>()),
    );
}

fn criterion_08_structural_identities() {
    // commutators below the top shell
    let b = FockBasis::new(3, 6);
    let l = ladder_matrices(&b);
    let mut comm = 0.0_f64;
    for i in 0..3 {
        for j in 0..3 {
            let c = l.a[i].matmul(&l.adag[j]).sub(&l.adag[j].matmul(&l.a[i]));
            for col in 0..b.dim() {
                if b.state(col).iter().sum::<u32>() == b.cutoff() {
                    continue;
                }
                for row in 0..b.dim() {
                    let want = if i == j && row == col { 1.0 } else { 0.0 };
                    comm = comm.max((c.get(row, col) - want).norm());
                }
            }
            comm = comm.max(l.a[i].matmul(&l.a[j]).sub(&l.a[j].matmul(&l.a[i])).max_abs());
            comm = comm.max(l.adag[i].matmul(&l.adag[j]).sub(&l.adag[j].matmul(&l.adag[i])).max_abs());
        }
    }
    // eigenproperty against the top-shell bound
    let xi = [Complex64::new(0.4, 0.1), Complex64::new(-0.2, 0.0), Complex64::new(0.0, 0.3)];
    let v = coherent_vector(&xi, &b);
    let top = coherent_shell_weight(&xi, b.cutoff()).sqrt();
    let mut eig_ok = true;
    let mut eig = 0.0_f64;
    for i in 0..3 {
        let av = l.a[i].mul_vec(&v);
        let d = av.iter().zip(&v).map(|(a, w)| (a - xi[i] * w).norm_sqr()).sum::<f64>().sqrt();
        eig_ok &= d <= xi[i].norm() * top * (1.0 + 1e-9) + 1e-16;
        eig = eig.max(d);
    }
    // linear flow readout
    let lambda = Complex64::new(-0.5, 1.0);
    let b1 = FockBasis::new(1, 20);
    let xi0 = Complex64::new(0.3, 0.0);
    assert!(coherent_tail_mass(&[xi0], &b1) <= 1e-12);
    let m = build_m(&linear(lambda), &b1).unwrap();
    let v0 = coherent_vector(&[xi0], &b1);
    let lin = [0.25, 0.5, 1.0]
        .iter()
        .map(|&t| {
            let r = readout(&evolve(&m, &v0, t, 1e-3).unwrap(), &b1).unwrap()[0];
            (r - xi0 * (lambda * t).exp()).norm()
        })
        .fold(0.0, f64::max);
    report(
        8,
        "Carleman structural identities",
        comm < 1e-13 && eig_ok && lin <= 1e-8,
        format!("commutator defect {comm:.1e}, eigen defect {eig:.1e} (top-shell bound), linear readout error {lin:.1e} (≤ 1e-8)"),
    );
}

fn criterion_09_carleman_reduced() {
    let g = Grid1D::tiny(1, 1.0).unwrap();
    let p = Params { background_charge: 0.5, ..Params::default() };
    let sys = polynomialize_reduced(&g, &p).unwrap();
    let lay = ReducedLayout::new(1, Closure::FreeField);
    let mut s = ReducedState::zeros(g);
    s.b = [vec![1.0], vec![0.3], vec![-0.2], vec![0.1]];
    s.bdot = [vec![0.2], vec![0.1], vec![0.0], vec![-0.1]];
    let x0: Vec<Complex64> = lay.pack(&s, &p).unwrap().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    let t = 0.5;
    let classical = integrate_classical(&sys, &x0, t, 4000).unwrap();
    let errs: Vec<f64> = (1..=8u32)
        .map(|n| {
            let b = FockBasis::new(sys.k(), n);
            let m = build_m(&sys, &b).unwrap();
            let v = evolve(&m, &coherent_vector(&x0, &b), t, 0.01).unwrap();
            let r = readout(&v, &b).unwrap();
            r.iter().zip(&classical).map(|(a, c)| (a - c).norm()).fold(0.0, f64::max)
        })
        .collect();
    let monotone = errs.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    let converging = errs[7] <= 1e-2 * errs[0];

    let mut manifold = 0.0_f64;
    for n in [1usize, 2, 3, 4] {
        let g = Grid1D::tiny(n, 1.0).unwrap();
        let sys = polynomialize_reduced(&g, &p).unwrap();
        let lay = ReducedLayout::new(n, Closure::FreeField);
        let mut s = ReducedState::zeros(g);
        for j in 0..n {
            let x = j as f64;
            s.b[0][j] = 1.0 + 0.1 * x;
            s.b[1][j] = 0.2 * (x + 1.0).sin();
            s.bdot[0][j] = 0.2 - 0.05 * x;
            s.bdot[2][j] = 0.1 * x.cos();
        }
        let x0: Vec<Complex64> = lay.pack(&s, &p).unwrap().into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        for k in 1..=5 {
            let x = integrate_classical(&sys, &x0, 0.1 * k as f64, 400 * k).unwrap();
            for j in 0..n {
                manifold = manifold.max((x[lay.u(j)] * x[lay.b(0, j)] - 1.0).norm());
            }
        }
    }
    report(
        9,
        "Carleman on tiny reduced system",
        monotone && converging && manifold <= 1e-8,
        format!(
            "n=1, t={t}: errors over N=1..8 {:?}; u·B_0 defect {manifold:.1e} (≤ 1e-8, n=1..4, t ≤ 0.5)",
            errs.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>()
        ),
    );
}

fn criterion_10_determinism_and_persistence() {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid1D::new(128, 2.0 * PI).unwrap();
    let spec = ScenarioSpec::default();
    let run = |tag: &str| -> (Vec<u8>, std::path::PathBuf) {
        let prep = make_scenario(&spec, &Params::default(), &g).unwrap();
        let traj = run_full(&prep.state, 0.5 * g.h(), 0.5, &prep.params, 10).unwrap();
        let path = dir.path().join(format!("{tag}.bin"));
        let last = SnapshotState::Full(traj.last().unwrap().clone());
        write_snapshot(&path, &last, &prep.params, Some(&spec)).unwrap();
        (std::fs::read(&path).unwrap(), path)
    };
    let (a, path_a) = run("a");
    let (b, path_b) = run("b");
    let meta_a = std::fs::read(emclosure::snapshot::sidecar_path(&path_a)).unwrap();
    let meta_b = std::fs::read(emclosure::snapshot::sidecar_path(&path_b)).unwrap();
    let identical = a == b && meta_a == meta_b;

    let (back, _) = read_snapshot(&path_a).unwrap();
    let path_c = dir.path().join("c.bin");
    write_snapshot(&path_c, &back, &read_snapshot(&path_a).unwrap().1.params, Some(&spec)).unwrap();
    let round_trip = std::fs::read(&path_c).unwrap() == a;
    report(
        10,
        "determinism and snapshot round trip",
        identical && round_trip,
        format!("repeat runs byte-identical {identical}, write→read→write bit-exact {round_trip} ({} bytes)", a.len()),
    );
}

fn main() -> ExitCode {
    let criteria: [(&str, fn()); 10] = [
        ("criterion_01_oracle_equivalence", criterion_01_oracle_equivalence),
        ("criterion_02_convergence_order", criterion_02_convergence_order),
        ("criterion_03_current_conservation", criterion_03_current_conservation),
        ("criterion_04_energy_drift", criterion_04_energy_drift),
        ("criterion_05_pure_gauge_period", criterion_05_pure_gauge_period),
        ("criterion_06_identity", criterion_06_identity),
        ("criterion_07_riccati", criterion_07_riccati),
        ("criterion_08_structural_identities", criterion_08_structural_identities),
        ("criterion_09_carleman_reduced", criterion_09_carleman_reduced),
        ("criterion_10_determinism_and_persistence", criterion_10_determinism_and_persistence),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = Vec::new();
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        PASSED.store(false, Ordering::SeqCst);
        if catch_unwind(AssertUnwindSafe(run)).is_err() {
            println!("[FAIL] {name}: panicked before reporting");
        }
        if !PASSED.load(Ordering::SeqCst) {
            failed.push(name);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} failed: {failed:?}", failed.len());
        ExitCode::FAILURE
    }
}
