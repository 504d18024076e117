use std::f64::consts::PI;

use emclosure::diagnostics::observed_order;
use emclosure::full::run_full;
use emclosure::kernel::max_abs;
use emclosure::reduced::{reconstruct_phi, reconstruct_phi_dot, run_reduced};
use emclosure::scenario::{gauss_residual, pure_gauge_wave};
use emclosure::*;

fn packet(n: usize) -> (Grid1D, Prepared) {
    let g = Grid1D::new(n, 2.0 * PI).unwrap();
    let prep = make_scenario(&ScenarioSpec::default(), &Params::default(), &g).unwrap();
    (g, prep)
}

#[test]
fn reconstruction_rate_matches_time_derivative() {
    // centred difference of Φ along the reduced run minus the Φ̇ formula
    let mut levels = Vec::new();
    for n in [64usize, 128, 256] {
        let (g, prep) = packet(n);
        let p = prep.params;
        let traj = run_reduced(&prep.state.to_reduced(), 0.5 * g.h(), 0.5, &p, 1).unwrap();
        let phis: Vec<_> = traj.frames.iter().map(|s| reconstruct_phi(s, &p).unwrap()).collect();
        let mut worst = 0.0_f64;
        for k in 1..traj.len() - 1 {
            let dt = traj.frames[k + 1].t - traj.frames[k - 1].t;
            let rate = reconstruct_phi_dot(&traj.frames[k], &phis[k], &p).unwrap();
            for j in 0..n {
                worst = worst.max(((phis[k + 1][j] - phis[k - 1][j]) / dt - rate[j]).abs());
            }
        }
        levels.push((g.h(), worst));
    }
    let order = observed_order(&levels).unwrap();
    assert!(order >= 1.9, "{levels:?} order {order}");
}

#[test]
fn reconstructed_intensity_stays_nonnegative_up_to_discretisation() {
    let (g, prep) = packet(128);
    let traj = run_reduced(&prep.state.to_reduced(), 0.5 * g.h(), 1.0, &prep.params, 4).unwrap();
    for s in &traj.frames {
        let phi = reconstruct_phi(s, &prep.params).unwrap();
        let min = phi.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min >= -g.h() * g.h(), "t={} min Φ {min}", s.t);
    }
    assert!(traj.notes.iter().all(|n| n.negative_phi_points == 0));
}

#[test]
fn full_run_preserves_gauss_constraint_and_positivity() {
    let (g, prep) = packet(128);
    let p = prep.params;
    let r0 = max_abs(&gauss_residual(&prep.state.em.b[0], &prep.state.em.bdot[1], &prep.state.matter_intensity(), &p, &g));
    let traj = run_full(&prep.state, 0.5 * g.h(), 1.0, &p, 5).unwrap();
    for s in &traj.frames {
        assert!(s.matter_intensity().iter().all(|&v| v >= 0.0));
        let r = max_abs(&gauss_residual(&s.em.b[0], &s.em.bdot[1], &s.matter_intensity(), &p, &g));
        assert!(r <= 10.0 * r0 + g.h() * g.h(), "t={} residual {r}", s.t());
    }
}

#[test]
fn vacuum_sector_is_invariant_for_the_reduced_system() {
    let g = Grid1D::new(128, 2.0 * PI).unwrap();
    let spec = ScenarioSpec::new(ScenarioKind::PureGaugeWave);
    let s0 = pure_gauge_wave(&spec, &g, 0.0);
    let p = Params::default();
    let traj = run_reduced(&s0, 0.5 * g.h(), 1.0, &p, 8).unwrap();
    for s in &traj.frames {
        let phi = reconstruct_phi(s, &p).unwrap();
        assert!(max_abs(&phi) <= 0.1 * g.h() * g.h());
        let exact = pure_gauge_wave(&spec, &g, s.t);
        let err = max_abs(&s.b[0].iter().zip(&exact.b[0]).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(err < 2.0 * g.h() * g.h(), "t={} err {err}", s.t);
    }
    assert!(traj.notes.iter().skip(1).all(|n| n.fallback_points == g.n()));
}

#[test]
fn full_integrator_returns_after_one_period() {
    let g = Grid1D::new(128, 2.0 * PI).unwrap();
    let prep = make_scenario(&ScenarioSpec::new(ScenarioKind::PureGaugeWave), &Params::default(), &g).unwrap();
    let traj = run_full(&prep.state, 0.5 * g.h(), 2.0 * PI, &prep.params, 100).unwrap();
    let last = traj.last().unwrap();
    let err = last
        .em
        .arrays()
        .zip(prep.state.em.arrays())
        .map(|(a, b)| max_abs(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>()))
        .fold(0.0, f64::max);
    assert!(err <= 1.25 * g.h() * g.h(), "err {err}");
}

#[test]
fn b0_guard_reports_time_of_failure() {
    let g = Grid1D::new(32, 2.0 * PI).unwrap();
    let mut s = ReducedState::zeros(g);
    s.b[0] = g.constant(1e-3);
    s.bdot[0] = g.constant(-1.0);
    let err = run_reduced(&s, 0.01, 1.0, &Params::default(), 1).unwrap_err();
    match err {
        Error::AtTime { t, source } => {
            assert!((0.0..0.01).contains(&t), "t={t}");
            assert!(matches!(*source, Error::GuardViolation { floor: Floor::B0, .. }));
        }
        other => panic!("unexpected {other:?}"),
    }
    let soft = Params { soft_guards: true, ..Params::default() };
    assert!(run_reduced(&s, 0.01, 0.05, &soft, 1).is_ok());
}

#[test]
fn unknown_scenario_name_is_rejected() {
    assert!(matches!("tachyon-gas".parse::<ScenarioKind>(), Err(Error::InvalidParameter(_))));
    for k in ScenarioKind::ALL {
        assert_eq!(k.name().parse::<ScenarioKind>().unwrap(), k);
    }
}
