//! Reference integrator for the coupled matter + field system.
//!
//! Evolves `(φ, φ̇, Bᵢ, Ḃᵢ)` explicitly and recovers `B_0`, `Ḃ_0` from the
//! μ=0 constraint at every stage. Field equations, with `Φ = φ²` and
//! `D` the central difference:
//!
//! ```text
//! φ̈   = ∂ₓ²φ + (e²B^μB_μ − m²)φ
//! B̈_1 = D Ḃ_0 − 2e²B_1Φ
//! B̈_a = D D B_a − 2e²B_aΦ        (a = 2, 3)
//! ```
//!
//! Where `Φ < phi_floor` the constraint does not fix `Ḃ_0`; there `B_0` and
//! `Ḃ_0` are carried by the integrator with `B̈_0 = D Ḃ_1`.

use crate::error::{Error, Result};
use crate::kernel::{deriv_x, deriv_xx, lorentz_dot, FieldArray};
use crate::scenario::{solve_gauss_constraint, solve_gauss_rate};
use crate::state::{FullState, Params};
use crate::timestep::{rk4_step, step_plan, Fields};
use crate::trajectory::{FullTrajectory, StepNotes};

/// Accelerations `(φ̈, [B̈_1, B̈_2, B̈_3])` of a full state.
pub fn accel_full(s: &FullState, p: &Params) -> (FieldArray, [FieldArray; 3]) {
    let g = s.grid();
    let em = &s.em;
    let e2 = p.e2();
    let bb = lorentz_dot(&em.b, &em.b);
    let lap = deriv_xx(&s.phi, &g);
    let phi_ddot: FieldArray = (0..g.n())
        .map(|j| lap[j] + (e2 * bb[j] - p.m * p.m) * s.phi[j])
        .collect();
    let phi2 = s.matter_intensity();
    let db0 = deriv_x(&em.bdot[0], &g);
    let b1: FieldArray = (0..g.n()).map(|j| db0[j] - 2.0 * e2 * em.b[1][j] * phi2[j]).collect();
    let transverse = |a: usize| -> FieldArray {
        let dd = deriv_x(&deriv_x(&em.b[a], &g), &g);
        (0..g.n()).map(|j| dd[j] - 2.0 * e2 * em.b[a][j] * phi2[j]).collect()
    };
    (phi_ddot, [b1, transverse(2), transverse(3)])
}

/// Overwrite `B_0` and `Ḃ_0` with their constraint values. Returns the
/// number of points where `Φ < phi_floor` (carried `Ḃ_0`).
pub fn apply_constraint(s: &mut FullState, p: &Params) -> Result<usize> {
    let g = s.grid();
    let phi2 = s.matter_intensity();
    let carried = phi2.iter().filter(|&&v| v < p.phi_floor).count();
    if carried == g.n() {
        return Ok(carried);
    }
    let em = &mut s.em;
    em.b[0] = solve_gauss_constraint(&s.phi, [&em.bdot[1], &em.bdot[2], &em.bdot[3]], p, &g)?;
    let rate = s.phi.iter().zip(&s.phidot).map(|(a, b)| 2.0 * a * b).collect::<Vec<_>>();
    let solved = solve_gauss_rate(&em.b[0], &em.b[1], &phi2, &rate, p, &g);
    for j in 0..g.n() {
        if phi2[j] >= p.phi_floor {
            em.bdot[0][j] = solved[j];
        }
    }
    Ok(carried)
}

fn pack(s: &FullState) -> Fields {
    let mut y = Vec::with_capacity(10);
    y.push(s.phi.clone());
    y.push(s.phidot.clone());
    y.extend(s.em.b.iter().cloned());
    y.extend(s.em.bdot.iter().cloned());
    y
}

fn unpack(template: &FullState, t: f64, y: &Fields) -> FullState {
    let mut s = template.clone();
    s.em.t = t;
    s.phi.clone_from(&y[0]);
    s.phidot.clone_from(&y[1]);
    for mu in 0..4 {
        s.em.b[mu].clone_from(&y[2 + mu]);
        s.em.bdot[mu].clone_from(&y[6 + mu]);
    }
    s
}

fn rhs(s: &FullState, p: &Params) -> Fields {
    let g = s.grid();
    let (phi_ddot, bddot) = accel_full(s, p);
    let [b1, b2, b3] = bddot;
    vec![
        s.phidot.clone(),
        phi_ddot,
        s.em.bdot[0].clone(),
        s.em.bdot[1].clone(),
        s.em.bdot[2].clone(),
        s.em.bdot[3].clone(),
        deriv_x(&s.em.bdot[1], &g),
        b1,
        b2,
        b3,
    ]
}

/// Advance one step of size `dt` (negative steps run backwards).
pub fn step_full(s: &FullState, dt: f64, p: &Params) -> Result<FullState> {
    step_full_noted(s, dt, p).map(|(s, _)| s)
}

fn step_full_noted(s: &FullState, dt: f64, p: &Params) -> Result<(FullState, StepNotes)> {
    let y = pack(s);
    let next = rk4_step(s.t(), &y, dt, |t, y| {
        let mut stage = unpack(s, t, y);
        apply_constraint(&mut stage, p)?;
        Ok(rhs(&stage, p))
    })?;
    let mut out = unpack(s, s.t() + dt, &next);
    let carried = apply_constraint(&mut out, p)?;
    let clamped = p.guard_b0(&mut out.em.b[0])?;
    p.guard_b0_crossing(&s.em.b[0], &out.em.b[0])?;
    out.check_finite()?;
    Ok((
        out,
        StepNotes { fallback_points: carried, clamped_points: clamped, ..StepNotes::default() },
    ))
}

/// Integrate to `t_end`, recording every `every`-th step and the final state.
pub fn run_full(s0: &FullState, dt: f64, t_end: f64, p: &Params, every: usize) -> Result<FullTrajectory> {
    p.validate()?;
    if !(dt > 0.0) || t_end < 0.0 {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t_end >= 0 (dt {dt}, t_end {t_end})")));
    }
    let every = every.max(1);
    let (steps, dt) = step_plan(dt, t_end);
    let mut traj = FullTrajectory::new();
    let mut s = s0.clone();
    traj.push(s.clone(), StepNotes::default());
    for k in 1..=steps {
        let (next, notes) = step_full_noted(&s, dt, p).map_err(|e| e.at_time(s.t()))?;
        s = next;
        if k % every == 0 || k == steps {
            traj.push(s.clone(), notes);
        }
    }
    Ok(traj)
}
