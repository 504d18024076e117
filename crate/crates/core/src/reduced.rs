//! Matter-free integrator: the potential `B_μ` evolves on its own once the
//! matter intensity `Φ = φ²` is eliminated.
//!
//! Given `(B_μ, Ḃ_μ)` on a time slice, the accelerations follow in a fixed
//! order:
//!
//! 1. `Φ` from the μ=0 equation, which holds no second time derivative:
//!    `Φ = (D(D B_0 − Ḃ_1) + ρ_bg) / (2e²B_0)`.
//! 2. `Φ̇` from current conservation `(B^μΦ)_{,μ} = 0`:
//!    `Φ̇ = −[(Ḃ_0 − D B_1)Φ − B_1 DΦ] / B_0`.
//! 3. `B̈ᵢ` from the spatial equations with `Φ` substituted.
//! 4. `Φ̈` from the Φ-form matter equation
//!    `Φ̈ = ∂ₓ²Φ + ½(Φ̇² − (DΦ)²)/Φ + 2(e²B^μB_μ − m²)Φ`.
//! 5. `B̈_0` from the time derivative of current conservation:
//!    `(B̈_0 − D Ḃ_1)Φ + (Ḃ_0 − D B_1)Φ̇ + Ḃ_0Φ̇ − Ḃ_1 DΦ + B_0Φ̈ − B_1 DΦ̇ = 0`.
//!
//! Where `|Φ| < phi_floor` the step-5 closure loses its `B̈_0` coefficient;
//! those points use `B̈_0 = D Ḃ_1`, which keeps `∂^μB_μ` constant in time
//! (exact for free pure-gauge waves). The `½(…)/Φ` term is set to zero at
//! the same points.

use crate::error::{Error, Floor, Result};
use crate::kernel::{deriv_x, deriv_xx, lorentz_dot, max_abs, FieldArray, FourField};
use crate::state::{Params, ReducedState};
use crate::timestep::{rk4_step, step_plan, Fields};
use crate::trajectory::{ReducedTrajectory, StepNotes};

/// Matter intensity and its first two time derivatives, reconstructed from
/// electromagnetic data.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionBundle {
    pub phi: FieldArray,
    pub phidot: FieldArray,
    pub phiddot: FieldArray,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedAccel {
    pub bddot: FourField,
    pub bundle: ReconstructionBundle,
    /// Points where `B̈_0` used the free-field fallback.
    pub fallback: Vec<usize>,
    /// Points where the `½(…)/Φ` term was replaced by zero.
    pub floor_rule: Vec<usize>,
    pub clamped: usize,
}

/// `B_0` with the floor enforced (error, or clamped copy under soft guards).
fn guarded_b0(s: &ReducedState, p: &Params) -> Result<(FieldArray, usize)> {
    let mut b0 = s.b[0].clone();
    let clamped = p.guard_b0(&mut b0)?;
    Ok((b0, clamped))
}

fn reconstruct_phi_with(s: &ReducedState, b0: &[f64], p: &Params) -> FieldArray {
    let g = &s.grid;
    let e_field: Vec<f64> = deriv_x(&s.b[0], g).iter().zip(&s.bdot[1]).map(|(a, b)| a - b).collect();
    let div = deriv_x(&e_field, g);
    let c = 0.5 / p.e2();
    (0..g.n()).map(|j| c * (div[j] + p.background_charge) / b0[j]).collect()
}

/// `Φ` from the μ=0 equation.
pub fn reconstruct_phi(s: &ReducedState, p: &Params) -> Result<FieldArray> {
    let (b0, _) = guarded_b0(s, p)?;
    Ok(reconstruct_phi_with(s, &b0, p))
}

fn reconstruct_phi_dot_with(s: &ReducedState, b0: &[f64], phi: &[f64]) -> FieldArray {
    let g = &s.grid;
    let db1 = deriv_x(&s.b[1], g);
    let dphi = deriv_x(phi, g);
    (0..g.n())
        .map(|j| {
            let div = s.bdot[0][j] - db1[j]; // B^μ_{,μ}
            let transport = -s.b[1][j] * dphi[j]; // B^i Φ_{,i}
            -(div * phi[j] + transport) / b0[j]
        })
        .collect()
}

/// `Φ̇` from current conservation.
pub fn reconstruct_phi_dot(s: &ReducedState, phi: &[f64], p: &Params) -> Result<FieldArray> {
    let (b0, _) = guarded_b0(s, p)?;
    Ok(reconstruct_phi_dot_with(s, &b0, phi))
}

/// All four accelerations plus the reconstruction bundle.
pub fn accel_reduced(s: &ReducedState, p: &Params) -> Result<ReducedAccel> {
    let g = &s.grid;
    let n = g.n();
    let e2 = p.e2();
    let (b0, clamped) = guarded_b0(s, p)?;

    let phi = reconstruct_phi_with(s, &b0, p);
    let phidot = reconstruct_phi_dot_with(s, &b0, &phi);

    let dbdot0 = deriv_x(&s.bdot[0], g);
    let b1: FieldArray = (0..n).map(|j| dbdot0[j] - 2.0 * e2 * s.b[1][j] * phi[j]).collect();
    let transverse = |a: usize| -> FieldArray {
        let dd = deriv_x(&deriv_x(&s.b[a], g), g);
        (0..n).map(|j| dd[j] - 2.0 * e2 * s.b[a][j] * phi[j]).collect()
    };
    let (b2, b3) = (transverse(2), transverse(3));

    let lap = deriv_xx(&phi, g);
    let dphi = deriv_x(&phi, g);
    let bb = lorentz_dot(&s.b, &s.b);
    let mut floor_rule = Vec::new();
    let phiddot: FieldArray = (0..n)
        .map(|j| {
            let gradient = if phi[j].abs() >= p.phi_floor {
                0.5 * (phidot[j] * phidot[j] - dphi[j] * dphi[j]) / phi[j]
            } else {
                floor_rule.push(j);
                0.0
            };
            lap[j] + gradient + 2.0 * (e2 * bb[j] - p.m * p.m) * phi[j]
        })
        .collect();

    let dbdot1 = deriv_x(&s.bdot[1], g);
    let db1 = deriv_x(&s.b[1], g);
    let dphidot = deriv_x(&phidot, g);
    let remainder: Vec<f64> = (0..n)
        .map(|j| {
            (s.bdot[0][j] - db1[j]) * phidot[j] + s.bdot[0][j] * phidot[j] - s.bdot[1][j] * dphi[j]
                + s.b[0][j] * phiddot[j]
                - s.b[1][j] * dphidot[j]
        })
        .collect();

    let mut fallback = Vec::new();
    let b0ddot: FieldArray = (0..n)
        .map(|j| {
            if phi[j].abs() >= p.phi_floor {
                dbdot1[j] - remainder[j] / phi[j]
            } else {
                fallback.push(j);
                dbdot1[j]
            }
        })
        .collect();

    if !fallback.is_empty() {
        // R carries a factor of Φ or its derivatives; the largest coefficient
        // multiplying Φ is B_0·2(e²B^μB_μ − m²).
        let potential = (0..n).map(|j| (s.b[0][j] * 2.0 * (e2 * bb[j] - p.m * p.m)).abs()).fold(0.0, f64::max);
        let scale = 1.0 + potential + max_abs(&dbdot1).max(max_abs(&b1)).max(max_abs(&b2)).max(max_abs(&b3));
        let tol = 10.0 * p.phi_floor * scale;
        if let Some(&j) = fallback.iter().find(|&&j| remainder[j].abs() > tol) {
            if p.soft_guards {
                log::warn!("B_0 closure degenerate at grid point {j}; using free-field fallback");
            } else {
                return Err(Error::DegenerateClosure {
                    index: j,
                    coefficient: phi[j],
                    remainder: remainder[j],
                });
            }
        }
    }

    Ok(ReducedAccel {
        bddot: [b0ddot, b1, b2, b3],
        bundle: ReconstructionBundle { phi, phidot, phiddot },
        fallback,
        floor_rule,
        clamped,
    })
}

fn pack(s: &ReducedState) -> Fields {
    s.b.iter().chain(s.bdot.iter()).cloned().collect()
}

fn unpack(template: &ReducedState, t: f64, y: &Fields) -> ReducedState {
    let mut s = template.clone();
    s.t = t;
    for mu in 0..4 {
        s.b[mu].clone_from(&y[mu]);
        s.bdot[mu].clone_from(&y[4 + mu]);
    }
    s
}

fn step_reduced_noted(s: &ReducedState, dt: f64, p: &Params) -> Result<(ReducedState, StepNotes)> {
    let mut notes = StepNotes::default();
    let y = pack(s);
    let mut first = true;
    let next = rk4_step(s.t, &y, dt, |t, y| {
        let stage = unpack(s, t, y);
        let acc = accel_reduced(&stage, p)?;
        if first {
            notes.fallback_points = acc.fallback.len();
            notes.floor_rule_points = acc.floor_rule.len();
            notes.negative_phi_points = acc.bundle.phi.iter().filter(|&&v| v < -p.phi_floor).count();
            first = false;
        }
        notes.clamped_points += acc.clamped;
        let mut out: Fields = stage.bdot.to_vec();
        out.extend(acc.bddot);
        Ok(out)
    })?;
    let out = unpack(s, s.t + dt, &next);
    out.check_finite()?;
    if !p.soft_guards {
        if let Some((index, v)) = out.b[0].iter().enumerate().find(|(_, v)| v.abs() < p.b0_floor) {
            return Err(Error::GuardViolation { floor: Floor::B0, index, value: *v, threshold: p.b0_floor });
        }
    }
    p.guard_b0_crossing(&s.b[0], &out.b[0])?;
    Ok((out, notes))
}

/// Advance one RK4 step.
pub fn step_reduced(s: &ReducedState, dt: f64, p: &Params) -> Result<ReducedState> {
    step_reduced_noted(s, dt, p).map(|(s, _)| s)
}

/// Integrate to `t_end`, recording every `every`-th step and the final state.
pub fn run_reduced(s0: &ReducedState, dt: f64, t_end: f64, p: &Params, every: usize) -> Result<ReducedTrajectory> {
    p.validate()?;
    if !(dt > 0.0) || t_end < 0.0 {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t_end >= 0 (dt {dt}, t_end {t_end})")));
    }
    let every = every.max(1);
    let (steps, dt) = step_plan(dt, t_end);
    let mut traj = ReducedTrajectory::new();
    let mut s = s0.clone();
    traj.push(s.clone(), StepNotes::default());
    for k in 1..=steps {
        let (next, notes) = step_reduced_noted(&s, dt, p).map_err(|e| e.at_time(s.t))?;
        if notes.negative_phi_points > 0 {
            log::debug!("t={:.4}: reconstructed Φ negative at {} points", s.t, notes.negative_phi_points);
        }
        if notes.fallback_points > 0 || notes.floor_rule_points > 0 {
            log::debug!(
                "t={:.4}: closure fallback at {} points, Φ-floor rule at {} points",
                next.t,
                notes.fallback_points,
                notes.floor_rule_points
            );
        }
        s = next;
        if k % every == 0 || k == steps {
            traj.push(s.clone(), notes);
        }
    }
    Ok(traj)
}

/// Pointwise comparison of two expressions for `Φ`: the μ=0 reconstruction
/// and the contracted form `−B^μ(□B_μ − ∂_μ∂_νB^ν)/(2e²B^μB_μ)` (with the
/// background term removed). `□` uses the three-point Laplacian and the
/// divergence is differentiated with the central stencil, so on solutions
/// the two agree to discretisation order.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub residual: FieldArray,
    /// Points where `|B^μB_μ| < phi_floor`; their residual is reported as 0.
    pub masked: Vec<usize>,
}

impl IdentityCheck {
    pub fn max(&self) -> f64 {
        max_abs(&self.residual)
    }
}

pub fn phi_identity_check(s: &ReducedState, bddot: &FourField, p: &Params) -> Result<IdentityCheck> {
    let g = &s.grid;
    let n = g.n();
    let phi13 = reconstruct_phi(s, p)?;
    let div: Vec<f64> = {
        let db1 = deriv_x(&s.b[1], g);
        (0..n).map(|j| s.bdot[0][j] - db1[j]).collect()
    };
    let div_t: Vec<f64> = {
        let dbdot1 = deriv_x(&s.bdot[1], g);
        (0..n).map(|j| bddot[0][j] - dbdot1[j]).collect()
    };
    let ddiv = deriv_x(&div, g);
    let lap: Vec<FieldArray> = s.b.iter().map(|b| deriv_xx(b, g)).collect();
    let lhs0: Vec<f64> = (0..n).map(|j| bddot[0][j] - lap[0][j] - div_t[j]).collect();
    let lhs1: Vec<f64> = (0..n).map(|j| bddot[1][j] - lap[1][j] - ddiv[j]).collect();
    let lhs2: Vec<f64> = (0..n).map(|j| bddot[2][j] - lap[2][j]).collect();
    let lhs3: Vec<f64> = (0..n).map(|j| bddot[3][j] - lap[3][j]).collect();
    let bb = lorentz_dot(&s.b, &s.b);

    let mut masked = Vec::new();
    let residual = (0..n)
        .map(|j| {
            if bb[j].abs() < p.phi_floor {
                masked.push(j);
                return 0.0;
            }
            let contracted = s.b[0][j] * lhs0[j] - s.b[1][j] * lhs1[j] - s.b[2][j] * lhs2[j] - s.b[3][j] * lhs3[j];
            let phi18 = -(contracted - p.background_charge * s.b[0][j]) / (2.0 * p.e2() * bb[j]);
            (phi18 - phi13[j]).abs()
        })
        .collect();
    if !masked.is_empty() {
        log::warn!("identity check: |B^μB_μ| below floor at {} points (masked)", masked.len());
    }
    Ok(IdentityCheck { residual, masked })
}

/// `¼(Φ̇² − (DΦ)²)/Φ`, the matter kinetic term `φ_{,μ}φ^{,μ}` written in
/// terms of `Φ`. Points with `|Φ| < phi_floor` give zero.
pub fn matter_kinetic_from_intensity(bundle: &ReconstructionBundle, s: &ReducedState, p: &Params) -> FieldArray {
    let dphi = deriv_x(&bundle.phi, &s.grid);
    bundle
        .phi
        .iter()
        .zip(&bundle.phidot)
        .zip(&dphi)
        .map(|((f, fd), fx)| if f.abs() >= p.phi_floor { 0.25 * (fd * fd - fx * fx) / f } else { 0.0 })
        .collect()
}
