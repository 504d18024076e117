//! Constraint-consistent initial data.
//!
//! The μ=0 field equation carries no second time derivative. In the
//! discretisation used throughout the crate it reads
//!
//! ```text
//! D(D B_0 − Ḃ_1) = 2e²Φ B_0 − ρ_bg
//! ```
//!
//! which, given free data `φ, Ḃᵢ`, is a screened Poisson problem for `B_0`.
//! Differentiating it in time and eliminating `B̈_1` with the μ=1 equation
//! `B̈_1 = D Ḃ_0 − 2e²B_1Φ` leaves the discrete charge balance
//! `Ḃ_0Φ + B_0Φ̇ = D(B_1Φ)`, which fixes `Ḃ_0` wherever `Φ > 0`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::elliptic::solve_screened_poisson;
use crate::error::{Error, Floor, Result};
use crate::kernel::{deriv_x, max_abs, FieldArray, Grid1D};
use crate::state::{FullState, Params, ReducedState};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[default]
    MatterPacket,
    PureGaugeWave,
    VacuumOffset,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::MatterPacket,
        ScenarioKind::PureGaugeWave,
        ScenarioKind::VacuumOffset,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::MatterPacket => "matter-packet",
            ScenarioKind::PureGaugeWave => "pure-gauge-wave",
            ScenarioKind::VacuumOffset => "vacuum-offset",
        }
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scenario name {s:?}")))
    }
}

/// Scenario selection and its shape parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioSpec {
    pub name: ScenarioKind,
    /// Matter amplitude `A` (matter-packet).
    pub amplitude: f64,
    /// Gaussian width of the matter bump.
    pub width: f64,
    /// Integer mode number; the angular wavenumber is `2π·wavenumber/L`.
    pub wavenumber: f64,
    /// Target mean of `B_0`.
    pub offset: f64,
    /// Amplitude of the transverse and longitudinal seed fields.
    pub em_amplitude: f64,
    /// Uniform matter level under the bump, relative to `amplitude`.
    pub pedestal: f64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            name: ScenarioKind::MatterPacket,
            amplitude: 0.5,
            width: 0.8,
            wavenumber: 1.0,
            offset: 1.0,
            em_amplitude: 0.1,
            pedestal: 0.5,
        }
    }
}

impl ScenarioSpec {
    /// Defaults for `name`. The pure-gauge wave has `B_0 = c + ω cos(…)`,
    /// so its offset defaults to 2 to keep `B_0` away from zero at ω = 1.
    pub fn new(name: ScenarioKind) -> Self {
        let offset = match name {
            ScenarioKind::PureGaugeWave => 2.0,
            _ => 1.0,
        };
        Self { name, offset, ..Self::default() }
    }

    fn angular_wavenumber(&self, g: &Grid1D) -> f64 {
        2.0 * PI * self.wavenumber / g.length()
    }
}

/// An initial state together with the parameters it was built for (the
/// background charge is fixed during construction).
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    pub state: FullState,
    pub params: Params,
}

/// Pointwise residual of the discrete μ=0 equation,
/// `D(D B_0 − Ḃ_1) − 2e²ΦB_0 + ρ_bg`.
pub fn gauss_residual(b0: &[f64], bdot1: &[f64], phi2: &[f64], p: &Params, g: &Grid1D) -> FieldArray {
    let e_field: Vec<f64> = deriv_x(b0, g).iter().zip(bdot1).map(|(a, b)| a - b).collect();
    let div = deriv_x(&e_field, g);
    (0..g.n())
        .map(|j| div[j] - 2.0 * p.e2() * phi2[j] * b0[j] + p.background_charge)
        .collect()
}

/// Largest magnitude among the terms of the μ=0 equation; the scale for
/// relative residuals.
pub fn gauss_scale(b0: &[f64], bdot1: &[f64], phi2: &[f64], p: &Params, g: &Grid1D) -> f64 {
    let ddb = deriv_x(&deriv_x(b0, g), g);
    let db = deriv_x(bdot1, g);
    let src: Vec<f64> = phi2.iter().zip(b0).map(|(f, b)| 2.0 * p.e2() * f * b).collect();
    max_abs(&ddb)
        .max(max_abs(&db))
        .max(max_abs(&src))
        .max(p.background_charge.abs())
}

/// Solve the μ=0 equation for `B_0` given `φ` and the spatial `Ḃᵢ`.
pub fn solve_gauss_constraint(
    phi: &[f64],
    bdot_spatial: [&[f64]; 3],
    p: &Params,
    g: &Grid1D,
) -> Result<FieldArray> {
    let s: Vec<f64> = phi.iter().map(|v| 2.0 * p.e2() * v * v).collect();
    let r: Vec<f64> = deriv_x(bdot_spatial[0], g)
        .into_iter()
        .map(|v| v - p.background_charge)
        .collect();
    solve_screened_poisson(&s, &r, g)
}

/// `Ḃ_0` from the time-differentiated μ=0 equation.
///
/// Where `Φ ≥ phi_floor` this is `(D(B_1Φ) − B_0Φ̇)/Φ`. Elsewhere the μ=0
/// equation does not involve `Ḃ_0`; the value is taken from the Lorenz
/// condition `Ḃ_0 = D B_1`.
pub fn solve_gauss_rate(
    b0: &[f64],
    b1: &[f64],
    phi2: &[f64],
    phi2_rate: &[f64],
    p: &Params,
    g: &Grid1D,
) -> FieldArray {
    let flux: Vec<f64> = b1.iter().zip(phi2).map(|(b, f)| b * f).collect();
    let dflux = deriv_x(&flux, g);
    let lorenz = deriv_x(b1, g);
    (0..g.n())
        .map(|j| {
            if phi2[j] >= p.phi_floor {
                (dflux[j] - b0[j] * phi2_rate[j]) / phi2[j]
            } else {
                lorenz[j]
            }
        })
        .collect()
}

/// Residual of the time-differentiated μ=0 equation for a full state, with
/// `B̈_1` taken from the μ=1 equation.
pub fn gauss_rate_residual(s: &FullState, p: &Params) -> FieldArray {
    let g = s.grid();
    let em = &s.em;
    let phi2 = s.matter_intensity();
    let phi2_rate = s.matter_intensity_rate();
    let dbdot0 = deriv_x(&em.bdot[0], &g);
    let b1ddot: Vec<f64> = (0..g.n())
        .map(|j| dbdot0[j] - 2.0 * p.e2() * em.b[1][j] * phi2[j])
        .collect();
    let inner: Vec<f64> = dbdot0.iter().zip(&b1ddot).map(|(a, b)| a - b).collect();
    let lhs = deriv_x(&inner, &g);
    (0..g.n())
        .map(|j| lhs[j] - 2.0 * p.e2() * (em.bdot[0][j] * phi2[j] + em.b[0][j] * phi2_rate[j]))
        .collect()
}

/// Closed-form pure-gauge wave `B_μ = (c, 0, 0, 0) + ∂_μχ` with
/// `χ = −sin(ω(x − t))`, evaluated at time `t`.
pub fn pure_gauge_wave(spec: &ScenarioSpec, g: &Grid1D, t: f64) -> ReducedState {
    let w = spec.angular_wavenumber(g);
    let c = spec.offset;
    let cos = g.sample(|x| (w * (x - t)).cos());
    let sin = g.sample(|x| (w * (x - t)).sin());
    let mut s = ReducedState::zeros(*g);
    s.t = t;
    s.b[0] = cos.iter().map(|v| c + w * v).collect();
    s.b[1] = cos.iter().map(|v| -w * v).collect();
    s.bdot[0] = sin.iter().map(|v| w * w * v).collect();
    s.bdot[1] = sin.iter().map(|v| -w * w * v).collect();
    s
}

/// Build the initial state for a scenario.
pub fn make_scenario(spec: &ScenarioSpec, p: &Params, g: &Grid1D) -> Result<Prepared> {
    p.validate()?;
    let mut params = *p;
    let state = match spec.name {
        ScenarioKind::VacuumOffset => {
            params.background_charge = 0.0;
            let mut s = FullState::zeros(*g);
            s.em.b[0] = g.constant(spec.offset);
            s
        }
        ScenarioKind::PureGaugeWave => {
            params.background_charge = 0.0;
            FullState {
                em: pure_gauge_wave(spec, g, 0.0),
                phi: g.zeros(),
                phidot: g.zeros(),
            }
        }
        ScenarioKind::MatterPacket => matter_packet(spec, &mut params, g)?,
    };
    let margin = 2.0 * params.b0_floor;
    for (j, v) in state.em.b[0].iter().enumerate() {
        if v.abs() < margin {
            return Err(Error::GuardViolation {
                floor: Floor::B0,
                index: j,
                value: *v,
                threshold: margin,
            });
        }
    }
    state.check_finite()?;
    Ok(Prepared { state, params })
}

fn matter_packet(spec: &ScenarioSpec, params: &mut Params, g: &Grid1D) -> Result<FullState> {
    let l = g.length();
    let k = spec.angular_wavenumber(g);
    let eps = spec.em_amplitude;
    let x0 = 0.5 * l;
    let chord = l / PI;
    let phi = g.sample(|x| {
        let d = chord * (PI * (x - x0) / l).sin();
        spec.amplitude * (spec.pedestal + (-d * d / (2.0 * spec.width * spec.width)).exp())
    });

    let mut s = FullState::zeros(*g);
    s.em.b[1] = g.sample(|x| eps * (k * x).sin());
    s.em.b[2] = g.sample(|x| eps * (k * x).cos());
    s.em.b[3] = g.sample(|x| 0.5 * eps * (2.0 * k * x).sin());
    s.em.bdot[1] = g.sample(|x| 0.5 * eps * (k * x).cos());
    s.em.bdot[2] = g.sample(|x| 0.5 * eps * (k * x).sin());
    s.phi = phi;

    // B_0 is affine in ρ_bg: B_0 = u + ρ_bg·w. Pick ρ_bg so that mean(B_0) = c.
    let bd = [&s.em.bdot[1][..], &s.em.bdot[2][..], &s.em.bdot[3][..]];
    let unit = Params { background_charge: 0.0, ..*params };
    let u = solve_gauss_constraint(&s.phi, bd, &unit, g)?;
    let zero = g.zeros();
    let per_charge = Params { background_charge: 1.0, ..*params };
    let w = solve_gauss_constraint(&s.phi, [&zero, &zero, &zero], &per_charge, g)?;
    let mean = |f: &[f64]| f.iter().sum::<f64>() / f.len() as f64;
    let mw = mean(&w);
    if mw == 0.0 {
        return Err(Error::SingularOperator("background response vanishes".into()));
    }
    params.background_charge = (spec.offset - mean(&u)) / mw;
    s.em.b[0] = solve_gauss_constraint(&s.phi, bd, params, g)?;

    let phi2 = s.matter_intensity();
    let rate = s.matter_intensity_rate();
    s.em.bdot[0] = solve_gauss_rate(&s.em.b[0], &s.em.b[1], &phi2, &rate, params, g);
    Ok(s)
}
