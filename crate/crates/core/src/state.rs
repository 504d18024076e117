//! Physical parameters and the two state containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Floor, Result};
use crate::kernel::{first_non_finite, FieldArray, FourField, Grid1D};

/// Couplings and runtime guard thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Charge `e`; must be nonzero.
    pub e: f64,
    /// Mass `m`.
    pub m: f64,
    /// Minimum allowed |B_0| anywhere on the grid.
    pub b0_floor: f64,
    /// Below this |Φ| the Φ-divisions switch to their limit rules.
    pub phi_floor: f64,
    /// Uniform static background charge density `ρ_bg` entering the μ=0
    /// equation as `D(D B_0 − Ḃ_1) = 2e²ΦB_0 − ρ_bg`. A periodic box only
    /// admits zero total charge; a nonzero background neutralises the
    /// matter so that `B_0` can keep one sign.
    pub background_charge: f64,
    /// Clamp guard breaches instead of aborting.
    pub soft_guards: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            e: 1.0,
            m: 1.0,
            b0_floor: 1e-6,
            phi_floor: 1e-3,
            background_charge: 0.0,
            soft_guards: false,
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.e.is_finite() && self.e != 0.0) {
            return bad(format!("params.e must be finite and nonzero (got {})", self.e));
        }
        if !self.m.is_finite() {
            return bad(format!("params.m must be finite (got {})", self.m));
        }
        if !(self.b0_floor > 0.0 && self.b0_floor.is_finite()) {
            return bad(format!("params.b0_floor must be positive (got {})", self.b0_floor));
        }
        if !(self.phi_floor > 0.0 && self.phi_floor.is_finite()) {
            return bad(format!("params.phi_floor must be positive (got {})", self.phi_floor));
        }
        if !self.background_charge.is_finite() {
            return bad("params.background_charge must be finite".into());
        }
        Ok(())
    }

    pub fn e2(&self) -> f64 {
        self.e * self.e
    }

    /// Check `|B_0| ≥ b0_floor` everywhere. With soft guards the offending
    /// values are clamped (sign preserved) and the number of clamped points
    /// is returned.
    pub(crate) fn guard_b0(&self, b0: &mut [f64]) -> Result<usize> {
        let mut clamped = 0;
        for (j, v) in b0.iter_mut().enumerate() {
            if v.abs() < self.b0_floor {
                if !self.soft_guards {
                    return Err(Error::GuardViolation {
                        floor: Floor::B0,
                        index: j,
                        value: *v,
                        threshold: self.b0_floor,
                    });
                }
                *v = if *v < 0.0 { -self.b0_floor } else { self.b0_floor };
                clamped += 1;
            }
        }
        if clamped > 0 {
            log::warn!("soft guard: clamped |B_0| at {clamped} grid points");
        }
        Ok(clamped)
    }

    /// A sign change of `B_0` over one step means it crossed the floor
    /// between samples.
    pub(crate) fn guard_b0_crossing(&self, before: &[f64], after: &[f64]) -> Result<()> {
        let crossing = before.iter().zip(after).position(|(a, b)| a.signum() != b.signum());
        match crossing {
            Some(index) if !self.soft_guards => Err(Error::GuardViolation {
                floor: Floor::B0,
                index,
                value: after[index],
                threshold: self.b0_floor,
            }),
            Some(index) => {
                log::warn!("soft guard: B_0 changed sign at grid point {index}");
                Ok(())
            }
            None => Ok(()),
        }
    }
}

/// Electromagnetic-only state: covariant `B_μ` and `∂_t B_μ` on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub grid: Grid1D,
    pub t: f64,
    pub b: FourField,
    pub bdot: FourField,
}

impl ReducedState {
    pub fn zeros(grid: Grid1D) -> Self {
        let z = || grid.zeros();
        Self {
            grid,
            t: 0.0,
            b: [z(), z(), z(), z()],
            bdot: [z(), z(), z(), z()],
        }
    }

    pub fn arrays(&self) -> impl Iterator<Item = &FieldArray> {
        self.b.iter().chain(self.bdot.iter())
    }

    pub fn check_finite(&self) -> Result<()> {
        const NAMES: [&str; 8] = ["B_0", "B_1", "B_2", "B_3", "Bdot_0", "Bdot_1", "Bdot_2", "Bdot_3"];
        for (arr, what) in self.arrays().zip(NAMES) {
            if let Some(index) = first_non_finite(arr) {
                return Err(Error::NonFinite { what, index });
            }
        }
        Ok(())
    }

    /// Min over the grid of |B_0|.
    pub fn min_abs_b0(&self) -> f64 {
        self.b[0].iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

/// Full coupled state: the electromagnetic fields plus the real matter field.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub em: ReducedState,
    pub phi: FieldArray,
    pub phidot: FieldArray,
}

impl FullState {
    pub fn zeros(grid: Grid1D) -> Self {
        Self {
            em: ReducedState::zeros(grid),
            phi: grid.zeros(),
            phidot: grid.zeros(),
        }
    }

    pub fn grid(&self) -> Grid1D {
        self.em.grid
    }

    pub fn t(&self) -> f64 {
        self.em.t
    }

    /// `Φ = φ²`, nonnegative by construction.
    pub fn matter_intensity(&self) -> FieldArray {
        self.phi.iter().map(|v| v * v).collect()
    }

    /// `Φ̇ = 2φφ̇`.
    pub fn matter_intensity_rate(&self) -> FieldArray {
        self.phi.iter().zip(&self.phidot).map(|(p, d)| 2.0 * p * d).collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        self.em.check_finite()?;
        if let Some(index) = first_non_finite(&self.phi) {
            return Err(Error::NonFinite { what: "phi", index });
        }
        if let Some(index) = first_non_finite(&self.phidot) {
            return Err(Error::NonFinite { what: "phidot", index });
        }
        Ok(())
    }

    /// Drop the matter field.
    pub fn to_reduced(&self) -> ReducedState {
        self.em.clone()
    }
}

impl AsRef<ReducedState> for ReducedState {
    fn as_ref(&self) -> &ReducedState {
        self
    }
}

impl AsRef<ReducedState> for FullState {
    fn as_ref(&self) -> &ReducedState {
        &self.em
    }
}
