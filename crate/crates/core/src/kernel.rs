//! Spacetime conventions, the periodic 1-D grid and the finite-difference
//! stencils shared by both integrators.
//!
//! Fields depend on `(t, x¹)` only. All four potential components are kept;
//! derivatives along `x²` and `x³` vanish identically. The metric signature is
//! `(+, −, −, −)` in natural units.
//!
//! Stencils (periodic, second order):
//!
//! ```text
//! deriv_x  f_j = (f_{j+1} − f_{j−1}) / 2h
//! deriv_xx f_j = (f_{j+1} − 2 f_j + f_{j−1}) / h²
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Samples of one scalar field on a [`Grid1D`].
pub type FieldArray = Vec<f64>;

/// Four covariant components `(X_0, X_1, X_2, X_3)` of a 4-vector field.
pub type FourField = [FieldArray; 4];

/// Index conventions for the `(+, −, −, −)` signature.
pub struct Conventions;

impl Conventions {
    /// Metric diagonal `η_{μμ}`.
    pub const METRIC: [f64; 4] = [1.0, -1.0, -1.0, -1.0];

    /// Raise (or lower) one component. The metric is its own inverse, so the
    /// same map does both.
    #[inline]
    pub fn raise(mu: usize, value: f64) -> f64 {
        Self::METRIC[mu] * value
    }

    #[inline]
    pub fn lower(mu: usize, value: f64) -> f64 {
        Self::METRIC[mu] * value
    }
}

/// Uniform periodic grid on `[0, length)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    n: usize,
    length: f64,
}

impl Grid1D {
    /// Production grid: `n` must be a power of two, at least 16.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid.n must be a power of two >= 16 (got {n})"
            )));
        }
        Self::checked(n, length)
    }

    /// Tiny grid (1 to 4 points) for the Fock-space embedding.
    pub fn tiny(n: usize, length: f64) -> Result<Self> {
        if !(1..=4).contains(&n) {
            return Err(Error::UnsupportedGrid(format!(
                "tiny grids have 1..=4 points (got {n})"
            )));
        }
        Self::checked(n, length)
    }

    fn checked(n: usize, length: f64) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid.length must be positive and finite (got {length})"
            )));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Grid spacing `h = length / n`.
    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Coordinate of point `j`; any integer index is wrapped periodically.
    pub fn x(&self, j: i64) -> f64 {
        self.wrap(j) as f64 * self.h()
    }

    pub fn wrap(&self, j: i64) -> usize {
        j.rem_euclid(self.n as i64) as usize
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.h()).collect()
    }

    /// Sample a function of `x` at every grid point.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> FieldArray {
        (0..self.n).map(|j| f(j as f64 * self.h())).collect()
    }

    pub fn zeros(&self) -> FieldArray {
        vec![0.0; self.n]
    }

    pub fn constant(&self, c: f64) -> FieldArray {
        vec![c; self.n]
    }
}

#[inline]
fn neighbours(j: usize, n: usize) -> (usize, usize) {
    ((j + n - 1) % n, (j + 1) % n)
}

/// Central first derivative along `x¹`.
pub fn deriv_x(f: &[f64], g: &Grid1D) -> FieldArray {
    let n = g.n();
    debug_assert_eq!(f.len(), n);
    let s = 0.5 / g.h();
    (0..n)
        .map(|j| {
            let (l, r) = neighbours(j, n);
            (f[r] - f[l]) * s
        })
        .collect()
}

/// Three-point second derivative along `x¹`.
pub fn deriv_xx(f: &[f64], g: &Grid1D) -> FieldArray {
    let n = g.n();
    debug_assert_eq!(f.len(), n);
    let s = 1.0 / (g.h() * g.h());
    (0..n)
        .map(|j| {
            let (l, r) = neighbours(j, n);
            (f[r] - 2.0 * f[j] + f[l]) * s
        })
        .collect()
}

/// Forward difference `(f_{j+1} − f_j)/h`; used for the gradient energy of
/// the scalar field, whose adjoint pairing with itself is `deriv_xx`.
pub fn deriv_forward(f: &[f64], g: &Grid1D) -> FieldArray {
    let n = g.n();
    let s = 1.0 / g.h();
    (0..n).map(|j| (f[(j + 1) % n] - f[j]) * s).collect()
}

/// Pointwise `u^μ v_μ = u_0 v_0 − Σᵢ uᵢ vᵢ` for covariant inputs.
pub fn lorentz_dot(u: &FourField, v: &FourField) -> FieldArray {
    let n = u[0].len();
    (0..n)
        .map(|j| u[0][j] * v[0][j] - u[1][j] * v[1][j] - u[2][j] * v[2][j] - u[3][j] * v[3][j])
        .collect()
}

/// Maximum absolute value (L∞ norm) of a sample array.
pub fn max_abs(f: &[f64]) -> f64 {
    f.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// First index holding a NaN or infinity.
pub fn first_non_finite(f: &[f64]) -> Option<usize> {
    f.iter().position(|v| !v.is_finite())
}
