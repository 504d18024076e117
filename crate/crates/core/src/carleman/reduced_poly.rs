//! The matter-free field system on a tiny grid written as a first-order
//! polynomial system, ready for the Fock-space embedding.
//!
//! Division by `B_0` is removed with auxiliary variables `u_j = 1/B_{0,j}`
//! obeying `u̇_j = −u_j² Ḃ_{0,j}`. Two closures are available:
//!
//! * [`Closure::FreeField`] uses `B̈_0 = D Ḃ_1`, the branch the integrator
//!   takes where `Φ` is below its floor. Every right-hand side then has
//!   degree ≤ 3 in `(B, Ḃ, u)`.
//! * [`Closure::Matter`] keeps the full `B̈_0` closure, which divides by
//!   `Φ`; it adds `w_j = 1/Φ_j` with `ẇ_j = −w_j² Φ̇_j`. Degrees reach 11,
//!   so this form is meant for evaluation rather than embedding.
//!
//! Variable order: `B_μ[j]` at `μn + j`, `Ḃ_μ[j]` at `4n + μn + j`, `u_j` at
//! `8n + j`, then `w_j` at `9n + j` for the matter closure.

use crate::error::{Error, Result};
use crate::kernel::Grid1D;
use crate::reduced::reconstruct_phi;
use crate::state::{Params, ReducedState};

use super::poly::{Poly, PolySystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    FreeField,
    Matter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReducedLayout {
    pub n: usize,
    pub closure: Closure,
}

impl ReducedLayout {
    pub fn new(n: usize, closure: Closure) -> Self {
        Self { n, closure }
    }

    pub fn b(&self, mu: usize, j: usize) -> usize {
        mu * self.n + j
    }

    pub fn bdot(&self, mu: usize, j: usize) -> usize {
        4 * self.n + mu * self.n + j
    }

    pub fn u(&self, j: usize) -> usize {
        8 * self.n + j
    }

    pub fn w(&self, j: usize) -> usize {
        9 * self.n + j
    }

    pub fn k(&self) -> usize {
        match self.closure {
            Closure::FreeField => 9 * self.n,
            Closure::Matter => 10 * self.n,
        }
    }

    pub fn names(&self) -> Vec<String> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.k());
        for mu in 0..4 {
            out.extend((0..n).map(|j| format!("B{mu}_{j}")));
        }
        for mu in 0..4 {
            out.extend((0..n).map(|j| format!("Bdot{mu}_{j}")));
        }
        out.extend((0..n).map(|j| format!("u_{j}")));
        if self.closure == Closure::Matter {
            out.extend((0..n).map(|j| format!("w_{j}")));
        }
        out
    }

    /// Coordinates of a field state, with `u = 1/B_0` and (matter closure)
    /// `w = 1/Φ`.
    pub fn pack(&self, s: &ReducedState, p: &Params) -> Result<Vec<f64>> {
        if s.grid.n() != self.n {
            return Err(Error::GridMismatch(format!("layout for {} points, state has {}", self.n, s.grid.n())));
        }
        let mut x = vec![0.0; self.k()];
        for mu in 0..4 {
            for j in 0..self.n {
                x[self.b(mu, j)] = s.b[mu][j];
                x[self.bdot(mu, j)] = s.bdot[mu][j];
            }
        }
        let mut b0 = s.b[0].clone();
        p.guard_b0(&mut b0)?;
        for j in 0..self.n {
            x[self.u(j)] = 1.0 / b0[j];
        }
        if self.closure == Closure::Matter {
            let phi = reconstruct_phi(s, p)?;
            for j in 0..self.n {
                x[self.w(j)] = 1.0 / phi[j];
            }
        }
        Ok(x)
    }

    /// The `(B_μ, Ḃ_μ)` part of a coordinate vector.
    pub fn unpack(&self, x: &[f64], grid: Grid1D, t: f64) -> ReducedState {
        let mut s = ReducedState::zeros(grid);
        s.t = t;
        for mu in 0..4 {
            for j in 0..self.n {
                s.b[mu][j] = x[self.b(mu, j)];
                s.bdot[mu][j] = x[self.bdot(mu, j)];
            }
        }
        s
    }
}

/// Polynomial stencils mirroring the kernel's periodic differences.
struct Stencil {
    n: usize,
    h: f64,
}

impl Stencil {
    fn nb(&self, j: usize) -> (usize, usize) {
        ((j + self.n - 1) % self.n, (j + 1) % self.n)
    }

    fn d1(&self, f: &[Poly]) -> Vec<Poly> {
        (0..self.n)
            .map(|j| {
                let (l, r) = self.nb(j);
                (&f[r] - &f[l]).scale(0.5 / self.h)
            })
            .collect()
    }

    fn d2(&self, f: &[Poly]) -> Vec<Poly> {
        (0..self.n)
            .map(|j| {
                let (l, r) = self.nb(j);
                (&(&f[r] + &f[l]) - &f[j].scale(2.0)).scale(1.0 / (self.h * self.h))
            })
            .collect()
    }
}

fn zip(a: &[Poly], b: &[Poly], f: impl Fn(&Poly, &Poly) -> Poly) -> Vec<Poly> {
    a.iter().zip(b).map(|(x, y)| f(x, y)).collect()
}

/// Free-field closure; see [`polynomialize_reduced_with`].
pub fn polynomialize_reduced(g: &Grid1D, p: &Params) -> Result<PolySystem> {
    polynomialize_reduced_with(g, p, Closure::FreeField)
}

pub fn polynomialize_reduced_with(g: &Grid1D, p: &Params, closure: Closure) -> Result<PolySystem> {
    let n = g.n();
    if n > 4 {
        return Err(Error::UnsupportedGrid(format!("polynomial form needs at most 4 grid points (got {n})")));
    }
    p.validate()?;
    let lay = ReducedLayout::new(n, closure);
    let st = Stencil { n, h: g.h() };
    let e2 = p.e2();
    let field = |f: &dyn Fn(usize) -> usize| -> Vec<Poly> { (0..n).map(|j| Poly::var(f(j))).collect() };
    let b: Vec<Vec<Poly>> = (0..4).map(|mu| field(&|j| lay.b(mu, j))).collect();
    let bd: Vec<Vec<Poly>> = (0..4).map(|mu| field(&|j| lay.bdot(mu, j))).collect();
    let u = field(&|j| lay.u(j));

    // Φ = (D(D B_0 − Ḃ_1) + ρ_bg)·u / (2e²)
    let e_field = zip(&st.d1(&b[0]), &bd[1], |a, c| a - c);
    let phi: Vec<Poly> = st
        .d1(&e_field)
        .iter()
        .zip(&u)
        .map(|(d, uj)| (&(d + &Poly::constant(p.background_charge)) * uj).scale(0.5 / e2))
        .collect();

    let db0dot = st.d1(&bd[0]);
    let b1dd = zip(&db0dot, &zip(&b[1], &phi, |x, y| x * y), |a, c| a - &c.scale(2.0 * e2));
    let transverse = |a: usize| -> Vec<Poly> {
        let dd = st.d1(&st.d1(&b[a]));
        zip(&dd, &zip(&b[a], &phi, |x, y| x * y), |x, y| x - &y.scale(2.0 * e2))
    };
    let (b2dd, b3dd) = (transverse(2), transverse(3));
    let db1dot = st.d1(&bd[1]);

    let mut sys = PolySystem::with_names(lay.names());
    let mut set = |idx: usize, poly: &Poly| sys.set_poly(idx, poly);
    for mu in 0..4 {
        for j in 0..n {
            set(lay.b(mu, j), &bd[mu][j])?;
        }
    }
    for j in 0..n {
        set(lay.bdot(1, j), &b1dd[j])?;
        set(lay.bdot(2, j), &b2dd[j])?;
        set(lay.bdot(3, j), &b3dd[j])?;
        set(lay.u(j), &-&(&(&u[j] * &u[j]) * &bd[0][j]))?;
    }

    match closure {
        Closure::FreeField => {
            for j in 0..n {
                set(lay.bdot(0, j), &db1dot[j])?;
            }
        }
        Closure::Matter => {
            let w = field(&|j| lay.w(j));
            let dphi = st.d1(&phi);
            let div = zip(&bd[0], &st.d1(&b[1]), |a, c| a - c);
            // Φ̇ = −u[(Ḃ_0 − D B_1)Φ − B_1 DΦ]
            let phidot: Vec<Poly> = (0..n)
                .map(|j| -&(&u[j] * &(&(&div[j] * &phi[j]) - &(&b[1][j] * &dphi[j]))))
                .collect();
            let lap = st.d2(&phi);
            let bb: Vec<Poly> = (0..n)
                .map(|j| {
                    (1..4).fold(&b[0][j] * &b[0][j], |acc, i| &acc - &(&b[i][j] * &b[i][j]))
                })
                .collect();
            let phiddot: Vec<Poly> = (0..n)
                .map(|j| {
                    let grad = &(&(&phidot[j] * &phidot[j]) - &(&dphi[j] * &dphi[j])) * &w[j];
                    let pot = &(&bb[j].scale(e2) - &Poly::constant(p.m * p.m)) * &phi[j];
                    &(&lap[j] + &grad.scale(0.5)) + &pot.scale(2.0)
                })
                .collect();
            let dphidot = st.d1(&phidot);
            for j in 0..n {
                let r = &(&(&(&(&div[j] * &phidot[j]) + &(&bd[0][j] * &phidot[j])) - &(&bd[1][j] * &dphi[j]))
                    + &(&b[0][j] * &phiddot[j]))
                    - &(&b[1][j] * &dphidot[j]);
                set(lay.bdot(0, j), &(&db1dot[j] - &(&r * &w[j])))?;
                set(lay.w(j), &-&(&(&w[j] * &w[j]) * &phidot[j]))?;
            }
        }
    }
    Ok(sys)
}
