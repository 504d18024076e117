//! Linear evolution `v̇ = M v` on the truncated Fock space with
//! `M = Σᵢ aᵢ† Fᵢ(a)`, coherent-state initial data and vacuum-projection
//! readout `ξᵢ = ⟨0|aᵢ|v⟩ / ⟨0|v⟩`.

use num_complex::Complex64;

use super::fock::FockBasis;
use super::poly::PolySystem;
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::timestep::step_plan;

pub type StateVector = Vec<Complex64>;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `√(n!/(n−α)!)`, the matrix element of `aᵅ` on `|n⟩`.
fn falling_root(n: u32, alpha: u32) -> f64 {
    ((n - alpha + 1)..=n).map(|v| (v as f64).sqrt()).product()
}

/// Assemble `M = Σᵢ aᵢ† Fᵢ(a)` directly from the matrix elements. Each
/// monomial becomes a product of annihilators, which commute, so the
/// element depends only on the exponent vector.
pub fn build_m(sys: &PolySystem, basis: &FockBasis) -> Result<CsrMatrix> {
    if basis.cutoff() < 1 {
        return Err(Error::CutoffTooSmall(basis.cutoff()));
    }
    if sys.k() != basis.modes() {
        return Err(Error::InvalidParameter(format!("system has {} variables, basis {} modes", sys.k(), basis.modes())));
    }
    let mut trip = Vec::new();
    let mut target = vec![0u32; sys.k()];
    for (col, n) in basis.states().iter().enumerate() {
        for i in 0..sys.k() {
            for m in sys.terms(i) {
                if m.exps.iter().zip(n).any(|(a, b)| a > b) {
                    continue;
                }
                let mut amp = m.coeff;
                for (j, (&nj, &aj)) in n.iter().zip(&m.exps).enumerate() {
                    amp *= falling_root(nj, aj);
                    target[j] = nj - aj;
                }
                target[i] += 1;
                amp *= (target[i] as f64).sqrt();
                if let Some(row) = basis.index_of(&target) {
                    trip.push((row, col, amp));
                }
            }
        }
    }
    Ok(CsrMatrix::from_triplets(basis.dim(), basis.dim(), trip))
}

/// Weight of shell `s` of a normalised coherent state, `e^{−w} wˢ/s!` with
/// `w = Σ|ξᵢ|²`.
pub fn coherent_shell_weight(xi0: &[Complex64], shell: u32) -> f64 {
    let w: f64 = xi0.iter().map(|x| x.norm_sqr()).sum();
    (1..=shell).fold((-w).exp(), |acc, s| acc * w / s as f64)
}

/// Weight of the coherent state beyond the cutoff, summed shell by shell.
pub fn coherent_tail_mass(xi0: &[Complex64], basis: &FockBasis) -> f64 {
    let mut total = 0.0;
    let mut shell = basis.cutoff() + 1;
    loop {
        let w = coherent_shell_weight(xi0, shell);
        total += w;
        if w <= 1e-18 * total || w == 0.0 || shell > basis.cutoff() + 10_000 {
            return total;
        }
        shell += 1;
    }
}

fn coherent_amplitudes(xi0: &[Complex64], basis: &FockBasis) -> StateVector {
    let weight: f64 = xi0.iter().map(|x| x.norm_sqr()).sum();
    let norm = (-0.5 * weight).exp();
    basis
        .states()
        .iter()
        .map(|n| {
            n.iter().zip(xi0).fold(Complex64::new(norm, 0.0), |acc, (&k, &x)| {
                let fact: f64 = (1..=k).map(|v| v as f64).product();
                acc * x.powu(k) / fact.sqrt()
            })
        })
        .collect()
}

/// Normalised coherent state truncated to the basis. Logs a warning when
/// the truncated tail exceeds `1e-12` of the total weight.
pub fn coherent_vector(xi0: &[Complex64], basis: &FockBasis) -> StateVector {
    assert_eq!(xi0.len(), basis.modes(), "one amplitude per mode");
    let v = coherent_amplitudes(xi0, basis);
    let tail = coherent_tail_mass(xi0, basis);
    if tail > 1e-12 {
        log::warn!("coherent state tail beyond cutoff {} carries weight {tail:.2e}", basis.cutoff());
    }
    v
}

fn check_finite(v: &[Complex64]) -> Result<()> {
    match v.iter().position(|a| !(a.re.is_finite() && a.im.is_finite())) {
        Some(index) => Err(Error::NonFinite { what: "fock amplitude", index }),
        None => Ok(()),
    }
}

/// Propagate `v̇ = M v` to `t_end` with classical RK4 steps of size ≤ `dt`.
pub fn evolve(m: &CsrMatrix, v0: &[Complex64], t_end: f64, dt: f64) -> Result<StateVector> {
    if !(dt > 0.0) || t_end < 0.0 {
        return Err(Error::InvalidParameter(format!("need dt > 0 and t_end >= 0 (dt {dt}, t_end {t_end})")));
    }
    let (steps, dt) = step_plan(dt, t_end);
    let dim = v0.len();
    let mut v = v0.to_vec();
    let mut k = vec![ZERO; dim];
    let mut acc = vec![ZERO; dim];
    let mut stage = vec![ZERO; dim];
    for _ in 0..steps {
        acc.copy_from_slice(&v);
        stage.copy_from_slice(&v);
        for (weight, next) in [(1.0 / 6.0, 0.5), (1.0 / 3.0, 0.5), (1.0 / 3.0, 1.0), (1.0 / 6.0, 0.0)] {
            m.mul_vec_into(&stage, &mut k);
            for j in 0..dim {
                acc[j] += k[j] * (weight * dt);
                stage[j] = v[j] + k[j] * (next * dt);
            }
        }
        std::mem::swap(&mut v, &mut acc);
        check_finite(&v)?;
    }
    Ok(v)
}

/// `exp(t M) v0` by a truncated Taylor series on substeps with
/// `τ‖M‖_∞ ≤ 1`, summed until terms fall below rounding.
pub fn evolve_exact(m: &CsrMatrix, v0: &[Complex64], t: f64) -> Result<StateVector> {
    let norm = m.norm_inf();
    let substeps = (norm * t.abs()).ceil().max(1.0) as usize;
    let tau = t / substeps as f64;
    let mut v = v0.to_vec();
    let vnorm = |x: &[Complex64]| x.iter().map(|a| a.norm()).fold(0.0, f64::max);
    for _ in 0..substeps {
        let mut term = v.clone();
        let mut sum = v.clone();
        for k in 1..200 {
            term = m.mul_vec(&term);
            let f = tau / k as f64;
            term.iter_mut().for_each(|a| *a *= f);
            sum.iter_mut().zip(&term).for_each(|(s, a)| *s += a);
            if vnorm(&term) <= 1e-17 * vnorm(&sum) {
                break;
            }
        }
        v = sum;
        check_finite(&v)?;
    }
    Ok(v)
}

/// `ξᵢ = ⟨0|aᵢ|v⟩ / ⟨0|v⟩`.
pub fn readout(v: &[Complex64], basis: &FockBasis) -> Result<Vec<Complex64>> {
    let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    let overlap = v[0].norm();
    if overlap < 1e-14 * norm || overlap == 0.0 {
        return Err(Error::VacuumOrthogonal { overlap, norm });
    }
    Ok((0..basis.modes())
        .map(|i| match basis.single(i) {
            Some(j) => v[j] / v[0],
            None => ZERO,
        })
        .collect())
}

/// High-accuracy classical solution `ξ(t_end)` of the system by RK4 with
/// `steps` steps.
pub fn integrate_classical(sys: &PolySystem, x0: &[Complex64], t_end: f64, steps: usize) -> Result<Vec<Complex64>> {
    let steps = steps.max(1);
    let dt = t_end / steps as f64;
    let mut x = x0.to_vec();
    let axpy = |x: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> { x.iter().zip(k).map(|(a, b)| a + b * h).collect() };
    for _ in 0..steps {
        let k1 = sys.eval(&x);
        let k2 = sys.eval(&axpy(&x, &k1, 0.5 * dt));
        let k3 = sys.eval(&axpy(&x, &k2, 0.5 * dt));
        let k4 = sys.eval(&axpy(&x, &k3, dt));
        for j in 0..x.len() {
            x[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (dt / 6.0);
        }
        check_finite(&x)?;
    }
    Ok(x)
}

/// Built-in test systems.
pub mod demos {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// `ξ̇ = −ξ²`.
    pub fn riccati() -> PolySystem {
        let mut s = PolySystem::with_names(vec!["xi".into()]);
        s.add_term(0, c(-1.0), vec![2]).unwrap();
        s
    }

    /// `ξ̇ = λξ`.
    pub fn linear(lambda: Complex64) -> PolySystem {
        let mut s = PolySystem::with_names(vec!["xi".into()]);
        s.add_term(0, lambda, vec![1]).unwrap();
        s
    }

    /// `ξ̇₁ = ξ₂, ξ̇₂ = −ξ₁`.
    pub fn rotation() -> PolySystem {
        let mut s = PolySystem::with_names(vec!["x".into(), "y".into()]);
        s.add_term(0, c(1.0), vec![0, 1]).unwrap();
        s.add_term(1, c(-1.0), vec![1, 0]).unwrap();
        s
    }

    /// `ẋ = αx − βxy, ẏ = δxy − γy`.
    pub fn lotka_volterra(alpha: f64, beta: f64, gamma: f64, delta: f64) -> PolySystem {
        let mut s = PolySystem::with_names(vec!["prey".into(), "predator".into()]);
        s.add_term(0, c(alpha), vec![1, 0]).unwrap();
        s.add_term(0, c(-beta), vec![1, 1]).unwrap();
        s.add_term(1, c(delta), vec![1, 1]).unwrap();
        s.add_term(1, c(-gamma), vec![0, 1]).unwrap();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::demos::*;
    use super::*;
    use crate::carleman::fock::ladder_matrices;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn riccati_generator_is_minus_adag_a_squared() {
        let b = FockBasis::new(1, 6);
        let l = ladder_matrices(&b);
        let direct = build_m(&riccati(), &b).unwrap();
        let product = l.adag[0].matmul(&l.a[0]).matmul(&l.a[0]).scale(c(-1.0));
        assert!(direct.sub(&product).max_abs() < 1e-14);
    }

    #[test]
    fn annihilator_order_does_not_matter() {
        let b = FockBasis::new(2, 5);
        let l = ladder_matrices(&b);
        let mut s = PolySystem::new(2);
        s.add_term(1, c(0.7), vec![2, 1]).unwrap();
        let m = build_m(&s, &b).unwrap();
        let a0a0a1 = l.a[0].matmul(&l.a[0]).matmul(&l.a[1]);
        let a1a0a0 = l.a[1].matmul(&l.a[0]).matmul(&l.a[0]);
        let a0a1a0 = l.a[0].matmul(&l.a[1]).matmul(&l.a[0]);
        assert!(a0a0a1.sub(&a1a0a0).max_abs() < 1e-14);
        assert!(a0a0a1.sub(&a0a1a0).max_abs() < 1e-14);
        let expect = l.adag[1].matmul(&a0a0a1).scale(c(0.7));
        assert!(m.sub(&expect).max_abs() < 1e-14);
    }

    #[test]
    fn cutoff_and_shape_errors() {
        assert!(matches!(build_m(&riccati(), &FockBasis::new(1, 0)), Err(Error::CutoffTooSmall(0))));
        assert!(build_m(&rotation(), &FockBasis::new(1, 3)).is_err());
    }

    #[test]
    fn coherent_amplitudes_and_eigenproperty() {
        let b = FockBasis::new(1, 12);
        let v = coherent_vector(&[c(0.5)], &b);
        assert!((v[0].re - (-0.125f64).exp()).abs() < 1e-15);
        for n in 0..12 {
            let ratio = v[n + 1] / v[n];
            assert!((ratio.re - 0.5 / ((n + 1) as f64).sqrt()).abs() < 1e-14);
        }
        let vac = coherent_vector(&[c(0.0)], &b);
        assert_eq!(vac[0], c(1.0));
        assert!(vac[1..].iter().all(|a| *a == ZERO));
        assert_eq!(readout(&vac, &b).unwrap(), vec![ZERO]);

        let b2 = FockBasis::new(2, 14);
        let xi = [Complex64::new(0.3, -0.2), c(0.4)];
        let v = coherent_vector(&xi, &b2);
        let l = ladder_matrices(&b2);
        // a v − ξ v is exactly −ξ times the top-shell part of v
        let top = coherent_shell_weight(&xi, b2.cutoff()).sqrt();
        for i in 0..2 {
            let av = l.a[i].mul_vec(&v);
            let defect: f64 = av.iter().zip(&v).map(|(a, w)| (a - xi[i] * w).norm_sqr()).sum::<f64>().sqrt();
            let bound = xi[i].norm() * top;
            assert!(defect <= bound * (1.0 + 1e-9) + 1e-16, "defect {defect} bound {bound}");
            assert!(defect >= bound * 0.5);
        }
        assert!(coherent_tail_mass(&xi, &b2) < coherent_shell_weight(&xi, 15) * 1.1);
        let r = readout(&v, &b2).unwrap();
        assert!((r[0] - xi[0]).norm() < 1e-15 && (r[1] - xi[1]).norm() < 1e-15);
    }

    #[test]
    fn vacuum_orthogonal_readout_errors() {
        let b = FockBasis::new(1, 3);
        let v = vec![ZERO, c(1.0), ZERO, ZERO];
        assert!(matches!(readout(&v, &b), Err(Error::VacuumOrthogonal { .. })));
    }

    #[test]
    fn zero_generator_leaves_state() {
        let b = FockBasis::new(2, 4);
        let v0 = coherent_vector(&[c(0.1), c(0.2)], &b);
        let m = CsrMatrix::zeros(b.dim(), b.dim());
        assert_eq!(evolve(&m, &v0, 1.0, 0.1).unwrap(), v0);
    }

    #[test]
    fn linear_flow_is_exact() {
        let lambda = Complex64::new(-0.3, 0.8);
        let b = FockBasis::new(1, 20);
        let m = build_m(&linear(lambda), &b).unwrap();
        let xi0 = c(0.2);
        let v0 = coherent_vector(&[xi0], &b);
        for t in [0.25, 1.0] {
            let exact = xi0 * (lambda * t).exp();
            let rk = readout(&evolve(&m, &v0, t, 1e-3).unwrap(), &b).unwrap()[0];
            let ex = readout(&evolve_exact(&m, &v0, t).unwrap(), &b).unwrap()[0];
            assert!((rk - exact).norm() < 1e-8);
            assert!((ex - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_is_anti_hermitian_and_norm_preserving() {
        let b = FockBasis::new(2, 10);
        let m = build_m(&rotation(), &b).unwrap();
        assert!(m.add(&m.adjoint()).max_abs() < 1e-15);
        let v0 = coherent_vector(&[c(0.6), c(-0.1)], &b);
        let v = evolve(&m, &v0, 10.0, 1e-3).unwrap();
        assert!((norm(&v) - norm(&v0)).abs() < 1e-9);
        let r = readout(&v, &b).unwrap();
        let (x, y) = (0.6 * 10f64.cos() - 0.1 * 10f64.sin(), -0.6 * 10f64.sin() - 0.1 * 10f64.cos());
        assert!((r[0] - c(x)).norm() < 1e-8 && (r[1] - c(y)).norm() < 1e-8);
    }

    #[test]
    fn riccati_readout_converges_in_cutoff() {
        let mut errs = Vec::new();
        for n in (4..=16).step_by(2) {
            let b = FockBasis::new(1, n);
            let m = build_m(&riccati(), &b).unwrap();
            let v = evolve_exact(&m, &coherent_vector(&[c(0.5)], &b), 1.0).unwrap();
            errs.push((readout(&v, &b).unwrap()[0] - c(1.0 / 3.0)).norm());
        }
        assert!(errs.windows(2).all(|w| w[1] <= w[0]), "{errs:?}");
        assert!(*errs.last().unwrap() <= 1e-4, "{errs:?}");
    }

    #[test]
    fn classical_oracle() {
        let x = integrate_classical(&riccati(), &[c(0.5)], 1.0, 1000).unwrap();
        assert!((x[0] - c(1.0 / 3.0)).norm() < 1e-13);
    }
}
