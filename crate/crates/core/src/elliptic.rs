//! Periodic solver for `D(D y) − s·y = r`, where `D` is the central first
//! difference and `s ≥ 0` a pointwise coefficient.
//!
//! `D∘D` only couples points two apart, so the problem splits into the
//! cycles of `j ↦ j+2 (mod n)`; each cycle is a cyclic tridiagonal system
//! with off-diagonal `1/(4h²)`.

use crate::error::{Error, Result};
use crate::kernel::Grid1D;

/// Solve `D(D y) − s∘y = r` on the periodic grid.
///
/// When `s` vanishes on a whole cycle the operator is singular there; a
/// solution exists only if `r` sums to zero over that cycle, and the
/// zero-mean one is returned.
pub fn solve_screened_poisson(s: &[f64], r: &[f64], g: &Grid1D) -> Result<Vec<f64>> {
    let n = g.n();
    let alpha = 0.25 / (g.h() * g.h());
    let mut y = vec![0.0; n];
    for cycle in cycles(n) {
        let sc: Vec<f64> = cycle.iter().map(|&j| s[j]).collect();
        let rc: Vec<f64> = cycle.iter().map(|&j| r[j]).collect();
        let yc = if sc.iter().all(|&v| v == 0.0) {
            solve_singular_cycle(alpha, &rc)?
        } else if cycle.len() < 3 {
            solve_small_cycle(alpha, &sc, &rc)
        } else {
            solve_cyclic_tridiagonal(alpha, &sc, &rc)
        };
        for (&j, v) in cycle.iter().zip(yc) {
            y[j] = v;
        }
    }
    Ok(y)
}

fn cycles(n: usize) -> Vec<Vec<usize>> {
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut c = Vec::new();
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            c.push(j);
            j = (j + 2) % n;
        }
        out.push(c);
    }
    out
}

/// Cycles of one or two points: neighbours alias, so assemble densely.
fn solve_small_cycle(alpha: f64, s: &[f64], r: &[f64]) -> Vec<f64> {
    let m = s.len();
    let mut a = vec![vec![0.0; m]; m];
    for k in 0..m {
        a[k][(k + 1) % m] += alpha;
        a[k][(k + m - 1) % m] += alpha;
        a[k][k] += -2.0 * alpha - s[k];
    }
    match m {
        1 => vec![r[0] / a[0][0]],
        _ => {
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            vec![
                (r[0] * a[1][1] - a[0][1] * r[1]) / det,
                (a[0][0] * r[1] - a[1][0] * r[0]) / det,
            ]
        }
    }
}

/// Sherman–Morrison reduction of the cyclic system to two Thomas solves.
fn solve_cyclic_tridiagonal(alpha: f64, s: &[f64], r: &[f64]) -> Vec<f64> {
    let m = s.len();
    let diag: Vec<f64> = s.iter().map(|sv| -2.0 * alpha - sv).collect();
    let gamma = -diag[0];
    let mut b = diag.clone();
    b[0] -= gamma;
    b[m - 1] -= alpha * alpha / gamma;
    let y = thomas(alpha, &b, r);
    let mut u = vec![0.0; m];
    u[0] = gamma;
    u[m - 1] = alpha;
    let z = thomas(alpha, &b, &u);
    let fact = (y[0] + alpha * y[m - 1] / gamma) / (1.0 + z[0] + alpha * z[m - 1] / gamma);
    y.iter().zip(&z).map(|(yv, zv)| yv - fact * zv).collect()
}

fn thomas(off: f64, diag: &[f64], rhs: &[f64]) -> Vec<f64> {
    let m = diag.len();
    let mut c = vec![0.0; m];
    let mut d = vec![0.0; m];
    c[0] = off / diag[0];
    d[0] = rhs[0] / diag[0];
    for k in 1..m {
        let den = diag[k] - off * c[k - 1];
        c[k] = off / den;
        d[k] = (rhs[k] - off * d[k - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = d[m - 1];
    for k in (0..m - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
    x
}

fn solve_singular_cycle(alpha: f64, r: &[f64]) -> Result<Vec<f64>> {
    let m = r.len();
    let total: f64 = r.iter().sum();
    let scale: f64 = r.iter().map(|v| v.abs()).sum();
    if total.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) && total != 0.0 {
        return Err(Error::SingularOperator(format!(
            "matter intensity vanishes on a sublattice and the source has nonzero mean ({total:e})"
        )));
    }
    // first differences d_k = y_{k+1} − y_k obey d_k − d_{k−1} = r_k/α
    let mut partial = vec![0.0; m];
    let mut acc = 0.0;
    for k in 1..m {
        acc += r[k] / alpha;
        partial[k] = acc;
    }
    let d0 = -partial.iter().sum::<f64>() / m as f64;
    let mut y = vec![0.0; m];
    for k in 0..m.saturating_sub(1) {
        y[k + 1] = y[k] + d0 + partial[k];
    }
    let mean = y.iter().sum::<f64>() / m as f64;
    Ok(y.into_iter().map(|v| v - mean).collect())
}
