//! Classical four-stage Runge–Kutta over a list of field arrays.

use crate::error::Result;

pub(crate) type Fields = Vec<Vec<f64>>;

fn axpy(y: &Fields, a: f64, k: &Fields) -> Fields {
    y.iter()
        .zip(k)
        .map(|(yi, ki)| yi.iter().zip(ki).map(|(u, v)| u + a * v).collect())
        .collect()
}

/// One RK4 step of `ẏ = f(t, y)`.
pub(crate) fn rk4_step<F>(t: f64, y: &Fields, dt: f64, mut f: F) -> Result<Fields>
where
    F: FnMut(f64, &Fields) -> Result<Fields>,
{
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k1))?;
    let k3 = f(t + 0.5 * dt, &axpy(y, 0.5 * dt, &k2))?;
    let k4 = f(t + dt, &axpy(y, dt, &k3))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, yi)| {
            (0..yi.len())
                .map(|j| yi[j] + dt / 6.0 * (k1[i][j] + 2.0 * k2[i][j] + 2.0 * k3[i][j] + k4[i][j]))
                .collect()
        })
        .collect())
}

/// Number of fixed steps that cover `t_end` with step no larger than `dt`,
/// and the exact step that lands on `t_end`.
pub fn step_plan(dt: f64, t_end: f64) -> (usize, f64) {
    if t_end <= 0.0 {
        return (0, dt);
    }
    let steps = (t_end / dt - 1e-9).ceil().max(1.0) as usize;
    (steps, t_end / steps as f64)
}
