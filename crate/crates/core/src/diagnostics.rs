//! Conservation checks, trajectory comparison and refinement-order fits.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{deriv_forward, deriv_x, max_abs, FieldArray};
use crate::reduced::reconstruct_phi;
use crate::state::{FullState, Params, ReducedState};
use crate::trajectory::Trajectory;

/// States that know their matter intensity `Φ`.
pub trait MatterIntensity: AsRef<ReducedState> {
    fn intensity(&self, p: &Params) -> Result<FieldArray>;
}

impl MatterIntensity for FullState {
    fn intensity(&self, _p: &Params) -> Result<FieldArray> {
        Ok(self.matter_intensity())
    }
}

impl MatterIntensity for ReducedState {
    fn intensity(&self, p: &Params) -> Result<FieldArray> {
        reconstruct_phi(self, p)
    }
}

/// `(t, ‖∂_t(B_0Φ) − D(B_1Φ)‖_∞)` for every interior frame, with the time
/// derivative taken as a centred difference of the neighbouring frames.
/// Frames should be consecutive steps; the first and last frame get no value.
pub fn current_residual<S: MatterIntensity>(traj: &Trajectory<S>, p: &Params) -> Result<Vec<(f64, f64)>> {
    let charge: Vec<FieldArray> = traj
        .frames
        .iter()
        .map(|f| {
            let phi = f.intensity(p)?;
            Ok(f.as_ref().b[0].iter().zip(&phi).map(|(b, v)| b * v).collect())
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for k in 1..traj.frames.len().saturating_sub(1) {
        let s = traj.frames[k].as_ref();
        let (t0, t1) = (traj.frames[k - 1].as_ref().t, traj.frames[k + 1].as_ref().t);
        let phi = traj.frames[k].intensity(p)?;
        let flux: Vec<f64> = s.b[1].iter().zip(&phi).map(|(b, v)| b * v).collect();
        let dflux = deriv_x(&flux, &s.grid);
        let r: Vec<f64> = (0..s.grid.n())
            .map(|j| (charge[k + 1][j] - charge[k - 1][j]) / (t1 - t0) - dflux[j])
            .collect();
        out.push((s.t, max_abs(&r)));
    }
    Ok(out)
}

/// Canonical energy of the gauge-fixed lattice Lagrangian:
///
/// ```text
/// H = ¼(Ḃ_1² − (D B_0)²) + ¼Σₐ(Ḃₐ² + (D Bₐ)²)
///   + ½φ̇² + ½(D₊φ)² + ½m²φ² − ½e²(B^μB_μ)φ² + ½ρ_bg B_0
/// ```
///
/// summed over the grid times `h`. `D₊` is the forward difference whose
/// adjoint product gives the three-point Laplacian.
pub fn total_energy(s: &FullState, p: &Params) -> f64 {
    let g = s.grid();
    let em = &s.em;
    let e2 = p.e2();
    let db0 = deriv_x(&em.b[0], &g);
    let db: Vec<FieldArray> = (2..4).map(|a| deriv_x(&em.b[a], &g)).collect();
    let dphi = deriv_forward(&s.phi, &g);
    let mut sum = 0.0;
    for j in 0..g.n() {
        let field = 0.25 * (em.bdot[1][j].powi(2) - db0[j].powi(2))
            + 0.25 * (2..4).map(|a| em.bdot[a][j].powi(2) + db[a - 2][j].powi(2)).sum::<f64>();
        let bb = em.b[0][j].powi(2) - (1..4).map(|i| em.b[i][j].powi(2)).sum::<f64>();
        let phi2 = s.phi[j] * s.phi[j];
        let matter = 0.5 * (s.phidot[j].powi(2) + dphi[j].powi(2) + p.m * p.m * phi2) - 0.5 * e2 * bb * phi2;
        sum += field + matter + 0.5 * p.background_charge * em.b[0][j];
    }
    sum * g.h()
}

/// Largest `|E(t) − E(0)| / |E(0)|` along a full trajectory.
pub fn energy_drift(traj: &Trajectory<FullState>, p: &Params) -> f64 {
    let Some(first) = traj.frames.first() else { return 0.0 };
    let e0 = total_energy(first, p);
    let scale = if e0 != 0.0 { e0.abs() } else { 1.0 };
    traj.frames
        .iter()
        .map(|s| (total_energy(s, p) - e0).abs() / scale)
        .fold(0.0, f64::max)
}

/// Per-frame relative errors between two trajectories for each `B_μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub t: f64,
    pub linf: [f64; 4],
    pub l2: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    /// Max over frames and components of the relative L∞ error.
    pub fn max_linf(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.linf).fold(0.0, f64::max)
    }

    pub fn max_l2(&self) -> f64 {
        self.rows.iter().flat_map(|r| r.l2).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,linf_B0,linf_B1,linf_B2,linf_B3,l2_B0,l2_B1,l2_B2,l2_B3\n");
        for r in &self.rows {
            let cells: Vec<String> = std::iter::once(r.t).chain(r.linf).chain(r.l2).map(|v| format!("{v:e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>10}  {:>11} {:>11} {:>11} {:>11}", "t", "B_0", "B_1", "B_2", "B_3")?;
        for r in &self.rows {
            write!(f, "{:>10.5} ", r.t)?;
            for v in r.linf {
                write!(f, " {v:>11.3e}")?;
            }
            writeln!(f)?;
        }
        write!(f, "max relative L∞ {:.3e}, max relative L² {:.3e}", self.max_linf(), self.max_l2())
    }
}

fn relative(a: &[f64], b: &[f64], norm: impl Fn(&mut dyn Iterator<Item = f64>) -> f64) -> f64 {
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if diff == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

fn linf(it: &mut dyn Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, v| m.max(v.abs()))
}

fn l2(it: &mut dyn Iterator<Item = f64>) -> f64 {
    it.map(|v| v * v).sum::<f64>().sqrt()
}

/// Compare the `B_μ` of two trajectories frame by frame. Grids, frame
/// counts and frame times must agree. Each error is normalised by the
/// larger of the two norms, so the result is symmetric.
pub fn compare<A, B>(a: &Trajectory<A>, b: &Trajectory<B>) -> Result<CompareReport>
where
    A: AsRef<ReducedState>,
    B: AsRef<ReducedState>,
{
    if a.len() != b.len() {
        return Err(Error::GridMismatch(format!("{} frames vs {} frames", a.len(), b.len())));
    }
    let mut rows = Vec::with_capacity(a.len());
    for (fa, fb) in a.frames.iter().zip(&b.frames) {
        let (sa, sb) = (fa.as_ref(), fb.as_ref());
        if sa.grid != sb.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", sa.grid, sb.grid)));
        }
        if (sa.t - sb.t).abs() > 1e-9 * (1.0 + sa.t.abs()) {
            return Err(Error::GridMismatch(format!("frame times {} vs {}", sa.t, sb.t)));
        }
        let mut row = CompareRow { t: sa.t, linf: [0.0; 4], l2: [0.0; 4] };
        for mu in 0..4 {
            row.linf[mu] = relative(&sa.b[mu], &sb.b[mu], linf);
            row.l2[mu] = relative(&sa.b[mu], &sb.b[mu], l2);
        }
        rows.push(row);
    }
    Ok(CompareReport { rows })
}

/// Least-squares slope of `log error` against `log h`.
pub fn observed_order(levels: &[(f64, f64)]) -> Result<f64> {
    if levels.len() < 2 {
        return Err(Error::DegenerateInput(format!("need at least two refinement levels, got {}", levels.len())));
    }
    if let Some((h, e)) = levels.iter().find(|(h, e)| !(*h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite())) {
        return Err(Error::DegenerateInput(format!("spacing and error must be positive and finite (h={h}, error={e})")));
    }
    let pts: Vec<(f64, f64)> = levels.iter().map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-24 {
        return Err(Error::DegenerateInput("all refinement levels have the same spacing".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}
