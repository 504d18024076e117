//! Time-ordered snapshots of a run.

use crate::state::{FullState, ReducedState};

/// Per-snapshot bookkeeping from the integrator.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepNotes {
    /// Grid points where the B_0 closure used the free-field fallback.
    pub fallback_points: usize,
    /// Grid points where the Φ-division limit rule was applied.
    pub floor_rule_points: usize,
    /// Grid points clamped by soft guards.
    pub clamped_points: usize,
    /// Grid points where the reconstructed `Φ` is below `−phi_floor`. Real
    /// matter has `Φ ≥ 0`, so these are reported but not rejected.
    pub negative_phi_points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    pub frames: Vec<S>,
    pub notes: Vec<StepNotes>,
}

impl<S> Trajectory<S> {
    pub fn new() -> Self {
        Self { frames: Vec::new(), notes: Vec::new() }
    }

    pub fn push(&mut self, frame: S, notes: StepNotes) {
        self.frames.push(frame);
        self.notes.push(notes);
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn last(&self) -> Option<&S> {
        self.frames.last()
    }
}

impl<S> Default for Trajectory<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: AsRef<ReducedState>> Trajectory<S> {
    pub fn times(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.as_ref().t).collect()
    }
}

pub type FullTrajectory = Trajectory<FullState>;
pub type ReducedTrajectory = Trajectory<ReducedState>;
