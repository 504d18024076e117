//! Scalar electrodynamics in unitary gauge on a periodic 1+1 grid, with the
//! matter field eliminated, plus a Fock-space linearisation of polynomial
//! systems.

pub mod carleman;
pub mod diagnostics;
pub mod elliptic;
pub mod error;
pub mod full;
pub mod kernel;
pub mod reduced;
pub mod scenario;
pub mod snapshot;
pub mod state;
pub mod timestep;
pub mod trajectory;

pub use error::{Error, Floor, Result};
pub use kernel::{Conventions, FieldArray, FourField, Grid1D};
pub use scenario::{make_scenario, Prepared, ScenarioKind, ScenarioSpec};
pub use state::{FullState, Params, ReducedState};
pub use trajectory::{FullTrajectory, ReducedTrajectory, StepNotes, Trajectory};
