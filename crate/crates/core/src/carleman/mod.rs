//! Linearisation of polynomial flows on a truncated bosonic Fock space.

pub mod embed;
pub mod fock;
pub mod poly;
pub mod reduced_poly;
pub mod sparse;

pub use embed::{build_m, coherent_shell_weight, coherent_tail_mass, coherent_vector, evolve, evolve_exact, integrate_classical, readout, StateVector};
pub use fock::{fock_dimension, ladder_matrices, FockBasis, Ladder};
pub use poly::{Monomial, Poly, PolySystem};
pub use reduced_poly::{polynomialize_reduced, polynomialize_reduced_with, Closure, ReducedLayout};
pub use sparse::CsrMatrix;
