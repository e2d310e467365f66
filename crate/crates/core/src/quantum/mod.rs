//! Operator algebra and master-equation integration on small dense spaces.

mod evolve;
mod generator;
mod operator;
mod space;
mod state;

pub use evolve::{evolve, evolve_observed, EvolveOptions, Trajectory, DEFAULT_DT, RUN_POSITIVITY_TOL, RUN_TRACE_TOL};
pub use generator::{Coefficient, Term, TimeDependentGenerator};
pub use operator::{annihilation, kron, number, CMatrix, Operator, I, ONE, ZERO};
pub use space::{Factor, HilbertSpace};
pub use state::{expect, partial_trace, DensityMatrix};
