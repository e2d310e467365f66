//! Simulation of shaped phonon emission and capture by superconducting
//! qudits, which-path heralding and delayed erasure, together with a circuit
//! model of qudit relaxation into an interdigitated transducer.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod cascade;
pub mod device;
pub mod error;
pub mod idtcirc;
pub mod protocols;
pub mod quantum;
pub mod units;

pub use error::{Error, Result};
pub use quantum::{DensityMatrix, HilbertSpace, Operator, TimeDependentGenerator};
