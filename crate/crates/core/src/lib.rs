//! Naive Sort on evolving data: the process, the auxiliary potential
//! machinery used to analyse it, and experiment drivers.

pub mod analysis;
pub mod harness;
pub mod model;
pub mod perm;
pub mod verify;

pub use model::{Algorithm, PerturbationSpec, ProcessState, StepSchedule};
pub use perm::Permutation;
