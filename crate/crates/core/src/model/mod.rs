//! The evolving-data process: a maintained order `pi` that Naive Sort (or
//! a baseline) sorts while mixing steps perturb the true ranks.

mod dual;
mod perturbation;
mod process;
mod schedule;

pub use dual::{simulate_dual, DualMismatch};
pub use perturbation::{PerturbationKind, PerturbationSpec};
pub use process::{
    Algorithm, MixReport, ProcessState, StepKind, StepReport, StreamRngs, SwapReport,
};
pub use schedule::{sorting_fraction_ok, validate_window, ScheduleKind, StepSchedule};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid perturbation spec: {0}")]
    InvalidSpec(String),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("schedule window starting at sorting step {start} sums to {sum} > {limit}")]
    WindowViolation { start: usize, sum: u64, limit: u64 },
    #[error("explicit schedule exhausted after {0} entries")]
    ScheduleExhausted(usize),
}
