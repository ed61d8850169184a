//! Experiment drivers: trajectories, scaling studies, the reset protocols,
//! exact drift checks and the lower-bound constructions.

mod drift;
mod lower_bound;
mod parallel;
mod protocol;
mod record;
mod scaling;
mod stats;

pub use drift::{exact_drift_at, exact_drift_check, sample_reachable_states, DriftOutcome, DriftReport};
pub use lower_bound::{
    block_shift, run_lower_bound_convergence, run_lower_bound_mdev, ConvergenceReport, ConvergenceRun,
    MdevGrowthReport, MdevGrowthRow,
};
pub use parallel::{init_threads, map_seeds, map_seeds_sequential};
pub use protocol::{
    run_mdev_protocol, run_tdev_protocol, FilterCheck, GroupReport, MdevProtocolReport, PhaseKind, PhaseReport,
    ProtocolConfig, TdevProtocolReport,
};
pub use record::{run_trajectory, AuxSettings, RunSpec, Start, TrajectoryRecord};
pub use scaling::{run_scaling_study, ScalingConfig, ScalingRow, ScalingRun};
pub use stats::{median, spearman};

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::model::{DualMismatch, ModelError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Dual(#[from] DualMismatch),
    #[error("configuration error: {0}")]
    Config(String),
}

/// Seeds `base, base+1, ...`.
pub fn seed_list(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}
