//! The auxiliary process used in the analysis: a d-padded copy of the
//! order, target permutations `tau` and `sigma`, and the potentials
//! `Phi` and `Psi` built from them.

mod admissible;
mod blocks;
mod filter;
mod padding;
mod potential;
mod tracker;

pub use admissible::{adm, adm_in_place, is_admissible, AdmSwap};
pub use blocks::{decompose_blocks, head_dominance_ratio, Block, BlockKind};
pub use filter::{far_displacement, tail_displacement, theta_filter};
pub use padding::PaddedList;
pub use potential::{format_g6, phi, phi_from_histogram, psi, LogValue, PotentialConfig, EXP_CAP};
pub use tracker::{AuxTracker, RecordedSwap, StepDelta, TargetKind};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("tracker at step {tracker} cannot follow process step {process}")]
    Sync { tracker: u64, process: u64 },
    #[error("running potential {running} drifted from recomputed {exact}")]
    PotentialDrift { running: f64, exact: f64 },
}
