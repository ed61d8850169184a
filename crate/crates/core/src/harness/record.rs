use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::HarnessError;
use crate::analysis::{AuxTracker, LogValue};
use crate::model::{Algorithm, PerturbationSpec, ProcessState, StepSchedule};
use crate::perm::{dev_sorted, kendall_sorted, mdev_sorted, Permutation};

/// Initial permutation of a run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Start {
    Sorted,
    Reverse,
    /// Uniform, drawn from its own stream of the run seed.
    Random,
    /// Cyclic shift of the first `w + 1` entries; see [`super::block_shift`].
    BlockShift(usize),
}

impl Start {
    pub fn build(&self, n: usize, seed: u64) -> Result<Permutation, HarnessError> {
        Ok(match self {
            Start::Sorted => Permutation::identity(n),
            Start::Reverse => Permutation::reverse(n),
            Start::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(3);
                Permutation::random(n, &mut rng)
            }
            Start::BlockShift(w) => super::block_shift(n, *w)?,
        })
    }
}

impl FromStr for Start {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sorted" => Ok(Start::Sorted),
            "reverse" => Ok(Start::Reverse),
            "random" => Ok(Start::Random),
            _ => match s.strip_prefix("shift:") {
                Some(w) => w.parse().map(Start::BlockShift).map_err(|_| format!("bad shift width '{w}'")),
                None => Err(format!("unknown start '{s}'")),
            },
        }
    }
}

impl fmt::Display for Start {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Start::Sorted => f.write_str("sorted"),
            Start::Reverse => f.write_str("reverse"),
            Start::Random => f.write_str("random"),
            Start::BlockShift(w) => write!(f, "shift:{w}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxSettings {
    pub d: usize,
    pub alpha: f64,
    /// Smoothing parameter for `Psi`.
    pub psi_alpha: f64,
}

#[derive(Debug, Clone)]
pub struct RunSpec {
    pub n: usize,
    pub start: Start,
    pub perturbation: PerturbationSpec,
    pub schedule: StepSchedule,
    pub algorithm: Algorithm,
    pub steps: u64,
    pub seed: u64,
    /// 0 records only the first and last step.
    pub record_every: u64,
    pub aux: Option<AuxSettings>,
}

/// One row of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub step: u64,
    pub phase: u32,
    pub mdev: u64,
    pub dev: u64,
    pub kendall: u64,
    pub phi: Option<LogValue>,
    pub psi: Option<LogValue>,
    pub max_delta: Option<u64>,
    pub sorts: u64,
    pub mixes: u64,
}

impl TrajectoryRecord {
    pub fn capture(state: &ProcessState, phase: u32, aux: Option<(&AuxTracker, f64)>) -> Self {
        TrajectoryRecord {
            step: state.t,
            phase,
            mdev: mdev_sorted(&state.pi),
            dev: dev_sorted(&state.pi),
            kendall: kendall_sorted(&state.pi),
            phi: aux.map(|(a, _)| a.phi()),
            psi: aux.map(|(a, pa)| a.psi(pa)),
            max_delta: aux.map(|(a, _)| a.max_delta()),
            sorts: state.sorts,
            mixes: state.mixes,
        }
    }
}

/// Runs one trajectory and returns its records.
pub fn run_trajectory(spec: &RunSpec) -> Result<Vec<TrajectoryRecord>, HarnessError> {
    if spec.n == 0 {
        return Err(HarnessError::Config("n must be at least 1".into()));
    }
    let pi = spec.start.build(spec.n, spec.seed)?;
    let mut state = ProcessState::new(pi, spec.seed);
    let mut schedule = spec.schedule.clone();
    let mut tracker = match spec.aux {
        Some(a) => Some((AuxTracker::new(&state.pi, a.d, a.alpha, 0)?, a.psi_alpha)),
        None => None,
    };
    let snap = |st: &ProcessState, tr: &Option<(AuxTracker, f64)>| {
        TrajectoryRecord::capture(st, 0, tr.as_ref().map(|(t, pa)| (t, *pa)))
    };
    let mut out = vec![snap(&state, &tracker)];
    state.run::<HarnessError, _>(&spec.perturbation, &mut schedule, spec.algorithm, spec.steps, |st, r| {
        if let Some((tr, _)) = tracker.as_mut() {
            tr.aux_step(&st.pi, st.t, r)?;
        }
        if spec.record_every > 0 && st.t % spec.record_every == 0 {
            out.push(snap(st, &tracker));
        }
        Ok(())
    })?;
    if out.last().map(|r| r.step) != Some(state.t) {
        out.push(snap(&state, &tracker));
    }
    Ok(out)
}
