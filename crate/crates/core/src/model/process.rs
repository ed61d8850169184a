use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ModelError, PerturbationSpec, StepSchedule};
use crate::perm::Permutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Naive,
    Insertion,
    Bubble,
    Cocktail,
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Algorithm::Naive),
            "insertion" => Ok(Algorithm::Insertion),
            "bubble" => Ok(Algorithm::Bubble),
            "cocktail" => Ok(Algorithm::Cocktail),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Naive => "naive",
            Algorithm::Insertion => "insertion",
            Algorithm::Bubble => "bubble",
            Algorithm::Cocktail => "cocktail",
        })
    }
}

/// The three random streams of a run. Stream `k` is ChaCha8 seeded from
/// the master seed with `set_stream(k)`: 0 schedule, 1 sorting, 2 mixing.
#[derive(Debug, Clone)]
pub struct StreamRngs {
    pub schedule: ChaCha8Rng,
    pub sorting: ChaCha8Rng,
    pub mixing: ChaCha8Rng,
}

impl StreamRngs {
    pub fn new(master: u64) -> Self {
        let stream = |k| {
            let mut r = ChaCha8Rng::seed_from_u64(master);
            r.set_stream(k);
            r
        };
        StreamRngs { schedule: stream(0), sorting: stream(1), mixing: stream(2) }
    }
}

/// A sorting step compared positions `index` and `index + 1` (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapReport {
    pub index: usize,
    pub swapped: bool,
}

/// A mixing step moved value `value` (0-based rank) by `effective` ranks;
/// `s` is the sampled shift before clamping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MixReport {
    pub value: usize,
    pub s: i64,
    pub effective: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepReport {
    Sort(SwapReport),
    Mix(MixReport),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Sort,
    Mix,
}

impl StepReport {
    pub fn kind(&self) -> StepKind {
        match self {
            StepReport::Sort(_) => StepKind::Sort,
            StepReport::Mix(_) => StepKind::Mix,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Cursor {
    pos: usize,
    // cocktail direction, insertion outer index
    back: bool,
    outer: usize,
}

#[derive(Debug, Clone)]
pub struct ProcessState {
    pub pi: Permutation,
    pub t: u64,
    pub sorts: u64,
    pub mixes: u64,
    pub rngs: StreamRngs,
    pending_mixes: u64,
    cursor: Cursor,
}

impl ProcessState {
    pub fn new(pi: Permutation, seed: u64) -> Self {
        ProcessState {
            pi,
            t: 0,
            sorts: 0,
            mixes: 0,
            rngs: StreamRngs::new(seed),
            pending_mixes: 0,
            cursor: Cursor { pos: 0, back: false, outer: 1 },
        }
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// Mixing steps still owed before the next sorting step.
    pub fn pending_mixes(&self) -> u64 {
        self.pending_mixes
    }

    /// Naive Sort: compares a uniformly random adjacent pair.
    pub fn apply_sorting_step(&mut self) -> SwapReport {
        let n = self.n();
        if n < 2 {
            self.t += 1;
            self.sorts += 1;
            return SwapReport { index: 0, swapped: false };
        }
        let i = self.rngs.sorting.random_range(0..n - 1);
        self.apply_sorting_step_at(i)
    }

    /// Compares positions `i` and `i+1` and swaps them if out of order.
    pub fn apply_sorting_step_at(&mut self, i: usize) -> SwapReport {
        let swapped = self.n() >= 2 && self.pi.get(i) > self.pi.get(i + 1);
        if swapped {
            self.pi.swap(i, i + 1);
        }
        self.t += 1;
        self.sorts += 1;
        SwapReport { index: i, swapped }
    }

    /// Picks a uniformly random value and shifts its rank by a sample of
    /// `spec`, clamped to the range.
    pub fn apply_mixing_step(&mut self, spec: &PerturbationSpec) -> MixReport {
        let n = self.n();
        let v = self.rngs.mixing.random_range(0..n);
        let s = spec.sample(&mut self.rngs.mixing);
        self.apply_mixing_at(v, s)
    }

    pub fn apply_mixing_at(&mut self, value: usize, s: i64) -> MixReport {
        let effective = self.pi.shift_value(value, s);
        self.t += 1;
        self.mixes += 1;
        MixReport { value, s, effective }
    }

    /// One comparison of a deterministic baseline scan.
    pub fn baseline_step(&mut self, alg: Algorithm) -> SwapReport {
        let n = self.n();
        if n < 2 {
            return self.apply_sorting_step_at(0);
        }
        let c = &mut self.cursor;
        let i = match alg {
            Algorithm::Naive => return self.apply_sorting_step(),
            Algorithm::Bubble => {
                let i = c.pos;
                c.pos = if i + 1 >= n - 1 { 0 } else { i + 1 };
                i
            }
            Algorithm::Cocktail => {
                let i = c.pos;
                if n > 2 {
                    if !c.back && i + 1 >= n - 1 {
                        c.back = true;
                    } else if c.back && i == 0 {
                        c.back = false;
                    }
                    c.pos = if c.back { i - 1 } else { i + 1 };
                }
                i
            }
            Algorithm::Insertion => {
                // compare (pos-1, pos); pos starts at outer
                let j = c.pos.max(1);
                j - 1
            }
        };
        let report = self.apply_sorting_step_at(i);
        if alg == Algorithm::Insertion {
            let c = &mut self.cursor;
            if report.swapped && i > 0 {
                c.pos = i;
            } else {
                c.outer = if c.outer + 1 >= n { 1 } else { c.outer + 1 };
                c.pos = c.outer;
            }
        }
        report
    }

    /// Performs the next step as dictated by the schedule.
    pub fn step(
        &mut self,
        spec: &PerturbationSpec,
        schedule: &mut StepSchedule,
        alg: Algorithm,
    ) -> Result<StepReport, ModelError> {
        if self.pending_mixes > 0 {
            self.pending_mixes -= 1;
            return Ok(StepReport::Mix(self.apply_mixing_step(spec)));
        }
        let r = self.baseline_step(alg);
        self.pending_mixes = schedule.next_count(self.sorts, &mut self.rngs.schedule)?;
        Ok(StepReport::Sort(r))
    }

    /// Runs `steps` steps, calling `observe` after each.
    pub fn run<E, F>(
        &mut self,
        spec: &PerturbationSpec,
        schedule: &mut StepSchedule,
        alg: Algorithm,
        steps: u64,
        mut observe: F,
    ) -> Result<(), E>
    where
        E: From<ModelError>,
        F: FnMut(&ProcessState, &StepReport) -> Result<(), E>,
    {
        for _ in 0..steps {
            let r = self.step(spec, schedule, alg)?;
            debug_assert_eq!(self.t, self.sorts + self.mixes);
            observe(self, &r)?;
        }
        Ok(())
    }
}
