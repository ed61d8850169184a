//! d-padded lists: the permutation spread over `N = (n+1)d - 1` cells.
//!
//! Positions are 1-based as in the definition; the k-th listed value
//! (0-based k) has target cell `d * (tau(v) + 1)`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use super::AnalysisError;
use crate::perm::Permutation;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PaddedList {
    d: usize,
    /// `slots[k]` is the cell of the k-th non-gap entry, strictly increasing.
    slots: Vec<u32>,
    /// `values[k]` is the k-th non-gap entry, i.e. `pi(k)`.
    values: Vec<u32>,
}

#[inline]
pub(crate) fn target_cell(d: usize, target: usize) -> i64 {
    (d * (target + 1)) as i64
}

impl PaddedList {
    /// Value `pi(k)` at cell `d (k+1)`.
    pub fn canonical(pi: &Permutation, d: usize) -> Self {
        assert!(d > 1, "padding needs d > 1");
        let slots = (0..pi.len()).map(|k| (d * (k + 1)) as u32).collect();
        PaddedList { d, slots, values: pi.as_slice().to_vec() }
    }

    /// Puts the entries of `pi` into the cells not listed in `gaps`.
    pub fn with_gaps(pi: &Permutation, d: usize, gaps: &[usize]) -> Result<Self, AnalysisError> {
        if d < 2 {
            return Err(AnalysisError::Structural("padding needs d > 1".into()));
        }
        let big_n = (pi.len() + 1) * d - 1;
        let mut is_gap = vec![false; big_n + 1];
        for &g in gaps {
            if g == 0 || g > big_n || is_gap[g] {
                return Err(AnalysisError::Structural(format!("bad gap cell {g}")));
            }
            is_gap[g] = true;
        }
        if gaps.len() != big_n - pi.len() {
            return Err(AnalysisError::Structural(format!(
                "expected {} gaps, got {}",
                big_n - pi.len(),
                gaps.len()
            )));
        }
        let slots = (1..=big_n).filter(|&c| !is_gap[c]).map(|c| c as u32).collect();
        Ok(PaddedList { d, slots, values: pi.as_slice().to_vec() })
    }

    /// From explicit cells (1-based values, `None` for gaps); for fixtures.
    pub fn from_cells(cells: &[Option<u32>], d: usize) -> Result<Self, AnalysisError> {
        let n = cells.iter().flatten().count();
        if d < 2 || cells.len() != (n + 1) * d - 1 {
            return Err(AnalysisError::Structural(format!(
                "{} cells cannot pad {n} values with d={d}",
                cells.len()
            )));
        }
        let mut slots = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for (i, c) in cells.iter().enumerate() {
            if let Some(v) = c {
                slots.push(i as u32 + 1);
                values.push(v.checked_sub(1).ok_or_else(|| {
                    AnalysisError::Structural("cell values are 1-based".into())
                })?);
            }
        }
        Permutation::from_vec(values.clone()).map_err(|e| AnalysisError::Structural(e.to_string()))?;
        Ok(PaddedList { d, slots, values })
    }

    pub fn n(&self) -> usize {
        self.slots.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of cells, `(n+1)d - 1`.
    pub fn cells(&self) -> usize {
        (self.n() + 1) * self.d - 1
    }

    pub fn slots(&self) -> &[u32] {
        &self.slots
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    #[inline]
    pub fn slot(&self, k: usize) -> usize {
        self.slots[k] as usize
    }

    #[inline]
    pub(crate) fn set_value(&mut self, k: usize, v: u32) {
        self.values[k] = v;
    }

    /// Keeps the gap layout and reads the entries of `pi` into it.
    pub fn reread(&mut self, pi: &Permutation) {
        self.values.copy_from_slice(pi.as_slice());
    }

    /// The gap cells (1-based).
    pub fn gaps(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.cells() - self.n());
        let mut next = 0;
        for c in 1..=self.cells() {
            if next < self.n() && self.slot(next) == c {
                next += 1;
            } else {
                out.push(c);
            }
        }
        out
    }

    /// Cell contents as 1-based values.
    pub fn to_cells(&self) -> Vec<Option<u32>> {
        let mut out = vec![None; self.cells()];
        for (k, &c) in self.slots.iter().enumerate() {
            out[c as usize - 1] = Some(self.values[k] + 1);
        }
        out
    }

    /// `|cell - d * (tau(v) + 1)|` for the k-th entry.
    #[inline]
    pub fn displacement(&self, k: usize, tau: &Permutation) -> u32 {
        let v = self.values[k] as usize;
        (self.slots[k] as i64 - target_cell(self.d, tau.get(v))).unsigned_abs() as u32
    }

    /// Total displacement.
    pub fn dsp(&self, tau: &Permutation) -> u64 {
        (0..self.n()).map(|k| self.displacement(k, tau) as u64).sum()
    }

    /// Maximum displacement.
    pub fn mdsp(&self, tau: &Permutation) -> u64 {
        (0..self.n()).map(|k| self.displacement(k, tau) as u64).max().unwrap_or(0)
    }

    /// -1, 0, +1 if entry k should step left, is fine, should step right.
    #[inline]
    fn violation(&self, k: usize, tau: &Permutation) -> i8 {
        let pos = self.slots[k] as i64;
        let target = target_cell(self.d, tau.get(self.values[k] as usize));
        if pos < target {
            let right_gap = k + 1 == self.n() || self.slots[k + 1] as i64 != pos + 1;
            if right_gap {
                return 1;
            }
        } else if pos > target {
            let left_gap = if k == 0 { pos > 1 } else { self.slots[k - 1] as i64 != pos - 1 };
            if left_gap {
                return -1;
            }
        }
        0
    }

    pub fn is_locally_optimal(&self, tau: &Permutation) -> bool {
        (0..self.n()).all(|k| self.violation(k, tau) == 0)
    }

    /// Runs the local-optimisation procedure to a fixpoint.
    pub fn lopt(&mut self, tau: &Permutation) {
        self.lopt_from(tau, 0..self.n(), |_| {});
    }

    /// Local optimisation assuming only the entries `seeds` (slot indices)
    /// may violate the condition. Always moves the smallest violating
    /// entry first. `moved` is called with each moved value.
    pub fn lopt_from<I, F>(&mut self, tau: &Permutation, seeds: I, mut moved: F)
    where
        I: IntoIterator<Item = usize>,
        F: FnMut(usize),
    {
        let mut heap: BinaryHeap<Reverse<usize>> = seeds.into_iter().map(Reverse).collect();
        let n = self.n();
        while let Some(Reverse(k)) = heap.pop() {
            let dir = self.violation(k, tau);
            if dir == 0 {
                continue;
            }
            if dir > 0 {
                self.slots[k] += 1;
            } else {
                self.slots[k] -= 1;
            }
            moved(self.values[k] as usize);
            heap.push(Reverse(k));
            if k > 0 {
                heap.push(Reverse(k - 1));
            }
            if k + 1 < n {
                heap.push(Reverse(k + 1));
            }
        }
    }

    /// Checks the cell layout and that the entries read `pi`.
    pub fn validate(&self, pi: &Permutation) -> Result<(), AnalysisError> {
        if self.values != pi.as_slice() {
            return Err(AnalysisError::Structural("padding does not read pi".into()));
        }
        let mut prev = 0;
        for &c in &self.slots {
            if c <= prev || c as usize > self.cells() {
                return Err(AnalysisError::Structural(format!("cell {c} out of order")));
            }
            prev = c;
        }
        Ok(())
    }

    /// One line per cell: `pos value target displacement`, gaps as `-`.
    pub fn dump(&self, tau: &Permutation) -> String {
        let mut out = String::new();
        let mut k = 0;
        for c in 1..=self.cells() {
            if k < self.n() && self.slot(k) == c {
                let v = self.values[k] as usize;
                let target = target_cell(self.d, tau.get(v));
                let _ = writeln!(out, "{c} {} {target} {}", v + 1, self.displacement(k, tau));
                k += 1;
            } else {
                let _ = writeln!(out, "{c} - - -");
            }
        }
        out
    }
}
