//! The auxiliary process `(l_t, tau_t, sigma_t)` following a run.

use super::admissible::{adm_in_place, is_admissible, AdmSwap};
use super::filter::theta_filter;
use super::padding::{target_cell, PaddedList};
use super::potential::{log_sum_exp, phi_from_histogram, psi, LogValue};
use super::AnalysisError;
use crate::model::StepReport;
use crate::perm::Permutation;

/// Which target permutation an `adm` swap acted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetKind {
    Tau,
    Sigma,
}

/// An `adm` swap with the cells of the two entries at the time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordedSwap {
    pub which: TargetKind,
    pub swap: AdmSwap,
    pub cells: (usize, usize),
}

/// Change of `Phi` over the last step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDelta {
    /// `ln sum exp(alpha x)` over the changed entries before the step.
    pub before_ln: f64,
    pub after_ln: f64,
}

impl StepDelta {
    pub const NONE: StepDelta = StepDelta { before_ln: f64::NEG_INFINITY, after_ln: f64::NEG_INFINITY };

    /// `Phi` did not increase, up to a relative rounding slack of 1e-12.
    pub fn non_increasing(&self) -> bool {
        self.after_ln <= self.before_ln + 1e-12 || self.after_ln == f64::NEG_INFINITY
    }
}

const RECOMPUTE_EVERY: u64 = 1_000_000;

#[derive(Debug, Clone)]
pub struct AuxTracker {
    alpha: f64,
    list: PaddedList,
    tau: Permutation,
    sigma: Permutation,
    t: u64,
    disp: Vec<u32>,
    hist: Vec<u32>,
    weights: Vec<f64>,
    /// Running `Phi` as a plain sum; `+inf` while it overflows.
    running: f64,
    /// Largest term added or removed since `running` was last exact.
    scale: f64,
    /// Largest displacement present in `hist`.
    hist_max: usize,
    since_recompute: u64,
    sigma_peak: u32,
    record_swaps: bool,
    swaps: Vec<RecordedSwap>,
    last: StepDelta,
    touched: Vec<u32>,
    old_disp: Vec<u32>,
    mark: Vec<bool>,
    sigma_touched: Vec<u32>,
    seeds: Vec<usize>,
}

impl AuxTracker {
    /// Starts with `tau = sigma = id` and the canonical padding of `pi`
    /// made locally optimal. `t` is the current step of the run.
    pub fn new(pi: &Permutation, d: usize, alpha: f64, t: u64) -> Result<Self, AnalysisError> {
        if d < 2 {
            return Err(AnalysisError::Structural("d must exceed 1".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(AnalysisError::Structural(format!("alpha must be positive, got {alpha}")));
        }
        let n = pi.len();
        let mut list = PaddedList::canonical(pi, d);
        let tau = Permutation::identity(n);
        list.lopt(&tau);
        let cells = list.cells();
        let weights = (0..=cells).map(|k| (alpha * k as f64).exp_m1()).collect();
        let mut tr = AuxTracker {
            alpha,
            list,
            sigma: tau.clone(),
            tau,
            t,
            disp: vec![0; n],
            hist: vec![0; cells + 1],
            weights,
            running: 0.0,
            scale: 0.0,
            hist_max: 0,
            since_recompute: 0,
            sigma_peak: 0,
            record_swaps: false,
            swaps: Vec::new(),
            last: StepDelta::NONE,
            touched: Vec::new(),
            old_disp: Vec::new(),
            mark: vec![false; n],
            sigma_touched: Vec::new(),
            seeds: Vec::new(),
        };
        tr.rebuild_potential();
        Ok(tr)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d(&self) -> usize {
        self.list.d()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn list(&self) -> &PaddedList {
        &self.list
    }

    pub fn tau(&self) -> &Permutation {
        &self.tau
    }

    pub fn sigma(&self) -> &Permutation {
        &self.sigma
    }

    /// Keep every `adm` swap of the last step for inspection.
    pub fn set_record_swaps(&mut self, on: bool) {
        self.record_swaps = on;
    }

    pub fn last_swaps(&self) -> &[RecordedSwap] {
        &self.swaps
    }

    pub fn last_delta(&self) -> StepDelta {
        self.last
    }

    /// Current `Phi`.
    pub fn phi(&self) -> LogValue {
        if self.running.is_finite() {
            LogValue::from_f64(self.running.max(0.0))
        } else {
            phi_from_histogram(&self.hist, self.alpha)
        }
    }

    /// `Phi` recomputed from the displacement histogram.
    pub fn phi_exact(&self) -> LogValue {
        phi_from_histogram(&self.hist, self.alpha)
    }

    /// `Phi` for another smoothing parameter.
    pub fn phi_at(&self, alpha: f64) -> LogValue {
        phi_from_histogram(&self.hist, alpha)
    }

    pub fn psi(&self, alpha: f64) -> LogValue {
        psi(&self.sigma, alpha)
    }

    /// `max_i |sigma^{-1}(i) - i|`, which equals `mdev(sigma)`.
    pub fn max_delta(&self) -> u64 {
        crate::perm::mdev_sorted(&self.sigma)
    }

    /// Largest `delta` reached by any target since the last reset.
    pub fn sigma_peak(&self) -> u64 {
        self.sigma_peak as u64
    }

    pub fn mdsp(&self) -> u64 {
        self.list.mdsp(&self.tau)
    }

    pub fn dsp(&self) -> u64 {
        self.list.dsp(&self.tau)
    }

    pub fn dump(&self) -> String {
        self.list.dump(&self.tau)
    }

    fn rebuild_potential(&mut self) {
        self.hist.iter_mut().for_each(|c| *c = 0);
        for k in 0..self.list.n() {
            let v = self.list.values()[k] as usize;
            let x = self.list.displacement(k, &self.tau);
            self.disp[v] = x;
            self.hist[x as usize] += 1;
        }
        self.hist_max = self.hist.iter().rposition(|&c| c > 0).unwrap_or(0);
        self.resum();
    }

    /// `running` from the histogram.
    fn resum(&mut self) {
        self.running = if self.weights[self.hist_max].is_finite() {
            self.hist[..=self.hist_max]
                .iter()
                .zip(&self.weights)
                .filter(|(&c, _)| c > 0)
                .map(|(&c, &w)| c as f64 * w)
                .sum()
        } else {
            f64::INFINITY
        };
        self.scale = self.running;
        self.since_recompute = 0;
    }

    /// Applies a step's change to `running`, re-summing when `Phi` leaves
    /// or re-enters the representable range or when cancellation would
    /// cost more than about 4 digits.
    fn update_running(&mut self, added: f64, removed: f64) {
        if !self.weights[self.hist_max].is_finite() {
            self.running = f64::INFINITY;
            return;
        }
        if !self.running.is_finite() {
            self.resum();
            return;
        }
        self.running += added - removed;
        self.scale = self.scale.max(added).max(removed);
        if self.running < self.scale * 1e-4 {
            self.resum();
        }
    }

    fn check_running(&mut self) -> Result<(), AnalysisError> {
        if !self.running.is_finite() {
            return Ok(());
        }
        let exact = phi_from_histogram(&self.hist, self.alpha).to_f64();
        let scale = exact.abs().max(1.0);
        if (self.running - exact).abs() / scale > 1e-6 {
            return Err(AnalysisError::PotentialDrift { running: self.running, exact });
        }
        self.running = exact;
        self.since_recompute = 0;
        Ok(())
    }

    #[inline]
    fn touch(&mut self, v: usize) {
        if !self.mark[v] {
            self.mark[v] = true;
            self.touched.push(v as u32);
            self.old_disp.push(self.disp[v]);
        }
    }

    /// Advances the auxiliary quantities over the step `report`, which has
    /// just taken the process to step `t` with order `pi`.
    pub fn aux_step(&mut self, pi: &Permutation, t: u64, report: &StepReport) -> Result<StepDelta, AnalysisError> {
        if t != self.t + 1 {
            return Err(AnalysisError::Sync { tracker: self.t, process: t });
        }
        self.t = t;
        self.swaps.clear();
        self.last = StepDelta::NONE;
        self.seeds.clear();
        self.sigma_touched.clear();
        match *report {
            StepReport::Sort(r) => {
                if !r.swapped {
                    return Ok(self.last);
                }
                let i = r.index;
                for k in [i, i + 1] {
                    self.touch(pi.get(k));
                    self.list.set_value(k, pi.get(k) as u32);
                }
                self.seeds.extend([i.wrapping_sub(1), i, i + 1]);
            }
            StepReport::Mix(r) => {
                if r.effective == 0 {
                    return Ok(self.last);
                }
                self.tau.shift_entry(r.value, r.effective);
                self.sigma.shift_entry(r.value, r.effective);
                let (lo, hi) = crate::perm::clamp_span(r.value, r.effective, pi.len());
                for w in lo..=hi {
                    let p = pi.inv(w);
                    self.touch(w);
                    self.sigma_touched.push(w as u32);
                    self.list.set_value(p, w as u32);
                    self.seeds.extend([p.wrapping_sub(1), p]);
                }
            }
        }
        self.settle(pi)
    }

    /// adm on both targets from `self.seeds`, lopt from the touched
    /// entries, then the potential bookkeeping.
    fn settle(&mut self, pi: &Permutation) -> Result<StepDelta, AnalysisError> {
        let seeds = std::mem::take(&mut self.seeds);
        let mut tau_swapped: Vec<(AdmSwap, TargetKind)> = Vec::new();
        adm_in_place(&mut self.tau, pi, seeds.iter().copied(), |s| tau_swapped.push((s, TargetKind::Tau)));
        adm_in_place(&mut self.sigma, pi, seeds.iter().copied(), |s| tau_swapped.push((s, TargetKind::Sigma)));
        self.seeds = seeds;
        for (s, which) in tau_swapped {
            match which {
                TargetKind::Tau => {
                    self.touch(s.lo);
                    self.touch(s.hi);
                }
                TargetKind::Sigma => self.sigma_touched.extend([s.lo as u32, s.hi as u32]),
            }
            if self.record_swaps {
                let cells = (self.list.slot(s.pos), self.list.slot(s.pos + 1));
                self.swaps.push(RecordedSwap { which, swap: s, cells });
            }
        }
        for &u in &self.sigma_touched {
            let x = (u as usize).abs_diff(self.sigma.get(u as usize)) as u32;
            self.sigma_peak = self.sigma_peak.max(x);
        }

        let starts: Vec<usize> = self.touched.iter().map(|&v| pi.inv(v as usize)).collect();
        let mut moved = Vec::new();
        self.list.lopt_from(&self.tau, starts, |v| moved.push(v));
        for v in moved {
            self.touch(v);
        }

        let mut new_disp = Vec::with_capacity(self.touched.len());
        let d = self.list.d();
        let (mut added, mut removed) = (0.0f64, 0.0f64);
        for idx in 0..self.touched.len() {
            let v = self.touched[idx] as usize;
            let cell = self.list.slot(pi.inv(v)) as i64;
            let x = (cell - target_cell(d, self.tau.get(v))).unsigned_abs() as u32;
            let old = self.old_disp[idx];
            self.hist[old as usize] -= 1;
            self.hist[x as usize] += 1;
            added += self.weights[x as usize];
            removed += self.weights[old as usize];
            self.hist_max = self.hist_max.max(x as usize);
            self.disp[v] = x;
            self.mark[v] = false;
            new_disp.push(x);
        }
        while self.hist_max > 0 && self.hist[self.hist_max] == 0 {
            self.hist_max -= 1;
        }
        self.update_running(added, removed);
        self.last = StepDelta {
            before_ln: log_sum_exp(self.old_disp.iter().copied(), self.alpha),
            after_ln: log_sum_exp(new_disp.iter().copied(), self.alpha),
        };
        self.touched.clear();
        self.old_disp.clear();

        self.since_recompute += 1;
        if self.since_recompute >= RECOMPUTE_EVERY {
            self.check_running()?;
        }
        #[cfg(debug_assertions)]
        {
            let cells = self.list.cells() as u64;
            if cells <= 1024 || self.t % cells == 0 {
                self.validate(pi)?;
            }
        }
        Ok(self.last)
    }

    /// `tau, sigma <- id` and `l <- lopt(l, id)`.
    pub fn reset_full(&mut self, pi: &Permutation) {
        let n = pi.len();
        self.tau = Permutation::identity(n);
        self.sigma = Permutation::identity(n);
        self.list.reread(pi);
        self.list.lopt(&self.tau);
        self.sigma_peak = 0;
        self.rebuild_potential();
    }

    /// `sigma <- id`, `tau <- adm(theta_filter(tau), pi)`, `l <- lopt(l, tau)`.
    pub fn reset_partial(&mut self, pi: &Permutation, theta: u64) {
        let n = pi.len();
        self.sigma = Permutation::identity(n);
        self.tau = theta_filter(&self.tau, theta);
        adm_in_place(&mut self.tau, pi, 0..n, |_| {});
        self.list.reread(pi);
        self.list.lopt(&self.tau);
        self.sigma_peak = 0;
        self.rebuild_potential();
    }

    /// Checks admissibility, local optimality, the padding and the
    /// potential bookkeeping from scratch.
    pub fn validate(&self, pi: &Permutation) -> Result<(), AnalysisError> {
        self.list.validate(pi)?;
        if !is_admissible(&self.tau, pi) || !is_admissible(&self.sigma, pi) {
            return Err(AnalysisError::Structural(format!("targets not admissible at step {}", self.t)));
        }
        if !self.list.is_locally_optimal(&self.tau) {
            return Err(AnalysisError::Structural(format!("padding not locally optimal at step {}", self.t)));
        }
        for k in 0..self.list.n() {
            let v = self.list.values()[k] as usize;
            if self.disp[v] != self.list.displacement(k, &self.tau) {
                return Err(AnalysisError::Structural(format!("stale displacement for value {}", v + 1)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{adm, phi};
    use crate::model::{MixReport, ProcessState, SwapReport};

    #[test]
    fn running_phi_survives_large_drops() {
        // Phi starts near e^280 and ends many orders of magnitude lower
        let spec = crate::model::PerturbationSpec::adjacent();
        let mut st = ProcessState::new(Permutation::reverse(48), 5);
        let mut tr = AuxTracker::new(&st.pi, 2, 20f64.ln(), 0).unwrap();
        let start = tr.phi_exact().ln();
        let mut schedule = crate::model::StepSchedule::fixed(1, 48).unwrap();
        for _ in 0..6_000 {
            let r = st.step(&spec, &mut schedule, crate::model::Algorithm::Naive).unwrap();
            tr.aux_step(&st.pi, st.t, &r).unwrap();
        }
        let (run, exact) = (tr.phi().ln(), tr.phi_exact().ln());
        assert!(start - exact > 100.0);
        assert!(run == exact || (run - exact).abs() < 1e-9 * exact.abs().max(1.0), "{run} vs {exact}");
        assert!(exact > 0.0, "{exact}");
    }

    #[test]
    fn reversed_pair_potential() {
        let pi = Permutation::from_one_based(&[2, 1]).unwrap();
        let a = 20f64.ln();
        let tr = AuxTracker::new(&pi, 2, a, 0).unwrap();
        // displacements 1 and 2 after local optimisation
        assert!((tr.phi().to_f64() - 418.0).abs() < 1e-9);
    }

    #[test]
    fn unswapped_sort_changes_nothing() {
        let pi = Permutation::from_one_based(&[1, 3, 2]).unwrap();
        let mut tr = AuxTracker::new(&pi, 2, 1.0, 0).unwrap();
        let before = (tr.list().clone(), tr.tau().clone(), tr.sigma().clone());
        tr.aux_step(&pi, 1, &StepReport::Sort(SwapReport { index: 0, swapped: false })).unwrap();
        assert_eq!(before, (tr.list().clone(), tr.tau().clone(), tr.sigma().clone()));
    }

    #[test]
    fn mixing_from_sorted_keeps_phi() {
        let mut st = ProcessState::new(Permutation::identity(3), 0);
        let mut tr = AuxTracker::new(&st.pi, 2, 20f64.ln(), 0).unwrap();
        let r = st.apply_mixing_at(1, 1);
        assert_eq!(st.pi.to_one_based(), vec![1, 3, 2]);
        let delta = tr.aux_step(&st.pi, 1, &StepReport::Mix(r)).unwrap();
        assert_eq!(tr.tau().to_one_based(), vec![1, 3, 2]);
        assert_eq!(tr.sigma().to_one_based(), vec![1, 3, 2]);
        assert!(tr.phi().is_zero());
        assert!(delta.non_increasing());
        tr.validate(&st.pi).unwrap();
    }

    #[test]
    fn sync_error() {
        let pi = Permutation::identity(3);
        let mut tr = AuxTracker::new(&pi, 2, 1.0, 5).unwrap();
        let r = StepReport::Mix(MixReport { value: 0, s: 1, effective: 0 });
        assert!(matches!(tr.aux_step(&pi, 7, &r), Err(AnalysisError::Sync { .. })));
    }

    #[test]
    fn follows_reference_definition() {
        // replay with full adm/lopt from scratch each step
        use crate::model::{Algorithm, PerturbationSpec, StepSchedule};
        let n = 12;
        let spec = PerturbationSpec::signed_geometric(0.4).unwrap();
        let mut sched = StepSchedule::fixed(2, n).unwrap();
        let mut st = ProcessState::new(Permutation::reverse(n), 3);
        let mut tr = AuxTracker::new(&st.pi, 3, 0.5, 0).unwrap();
        let (mut tau, mut sigma, mut list) = (tr.tau().clone(), tr.sigma().clone(), tr.list().clone());
        for _ in 0..3000 {
            let r = st.step(&spec, &mut sched, Algorithm::Naive).unwrap();
            if let StepReport::Mix(m) = r {
                tau.shift_entry(m.value, m.s);
                sigma.shift_entry(m.value, m.s);
            }
            tau = adm(&tau, &st.pi);
            sigma = adm(&sigma, &st.pi);
            list.reread(&st.pi);
            list.lopt(&tau);
            let before = tr.phi_exact();
            let delta = tr.aux_step(&st.pi, st.t, &r).unwrap();
            assert_eq!((&tau, &sigma, &list), (tr.tau(), tr.sigma(), tr.list()));
            assert!(delta.non_increasing());
            assert!(tr.phi_exact() <= LogValue::from_ln(before.ln() + 1e-12));
            let direct = phi(&list, &tau, 0.5).to_f64();
            assert!((tr.phi().to_f64() - direct).abs() <= 1e-9 * direct.max(1.0));
        }
    }

    #[test]
    fn resets() {
        let pi = Permutation::from_one_based(&[2, 1, 4, 3, 5]).unwrap();
        let mut tr = AuxTracker::new(&pi, 2, 1.0, 0).unwrap();
        tr.reset_partial(&pi, 10);
        let partial = (tr.list().clone(), tr.tau().clone());
        tr.reset_full(&pi);
        assert_eq!(partial, (tr.list().clone(), tr.tau().clone()));
        tr.validate(&pi).unwrap();
    }
}
