//! Exact one-step expectation of `Phi` over the sorting-index choice.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{map_seeds, HarnessError};
use crate::analysis::{AuxTracker, LogValue};
use crate::model::{Algorithm, PerturbationSpec, ProcessState, StepReport, StepSchedule, SwapReport};
use crate::perm::Permutation;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftOutcome {
    pub phi: LogValue,
    /// Mean of `Phi` after the sorting step over all `n-1` indices.
    pub expectation: LogValue,
    /// `Phi (1 - alpha / (4(n-1)))`.
    pub bound: LogValue,
}

impl DriftOutcome {
    pub fn holds(&self) -> bool {
        self.expectation.is_zero() || self.expectation.ln() <= self.bound.ln()
    }

    /// `ln E - ln bound`; negative when the inequality holds.
    pub fn margin_ln(&self) -> f64 {
        if self.expectation.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.expectation.ln() - self.bound.ln()
        }
    }
}

/// Enumerates every index of the next sorting step from this state.
pub fn exact_drift_at(pi: &Permutation, tracker: &AuxTracker) -> Result<DriftOutcome, HarnessError> {
    let n = pi.len();
    if n < 2 {
        return Err(HarnessError::Config("drift check needs n >= 2".into()));
    }
    let phi = tracker.phi_exact();
    let mut lns = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        let mut p = pi.clone();
        let swapped = p.get(i) > p.get(i + 1);
        if swapped {
            p.swap(i, i + 1);
        }
        let mut tr = tracker.clone();
        tr.aux_step(&p, tracker.t() + 1, &StepReport::Sort(SwapReport { index: i, swapped }))?;
        lns.push(tr.phi_exact().ln());
    }
    let m = lns.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let expectation = if m == f64::NEG_INFINITY {
        LogValue::ZERO
    } else {
        LogValue::from_ln(m + lns.iter().map(|x| (x - m).exp()).sum::<f64>().ln() - ((n - 1) as f64).ln())
    };
    let factor = 1.0 - tracker.alpha() / (4.0 * (n - 1) as f64);
    let bound = if factor <= 0.0 { LogValue::ZERO } else { LogValue::from_ln(phi.ln() + factor.ln()) };
    Ok(DriftOutcome { phi, expectation, bound })
}

/// States reached by running the auxiliary process from a random start
/// for a random number of steps, stopped where a sorting step is next.
pub fn sample_reachable_states(
    n: usize,
    count: usize,
    seed: u64,
    spec: &PerturbationSpec,
    b: u64,
    d: usize,
    alpha: f64,
) -> Result<Vec<(Permutation, AuxTracker)>, HarnessError> {
    let seeds: Vec<u64> = (0..count as u64).map(|j| seed.wrapping_mul(1_000_003).wrapping_add(j)).collect();
    map_seeds(&seeds, |s| -> Result<(Permutation, AuxTracker), HarnessError> {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        rng.set_stream(7);
        let mut state = ProcessState::new(Permutation::random(n, &mut rng), s);
        let mut tracker = AuxTracker::new(&state.pi, d, alpha, 0)?;
        let mut schedule = StepSchedule::fixed(b, n)?;
        let len = rng.random_range(0..=4 * (n * n) as u64);
        let mut go = |state: &mut ProcessState, steps| {
            state.run::<HarnessError, _>(spec, &mut schedule, Algorithm::Naive, steps, |st, r| {
                tracker.aux_step(&st.pi, st.t, r)?;
                Ok(())
            })
        };
        go(&mut state, len)?;
        let pending = state.pending_mixes();
        go(&mut state, pending)?;
        Ok((state.pi, tracker))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone)]
pub struct DriftReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest `ln E - ln bound` over states with `Phi > 0`.
    pub worst_margin_ln: f64,
    pub worst: Option<DriftOutcome>,
}

pub fn exact_drift_check(states: &[(Permutation, AuxTracker)]) -> Result<DriftReport, HarnessError> {
    let mut rep = DriftReport { checked: 0, violations: 0, worst_margin_ln: f64::NEG_INFINITY, worst: None };
    for (pi, tr) in states {
        let o = exact_drift_at(pi, tr)?;
        rep.checked += 1;
        if !o.holds() {
            rep.violations += 1;
        }
        if o.margin_ln() > rep.worst_margin_ln {
            rep.worst_margin_ln = o.margin_ln();
            rep.worst = Some(o);
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversed_pair() {
        let pi = Permutation::from_one_based(&[2, 1]).unwrap();
        let tr = AuxTracker::new(&pi, 2, 20f64.ln(), 0).unwrap();
        let o = exact_drift_at(&pi, &tr).unwrap();
        assert!((o.phi.to_f64() - 418.0).abs() < 1e-9);
        assert!(o.expectation.is_zero());
        assert!(o.holds());
        let factor = 1.0 - 20f64.ln() / 4.0;
        assert!((o.bound.to_f64() - 418.0 * factor).abs() < 1e-9);
    }

    #[test]
    fn sorted_state() {
        let pi = Permutation::identity(6);
        let tr = AuxTracker::new(&pi, 2, 1.0, 0).unwrap();
        let o = exact_drift_at(&pi, &tr).unwrap();
        assert!(o.phi.is_zero() && o.expectation.is_zero() && o.holds());
    }
}
