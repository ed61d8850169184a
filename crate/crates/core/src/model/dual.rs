use rand::Rng;
use thiserror::Error;

use super::{ModelError, PerturbationSpec, ProcessState, StepSchedule, StreamRngs};
use crate::perm::Permutation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DualMismatch {
    #[error("maintained/true order disagree with the direct simulation at step {step}")]
    Diverged { step: u64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Simulates the maintained order `nu` and the true order `rho` explicitly
/// (both as position -> item) with Naive Sort on `nu` and rank
/// perturbations on `rho`, drawing the same random numbers as
/// [`ProcessState`], and checks `rho^{-1} o nu == pi` after every step.
pub fn simulate_dual(
    pi0: &Permutation,
    seed: u64,
    spec: &PerturbationSpec,
    schedule: &StepSchedule,
    steps: u64,
) -> Result<(), DualMismatch> {
    let n = pi0.len();
    let mut direct = ProcessState::new(pi0.clone(), seed);
    let mut direct_schedule = schedule.clone();

    let mut rngs = StreamRngs::new(seed);
    let mut sched = schedule.clone();
    let mut nu = Permutation::identity(n);
    let mut rho = pi0.inverse();
    let mut pending = 0u64;
    let mut sorts = 0u64;

    let consistent = |nu: &Permutation, rho: &Permutation, pi: &Permutation| {
        (0..n).all(|i| rho.inv(nu.get(i)) == pi.get(i))
    };
    if !consistent(&nu, &rho, &direct.pi) {
        return Err(DualMismatch::Diverged { step: 0 });
    }
    for t in 1..=steps {
        direct.step(spec, &mut direct_schedule, super::Algorithm::Naive)?;
        if pending > 0 {
            pending -= 1;
            let j = rngs.mixing.random_range(0..n);
            let s = spec.sample(&mut rngs.mixing);
            rho.shift_entry(j, s);
        } else {
            if n >= 2 {
                let i = rngs.sorting.random_range(0..n - 1);
                let (a, b) = (nu.get(i), nu.get(i + 1));
                if rho.inv(a) > rho.inv(b) {
                    nu.swap(i, i + 1);
                }
            }
            sorts += 1;
            pending = sched.next_count(sorts, &mut rngs.schedule)?;
        }
        if !consistent(&nu, &rho, &direct.pi) {
            return Err(DualMismatch::Diverged { step: t });
        }
    }
    Ok(())
}
