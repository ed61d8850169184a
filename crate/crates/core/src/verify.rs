//! Property suites behind the acceptance test and `evolsort verify`.
//!
//! Every suite is deterministic: its seeds are fixed below.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{
    adm, far_displacement, head_dominance_ratio, theta_filter, AuxTracker, PaddedList, PotentialConfig,
};
use crate::harness::{
    exact_drift_check, map_seeds, run_lower_bound_convergence, run_lower_bound_mdev, run_scaling_study,
    sample_reachable_states, seed_list, HarnessError, ScalingConfig, Start,
};
use crate::model::{
    simulate_dual, sorting_fraction_ok, Algorithm, PerturbationSpec, ProcessState, StepKind, StepReport,
    StepSchedule,
};
use crate::perm::{dev, dev_sorted, kendall_tau, kendall_tau_naive, mdev, mdev_sorted, Permutation};

pub const DISTANCE_SEED: u64 = 0x5eed_0001;
pub const PADDING_SEED: u64 = 0x5eed_0002;
pub const DRIFT_RUN_SEED: u64 = 0x5eed_0003;
pub const DRIFT_STATE_SEED: u64 = 0x5eed_0004;
pub const HEAD_SEED: u64 = 0x5eed_0005;
pub const FILTER_SEED: u64 = 0x5eed_0006;
pub const SCHEDULE_SEED: u64 = 0x5eed_0008;
pub const PSI_SEED: u64 = 0x5eed_0009;
pub const SCALING_SEED: u64 = 0x5eed_000a;
pub const LB_MDEV_SEED: u64 = 0x5eed_000b;
pub const LB_CONV_SEED: u64 = 0x5eed_000c;
pub const DUAL_SEED: u64 = 0x5eed_000d;

/// Mixing steps per sorting step in the lower-bound growth suite. The
/// horizon `(b+1)^2 n ln n / 100` is too short at small `b` for the
/// medians to separate.
pub const LB_MDEV_B: u64 = 32;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub time_limit: Option<Duration>,
}

impl CheckOutcome {
    pub fn within_time(&self) -> bool {
        self.time_limit.is_none_or(|l| self.elapsed <= l)
    }

    pub fn ok(&self) -> bool {
        self.passed && self.within_time()
    }

    pub fn line(&self) -> String {
        let status = if self.ok() { "PASS" } else { "FAIL" };
        let limit = match self.time_limit {
            Some(l) if !self.within_time() => format!(" (over time limit {:.0?})", l),
            _ => String::new(),
        };
        format!(
            "criterion {:>2}: {status} {} [{:.2?}{limit}] {}",
            self.id, self.name, self.elapsed, self.detail
        )
    }
}

/// Run sizes. `quick` shrinks every suite for smoke testing; timing
/// limits are only enforced at full size.
#[derive(Debug, Clone, Copy, Default)]
pub struct VerifyOptions {
    pub quick: bool,
}

impl VerifyOptions {
    fn pick<T>(&self, full: T, quick: T) -> T {
        if self.quick {
            quick
        } else {
            full
        }
    }
}

pub const ALL: [u32; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

/// Runs the given suites in order. Suites 3, 7 and 8 share one batch of
/// drift runs.
pub fn run_suites(ids: &[u32], opts: VerifyOptions) -> Result<Vec<CheckOutcome>, HarnessError> {
    let mut v = Verifier { opts, drift: OnceLock::new() };
    ids.iter().map(|&id| v.run(id)).collect()
}

struct Verifier {
    opts: VerifyOptions,
    drift: OnceLock<(DriftRuns, Duration)>,
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

impl Verifier {
    fn run(&mut self, id: u32) -> Result<CheckOutcome, HarnessError> {
        let start = Instant::now();
        let (name, limit, (passed, detail)) = match id {
            1 => ("exact distances", secs(10), self.distances()),
            2 => ("padding bounds", secs(10), self.padding()),
            3 => ("potential never rises", secs(60), self.monotone()?),
            4 => ("drift expectation", secs(60), self.drift_expectation()?),
            5 => ("head dominance", None, self.head()),
            6 => ("theta filtering", None, self.filtering()),
            7 => ("admissible swaps", None, self.swaps()?),
            8 => ("sorting fraction", None, self.sorting_fraction()?),
            9 => ("mixing potential mean", secs(120), self.psi_mean()?),
            10 => ("desk-scale scaling", secs(900), self.scaling()?),
            11 => ("lower bounds", secs(600), self.lower_bounds()?),
            12 => ("dual simulation", None, self.dual()?),
            _ => return Err(HarnessError::Config(format!("no suite {id}"))),
        };
        let mut elapsed = start.elapsed();
        if id == 3 {
            // the shared runs are charged to suite 3 even if 7 or 8 ran first
            elapsed = elapsed.max(self.drift.get().map(|d| d.1).unwrap_or_default());
        }
        let time_limit = if self.opts.quick { None } else { limit };
        Ok(CheckOutcome { id, name, passed, detail, elapsed, time_limit })
    }

    fn distances(&self) -> (bool, String) {
        let mut mismatches = 0u64;
        let mut sandwich = 0u64;
        let mut cases = 0u64;
        let mut check = |p: &Permutation, q: &Permutation| {
            let k = kendall_tau(p, q).expect("same length");
            if k != kendall_tau_naive(p, q).expect("same length") {
                mismatches += 1;
            }
            let d = dev(p, q).expect("same length");
            if !(k <= d && d <= 2 * k) {
                sandwich += 1;
            }
            cases += 1;
        };
        let id7 = Permutation::identity(7);
        let mut rng = ChaCha8Rng::seed_from_u64(DISTANCE_SEED);
        let q7 = Permutation::random(7, &mut rng);
        for p in all_permutations(7) {
            check(&p, &id7);
            check(&p, &q7);
        }
        for _ in 0..self.opts.pick(10_000, 500) {
            let p = Permutation::random(256, &mut rng);
            let q = Permutation::random(256, &mut rng);
            check(&p, &q);
        }
        (mismatches == 0 && sandwich == 0, format!("{cases} cases, {mismatches} mismatches, {sandwich} sandwich violations"))
    }

    fn padding(&self) -> (bool, String) {
        let mut rng = ChaCha8Rng::seed_from_u64(PADDING_SEED);
        let mut bad = 0;
        let count = self.opts.pick(10_000, 500);
        for _ in 0..count {
            let n = rng.random_range(1..=200);
            let d = rng.random_range(2..=4);
            let pi = Permutation::random(n, &mut rng);
            let list = random_padding(&pi, d, &mut rng);
            let id = Permutation::identity(n);
            let (mdsp, dsp) = (list.mdsp(&id), list.dsp(&id));
            if mdev_sorted(&pi) * d as u64 > 2 * mdsp || dev_sorted(&pi) > dsp {
                bad += 1;
            }
        }
        (bad == 0, format!("{count} triples, {bad} violations"))
    }

    fn drift_runs(&self) -> Result<&DriftRuns, HarnessError> {
        if self.drift.get().is_none() {
            let start = Instant::now();
            let runs = DriftRuns::collect(self.opts.pick(100, 6), self.opts.pick(100_000, 20_000))?;
            let _ = self.drift.set((runs, start.elapsed()));
        }
        Ok(&self.drift.get().expect("just set").0)
    }

    fn monotone(&self) -> Result<(bool, String), HarnessError> {
        let r = self.drift_runs()?;
        Ok((
            r.phi_rises == 0,
            format!("{} runs x {} steps, {} steps where Phi rose", r.runs, r.steps, r.phi_rises),
        ))
    }

    fn swaps(&self) -> Result<(bool, String), HarnessError> {
        let r = self.drift_runs()?;
        Ok((r.bad_swaps == 0 && r.swaps > 0, format!("{} adm swaps, {} violations", r.swaps, r.bad_swaps)))
    }

    fn drift_expectation(&self) -> Result<(bool, String), HarnessError> {
        let count = self.opts.pick(1000, 60);
        let states =
            sample_reachable_states(32, count, DRIFT_STATE_SEED, &PerturbationSpec::adjacent(), 2, 2, 20f64.ln())?;
        let rep = exact_drift_check(&states)?;
        Ok((
            rep.violations == 0,
            format!(
                "{} states, {} violations, worst ln(E/bound) = {:.4}",
                rep.checked, rep.violations, rep.worst_margin_ln
            ),
        ))
    }

    fn head(&self) -> (bool, String) {
        let mut rng = ChaCha8Rng::seed_from_u64(HEAD_SEED);
        let count = self.opts.pick(10_000, 500);
        let (mut bad, mut worst) = (0, 0.0f64);
        for _ in 0..count {
            let n = rng.random_range(2..=128);
            let d = rng.random_range(2..=4);
            let cfg = PotentialConfig::auto(d);
            let pi = Permutation::random(n, &mut rng);
            let tau = adm(&Permutation::random(n, &mut rng), &pi);
            let mut list = random_padding(&pi, d, &mut rng);
            list.lopt(&tau);
            let ratio = head_dominance_ratio(&list, &tau, cfg.alpha);
            worst = worst.max(ratio / cfg.head_bound());
            if !list.is_locally_optimal(&tau) || ratio > cfg.head_bound() * (1.0 + 1e-12) {
                bad += 1;
            }
        }
        (bad == 0, format!("{count} states, {bad} violations, worst ratio/bound = {worst:.4}"))
    }

    fn filtering(&self) -> (bool, String) {
        let mut rng = ChaCha8Rng::seed_from_u64(FILTER_SEED);
        let count = self.opts.pick(10_000, 500);
        let mut bad = 0;
        for _ in 0..count {
            let n = rng.random_range(1..=512);
            let tau = if rng.random_bool(0.5) {
                Permutation::random(n, &mut rng)
            } else {
                local_shuffle(n, rng.random_range(1..=16), &mut rng)
            };
            let theta = rng.random_range(0..=n as u64);
            let hat = theta_filter(&tau, theta);
            let m = mdev(&hat, &tau).expect("same length");
            if m > 2 * theta || dev_sorted(&hat) > 4 * far_displacement(&tau, theta) {
                bad += 1;
            }
        }
        (bad == 0, format!("{count} (tau, theta) pairs, {bad} violations"))
    }

    fn sorting_fraction(&self) -> Result<(bool, String), HarnessError> {
        let r = self.drift_runs()?;
        let fixed_bad = r.window_failures;
        let n = 64;
        let count = self.opts.pick(20, 4);
        let steps = self.opts.pick(100_000, 20_000);
        let seeds = seed_list(SCHEDULE_SEED, count);
        let results: Result<Vec<bool>, HarnessError> = map_seeds(&seeds, |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let b = [1.0, 1.5, 2.0, 3.5][(s % 4) as usize];
            let entries = random_explicit(n, b, steps as usize, s % 2 == 0, &mut rng)?;
            let mut schedule = StepSchedule::explicit(entries, b, n)?;
            let mut state = ProcessState::new(Start::Random.build(n, s)?, s);
            let mut kinds = Vec::with_capacity(steps as usize);
            state.run::<HarnessError, _>(&PerturbationSpec::adjacent(), &mut schedule, Algorithm::Naive, steps, |_, r| {
                kinds.push(r.kind() == StepKind::Sort);
                Ok(())
            })?;
            Ok(sorting_fraction_ok(&kinds, n, b).is_ok())
        })
        .into_iter()
        .collect();
        let explicit_bad = results?.iter().filter(|ok| !**ok).count();
        Ok((
            fixed_bad == 0 && explicit_bad == 0,
            format!(
                "fixed(2): {} runs, {fixed_bad} failing; explicit: {count} schedules, {explicit_bad} failing",
                r.runs
            ),
        ))
    }

    fn psi_mean(&self) -> Result<(bool, String), HarnessError> {
        let (n, k) = (256usize, 32u64);
        let spec = PerturbationSpec::adjacent();
        let (lambda, c) = (spec.lambda(), spec.c_prime());
        let alpha = psi_alpha(n, k, lambda, c);
        let bound = psi_bound(n, k, lambda, c, alpha);
        let seeds = seed_list(PSI_SEED, self.opts.pick(50, 8));
        let values: Result<Vec<f64>, HarnessError> =
            map_seeds(&seeds, |s| psi_after_mixing(n, k, &spec, alpha, s)).into_iter().collect();
        let values = values?;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Ok((
            mean <= 1.1 * bound,
            format!("alpha = {alpha:.4}, mean Psi = {mean:.4e}, bound = {bound:.4e}"),
        ))
    }

    fn scaling(&self) -> Result<(bool, String), HarnessError> {
        let mut ok = true;
        let mut parts = Vec::new();
        for (label, spec) in
            [("adjacent", PerturbationSpec::adjacent()), ("geometric:0.5", PerturbationSpec::signed_geometric(0.5)?)]
        {
            let cfg = ScalingConfig {
                n_list: self.opts.pick(vec![128, 256, 512], vec![32, 64]),
                b: 1,
                perturbation: spec,
                algorithm: Algorithm::Naive,
                seeds: seed_list(SCALING_SEED, self.opts.pick(10, 4)),
                horizon_multiplier: self.opts.pick(1.0, 0.25),
                start: Start::Reverse,
                record_every: 0,
            };
            let rows = run_scaling_study(&cfg)?;
            let spread = |f: &dyn Fn(&crate::harness::ScalingRow) -> f64| {
                let v: Vec<f64> = rows.iter().map(f).collect();
                let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
                hi / lo
            };
            let sd = spread(&|r| r.median_dev_per_n);
            let sm = spread(&|r| r.median_mdev_per_log2n);
            ok &= sd < 2.0 && sm < 2.0;
            let cells: Vec<String> = rows
                .iter()
                .map(|r| format!("n={} {:.3}/{:.3}", r.n, r.median_dev_per_n, r.median_mdev_per_log2n))
                .collect();
            parts.push(format!("{label}: {} (spread {sd:.2}x, {sm:.2}x)", cells.join(" ")));
        }
        Ok((ok, parts.join("; ")))
    }

    fn lower_bounds(&self) -> Result<(bool, String), HarnessError> {
        let ns = self.opts.pick(vec![256, 512, 1024, 2048], vec![64, 256, 1024]);
        let growth = run_lower_bound_mdev(&ns, LB_MDEV_B, &seed_list(LB_MDEV_SEED, 20), 1.0)?;
        let medians: Vec<String> = growth.rows.iter().map(|r| format!("{}", r.median_peak)).collect();
        let n = self.opts.pick(512, 128);
        let w = ((96.0 * (n as f64).ln()).ceil() as usize).min(n - 1);
        let conv = run_lower_bound_convergence(n, 1, w, &seed_list(LB_CONV_SEED, 20), 4.0)?;
        let tracking = conv.runs.iter().all(|r| r.tracking_holds);
        let frac = conv.slow_fraction();
        Ok((
            growth.spearman_peak == 1.0 && frac >= 0.9 && tracking,
            format!(
                "peak medians [{}] rho = {:.3}; convergence n={n} w={w}: slow fraction {frac:.2}, tracking {}",
                medians.join(", "),
                growth.spearman_peak,
                if tracking { "holds" } else { "broken" }
            ),
        ))
    }

    fn dual(&self) -> Result<(bool, String), HarnessError> {
        let steps = self.opts.pick(10_000, 2_000);
        let mut configs = Vec::new();
        for (j, &b) in [1u64, 2, 4].iter().cycle().take(20).enumerate() {
            let n = [8usize, 16, 32, 5, 32][j % 5];
            let spec = match j % 4 {
                0 | 2 => PerturbationSpec::adjacent(),
                1 => PerturbationSpec::signed_geometric(0.5)?,
                _ => PerturbationSpec::signed_geometric(0.2)?,
            };
            configs.push((n, b, spec, DUAL_SEED + j as u64));
        }
        let mut failed = 0;
        for (n, b, spec, seed) in &configs {
            let pi0 = Start::Random.build(*n, *seed)?;
            if simulate_dual(&pi0, *seed, spec, &StepSchedule::fixed(*b, *n)?, steps).is_err() {
                failed += 1;
            }
        }
        Ok((failed == 0, format!("{} configs x {steps} steps, {failed} diverged", configs.len())))
    }
}

/// Aggregates of the drift runs: n = 64, b = 2, adjacent swaps.
#[derive(Debug, Clone, Default)]
struct DriftRuns {
    runs: usize,
    steps: u64,
    phi_rises: u64,
    swaps: u64,
    bad_swaps: u64,
    window_failures: usize,
}

impl DriftRuns {
    fn collect(runs: usize, steps: u64) -> Result<Self, HarnessError> {
        let (n, b, d) = (64, 2, 2);
        let spec = PerturbationSpec::adjacent();
        let seeds = seed_list(DRIFT_RUN_SEED, runs);
        let parts: Result<Vec<DriftRuns>, HarnessError> = map_seeds(&seeds, |s| {
            let mut state = ProcessState::new(Start::Random.build(n, s)?, s);
            let mut tracker = AuxTracker::new(&state.pi, d, 20f64.ln(), 0)?;
            tracker.set_record_swaps(true);
            let mut schedule = StepSchedule::fixed(b, n)?;
            let mut out = DriftRuns { runs: 1, steps, ..Default::default() };
            let mut kinds = Vec::with_capacity(steps as usize);
            state.run::<HarnessError, _>(&spec, &mut schedule, Algorithm::Naive, steps, |st, r| {
                kinds.push(r.kind() == StepKind::Sort);
                if !tracker.aux_step(&st.pi, st.t, r)?.non_increasing() {
                    out.phi_rises += 1;
                }
                for sw in tracker.last_swaps() {
                    out.swaps += 1;
                    if !(sw.swap.value_form_holds() && sw.swap.cell_form_holds(sw.cells, d)) {
                        out.bad_swaps += 1;
                    }
                }
                Ok(())
            })?;
            if sorting_fraction_ok(&kinds, n, b as f64).is_err() {
                out.window_failures = 1;
            }
            Ok(out)
        })
        .into_iter()
        .collect();
        Ok(parts?.into_iter().fold(DriftRuns { steps, ..Default::default() }, |a, x| DriftRuns {
            runs: a.runs + x.runs,
            steps,
            phi_rises: a.phi_rises + x.phi_rises,
            swaps: a.swaps + x.swaps,
            bad_swaps: a.bad_swaps + x.bad_swaps,
            window_failures: a.window_failures + x.window_failures,
        }))
    }
}

/// `sqrt(3 lambda^2 ln n / (c' k))`, balancing the two terms of the
/// displacement bound.
pub fn psi_alpha(n: usize, k: u64, lambda: f64, c_prime: f64) -> f64 {
    (3.0 * lambda * lambda / c_prime * (n as f64).ln() / k as f64).sqrt()
}

/// `3 (n/alpha) exp((3c'/lambda^2) k alpha^2)`.
pub fn psi_bound(n: usize, k: u64, lambda: f64, c_prime: f64, alpha: f64) -> f64 {
    3.0 * n as f64 / alpha * (3.0 * c_prime / (lambda * lambda) * k as f64 * alpha * alpha).exp()
}

/// `Psi_{nk}(alpha)` after `n k` mixing steps (no sorting) from a random
/// start with `sigma_0 = id`.
pub fn psi_after_mixing(
    n: usize,
    k: u64,
    spec: &PerturbationSpec,
    alpha: f64,
    seed: u64,
) -> Result<f64, HarnessError> {
    let mut state = ProcessState::new(Start::Random.build(n, seed)?, seed);
    let mut tracker = AuxTracker::new(&state.pi, 2, 20f64.ln(), 0)?;
    for _ in 0..n as u64 * k {
        let r = StepReport::Mix(state.apply_mixing_step(spec));
        tracker.aux_step(&state.pi, state.t, &r)?;
    }
    Ok(tracker.psi(alpha).to_f64())
}

/// A padding with uniformly random gap cells.
fn random_padding<R: Rng>(pi: &Permutation, d: usize, rng: &mut R) -> PaddedList {
    let n = pi.len();
    let big_n = (n + 1) * d - 1;
    let gaps: Vec<usize> = sample(rng, big_n, big_n - n).into_iter().map(|c| c + 1).collect();
    PaddedList::with_gaps(pi, d, &gaps).expect("valid gap set")
}

/// Each entry moved by a random amount of at most `w`.
fn local_shuffle<R: Rng>(n: usize, w: usize, rng: &mut R) -> Permutation {
    let mut keys: Vec<(f64, u32)> =
        (0..n).map(|i| (i as f64 + rng.random_range(0.0..=w as f64), i as u32)).collect();
    keys.sort_by(|a, b| a.0.total_cmp(&b.0));
    Permutation::from_vec(keys.into_iter().map(|k| k.1).collect()).expect("sorted indices form a bijection")
}

/// A valid explicit schedule of `len` entries: either all of each window's
/// budget in a single burst, or iid draws truncated to the window limit.
fn random_explicit<R: Rng>(n: usize, b: f64, len: usize, bursty: bool, rng: &mut R) -> Result<Vec<u64>, HarnessError> {
    if bursty {
        let burst = (b * n as f64).floor() as u64;
        let offset = rng.random_range(0..n);
        return Ok((0..len).map(|i| if i % n == offset { burst } else { 0 }).collect());
    }
    let mut schedule = StepSchedule::iid(b, n)?;
    (1..=len as u64).map(|i| schedule.next_count(i, rng).map_err(HarnessError::from)).collect()
}

/// All permutations of `0..n` (Heap's algorithm).
fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut a: Vec<u32> = (0..n as u32).collect();
    let mut c = vec![0usize; n];
    let mut out = vec![Permutation::from_vec(a.clone()).expect("identity")];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(Permutation::from_vec(a.clone()).expect("swap keeps a bijection"));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heap_enumerates_everything() {
        let all = all_permutations(5);
        assert_eq!(all.len(), 120);
        let mut v: Vec<Vec<u32>> = all.iter().map(|p| p.as_slice().to_vec()).collect();
        v.sort();
        v.dedup();
        assert_eq!(v.len(), 120);
    }

    #[test]
    fn explicit_generators_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for bursty in [true, false] {
            let e = random_explicit(16, 1.5, 400, bursty, &mut rng).unwrap();
            crate::model::validate_window(&e, 16, 1.5).unwrap();
        }
    }

    #[test]
    fn quick_suites_pass() {
        let out = run_suites(&[1, 2, 5, 6, 12], VerifyOptions { quick: true }).unwrap();
        for o in out {
            assert!(o.ok(), "{}", o.line());
        }
    }
}
