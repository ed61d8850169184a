//! The reset protocols behind the maximum- and total-deviation bounds.

use super::{HarnessError, Start};
use crate::analysis::{far_displacement, tail_displacement, theta_filter, AuxTracker, LogValue};
use crate::model::{Algorithm, PerturbationSpec, ProcessState, StepSchedule};
use crate::perm::{dev_sorted, mdev, mdev_sorted};

/// Desk-scale constants of the protocols. The analysis uses
/// `k = (16^2 108 d^2 / p^2)(c'/lambda^2) ln n`, `k_{i+1} = (16d/p) k_i^{2/3}`,
/// `M = sqrt(108 (c'/lambda^2) k ln n)` and `R >= 32^3 16`; the leading
/// factors are replaced by the multipliers below.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub b: u64,
    /// `k = k0_multiplier (c'/lambda^2) ln n`.
    pub k0_multiplier: f64,
    pub theta_exponent: f64,
    /// `k_{i+1} = phase_shrink * k_i^theta_exponent`.
    pub phase_shrink: f64,
    /// `M = m_cap_multiplier * sqrt(108 (c'/lambda^2) k ln n)`.
    pub m_cap_multiplier: f64,
    /// `R` in the reference bound `n exp(-k^{1/3} / (2R))` on tail sums.
    pub r_const: f64,
    /// Phases continue while `k_i` stays at or above this.
    pub k_floor: f64,
    pub max_phases: usize,
    /// Horizon is `horizon_multiplier * 128 (b+1) n^2` steps.
    pub horizon_multiplier: f64,
    pub d: usize,
    pub alpha: f64,
    /// Smoothing for `Psi`; `None` uses the perturbation's `lambda`.
    pub psi_alpha: Option<f64>,
    pub start: Start,
}

impl ProtocolConfig {
    pub fn new(b: u64) -> Self {
        let phase_shrink = 4.0;
        let theta_exponent = 2.0 / 3.0;
        ProtocolConfig {
            b,
            k0_multiplier: 4.0,
            theta_exponent,
            phase_shrink,
            m_cap_multiplier: 1.0,
            r_const: 32f64.powi(3) * 16.0,
            // twice the fixed point of the shrink map
            k_floor: 2.0 * phase_shrink.powf(1.0 / (1.0 - theta_exponent)),
            max_phases: 32,
            horizon_multiplier: 1.0,
            d: 2,
            alpha: 20f64.ln(),
            psi_alpha: None,
            start: Start::Reverse,
        }
    }

    /// `p = 1/(4(b+1))`.
    pub fn p(&self) -> f64 {
        1.0 / (4.0 * (self.b + 1) as f64)
    }

    pub fn horizon(&self, n: usize) -> u64 {
        (self.horizon_multiplier * 128.0 * (self.b + 1) as f64 * (n as f64).powi(2)).ceil() as u64
    }

    pub fn group_k(&self, n: usize, spec: &PerturbationSpec) -> u64 {
        let ratio = spec.c_prime() / spec.lambda().powi(2);
        (self.k0_multiplier * ratio * (n.max(2) as f64).ln()).ceil().max(1.0) as u64
    }

    pub fn cap(&self, n: usize, k: u64, spec: &PerturbationSpec) -> f64 {
        let ratio = spec.c_prime() / spec.lambda().powi(2);
        self.m_cap_multiplier * (108.0 * ratio * k as f64 * (n.max(2) as f64).ln()).sqrt()
    }

    /// `k_0 = k_1 = k, k_2, ..., k_kappa`.
    pub fn phase_ks(&self, n: usize, spec: &PerturbationSpec) -> Vec<u64> {
        let k = self.group_k(n, spec);
        let mut ks = vec![k, k];
        let mut cur = k as f64;
        while ks.len() < self.max_phases {
            let next = self.phase_shrink * cur.powf(self.theta_exponent);
            if next < self.k_floor || next >= cur {
                break;
            }
            ks.push(next.ceil() as u64);
            cur = next;
        }
        ks
    }

    fn validate(&self) -> Result<(), HarnessError> {
        let positive = [self.k0_multiplier, self.phase_shrink, self.m_cap_multiplier, self.r_const, self.horizon_multiplier, self.alpha];
        if positive.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(HarnessError::Config("protocol multipliers must be positive".into()));
        }
        if !(self.theta_exponent > 0.0 && self.theta_exponent < 1.0) {
            return Err(HarnessError::Config("theta exponent must lie in (0,1)".into()));
        }
        if self.b < 1 || self.d < 2 {
            return Err(HarnessError::Config("need b >= 1 and d >= 2".into()));
        }
        Ok(())
    }
}

struct Driver<'a> {
    state: ProcessState,
    tracker: AuxTracker,
    schedule: StepSchedule,
    spec: &'a PerturbationSpec,
}

impl Driver<'_> {
    /// Runs `steps` steps and returns the number of steps where `Phi` rose.
    fn advance(&mut self, steps: u64) -> Result<u64, HarnessError> {
        let mut rises = 0;
        let tracker = &mut self.tracker;
        self.state.run::<HarnessError, _>(self.spec, &mut self.schedule, Algorithm::Naive, steps, |st, r| {
            if !tracker.aux_step(&st.pi, st.t, r)?.non_increasing() {
                rises += 1;
            }
            Ok(())
        })?;
        Ok(rises)
    }
}

fn driver<'a>(
    n: usize,
    seed: u64,
    spec: &'a PerturbationSpec,
    cfg: &ProtocolConfig,
) -> Result<Driver<'a>, HarnessError> {
    cfg.validate()?;
    if n < 2 {
        return Err(HarnessError::Config("protocols need n >= 2".into()));
    }
    let state = ProcessState::new(cfg.start.build(n, seed)?, seed);
    let tracker = AuxTracker::new(&state.pi, cfg.d, cfg.alpha, 0)?;
    Ok(Driver { state, tracker, schedule: StepSchedule::fixed(cfg.b, n)?, spec })
}

#[derive(Debug, Clone)]
pub struct GroupReport {
    pub index: usize,
    pub start: u64,
    pub steps: u64,
    pub phi_start: LogValue,
    pub phi_end: LogValue,
    /// Steps in the group where `Phi` increased.
    pub phi_rises: u64,
    /// Largest target displacement reached in the group.
    pub sigma_peak: u64,
    pub cap_violated: bool,
    pub mdev_end: u64,
    pub dev_end: u64,
}

#[derive(Debug, Clone)]
pub struct MdevProtocolReport {
    pub n: usize,
    pub seed: u64,
    pub k: u64,
    pub cap: f64,
    pub horizon: u64,
    pub groups: Vec<GroupReport>,
    pub final_mdev: u64,
    pub final_dev: u64,
}

impl MdevProtocolReport {
    pub fn cap_violations(&self) -> usize {
        self.groups.iter().filter(|g| g.cap_violated).count()
    }
}

/// Groups of `n k` steps with a full target reset at the start of each.
pub fn run_mdev_protocol(
    n: usize,
    seed: u64,
    spec: &PerturbationSpec,
    cfg: &ProtocolConfig,
) -> Result<MdevProtocolReport, HarnessError> {
    let mut drv = driver(n, seed, spec, cfg)?;
    let k = cfg.group_k(n, spec);
    let cap = cfg.cap(n, k, spec);
    let horizon = cfg.horizon(n);
    let group_len = (n as u64).saturating_mul(k);
    let mut groups = Vec::new();
    while drv.state.t < horizon {
        let start = drv.state.t;
        drv.tracker.reset_full(&drv.state.pi);
        let phi_start = drv.tracker.phi();
        let steps = group_len.min(horizon - start);
        let phi_rises = drv.advance(steps)?;
        let peak = drv.tracker.sigma_peak();
        groups.push(GroupReport {
            index: groups.len(),
            start,
            steps,
            phi_start,
            phi_end: drv.tracker.phi(),
            phi_rises,
            sigma_peak: peak,
            cap_violated: peak as f64 > cap,
            mdev_end: mdev_sorted(&drv.state.pi),
            dev_end: dev_sorted(&drv.state.pi),
        });
    }
    Ok(MdevProtocolReport {
        n,
        seed,
        k,
        cap,
        horizon,
        groups,
        final_mdev: mdev_sorted(&drv.state.pi),
        final_dev: dev_sorted(&drv.state.pi),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseKind {
    Warmup,
    Full,
    Partial,
}

/// The partial-reset bounds evaluated on the actual filter input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterCheck {
    pub theta: u64,
    pub mdev_to_input: u64,
    pub dev_filtered: u64,
    pub dev_bound: u64,
}

impl FilterCheck {
    pub fn holds(&self) -> bool {
        self.mdev_to_input <= 2 * self.theta && self.dev_filtered <= self.dev_bound
    }
}

#[derive(Debug, Clone)]
pub struct PhaseReport {
    pub index: usize,
    pub kind: PhaseKind,
    pub start: u64,
    pub steps: u64,
    pub k: Option<u64>,
    /// Present for phases opened by a partial reset.
    pub filter: Option<FilterCheck>,
    pub phi_rises: u64,
    pub phi_end: LogValue,
    pub psi_end: LogValue,
    pub dev_tau_end: u64,
    /// Sum of target displacements at least `k^theta_exponent` at the end.
    pub tail_end: u64,
    pub tail_threshold: u64,
    /// `n exp(-k^{1/3} / (2R))`, for reference.
    pub tail_reference: f64,
    pub dev_end: u64,
    pub mdev_end: u64,
}

#[derive(Debug, Clone)]
pub struct TdevProtocolReport {
    pub n: usize,
    pub seed: u64,
    pub horizon: u64,
    pub ks: Vec<u64>,
    pub phases: Vec<PhaseReport>,
    pub final_dev: u64,
    pub final_mdev: u64,
}

/// Warm-up, two phases opened by full resets, then shrinking phases each
/// opened by a partial reset with `theta = 2 k^{2/3}` of the phase before.
pub fn run_tdev_protocol(
    n: usize,
    seed: u64,
    spec: &PerturbationSpec,
    cfg: &ProtocolConfig,
) -> Result<TdevProtocolReport, HarnessError> {
    let mut drv = driver(n, seed, spec, cfg)?;
    let ks = cfg.phase_ks(n, spec);
    let horizon = cfg.horizon(n);
    let tail_len: u64 = ks.iter().map(|&k| k.saturating_mul(n as u64)).sum();
    let warmup = horizon.saturating_sub(tail_len);
    let psi_alpha = cfg.psi_alpha.unwrap_or(spec.lambda());
    let mut phases = Vec::new();
    let mut lengths = vec![(PhaseKind::Warmup, warmup, None)];
    for (i, &k) in ks.iter().enumerate() {
        let kind = if i < 2 { PhaseKind::Full } else { PhaseKind::Partial };
        lengths.push((kind, k * n as u64, Some(k)));
    }
    let mut prev_k: Option<u64> = None;
    for (index, (kind, steps, k)) in lengths.into_iter().enumerate() {
        let start = drv.state.t;
        let mut filter = None;
        match kind {
            PhaseKind::Warmup => {}
            PhaseKind::Full => drv.tracker.reset_full(&drv.state.pi),
            PhaseKind::Partial => {
                let pk = prev_k.expect("partial phases follow full ones") as f64;
                let theta = (2.0 * pk.powf(cfg.theta_exponent)).floor() as u64;
                let before = drv.tracker.tau().clone();
                let hat = theta_filter(&before, theta);
                filter = Some(FilterCheck {
                    theta,
                    mdev_to_input: mdev(&hat, &before).expect("same size"),
                    dev_filtered: dev_sorted(&hat),
                    dev_bound: 4 * far_displacement(&before, theta),
                });
                drv.tracker.reset_partial(&drv.state.pi, theta);
            }
        }
        let phi_rises = drv.advance(steps)?;
        let kk = k.unwrap_or(1);
        let tail_threshold = (kk as f64).powf(cfg.theta_exponent).ceil() as u64;
        phases.push(PhaseReport {
            index,
            kind,
            start,
            steps,
            k,
            filter,
            phi_rises,
            phi_end: drv.tracker.phi(),
            psi_end: drv.tracker.psi(psi_alpha),
            dev_tau_end: dev_sorted(drv.tracker.tau()),
            tail_end: tail_displacement(drv.tracker.sigma(), tail_threshold),
            tail_threshold,
            tail_reference: n as f64 * (-(kk as f64).cbrt() / (2.0 * cfg.r_const)).exp(),
            dev_end: dev_sorted(&drv.state.pi),
            mdev_end: mdev_sorted(&drv.state.pi),
        });
        if k.is_some() {
            prev_k = k;
        }
    }
    Ok(TdevProtocolReport {
        n,
        seed,
        horizon,
        ks,
        phases,
        final_dev: dev_sorted(&drv.state.pi),
        final_mdev: mdev_sorted(&drv.state.pi),
    })
}
