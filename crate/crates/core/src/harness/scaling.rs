use super::{map_seeds, median, HarnessError, RunSpec, Start, TrajectoryRecord};
use crate::model::{Algorithm, PerturbationSpec, ProcessState, StepSchedule};
use crate::perm::{dev_sorted, mdev_sorted};

#[derive(Debug, Clone)]
pub struct ScalingConfig {
    pub n_list: Vec<usize>,
    pub b: u64,
    pub perturbation: PerturbationSpec,
    pub algorithm: Algorithm,
    pub seeds: Vec<u64>,
    /// Horizon is `multiplier * 128 (b+1) n^2` steps.
    pub horizon_multiplier: f64,
    pub start: Start,
    /// Keep a time series every this many steps (0 = none).
    pub record_every: u64,
}

#[derive(Debug, Clone)]
pub struct ScalingRun {
    pub seed: u64,
    pub dev: u64,
    pub mdev: u64,
    pub series: Vec<TrajectoryRecord>,
}

#[derive(Debug, Clone)]
pub struct ScalingRow {
    pub n: usize,
    pub steps: u64,
    pub median_dev_per_n: f64,
    pub median_mdev_per_log2n: f64,
    pub runs: Vec<ScalingRun>,
}

impl ScalingConfig {
    pub fn horizon(&self, n: usize) -> u64 {
        (self.horizon_multiplier * 128.0 * (self.b + 1) as f64 * (n * n) as f64).ceil() as u64
    }
}

fn one_run(cfg: &ScalingConfig, n: usize, seed: u64) -> Result<ScalingRun, HarnessError> {
    let steps = cfg.horizon(n);
    if cfg.record_every > 0 {
        let recs = super::run_trajectory(&RunSpec {
            n,
            start: cfg.start.clone(),
            perturbation: cfg.perturbation.clone(),
            schedule: StepSchedule::fixed(cfg.b, n)?,
            algorithm: cfg.algorithm,
            steps,
            seed,
            record_every: cfg.record_every,
            aux: None,
        })?;
        let last = recs.last().expect("at least one record");
        return Ok(ScalingRun { seed, dev: last.dev, mdev: last.mdev, series: recs });
    }
    let mut state = ProcessState::new(cfg.start.build(n, seed)?, seed);
    let mut schedule = StepSchedule::fixed(cfg.b, n)?;
    state.run::<HarnessError, _>(&cfg.perturbation, &mut schedule, cfg.algorithm, steps, |_, _| Ok(()))?;
    Ok(ScalingRun { seed, dev: dev_sorted(&state.pi), mdev: mdev_sorted(&state.pi), series: Vec::new() })
}

/// Final `dev/n` and `mdev/log2 n` medians over seeds, per `n`.
pub fn run_scaling_study(cfg: &ScalingConfig) -> Result<Vec<ScalingRow>, HarnessError> {
    if cfg.seeds.is_empty() {
        return Err(HarnessError::Config("scaling study needs at least one seed".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n_list {
        if n == 0 {
            return Err(HarnessError::Config("n must be at least 1".into()));
        }
        let runs: Result<Vec<_>, _> = map_seeds(&cfg.seeds, |s| one_run(cfg, n, s)).into_iter().collect();
        let runs = runs?;
        let log2n = (n as f64).log2().max(1.0);
        let devs: Vec<f64> = runs.iter().map(|r| r.dev as f64 / n as f64).collect();
        let mdevs: Vec<f64> = runs.iter().map(|r| r.mdev as f64 / log2n).collect();
        rows.push(ScalingRow {
            n,
            steps: cfg.horizon(n),
            median_dev_per_n: median(&devs),
            median_mdev_per_log2n: median(&mdevs),
            runs,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_sizes() {
        let cfg = ScalingConfig {
            n_list: vec![1, 8],
            b: 1,
            perturbation: PerturbationSpec::adjacent(),
            algorithm: Algorithm::Naive,
            seeds: vec![1, 2, 3],
            horizon_multiplier: 0.05,
            start: Start::Reverse,
            record_every: 0,
        };
        let rows = run_scaling_study(&cfg).unwrap();
        assert_eq!(rows[0].median_dev_per_n, 0.0);
        assert_eq!(rows[1].steps, (0.05f64 * 128.0 * 2.0 * 64.0).ceil() as u64);
    }

    #[test]
    fn series_matches_plain_run() {
        let mut cfg = ScalingConfig {
            n_list: vec![16],
            b: 2,
            perturbation: PerturbationSpec::signed_geometric(0.5).unwrap(),
            algorithm: Algorithm::Bubble,
            seeds: vec![9],
            horizon_multiplier: 0.1,
            start: Start::Random,
            record_every: 0,
        };
        let plain = run_scaling_study(&cfg).unwrap();
        cfg.record_every = 16;
        let series = run_scaling_study(&cfg).unwrap();
        assert_eq!(plain[0].runs[0].dev, series[0].runs[0].dev);
        assert!(!series[0].runs[0].series.is_empty());
    }
}
