mod config;
mod csv;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evolsort::harness::{
    init_threads, median, run_lower_bound_convergence, run_lower_bound_mdev, run_mdev_protocol,
    run_scaling_study, run_tdev_protocol, run_trajectory, AuxSettings, PhaseKind, ProtocolConfig, RunSpec,
    ScalingConfig,
};
use evolsort::verify::{run_suites, VerifyOptions, ALL};
use thiserror::Error;

use config::{Auto, RunConfig, Schedule};
use csv::{emit_trajectory, float, Sink};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("error: {0}")]
    Runtime(String),
    #[error("{0}")]
    Check(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Check(_) => 3,
        }
    }
}

impl From<evolsort::harness::HarnessError> for CliError {
    fn from(e: evolsort::harness::HarnessError) -> Self {
        match e {
            evolsort::harness::HarnessError::Config(m) => CliError::Usage(m),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "evolsort", version, about = "Naive Sort on evolving data: runs, studies and property checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One trajectory as CSV.
    Run(Opts),
    /// Final dev/n and mdev/log2 n medians over seeds for each size in n_list.
    Scale(Opts),
    /// Groups of n k steps with full target resets.
    ProtocolMdev(Opts),
    /// Warm-up and shrinking phases with partial target resets.
    ProtocolTdev(Opts),
    /// Growth of the maximum deviation from a sorted start.
    LbMdev(Opts),
    /// Convergence time from a block-shifted start.
    LbConverge(Opts),
    /// Property suites; exit code 3 if any fails.
    Verify(VerifyArgs),
}

/// Every option is also a config-file key (with `_` for `-`).
#[derive(Args, Default)]
struct Opts {
    /// Flat key = value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the merged configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated sizes.
    #[arg(long)]
    n_list: Option<String>,
    #[arg(long)]
    b: Option<String>,
    /// naive, insertion, bubble or cocktail.
    #[arg(long)]
    algorithm: Option<String>,
    /// adjacent, geometric:P or table:PATH.
    #[arg(long)]
    dist: Option<String>,
    /// fixed, iid or explicit:PATH.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    steps: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Number of seeds, counting up from --seed.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    record_every: Option<String>,
    /// Track the auxiliary process (phi, psi, max_delta columns).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    aux: Option<String>,
    #[arg(long)]
    d: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    psi_alpha: Option<String>,
    /// sorted, reverse, random or shift:W.
    #[arg(long)]
    start: Option<String>,
    /// Output path; stdout when absent or '-'.
    #[arg(long, short)]
    output: Option<String>,
    #[arg(long)]
    horizon_multiplier: Option<String>,
    #[arg(long)]
    k0_multiplier: Option<String>,
    #[arg(long)]
    phase_shrink: Option<String>,
    #[arg(long)]
    m_cap_multiplier: Option<String>,
    #[arg(long)]
    initial_mdev: Option<String>,
    #[arg(long)]
    cap_factor: Option<String>,
}

impl Opts {
    fn flags(&self) -> Vec<(String, String)> {
        let all = [
            ("n", &self.n),
            ("n_list", &self.n_list),
            ("b", &self.b),
            ("algorithm", &self.algorithm),
            ("dist", &self.dist),
            ("schedule", &self.schedule),
            ("steps", &self.steps),
            ("seed", &self.seed),
            ("seeds", &self.seeds),
            ("record_every", &self.record_every),
            ("aux", &self.aux),
            ("d", &self.d),
            ("alpha", &self.alpha),
            ("psi_alpha", &self.psi_alpha),
            ("start", &self.start),
            ("output", &self.output),
            ("horizon_multiplier", &self.horizon_multiplier),
            ("k0_multiplier", &self.k0_multiplier),
            ("phase_shrink", &self.phase_shrink),
            ("m_cap_multiplier", &self.m_cap_multiplier),
            ("initial_mdev", &self.initial_mdev),
            ("cap_factor", &self.cap_factor),
        ];
        all.into_iter().filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone()))).collect()
    }

    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut entries = match &self.config {
            Some(p) => config::read_file(p)?,
            None => Vec::new(),
        };
        entries.extend(self.flags());
        RunConfig::from_entries(&entries)
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated suite numbers (default: all).
    #[arg(long)]
    only: Option<String>,
    /// Reduced sizes, no time limits.
    #[arg(long)]
    quick: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var("EVOLSORT_THREADS") {
        Ok(v) if !v.is_empty() => match v.parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("EVOLSORT_THREADS must be a positive integer, got '{v}'"))),
        },
        _ => Ok(None),
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    init_threads(threads_from_env()?);
    let (opts, f): (Opts, fn(&RunConfig) -> Result<(), CliError>) = match cmd {
        Command::Verify(v) => return verify(&v),
        Command::Run(o) => (o, run),
        Command::Scale(o) => (o, scale),
        Command::ProtocolMdev(o) => (o, protocol_mdev),
        Command::ProtocolTdev(o) => (o, protocol_tdev),
        Command::LbMdev(o) => (o, lb_mdev),
        Command::LbConverge(o) => (o, lb_converge),
    };
    let cfg = opts.resolve()?;
    if opts.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    f(&cfg)
}

fn sink(cfg: &RunConfig) -> Result<Sink, CliError> {
    Sink::open(cfg.output.as_deref())
}

fn run(cfg: &RunConfig) -> Result<(), CliError> {
    let n = cfg.require_n()?;
    let perturbation = cfg.dist.build()?;
    let aux = cfg.aux.then(|| AuxSettings {
        d: cfg.d,
        alpha: cfg.alpha_value(),
        psi_alpha: match cfg.psi_alpha {
            Auto::Auto => perturbation.lambda(),
            Auto::Value(a) => a,
        },
    });
    let spec = RunSpec {
        n,
        start: cfg.start.clone(),
        schedule: cfg.schedule_for(n)?,
        perturbation,
        algorithm: cfg.algorithm,
        steps: cfg.require_steps()?,
        seed: cfg.seed,
        record_every: cfg.record_every_for(n),
        aux,
    };
    let records = run_trajectory(&spec)?;
    let mut out = sink(cfg)?;
    emit_trajectory(&mut out, &records)?;
    out.finish()
}

fn fixed_only(cfg: &RunConfig, what: &str) -> Result<u64, CliError> {
    if cfg.schedule != Schedule::Fixed {
        return Err(CliError::Usage(format!("'{what}' uses fixed schedules only")));
    }
    cfg.b_int()
}

fn scale(cfg: &RunConfig) -> Result<(), CliError> {
    let sc = ScalingConfig {
        n_list: cfg.require_n_list()?.to_vec(),
        b: fixed_only(cfg, "scale")?,
        perturbation: cfg.dist.build()?,
        algorithm: cfg.algorithm,
        seeds: cfg.seed_list(),
        horizon_multiplier: cfg.horizon_multiplier,
        start: cfg.start.clone(),
        record_every: 0,
    };
    let rows = run_scaling_study(&sc)?;
    let mut out = sink(cfg)?;
    out.row(["n,seed,steps,dev,mdev,dev_per_n,mdev_per_log2n,median_dev_per_n,median_mdev_per_log2n"])?;
    for row in &rows {
        let log2n = (row.n as f64).log2().max(1.0);
        for r in &row.runs {
            out.row([
                row.n.to_string(),
                r.seed.to_string(),
                row.steps.to_string(),
                r.dev.to_string(),
                r.mdev.to_string(),
                float(r.dev as f64 / row.n as f64),
                float(r.mdev as f64 / log2n),
                float(row.median_dev_per_n),
                float(row.median_mdev_per_log2n),
            ])?;
        }
    }
    out.finish()
}

fn protocol_config(cfg: &RunConfig, what: &str) -> Result<ProtocolConfig, CliError> {
    let mut p = ProtocolConfig::new(fixed_only(cfg, what)?);
    p.k0_multiplier = cfg.k0_multiplier;
    p.phase_shrink = cfg.phase_shrink;
    p.m_cap_multiplier = cfg.m_cap_multiplier;
    p.horizon_multiplier = cfg.horizon_multiplier;
    p.d = cfg.d;
    p.alpha = cfg.alpha_value();
    p.psi_alpha = match cfg.psi_alpha {
        Auto::Auto => None,
        Auto::Value(a) => Some(a),
    };
    p.start = cfg.start.clone();
    Ok(p)
}

fn protocol_mdev(cfg: &RunConfig) -> Result<(), CliError> {
    let n = cfg.require_n()?;
    let spec = cfg.dist.build()?;
    let p = protocol_config(cfg, "protocol-mdev")?;
    let mut out = sink(cfg)?;
    out.row(["seed,group,start,steps,k,cap,phi_start,phi_end,phi_rises,sigma_peak,cap_violated,mdev_end,dev_end"])?;
    let mut finals = Vec::new();
    let mut violations = 0;
    for seed in cfg.seed_list() {
        let rep = run_mdev_protocol(n, seed, &spec, &p)?;
        for g in &rep.groups {
            out.row([
                seed.to_string(),
                g.index.to_string(),
                g.start.to_string(),
                g.steps.to_string(),
                rep.k.to_string(),
                float(rep.cap),
                g.phi_start.to_string(),
                g.phi_end.to_string(),
                g.phi_rises.to_string(),
                g.sigma_peak.to_string(),
                g.cap_violated.to_string(),
                g.mdev_end.to_string(),
                g.dev_end.to_string(),
            ])?;
        }
        violations += rep.cap_violations();
        finals.push(rep.final_mdev as f64);
    }
    out.finish()?;
    eprintln!(
        "median final mdev {} (mdev/log2 n = {}), cap violations {violations}",
        float(median(&finals)),
        float(median(&finals) / (n as f64).log2().max(1.0))
    );
    Ok(())
}

fn protocol_tdev(cfg: &RunConfig) -> Result<(), CliError> {
    let n = cfg.require_n()?;
    let spec = cfg.dist.build()?;
    let p = protocol_config(cfg, "protocol-tdev")?;
    let mut out = sink(cfg)?;
    out.row([
        "seed,phase,kind,start,steps,k,theta,mdev_to_input,dev_filtered,dev_bound,filter_holds,phi_rises,phi_end,psi_end,dev_tau_end,tail_end,tail_threshold,tail_reference,mdev_end,dev_end",
    ])?;
    let mut finals = Vec::new();
    for seed in cfg.seed_list() {
        let rep = run_tdev_protocol(n, seed, &spec, &p)?;
        for ph in &rep.phases {
            let kind = match ph.kind {
                PhaseKind::Warmup => "warmup",
                PhaseKind::Full => "full",
                PhaseKind::Partial => "partial",
            };
            let f = ph.filter;
            out.row([
                seed.to_string(),
                ph.index.to_string(),
                kind.to_string(),
                ph.start.to_string(),
                ph.steps.to_string(),
                ph.k.map(|k| k.to_string()).unwrap_or_default(),
                f.map(|f| f.theta.to_string()).unwrap_or_default(),
                f.map(|f| f.mdev_to_input.to_string()).unwrap_or_default(),
                f.map(|f| f.dev_filtered.to_string()).unwrap_or_default(),
                f.map(|f| f.dev_bound.to_string()).unwrap_or_default(),
                f.map(|f| f.holds().to_string()).unwrap_or_default(),
                ph.phi_rises.to_string(),
                ph.phi_end.to_string(),
                ph.psi_end.to_string(),
                ph.dev_tau_end.to_string(),
                ph.tail_end.to_string(),
                ph.tail_threshold.to_string(),
                float(ph.tail_reference),
                ph.mdev_end.to_string(),
                ph.dev_end.to_string(),
            ])?;
        }
        finals.push(rep.final_dev as f64);
    }
    out.finish()?;
    eprintln!("median final dev {} (dev/n = {})", float(median(&finals)), float(median(&finals) / n as f64));
    Ok(())
}

fn lb_mdev(cfg: &RunConfig) -> Result<(), CliError> {
    let ns = cfg.require_n_list()?;
    let rep = run_lower_bound_mdev(ns, fixed_only(cfg, "lb-mdev")?, &cfg.seed_list(), cfg.horizon_multiplier)?;
    let mut out = sink(cfg)?;
    out.row(["n,horizon,median_peak,median_endpoint,reference"])?;
    for r in &rep.rows {
        out.row([
            r.n.to_string(),
            r.horizon.to_string(),
            float(r.median_peak),
            float(r.median_endpoint),
            float(r.reference),
        ])?;
    }
    out.finish()?;
    eprintln!(
        "spearman(median peak, ln n) = {}, spearman(median endpoint, ln n) = {}",
        float(rep.spearman_peak),
        float(rep.spearman_endpoint)
    );
    Ok(())
}

fn lb_converge(cfg: &RunConfig) -> Result<(), CliError> {
    let n = cfg.require_n()?;
    let w = match cfg.initial_mdev {
        Auto::Auto => ((96.0 * (n as f64).ln()).ceil() as usize).min(n.saturating_sub(1)),
        Auto::Value(w) => w,
    };
    let rep = run_lower_bound_convergence(n, fixed_only(cfg, "lb-converge")?, w, &cfg.seed_list(), cfg.cap_factor)?;
    let mut out = sink(cfg)?;
    out.row(["seed,initial_mdev,threshold,converged_at,slow,tracked_decrease,tracking_holds"])?;
    for r in &rep.runs {
        let slow = r.converged_at.is_none_or(|t| t as f64 >= rep.threshold);
        out.row([
            r.seed.to_string(),
            w.to_string(),
            float(rep.threshold),
            r.converged_at.map(|t| t.to_string()).unwrap_or_default(),
            slow.to_string(),
            r.tracked_decrease.to_string(),
            r.tracking_holds.to_string(),
        ])?;
    }
    out.finish()?;
    eprintln!("slow fraction {} (step cap {})", float(rep.slow_fraction()), rep.step_cap);
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), CliError> {
    let ids: Vec<u32> = match &args.only {
        None => ALL.to_vec(),
        Some(s) => s
            .split(',')
            .map(|x| match x.trim().parse::<u32>() {
                Ok(id) if ALL.contains(&id) => Ok(id),
                _ => Err(CliError::Usage(format!("invalid value for 'only': '{x}'"))),
            })
            .collect::<Result<_, _>>()?,
    };
    let outcomes = run_suites(&ids, VerifyOptions { quick: args.quick })?;
    let mut failed = 0;
    for o in &outcomes {
        println!("{}", o.line());
        failed += usize::from(!o.ok());
    }
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} of {} suites failed", outcomes.len())));
    }
    Ok(())
}
