//! Flat `key = value` configuration shared by the config file and flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use evolsort::harness::Start;
use evolsort::{Algorithm, PerturbationSpec, StepSchedule};

use crate::CliError;

/// Every accepted key, in the order `--print-config` writes them.
pub const KEYS: &[&str] = &[
    "n",
    "n_list",
    "b",
    "algorithm",
    "dist",
    "schedule",
    "steps",
    "seed",
    "seeds",
    "record_every",
    "aux",
    "d",
    "alpha",
    "psi_alpha",
    "start",
    "output",
    "horizon_multiplier",
    "k0_multiplier",
    "phase_shrink",
    "m_cap_multiplier",
    "initial_mdev",
    "cap_factor",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Dist {
    Adjacent,
    Geometric(f64),
    Table(PathBuf),
}

impl Dist {
    pub fn build(&self) -> Result<PerturbationSpec, CliError> {
        match self {
            Dist::Adjacent => Ok(PerturbationSpec::adjacent()),
            Dist::Geometric(p) => PerturbationSpec::signed_geometric(*p).map_err(|e| bad("dist", e)),
            Dist::Table(path) => PerturbationSpec::table_from_file(path).map_err(|e| bad("dist", e)),
        }
    }
}

impl FromStr for Dist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "adjacent" {
            return Ok(Dist::Adjacent);
        }
        if let Some(p) = s.strip_prefix("geometric:") {
            let p: f64 = p.parse().map_err(|_| format!("bad probability '{p}'"))?;
            if !(p > 0.0 && p < 1.0) {
                return Err(format!("p must lie in (0,1), got {p}"));
            }
            return Ok(Dist::Geometric(p));
        }
        if let Some(path) = s.strip_prefix("table:") {
            if path.is_empty() {
                return Err("empty table path".into());
            }
            return Ok(Dist::Table(PathBuf::from(path)));
        }
        Err(format!("expected adjacent, geometric:P or table:PATH, got '{s}'"))
    }
}

impl std::fmt::Display for Dist {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Dist::Adjacent => f.write_str("adjacent"),
            Dist::Geometric(p) => write!(f, "geometric:{p}"),
            Dist::Table(path) => write!(f, "table:{}", path.display()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Fixed,
    Iid,
    Explicit(PathBuf),
}

impl FromStr for Schedule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fixed" => Ok(Schedule::Fixed),
            "iid" => Ok(Schedule::Iid),
            _ => match s.strip_prefix("explicit:") {
                Some(p) if !p.is_empty() => Ok(Schedule::Explicit(PathBuf::from(p))),
                _ => Err(format!("expected fixed, iid or explicit:PATH, got '{s}'")),
            },
        }
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Schedule::Fixed => f.write_str("fixed"),
            Schedule::Iid => f.write_str("iid"),
            Schedule::Explicit(p) => write!(f, "explicit:{}", p.display()),
        }
    }
}

/// A value that may be left to its derived default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: FromStr> FromStr for Auto<T> {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "auto" {
            Ok(Auto::Auto)
        } else {
            s.parse().map(Auto::Value).map_err(|_| format!("expected 'auto' or a number, got '{s}'"))
        }
    }
}

impl<T: std::fmt::Display> std::fmt::Display for Auto<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Auto::Auto => f.write_str("auto"),
            Auto::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: Option<usize>,
    pub n_list: Vec<usize>,
    pub b: f64,
    pub algorithm: Algorithm,
    pub dist: Dist,
    pub schedule: Schedule,
    pub steps: Option<u64>,
    pub seed: u64,
    /// Number of seeds for multi-seed subcommands: `seed, seed+1, ...`.
    pub seeds: usize,
    /// `auto` records every `n` steps.
    pub record_every: Auto<u64>,
    pub aux: bool,
    pub d: usize,
    /// `auto` is `ln 20 / (d-1)`.
    pub alpha: Auto<f64>,
    /// `auto` is the perturbation's `lambda`.
    pub psi_alpha: Auto<f64>,
    pub start: Start,
    /// `None` writes to stdout.
    pub output: Option<PathBuf>,
    pub horizon_multiplier: f64,
    pub k0_multiplier: f64,
    pub phase_shrink: f64,
    pub m_cap_multiplier: f64,
    /// `auto` is `ceil(96 ln n)` capped at `n-1`.
    pub initial_mdev: Auto<usize>,
    pub cap_factor: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: None,
            n_list: Vec::new(),
            b: 1.0,
            algorithm: Algorithm::Naive,
            dist: Dist::Adjacent,
            schedule: Schedule::Fixed,
            steps: None,
            seed: 0,
            seeds: 10,
            record_every: Auto::Auto,
            aux: false,
            d: 2,
            alpha: Auto::Auto,
            psi_alpha: Auto::Auto,
            start: Start::Reverse,
            output: None,
            horizon_multiplier: 1.0,
            k0_multiplier: 4.0,
            phase_shrink: 4.0,
            m_cap_multiplier: 1.0,
            initial_mdev: Auto::Auto,
            cap_factor: 4.0,
        }
    }
}

fn bad(key: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("invalid value for '{key}': {e}"))
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| bad(key, e))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(bad(key, format!("expected true or false, got '{v}'"))),
    }
}

fn positive(key: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, format!("must be positive, got {x}")))
    }
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_text(&text)
}

pub fn parse_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
        out.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(out)
}

impl RunConfig {
    /// Applies entries in order, so later ones win.
    pub fn from_entries<'a>(entries: impl IntoIterator<Item = &'a (String, String)>) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (k, v) in entries {
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::Usage(format!("unknown key '{k}'")));
            }
            map.insert(k.as_str(), v.as_str());
        }
        let mut c = RunConfig::default();
        for (&k, &v) in &map {
            match k {
                "n" => {
                    let n: usize = parse(k, v)?;
                    if n < 1 {
                        return Err(bad(k, "n must be at least 1"));
                    }
                    c.n = Some(n);
                }
                "n_list" => {
                    c.n_list = v
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| parse::<usize>(k, s.trim()))
                        .collect::<Result<_, _>>()?;
                    if c.n_list.contains(&0) {
                        return Err(bad(k, "sizes must be at least 1"));
                    }
                }
                "b" => {
                    c.b = parse(k, v)?;
                    if !(c.b >= 1.0 && c.b.is_finite()) {
                        return Err(bad(k, format!("b must be a real >= 1, got {v}")));
                    }
                }
                "algorithm" => c.algorithm = parse(k, v)?,
                "dist" => c.dist = parse(k, v)?,
                "schedule" => c.schedule = parse(k, v)?,
                "steps" => c.steps = Some(parse(k, v)?),
                "seed" => c.seed = parse(k, v)?,
                "seeds" => {
                    c.seeds = parse(k, v)?;
                    if c.seeds == 0 {
                        return Err(bad(k, "need at least one seed"));
                    }
                }
                "record_every" => c.record_every = parse(k, v)?,
                "aux" => c.aux = parse_bool(k, v)?,
                "d" => {
                    c.d = parse(k, v)?;
                    if c.d < 2 {
                        return Err(bad(k, "d must be at least 2"));
                    }
                }
                "alpha" => {
                    c.alpha = parse(k, v)?;
                    if let Auto::Value(a) = c.alpha {
                        positive(k, a)?;
                    }
                }
                "psi_alpha" => {
                    c.psi_alpha = parse(k, v)?;
                    if let Auto::Value(a) = c.psi_alpha {
                        positive(k, a)?;
                    }
                }
                "start" => c.start = parse(k, v)?,
                "output" => c.output = (v != "-").then(|| PathBuf::from(v)),
                "horizon_multiplier" => c.horizon_multiplier = positive(k, parse(k, v)?)?,
                "k0_multiplier" => c.k0_multiplier = positive(k, parse(k, v)?)?,
                "phase_shrink" => c.phase_shrink = positive(k, parse(k, v)?)?,
                "m_cap_multiplier" => c.m_cap_multiplier = positive(k, parse(k, v)?)?,
                "initial_mdev" => c.initial_mdev = parse(k, v)?,
                "cap_factor" => c.cap_factor = positive(k, parse(k, v)?)?,
                _ => unreachable!("checked against KEYS"),
            }
        }
        if c.schedule == Schedule::Fixed && c.b.fract() != 0.0 {
            return Err(bad("b", "a fixed schedule needs an integer b"));
        }
        if let Dist::Table(_) = c.dist {
            c.dist.build()?;
        }
        Ok(c)
    }

    /// One `key = value` line per set key; parses back to `self`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if let Some(n) = self.n {
            put("n", n.to_string());
        }
        if !self.n_list.is_empty() {
            put("n_list", self.n_list.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","));
        }
        put("b", self.b.to_string());
        put("algorithm", self.algorithm.to_string());
        put("dist", self.dist.to_string());
        put("schedule", self.schedule.to_string());
        if let Some(steps) = self.steps {
            put("steps", steps.to_string());
        }
        put("seed", self.seed.to_string());
        put("seeds", self.seeds.to_string());
        put("record_every", self.record_every.to_string());
        put("aux", self.aux.to_string());
        put("d", self.d.to_string());
        put("alpha", self.alpha.to_string());
        put("psi_alpha", self.psi_alpha.to_string());
        put("start", self.start.to_string());
        put("output", self.output.as_ref().map_or("-".to_string(), |p| p.display().to_string()));
        put("horizon_multiplier", self.horizon_multiplier.to_string());
        put("k0_multiplier", self.k0_multiplier.to_string());
        put("phase_shrink", self.phase_shrink.to_string());
        put("m_cap_multiplier", self.m_cap_multiplier.to_string());
        put("initial_mdev", self.initial_mdev.to_string());
        put("cap_factor", self.cap_factor.to_string());
        s
    }

    pub fn require_n(&self) -> Result<usize, CliError> {
        self.n.ok_or_else(|| CliError::Usage("missing required key 'n'".into()))
    }

    pub fn require_n_list(&self) -> Result<&[usize], CliError> {
        if self.n_list.is_empty() {
            Err(CliError::Usage("missing required key 'n_list'".into()))
        } else {
            Ok(&self.n_list)
        }
    }

    pub fn require_steps(&self) -> Result<u64, CliError> {
        self.steps.ok_or_else(|| CliError::Usage("missing required key 'steps'".into()))
    }

    pub fn b_int(&self) -> Result<u64, CliError> {
        if self.b.fract() == 0.0 {
            Ok(self.b as u64)
        } else {
            Err(bad("b", "this subcommand needs an integer b"))
        }
    }

    /// `alpha (d-1) = ln 20` unless set.
    pub fn alpha_value(&self) -> f64 {
        match self.alpha {
            Auto::Auto => 20f64.ln() / (self.d - 1) as f64,
            Auto::Value(a) => a,
        }
    }

    pub fn schedule_for(&self, n: usize) -> Result<StepSchedule, CliError> {
        match &self.schedule {
            Schedule::Fixed => StepSchedule::fixed(self.b_int()?, n).map_err(|e| bad("b", e)),
            Schedule::Iid => StepSchedule::iid(self.b, n).map_err(|e| bad("b", e)),
            Schedule::Explicit(p) => StepSchedule::explicit_from_file(p, self.b, n).map_err(|e| bad("schedule", e)),
        }
    }

    pub fn record_every_for(&self, n: usize) -> u64 {
        match self.record_every {
            Auto::Auto => n as u64,
            Auto::Value(r) => r,
        }
    }

    pub fn seed_list(&self) -> Vec<u64> {
        evolsort::harness::seed_list(self.seed, self.seeds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> Result<RunConfig, CliError> {
        RunConfig::from_entries(&parse_text(text)?)
    }

    #[test]
    fn round_trip() {
        let c = cfg("n = 256\nb = 2\ndist = geometric:0.3\nalpha = 1.25\nsteps=10 # trailing\noutput = out.csv\n")
            .unwrap();
        assert_eq!(cfg(&c.to_text()).unwrap(), c);
        let d = RunConfig::default();
        assert_eq!(cfg(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        assert!(matches!(cfg("colour = red"), Err(CliError::Usage(m)) if m.contains("colour")));
        assert!(matches!(cfg("dist = geometric:1.5"), Err(CliError::Usage(m)) if m.contains("dist")));
        assert!(matches!(cfg("b = 1.5"), Err(CliError::Usage(m)) if m.contains("'b'")));
        assert!(cfg("b = 1.5\nschedule = iid").is_ok());
        assert!(matches!(cfg("d = 1"), Err(CliError::Usage(m)) if m.contains("'d'")));
        assert!(matches!(cfg("no equals sign"), Err(CliError::Usage(_))));
    }

    #[test]
    fn later_entries_win() {
        let e = vec![("n".to_string(), "4".to_string()), ("n".to_string(), "8".to_string())];
        assert_eq!(RunConfig::from_entries(&e).unwrap().n, Some(8));
    }

    #[test]
    fn auto_alpha() {
        let c = cfg("d = 3").unwrap();
        assert!((c.alpha_value() * 2.0 - 20f64.ln()).abs() < 1e-15);
    }
}
