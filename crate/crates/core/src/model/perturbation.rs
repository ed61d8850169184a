//! Perturbation distributions for mixing steps, with their MGF certificate.

use std::fmt;
use std::path::Path;

use num_rational::Ratio;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Geometric;

use super::ModelError;

#[derive(Debug, Clone)]
pub enum PerturbationKind {
    /// Uniform on {-1, +1}.
    Adjacent,
    /// Magnitude `k >= 1` with probability `p (1-p)^(k-1)`, uniform sign.
    SignedGeometric { p: f64 },
    /// Finite support with positive rational weights.
    Table { support: Vec<(i64, Ratio<i128>)> },
}

/// A zero-mean integer distribution together with `(lambda, c_prime)`
/// certifying `E[exp(3 lambda |D|)] <= c_prime`.
#[derive(Debug, Clone)]
pub struct PerturbationSpec {
    kind: PerturbationKind,
    lambda: f64,
    c_prime: f64,
    sampler: Sampler,
}

#[derive(Debug, Clone)]
enum Sampler {
    Adjacent,
    Geometric(Geometric),
    Table { values: Vec<i64>, index: WeightedIndex<f64> },
}

impl PerturbationSpec {
    pub fn adjacent() -> Self {
        let lambda = 1.0 / 3.0;
        PerturbationSpec {
            kind: PerturbationKind::Adjacent,
            lambda,
            c_prime: (3.0 * lambda).exp(),
            sampler: Sampler::Adjacent,
        }
    }

    pub fn signed_geometric(p: f64) -> Result<Self, ModelError> {
        if !(p > 0.0 && p < 1.0) {
            return Err(ModelError::InvalidSpec(format!("geometric p must lie in (0,1), got {p}")));
        }
        let q = 1.0 - p;
        // E[e^{x|D|}] = p e^x / (1 - q e^x), finite for q e^x < 1; take
        // x = 3 lambda at half the radius, capped so that lambda <= 1/3.
        let lambda = (-(q.ln()) / 6.0).min(1.0 / 3.0);
        let x = (3.0 * lambda).exp();
        let c_prime = (p * x / (1.0 - q * x)).max(1.0);
        let geo = Geometric::new(p).map_err(|e| ModelError::InvalidSpec(e.to_string()))?;
        Ok(PerturbationSpec {
            kind: PerturbationKind::SignedGeometric { p },
            lambda,
            c_prime,
            sampler: Sampler::Geometric(geo),
        })
    }

    /// Builds a table distribution. Weights need not be normalised.
    /// The mean is checked exactly; `lambda` defaults to the largest value
    /// in (0, 1/3] for which the MGF stays below 1e6 and `c_prime` to
    /// the exact sum at `3 lambda`.
    pub fn table(
        support: Vec<(i64, Ratio<i128>)>,
        lambda: Option<f64>,
        c_prime: Option<f64>,
    ) -> Result<Self, ModelError> {
        if support.is_empty() {
            return Err(ModelError::InvalidSpec("empty perturbation table".into()));
        }
        let zero = Ratio::from_integer(0);
        let mut total = zero;
        let mut moment = zero;
        for &(s, w) in &support {
            if w <= zero {
                return Err(ModelError::InvalidSpec(format!("weight for s={s} must be positive")));
            }
            total += w;
            moment += w * Ratio::from_integer(s as i128);
        }
        if moment != zero {
            return Err(ModelError::InvalidSpec(format!(
                "perturbation mean is {} not 0",
                moment / total
            )));
        }
        let probs: Vec<f64> = support.iter().map(|&(_, w)| ratio_to_f64(w / total)).collect();
        let mgf = |x: f64| -> f64 {
            support.iter().zip(&probs).map(|(&(s, _), &pr)| pr * (x * s.unsigned_abs() as f64).exp()).sum()
        };
        let lambda = match lambda {
            Some(l) if l > 0.0 && l <= 1.0 / 3.0 => l,
            Some(l) => return Err(ModelError::InvalidSpec(format!("lambda must lie in (0,1/3], got {l}"))),
            None => {
                let mut l = 1.0 / 3.0;
                while mgf(3.0 * l) > 1e6 {
                    l /= 2.0;
                }
                l
            }
        };
        let exact = mgf(3.0 * lambda);
        let c_prime = match c_prime {
            Some(c) if c >= exact && c >= 1.0 => c,
            Some(c) => {
                return Err(ModelError::InvalidSpec(format!(
                    "c' = {c} is below E[exp(3 lambda |D|)] = {exact}"
                )))
            }
            None => exact.max(1.0),
        };
        let index =
            WeightedIndex::new(&probs).map_err(|e| ModelError::InvalidSpec(e.to_string()))?;
        Ok(PerturbationSpec {
            sampler: Sampler::Table { values: support.iter().map(|&(s, _)| s).collect(), index },
            kind: PerturbationKind::Table { support },
            lambda,
            c_prime,
        })
    }

    /// Parses a table file: one `s weight` pair per line, `#` comments.
    /// Weights are integers or decimals and are kept exact.
    pub fn table_from_str(text: &str) -> Result<Self, ModelError> {
        let mut support = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let bad = || ModelError::InvalidSpec(format!("table line {}: expected 's weight'", lineno + 1));
            let s: i64 = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let w = parse_decimal(it.next().ok_or_else(bad)?).ok_or_else(bad)?;
            if it.next().is_some() {
                return Err(bad());
            }
            support.push((s, w));
        }
        Self::table(support, None, None)
    }

    pub fn table_from_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::InvalidSpec(format!("{}: {e}", path.display())))?;
        Self::table_from_str(&text)
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn c_prime(&self) -> f64 {
        self.c_prime
    }

    /// Whether a table includes the wasteful value `s = 0`.
    pub fn has_zero_shift(&self) -> bool {
        matches!(&self.kind, PerturbationKind::Table { support } if support.iter().any(|&(s, _)| s == 0))
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> i64 {
        match &self.sampler {
            Sampler::Adjacent => {
                if rng.random::<bool>() {
                    1
                } else {
                    -1
                }
            }
            Sampler::Geometric(g) => {
                let k = g.sample(rng) as i64 + 1;
                if rng.random::<bool>() {
                    k
                } else {
                    -k
                }
            }
            Sampler::Table { values, index } => values[index.sample(rng)],
        }
    }
}

impl fmt::Display for PerturbationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            PerturbationKind::Adjacent => write!(f, "adjacent"),
            PerturbationKind::SignedGeometric { p } => write!(f, "geometric:{p}"),
            PerturbationKind::Table { support } => write!(f, "table[{} entries]", support.len()),
        }
    }
}

fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn parse_decimal(s: &str) -> Option<Ratio<i128>> {
    let (int, frac) = match s.split_once('.') {
        Some((a, b)) => (a, b),
        None => (s, ""),
    };
    if int.starts_with('-') || frac.len() > 18 || (int.is_empty() && frac.is_empty()) {
        return None;
    }
    if !frac.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let whole: i128 = if int.is_empty() { 0 } else { int.parse().ok()? };
    let scale = 10i128.pow(frac.len() as u32);
    let f: i128 = if frac.is_empty() { 0 } else { frac.parse().ok()? };
    Some(Ratio::new(whole.checked_mul(scale)?.checked_add(f)?, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn adjacent_is_balanced() {
        let spec = PerturbationSpec::adjacent();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000;
        let plus = (0..n).filter(|_| spec.sample(&mut rng) == 1).count();
        assert!((plus as f64 / n as f64 - 0.5).abs() < 0.01);
    }

    #[test]
    fn geometric_mean_near_zero() {
        let spec = PerturbationSpec::signed_geometric(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 1_000_000;
        let sum: i64 = (0..n).map(|_| spec.sample(&mut rng)).sum();
        assert!((sum as f64 / n as f64).abs() < 0.01);
    }

    #[test]
    fn geometric_certificate_holds() {
        for &p in &[0.1, 0.3, 0.5, 0.9] {
            let spec = PerturbationSpec::signed_geometric(p).unwrap();
            let x = 3.0 * spec.lambda();
            // truncated series of E[e^{x|D|}]
            let mgf: f64 = (1..4000)
                .map(|k| (p.ln() + (k - 1) as f64 * (1.0 - p).ln() + x * k as f64).exp())
                .sum();
            assert!(mgf <= spec.c_prime() * (1.0 + 1e-9), "p={p}: {mgf} > {}", spec.c_prime());
            assert!(spec.lambda() > 0.0 && spec.lambda() <= 1.0 / 3.0);
        }
        assert!(PerturbationSpec::signed_geometric(1.5).is_err());
        assert!(PerturbationSpec::signed_geometric(0.0).is_err());
    }

    #[test]
    fn table_mean_is_exact() {
        // (-2*1 + 1*2) / 3 = 0
        assert!(PerturbationSpec::table_from_str("-2 1\n1 2\n").is_ok());
        assert!(PerturbationSpec::table_from_str("-2 1\n1 1\n").is_err());
        // 0.1 and 0.2 are not exact in binary but are here
        assert!(PerturbationSpec::table_from_str("# c\n-2 0.1\n1 0.2\n").is_ok());
        assert!(PerturbationSpec::table_from_str("1 -1\n-1 -1\n").is_err());
        assert!(PerturbationSpec::table_from_str("").is_err());
    }

    #[test]
    fn table_certificate_by_summation() {
        let spec = PerturbationSpec::table_from_str("-1 1\n1 1\n").unwrap();
        let adj = PerturbationSpec::adjacent();
        assert!((spec.c_prime() - adj.c_prime()).abs() < 1e-12);
        assert!(PerturbationSpec::table(
            vec![(-1, Ratio::from_integer(1)), (1, Ratio::from_integer(1))],
            Some(1.0 / 3.0),
            Some(2.0)
        )
        .is_err());
    }

    #[test]
    fn zero_shift_flagged() {
        let spec = PerturbationSpec::table_from_str("0 1\n-1 1\n1 1").unwrap();
        assert!(spec.has_zero_shift());
        assert!(!PerturbationSpec::adjacent().has_zero_shift());
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_decimal("2.50"), Some(Ratio::new(5, 2)));
        assert_eq!(parse_decimal(".5"), Some(Ratio::new(1, 2)));
        assert_eq!(parse_decimal("x"), None);
        assert_eq!(parse_decimal("-1"), None);
    }
}
