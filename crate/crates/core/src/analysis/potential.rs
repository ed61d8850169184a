//! The exponential potentials and an overflow-safe value type for them.

use std::cmp::Ordering;
use std::fmt;

use super::padding::PaddedList;
use crate::perm::Permutation;

/// Exponents above this are summed in the log domain.
pub const EXP_CAP: f64 = 700.0;

/// A nonnegative real stored as its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);

    pub fn from_f64(x: f64) -> Self {
        assert!(x >= 0.0, "LogValue must be nonnegative");
        LogValue(x.ln())
    }

    pub fn from_ln(ln: f64) -> Self {
        LogValue(ln)
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    /// The value as a double; `inf` when it does not fit.
    pub fn to_f64(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.0.partial_cmp(&other.0)
    }
}

/// Six significant digits in `%g` style, with a mantissa/exponent form
/// that stays valid beyond the double range.
impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let x = self.to_f64();
        if x.is_finite() && x > 0.0 {
            return f.write_str(&format_g6(x));
        }
        let l10 = self.0 / std::f64::consts::LN_10;
        let mut e = l10.floor();
        let mut m = 10f64.powf(l10 - e);
        m = (m * 1e5).round() / 1e5;
        if m >= 10.0 {
            m /= 10.0;
            e += 1.0;
        }
        write!(f, "{}e+{:02}", trim_zeros(&format!("{m:.5}")), e as i64)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// Formats like C's `%.6g`.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.5e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant), exp.abs())
    } else {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    }
}

/// `sum_k count[k] * (exp(alpha k) - 1)` over a displacement histogram.
pub fn phi_from_histogram(hist: &[u32], alpha: f64) -> LogValue {
    let top = match hist.iter().rposition(|&c| c > 0) {
        Some(0) | None => return LogValue::ZERO,
        Some(k) => k,
    };
    if alpha * top as f64 <= EXP_CAP {
        let s: f64 = hist.iter().enumerate().map(|(k, &c)| c as f64 * (alpha * k as f64).exp_m1()).sum();
        return LogValue::from_f64(s);
    }
    // the -1 terms are below double resolution here
    let m = alpha * top as f64;
    let s: f64 = hist
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(k, &c)| c as f64 * (alpha * k as f64 - m).exp())
        .sum();
    LogValue::from_ln(m + s.ln())
}

/// `sum_k exp(alpha x_k)` in the log domain.
pub fn log_sum_exp(xs: impl Iterator<Item = u32> + Clone, alpha: f64) -> f64 {
    let m = match xs.clone().max() {
        Some(m) => alpha * m as f64,
        None => return f64::NEG_INFINITY,
    };
    m + xs.map(|x| (alpha * x as f64 - m).exp()).sum::<f64>().ln()
}

/// `Phi = sum over entries of exp(alpha |cell - d tau(v)|) - 1`.
pub fn phi(list: &PaddedList, tau: &Permutation, alpha: f64) -> LogValue {
    let mut hist = vec![0u32; list.cells() + 1];
    for k in 0..list.n() {
        hist[list.displacement(k, tau) as usize] += 1;
    }
    phi_from_histogram(&hist, alpha)
}

/// `Psi = sum_i exp(alpha |sigma(i) - i|)`.
pub fn psi(sigma: &Permutation, alpha: f64) -> LogValue {
    let n = sigma.len();
    if n == 0 {
        return LogValue::ZERO;
    }
    let mut hist = vec![0u32; n];
    for (i, &v) in sigma.as_slice().iter().enumerate() {
        hist[(i as u32).abs_diff(v) as usize] += 1;
    }
    // phi counts exp(.)-1 per term, so add n back
    let p = phi_from_histogram(&hist, alpha);
    let top = hist.iter().rposition(|&c| c > 0).unwrap_or(0);
    if alpha * top as f64 <= EXP_CAP {
        LogValue::from_f64(p.to_f64() + n as f64)
    } else {
        p
    }
}

/// Smoothing parameters of the potentials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialConfig {
    pub alpha: f64,
    pub alpha_tilde: f64,
    pub d: usize,
}

impl PotentialConfig {
    /// `alpha (d-1) = ln 20` and `alpha_tilde = alpha / 42`.
    pub fn auto(d: usize) -> Self {
        assert!(d > 1);
        let alpha = 20f64.ln() / (d - 1) as f64;
        PotentialConfig { alpha, alpha_tilde: alpha / 42.0, d }
    }

    /// `1 / (1 - exp(-alpha (d-1)))`, the head dominance factor.
    pub fn head_bound(&self) -> f64 {
        1.0 / (1.0 - (-self.alpha * (self.d - 1) as f64).exp())
    }

    /// Whether the drift lemma's range `ln 20/(d-1) <= alpha <= 1` holds.
    pub fn in_drift_range(&self) -> bool {
        self.alpha * (self.d - 1) as f64 >= 20f64.ln() - 1e-12 && self.alpha <= 1.0
    }
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self::auto(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g6_formatting() {
        assert_eq!(format_g6(1.0), "1");
        assert_eq!(format_g6(0.5), "0.5");
        assert_eq!(format_g6(123456789.0), "1.23457e+08");
        assert_eq!(format_g6(19.0), "19");
        assert_eq!(format_g6(0.0001234567), "0.000123457");
        assert_eq!(format_g6(0.00001234567), "1.23457e-05");
        assert_eq!(format_g6(999999.5), "1e+06");
        assert_eq!(format_g6(2.0f64.sqrt()), "1.41421");
    }

    #[test]
    fn huge_values_print() {
        let v = LogValue::from_ln(1000.0 * std::f64::consts::LN_10);
        assert_eq!(v.to_string(), "1e+1000");
        let w = LogValue::from_ln(800.0);
        assert!(w.to_string().ends_with("e+347"), "{w}");
        assert_eq!(LogValue::ZERO.to_string(), "0");
    }

    #[test]
    fn phi_small_cases() {
        let id = Permutation::identity(3);
        let l = PaddedList::canonical(&id, 2);
        assert!(phi(&l, &id, 1.0).is_zero());
        let l = PaddedList::from_cells(&[None, None, Some(1), None, Some(2), None, Some(3)], 2).unwrap();
        // every value sits one cell right of its target
        let a = 0.7f64;
        let expect = 3.0 * a.exp_m1();
        assert!((phi(&l, &id, a).to_f64() - expect).abs() < 1e-12);
    }

    #[test]
    fn phi_log_domain_matches() {
        let hist = [0u32, 2, 0, 1];
        let direct = phi_from_histogram(&hist, 100.0).ln();
        let far = phi_from_histogram(&hist, 300.0).ln();
        assert!((direct - (2.0 * 100f64.exp_m1() + 300f64.exp_m1()).ln()).abs() < 1e-12);
        assert!((far - (900.0 + (1.0 + 2.0 * (-600f64).exp()).ln())).abs() < 1e-9);
    }

    #[test]
    fn psi_small_cases() {
        let a = 0.3;
        assert!((psi(&Permutation::identity(5), a).to_f64() - 5.0).abs() < 1e-12);
        let s = Permutation::from_one_based(&[1, 3, 2, 4]).unwrap();
        assert!((psi(&s, a).to_f64() - (2.0 + 2.0 * a.exp())).abs() < 1e-12);
    }

    #[test]
    fn defaults() {
        let c = PotentialConfig::default();
        assert!((c.head_bound() - 20.0 / 19.0).abs() < 1e-12);
        assert!(!c.in_drift_range());
        assert!(PotentialConfig { alpha: 1.0, alpha_tilde: 0.1, d: 4 }.in_drift_range());
    }
}
