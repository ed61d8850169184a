use std::collections::VecDeque;
use std::path::Path;

use rand::Rng;

use super::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleKind {
    /// `b_i = b` for every sorting step.
    Fixed,
    /// A given sequence; running past its end is an error.
    Explicit(Vec<u64>),
    /// `b_i` uniform on `{0, ..., floor(2b)}`, truncated so that every
    /// window of `n` consecutive entries stays within `floor(b n)`.
    Iid,
}

/// Number of mixing steps after each sorting step.
#[derive(Debug, Clone)]
pub struct StepSchedule {
    kind: ScheduleKind,
    b: f64,
    n: usize,
    recent: VecDeque<u64>,
    recent_sum: u64,
}

impl StepSchedule {
    pub fn fixed(b: u64, n: usize) -> Result<Self, ModelError> {
        if b < 1 {
            return Err(ModelError::InvalidSchedule("fixed schedule needs b >= 1".into()));
        }
        Ok(Self::make(ScheduleKind::Fixed, b as f64, n))
    }

    pub fn explicit(entries: Vec<u64>, b: f64, n: usize) -> Result<Self, ModelError> {
        check_b(b)?;
        validate_window(&entries, n, b)?;
        Ok(Self::make(ScheduleKind::Explicit(entries), b, n))
    }

    pub fn iid(b: f64, n: usize) -> Result<Self, ModelError> {
        check_b(b)?;
        Ok(Self::make(ScheduleKind::Iid, b, n))
    }

    /// Reads one integer per line (blank lines and `#` comments skipped).
    pub fn explicit_from_file(path: &Path, b: f64, n: usize) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::InvalidSchedule(format!("{}: {e}", path.display())))?;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            entries.push(line.parse().map_err(|_| {
                ModelError::InvalidSchedule(format!("{} line {}: not a count", path.display(), i + 1))
            })?);
        }
        Self::explicit(entries, b, n)
    }

    fn make(kind: ScheduleKind, b: f64, n: usize) -> Self {
        StepSchedule { kind, b, n: n.max(1), recent: VecDeque::new(), recent_sum: 0 }
    }

    pub fn kind(&self) -> &ScheduleKind {
        &self.kind
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `b_i` for the `i`-th sorting step (1-based).
    pub fn next_count<R: Rng + ?Sized>(&mut self, i: u64, rng: &mut R) -> Result<u64, ModelError> {
        match &self.kind {
            ScheduleKind::Fixed => Ok(self.b as u64),
            ScheduleKind::Explicit(v) => {
                v.get(i as usize - 1).copied().ok_or(ModelError::ScheduleExhausted(v.len()))
            }
            ScheduleKind::Iid => {
                let limit = (self.b * self.n as f64).floor() as u64;
                if self.recent.len() == self.n {
                    self.recent_sum -= self.recent.pop_front().unwrap_or(0);
                }
                let draw = rng.random_range(0..=(2.0 * self.b).floor() as u64);
                let x = draw.min(limit - self.recent_sum);
                self.recent.push_back(x);
                self.recent_sum += x;
                Ok(x)
            }
        }
    }
}

fn check_b(b: f64) -> Result<(), ModelError> {
    if !(b >= 1.0 && b.is_finite()) {
        return Err(ModelError::InvalidSchedule(format!("b must be a real >= 1, got {b}")));
    }
    Ok(())
}

/// Checks that every window of `n` consecutive entries (including the
/// partial windows at the end of the prefix) sums to at most `b n`.
pub fn validate_window(entries: &[u64], n: usize, b: f64) -> Result<(), ModelError> {
    let limit = (b * n as f64).floor() as u64;
    let mut sum = 0u64;
    for (i, &x) in entries.iter().enumerate() {
        sum += x;
        if i >= n {
            sum -= entries[i - n];
        }
        if sum > limit {
            return Err(ModelError::WindowViolation { start: (i + 1).saturating_sub(n), sum, limit });
        }
    }
    Ok(())
}

/// Checks that every window of `ceil((b+1) n)` consecutive steps holds at
/// least a `1/(4(b+1))` fraction of sorting steps. `is_sort[t]` marks the
/// kind of step `t`. Returns the first failing window start.
pub fn sorting_fraction_ok(is_sort: &[bool], n: usize, b: f64) -> Result<(), usize> {
    let len = ((b + 1.0) * n as f64).ceil() as usize;
    if is_sort.len() < len {
        return Ok(());
    }
    let need = len as f64 / (4.0 * (b + 1.0));
    let mut count = is_sort[..len].iter().filter(|&&s| s).count();
    for start in 0..=is_sort.len() - len {
        if start > 0 {
            count -= is_sort[start - 1] as usize;
            count += is_sort[start + len - 1] as usize;
        }
        if (count as f64) < need {
            return Err(start);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn alternating_schedule_is_valid() {
        let v: Vec<u64> = (0..100).map(|i| if i % 2 == 0 { 0 } else { 2 }).collect();
        assert!(validate_window(&v, 8, 1.0).is_ok());
        // odd n lets a window catch one extra 2
        assert!(validate_window(&[2, 0, 2], 3, 1.0).is_err());
    }

    #[test]
    fn explicit_exhausts() {
        let mut s = StepSchedule::explicit(vec![1, 0], 1.0, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.next_count(1, &mut rng).unwrap(), 1);
        assert_eq!(s.next_count(2, &mut rng).unwrap(), 0);
        assert_eq!(s.next_count(3, &mut rng), Err(ModelError::ScheduleExhausted(2)));
    }

    #[test]
    fn iid_respects_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(b, n) in &[(1.0, 16usize), (2.5, 7), (4.0, 50)] {
            let mut s = StepSchedule::iid(b, n).unwrap();
            let v: Vec<u64> = (1..=5000).map(|i| s.next_count(i, &mut rng).unwrap()).collect();
            validate_window(&v, n, b).unwrap();
            let mean = v.iter().sum::<u64>() as f64 / v.len() as f64;
            assert!(mean > 0.5 * b && mean <= b + 1e-9, "mean {mean} for b={b}");
        }
    }

    #[test]
    fn rejects_bad_b() {
        assert!(StepSchedule::fixed(0, 4).is_err());
        assert!(StepSchedule::iid(0.5, 4).is_err());
    }

    #[test]
    fn sorting_fraction_window() {
        // sort, mix, sort, mix, ... has fraction 1/2
        let v: Vec<bool> = (0..100).map(|i| i % 2 == 0).collect();
        assert!(sorting_fraction_ok(&v, 4, 1.0).is_ok());
        let mut w = vec![true; 10];
        w.extend(vec![false; 40]);
        assert!(sorting_fraction_ok(&w, 4, 1.0).is_err());
    }
}
