use super::{PermError, Permutation};

fn check(p: &Permutation, q: &Permutation) -> Result<(), PermError> {
    if p.len() != q.len() {
        return Err(PermError::DimensionMismatch { left: p.len(), right: q.len() });
    }
    Ok(())
}

/// Maximum deviation `max_i |p(i) - q(i)|`.
pub fn mdev(p: &Permutation, q: &Permutation) -> Result<u64, PermError> {
    check(p, q)?;
    Ok(p.as_slice()
        .iter()
        .zip(q.as_slice())
        .map(|(&a, &b)| a.abs_diff(b) as u64)
        .max()
        .unwrap_or(0))
}

/// Total deviation (Spearman footrule) `sum_i |p(i) - q(i)|`.
pub fn dev(p: &Permutation, q: &Permutation) -> Result<u64, PermError> {
    check(p, q)?;
    Ok(p.as_slice().iter().zip(q.as_slice()).map(|(&a, &b)| a.abs_diff(b) as u64).sum())
}

/// Number of pairs ordered differently by `p` and `q`, in O(n log n).
pub fn kendall_tau(p: &Permutation, q: &Permutation) -> Result<u64, PermError> {
    check(p, q)?;
    let n = p.len();
    // walk indices in increasing p order and count inversions of q along it
    let mut fen = vec![0u32; n + 1];
    let mut seen = 0u64;
    let mut inv = 0u64;
    for rank in 0..n {
        let i = p.inv(rank);
        let qi = q.get(i);
        // number of earlier entries with q value <= qi
        let mut le = 0u64;
        let mut k = qi + 1;
        while k > 0 {
            le += fen[k] as u64;
            k &= k - 1;
        }
        inv += seen - le;
        let mut k = qi + 1;
        while k <= n {
            fen[k] += 1;
            k += k & k.wrapping_neg();
        }
        seen += 1;
    }
    Ok(inv)
}

/// Pair-enumeration Kendall distance, O(n^2). Used as a test oracle.
pub fn kendall_tau_naive(p: &Permutation, q: &Permutation) -> Result<u64, PermError> {
    check(p, q)?;
    let (a, b) = (p.as_slice(), q.as_slice());
    let mut count = 0;
    for i in 0..a.len() {
        for j in 0..a.len() {
            if a[i] < a[j] && b[i] > b[j] {
                count += 1;
            }
        }
    }
    Ok(count)
}

pub fn mdev_sorted(p: &Permutation) -> u64 {
    p.as_slice().iter().enumerate().map(|(i, &v)| (i as u32).abs_diff(v) as u64).max().unwrap_or(0)
}

pub fn dev_sorted(p: &Permutation) -> u64 {
    p.as_slice().iter().enumerate().map(|(i, &v)| (i as u32).abs_diff(v) as u64).sum()
}

pub fn kendall_sorted(p: &Permutation) -> u64 {
    kendall_tau(p, &Permutation::identity(p.len())).expect("same size")
}

/// Incrementally maintained `mdev` and `dev` against the identity.
///
/// Keeps a histogram of `|p(i) - i|` so that the maximum can be read in
/// amortised O(1) after each local change.
#[derive(Debug, Clone)]
pub struct DeviationTracker {
    hist: Vec<u32>,
    max: usize,
    sum: u64,
}

impl DeviationTracker {
    pub fn new(p: &Permutation) -> Self {
        let n = p.len();
        let mut hist = vec![0u32; n.max(1)];
        let mut sum = 0;
        let mut max = 0;
        for (i, &v) in p.as_slice().iter().enumerate() {
            let d = (i as u32).abs_diff(v) as usize;
            hist[d] += 1;
            sum += d as u64;
            max = max.max(d);
        }
        DeviationTracker { hist, max, sum }
    }

    /// Call after entries at `indices` changed, with their old values.
    pub fn update(&mut self, p: &Permutation, indices: &[usize], old_values: &[u32]) {
        for (&i, &old) in indices.iter().zip(old_values) {
            let d = (i as u32).abs_diff(old) as usize;
            self.hist[d] -= 1;
            self.sum -= d as u64;
        }
        for &i in indices {
            let d = (i as u32).abs_diff(p.as_slice()[i]) as usize;
            self.hist[d] += 1;
            self.sum += d as u64;
            self.max = self.max.max(d);
        }
        while self.max > 0 && self.hist[self.max] == 0 {
            self.max -= 1;
        }
    }

    pub fn mdev(&self) -> u64 {
        self.max as u64
    }

    pub fn dev(&self) -> u64 {
        self.sum
    }
}
