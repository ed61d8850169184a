//! Admissibility of a target permutation with respect to `pi`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::perm::Permutation;

/// One swap performed by `adm`, as the quadruples of the swap lemma.
///
/// `lo < hi` are the two values (sorted in `pi`, so `lo` is left of `hi`),
/// `targets` are their targets after the swap, which are then in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdmSwap {
    pub lo: usize,
    pub hi: usize,
    /// Positions of `lo` and `hi` in `pi` (0-based, adjacent).
    pub pos: usize,
    pub targets: (usize, usize),
}

impl AdmSwap {
    /// Both inequalities of the swap lemma for reals `a <= b`, `c <= d`.
    pub fn lemma_holds(a: i64, b: i64, c: i64, d: i64) -> bool {
        debug_assert!(a <= b && c <= d);
        let sum_ok = (a - c).abs() + (b - d).abs() <= (a - d).abs() + (b - c).abs();
        let max_ok = (a - c).abs().max((b - d).abs()) <= (a - d).abs().max((b - c).abs());
        sum_ok && max_ok
    }

    /// The lemma on (value, target) pairs.
    pub fn value_form_holds(&self) -> bool {
        Self::lemma_holds(self.lo as i64, self.hi as i64, self.targets.0 as i64, self.targets.1 as i64)
    }

    /// The lemma on (list cell, target cell) pairs of a d-padding whose
    /// entries at positions `pos`, `pos+1` sit in cells `cells`.
    pub fn cell_form_holds(&self, cells: (usize, usize), d: usize) -> bool {
        Self::lemma_holds(
            cells.0 as i64,
            cells.1 as i64,
            (d * (self.targets.0 + 1)) as i64,
            (d * (self.targets.1 + 1)) as i64,
        )
    }
}

#[inline]
fn violates(tau: &Permutation, pi: &Permutation, i: usize) -> bool {
    let (a, b) = (pi.get(i), pi.get(i + 1));
    a < b && tau.get(a) > tau.get(b)
}

pub fn is_admissible(tau: &Permutation, pi: &Permutation) -> bool {
    (0..pi.len().saturating_sub(1)).all(|i| !violates(tau, pi, i))
}

/// Returns `adm(tau, pi)`.
pub fn adm(tau: &Permutation, pi: &Permutation) -> Permutation {
    let mut out = tau.clone();
    adm_in_place(&mut out, pi, 0..pi.len().saturating_sub(1), |_| {});
    out
}

/// Makes `tau` admissible, assuming only the adjacent pairs in `seeds`
/// (0-based left positions) can violate the condition. Always fixes the
/// smallest violating pair first.
pub fn adm_in_place<I, F>(tau: &mut Permutation, pi: &Permutation, seeds: I, mut on_swap: F)
where
    I: IntoIterator<Item = usize>,
    F: FnMut(AdmSwap),
{
    let pairs = pi.len().saturating_sub(1);
    let mut heap: BinaryHeap<Reverse<usize>> =
        seeds.into_iter().filter(|&i| i < pairs).map(Reverse).collect();
    while let Some(Reverse(i)) = heap.pop() {
        if !violates(tau, pi, i) {
            continue;
        }
        let (a, b) = (pi.get(i), pi.get(i + 1));
        tau.swap(a, b);
        on_swap(AdmSwap { lo: a, hi: b, pos: i, targets: (tau.get(a), tau.get(b)) });
        if i > 0 {
            heap.push(Reverse(i - 1));
        }
        if i + 1 < pairs {
            heap.push(Reverse(i + 1));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[u32]) -> Permutation {
        Permutation::from_one_based(v).unwrap()
    }

    #[test]
    fn single_violation() {
        assert_eq!(adm(&p(&[2, 1]), &Permutation::identity(2)), Permutation::identity(2));
    }

    #[test]
    fn reverse_pi_is_vacuous() {
        let tau = p(&[3, 1, 4, 2]);
        assert_eq!(adm(&tau, &Permutation::reverse(4)), tau);
    }

    #[test]
    fn result_admissible_and_idempotent() {
        let pi = p(&[2, 4, 1, 3, 5]);
        let tau = p(&[5, 4, 3, 2, 1]);
        let a = adm(&tau, &pi);
        assert!(is_admissible(&a, &pi));
        assert_eq!(adm(&a, &pi), a);
    }

    #[test]
    fn smallest_first_order() {
        // pi = id, tau = (3,2,1): fix pair 1 -> (2,3,1), pair 2 -> (2,1,3), pair 1 -> (1,2,3)
        let mut tau = p(&[3, 2, 1]);
        let mut order = Vec::new();
        adm_in_place(&mut tau, &Permutation::identity(3), 0..2, |s| order.push(s.pos));
        assert_eq!(order, vec![0, 1, 0]);
        assert!(tau.is_identity());
    }

    #[test]
    fn swap_lemma_cases() {
        assert!(AdmSwap::lemma_holds(1, 2, 3, 4));
        assert!(AdmSwap::lemma_holds(1, 3, 2, 4));
        assert!(AdmSwap::lemma_holds(1, 4, 2, 3));
        assert!(AdmSwap::lemma_holds(5, 5, 0, 9));
    }
}
