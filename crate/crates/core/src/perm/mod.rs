//! Permutations with a maintained inverse, and the distances used to
//! measure how unsorted a permutation is.
//!
//! Indices and values are 0-based in this API. [`Permutation::from_one_based`]
//! and the `Display` impl use the 1-based convention of the fixtures.

mod distance;

pub use distance::{
    dev, dev_sorted, kendall_sorted, kendall_tau, kendall_tau_naive, mdev, mdev_sorted, DeviationTracker,
};

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("index {index} out of range for permutation of size {n}")]
    OutOfRange { index: usize, n: usize },
    #[error("size mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("not a bijection: {0}")]
    NotABijection(String),
}

/// A bijection on `0..n` stored as a forward array and its inverse.
///
/// For the process, `forward[i]` is the item at position `i` and
/// `inverse[v]` is the position of item `v`. For targets (`tau`, `sigma`)
/// `forward[v]` is the target rank of item `v`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Permutation {
    forward: Vec<u32>,
    inverse: Vec<u32>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        assert!(n <= u32::MAX as usize, "permutation too large");
        let forward: Vec<u32> = (0..n as u32).collect();
        Permutation { inverse: forward.clone(), forward }
    }

    /// The reverse permutation `i -> n-1-i`.
    pub fn reverse(n: usize) -> Self {
        let forward: Vec<u32> = (0..n as u32).rev().collect();
        Permutation { inverse: forward.clone(), forward }
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut forward: Vec<u32> = (0..n as u32).collect();
        forward.shuffle(rng);
        Self::from_forward_unchecked(forward)
    }

    pub fn from_vec(forward: Vec<u32>) -> Result<Self, PermError> {
        let n = forward.len();
        let mut inverse = vec![u32::MAX; n];
        for (i, &v) in forward.iter().enumerate() {
            let v = v as usize;
            if v >= n {
                return Err(PermError::OutOfRange { index: v, n });
            }
            if inverse[v] != u32::MAX {
                return Err(PermError::NotABijection(format!("value {v} repeated")));
            }
            inverse[v] = i as u32;
        }
        Ok(Permutation { forward, inverse })
    }

    /// Builds from 1-based values, e.g. `[2, 1, 3]`.
    pub fn from_one_based(values: &[u32]) -> Result<Self, PermError> {
        if values.contains(&0) {
            return Err(PermError::NotABijection("0 is not a 1-based value".into()));
        }
        Self::from_vec(values.iter().map(|&v| v - 1).collect())
    }

    fn from_forward_unchecked(forward: Vec<u32>) -> Self {
        let mut inverse = vec![0u32; forward.len()];
        for (i, &v) in forward.iter().enumerate() {
            inverse[v as usize] = i as u32;
        }
        Permutation { forward, inverse }
    }

    pub fn to_one_based(&self) -> Vec<u32> {
        self.forward.iter().map(|&v| v + 1).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.forward[i] as usize
    }

    #[inline]
    pub fn inv(&self, v: usize) -> usize {
        self.inverse[v] as usize
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.forward
    }

    pub fn inverse_slice(&self) -> &[u32] {
        &self.inverse
    }

    pub fn inverse(&self) -> Permutation {
        Permutation { forward: self.inverse.clone(), inverse: self.forward.clone() }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &v)| i == v as usize)
    }

    /// `(self ∘ other)(i) = self(other(i))`.
    pub fn compose(&self, other: &Permutation) -> Result<Permutation, PermError> {
        if self.len() != other.len() {
            return Err(PermError::DimensionMismatch { left: self.len(), right: other.len() });
        }
        let forward = other.forward.iter().map(|&j| self.forward[j as usize]).collect();
        Ok(Self::from_forward_unchecked(forward))
    }

    /// Exchanges the entries at indices `i` and `j`.
    #[inline]
    pub fn swap(&mut self, i: usize, j: usize) {
        let (a, b) = (self.forward[i], self.forward[j]);
        self.forward.swap(i, j);
        self.inverse[a as usize] = j as u32;
        self.inverse[b as usize] = i as u32;
    }

    pub fn try_swap(&mut self, i: usize, j: usize) -> Result<(), PermError> {
        let n = self.len();
        for idx in [i, j] {
            if idx >= n {
                return Err(PermError::OutOfRange { index: idx, n });
            }
        }
        self.swap(i, j);
        Ok(())
    }

    /// Moves the entry at index `i` to index `i + s` (clamped to the
    /// range), shifting the entries in between by one. Returns the
    /// effective shift.
    pub fn shift_entry(&mut self, i: usize, s: i64) -> i64 {
        let (lo, hi) = clamp_span(i, s, self.len());
        if lo == hi {
            return 0;
        }
        if s > 0 {
            self.forward[lo..=hi].rotate_left(1);
        } else {
            self.forward[lo..=hi].rotate_right(1);
        }
        for k in lo..=hi {
            self.inverse[self.forward[k] as usize] = k as u32;
        }
        if s > 0 {
            (hi - lo) as i64
        } else {
            -((hi - lo) as i64)
        }
    }

    /// Moves value `v` to rank `v + s`: the item of rank `v` trades places
    /// successively with the items of the ranks it passes. Equivalent to
    /// `shift_entry` on the inverse. Returns the effective shift.
    pub fn shift_value(&mut self, v: usize, s: i64) -> i64 {
        let (lo, hi) = clamp_span(v, s, self.len());
        if lo == hi {
            return 0;
        }
        if s > 0 {
            self.inverse[lo..=hi].rotate_left(1);
        } else {
            self.inverse[lo..=hi].rotate_right(1);
        }
        for w in lo..=hi {
            self.forward[self.inverse[w] as usize] = w as u32;
        }
        if s > 0 {
            (hi - lo) as i64
        } else {
            -((hi - lo) as i64)
        }
    }

    /// Checks that forward and inverse agree and form a bijection.
    pub fn validate(&self) -> Result<(), PermError> {
        let n = self.len();
        if self.inverse.len() != n {
            return Err(PermError::DimensionMismatch { left: n, right: self.inverse.len() });
        }
        for (i, &v) in self.forward.iter().enumerate() {
            if v as usize >= n || self.inverse[v as usize] as usize != i {
                return Err(PermError::NotABijection(format!("inverse broken at {i}")));
            }
        }
        Ok(())
    }
}

/// The inclusive index span touched by moving `i` by `s`, clamped.
#[inline]
pub(crate) fn clamp_span(i: usize, s: i64, n: usize) -> (usize, usize) {
    if s >= 0 {
        let hi = (i as i64 + s).min(n as i64 - 1) as usize;
        (i, hi.max(i))
    } else {
        let lo = (i as i64 + s).max(0) as usize;
        (lo, i)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Permutation{}", self)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.forward.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", v + 1)?;
        }
        write!(f, ")")
    }
}
