//! Partial target resets.

use crate::perm::Permutation;

/// Keeps `tau(i)` where `|tau(i) - i| > theta` and sorts the other values
/// into the other indices.
pub fn theta_filter(tau: &Permutation, theta: u64) -> Permutation {
    let n = tau.len();
    let far = |i: usize| (i as u64).abs_diff(tau.get(i) as u64) > theta;
    let mut kept = vec![false; n];
    for i in (0..n).filter(|&i| far(i)) {
        kept[tau.get(i)] = true;
    }
    let mut free = (0..n as u32).filter(|&v| !kept[v as usize]);
    let out: Vec<u32> = (0..n)
        .map(|i| if far(i) { tau.get(i) as u32 } else { free.next().expect("counts agree") })
        .collect();
    Permutation::from_vec(out).expect("filter yields a bijection")
}

/// `sum_{i : |tau(i) - i| > theta} |tau(i) - i|`.
pub fn far_displacement(tau: &Permutation, theta: u64) -> u64 {
    tau.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as u64).abs_diff(v as u64))
        .filter(|&x| x > theta)
        .sum()
}

/// `sum_{i : delta(i) >= threshold} delta(i)` with `delta(i) = |sigma^{-1}(i) - i|`.
pub fn tail_displacement(sigma: &Permutation, threshold: u64) -> u64 {
    sigma
        .inverse_slice()
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as u64).abs_diff(v as u64))
        .filter(|&x| x >= threshold)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perm::{dev_sorted, mdev, mdev_sorted};

    fn p(v: &[u32]) -> Permutation {
        Permutation::from_one_based(v).unwrap()
    }

    #[test]
    fn hand_example() {
        assert_eq!(theta_filter(&p(&[3, 2, 1]), 1), p(&[3, 2, 1]));
        let t = p(&[4, 2, 3, 1, 5]);
        assert!(theta_filter(&t, mdev_sorted(&t)).is_identity());
    }

    #[test]
    fn bounds_on_small_cases() {
        let t = p(&[5, 1, 2, 3, 4, 6]);
        for theta in 0..6 {
            let f = theta_filter(&t, theta);
            assert!(mdev(&f, &t).unwrap() <= 2 * theta);
            assert!(dev_sorted(&f) <= 4 * far_displacement(&t, theta));
        }
    }

    #[test]
    fn tail_cases() {
        assert_eq!(tail_displacement(&Permutation::identity(7), 0), 0);
        let s = p(&[6, 2, 3, 4, 5, 1, 7]);
        assert_eq!(tail_displacement(&s, 3), 10);
        assert_eq!(tail_displacement(&s, 0), dev_sorted(&s));
    }
}
