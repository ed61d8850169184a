//! Decomposition of a locally optimal padding into sorted blocks.

use super::padding::{target_cell, PaddedList};
use crate::perm::Permutation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockKind {
    Left,
    Right,
    Stationary,
}

/// A maximal gap-free run of entries with increasing targets that all lie
/// on the same side. Cells are 1-based and inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub end: usize,
    pub kind: BlockKind,
    /// Rightmost cell for right blocks, leftmost for left blocks.
    pub head: usize,
}

fn side(list: &PaddedList, tau: &Permutation, k: usize) -> BlockKind {
    let pos = list.slot(k) as i64;
    let target = target_cell(list.d(), tau.get(list.values()[k] as usize));
    match target.cmp(&pos) {
        std::cmp::Ordering::Greater => BlockKind::Right,
        std::cmp::Ordering::Less => BlockKind::Left,
        std::cmp::Ordering::Equal => BlockKind::Stationary,
    }
}

/// Blocks from left to right. Expects `tau` admissible and `list` locally
/// optimal, under which every entry lies in exactly one block.
pub fn decompose_blocks(list: &PaddedList, tau: &Permutation) -> Vec<Block> {
    let mut out: Vec<Block> = Vec::new();
    for k in 0..list.n() {
        let kind = side(list, tau, k);
        let cell = list.slot(k);
        let extends = k > 0 && {
            let prev = out.last().expect("block exists");
            kind != BlockKind::Stationary
                && prev.kind == kind
                && list.slot(k - 1) + 1 == cell
                && tau.get(list.values()[k - 1] as usize) < tau.get(list.values()[k] as usize)
        };
        if extends {
            let b = out.last_mut().expect("block exists");
            b.end = cell;
            if kind == BlockKind::Right {
                b.head = cell;
            }
        } else {
            out.push(Block { start: cell, end: cell, kind, head: cell });
        }
    }
    out
}

/// The largest `sum_k phi(k) / phi(head)` over all blocks, with
/// `phi = exp(alpha * displacement)`. 1 when there are only singletons.
pub fn head_dominance_ratio(list: &PaddedList, tau: &Permutation, alpha: f64) -> f64 {
    let blocks = decompose_blocks(list, tau);
    let mut worst = 1.0f64;
    let mut k = 0;
    for b in &blocks {
        let first = k;
        while k < list.n() && list.slot(k) <= b.end {
            k += 1;
        }
        if b.kind == BlockKind::Stationary {
            continue;
        }
        let head_k = if b.kind == BlockKind::Right { k - 1 } else { first };
        let head = list.displacement(head_k, tau) as f64;
        let ratio: f64 =
            (first..k).map(|j| (alpha * (list.displacement(j, tau) as f64 - head)).exp()).sum();
        worst = worst.max(ratio);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{adm, PaddedList};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// All blocks by the definition: every interval of cells checked for
    /// the block properties and for maximality in both directions.
    fn brute_force(list: &PaddedList, tau: &Permutation) -> Vec<Block> {
        let cells = list.to_cells();
        let big_n = cells.len();
        let d = list.d() as i64;
        let tgt = |c: usize| d * tau.get(cells[c - 1].unwrap() as usize - 1) as i64 + d;
        let props = |j: usize, k: usize, right: bool| -> bool {
            if j < 1 || k > big_n || (j..=k).any(|c| cells[c - 1].is_none()) {
                return false;
            }
            if (j..k).any(|c| tgt(c) >= tgt(c + 1)) {
                return false;
            }
            if right {
                tgt(j) > j as i64
            } else {
                tgt(k) < k as i64
            }
        };
        let mut out = Vec::new();
        for j in 1..=big_n {
            if cells[j - 1].is_some() && tgt(j) == j as i64 {
                out.push(Block { start: j, end: j, kind: BlockKind::Stationary, head: j });
            }
            for k in j..=big_n {
                for right in [true, false] {
                    if props(j, k, right) && !props(j - 1, k, right) && !props(j, k + 1, right) {
                        let (kind, head) =
                            if right { (BlockKind::Right, k) } else { (BlockKind::Left, j) };
                        out.push(Block { start: j, end: k, kind, head });
                    }
                }
            }
        }
        out.sort_by_key(|b| b.start);
        out
    }

    #[test]
    fn figure_example() {
        // cells 195..206 of a d=4 padding with tau = id
        let n = 64;
        let d = 4;
        let window: [Option<u32>; 12] =
            [None, Some(50), Some(34), Some(40), Some(42), Some(52), Some(55), Some(56), Some(63), Some(51), None, Some(57)];
        let mut cells = vec![None; (n + 1) * d - 1];
        for (i, v) in window.iter().enumerate() {
            cells[194 + i] = *v;
        }
        let used: Vec<u32> = window.iter().flatten().copied().collect();
        let mut rest = (1..=n as u32).filter(|v| !used.contains(v));
        // fill the remaining cells outside the window in canonical fashion
        for c in (1..=cells.len()).filter(|c| !(195..=206).contains(c)) {
            if c % d == 0 {
                cells[c - 1] = rest.next();
            }
        }
        assert!(rest.next().is_none());
        // entries are not in increasing order outside, which is fine here
        let list = PaddedList::from_cells(&cells, d).unwrap();
        let tau = Permutation::identity(n);
        let blocks = decompose_blocks(&list, &tau);
        let find = |cell: usize| *blocks.iter().find(|b| b.start <= cell && cell <= b.end).unwrap();
        let left = find(197);
        assert_eq!((left.start, left.end, left.kind, left.head), (197, 199, BlockKind::Left, 197));
        let right = find(200);
        assert_eq!((right.start, right.end, right.kind, right.head), (200, 203, BlockKind::Right, 203));
        assert_eq!(find(204).kind, BlockKind::Stationary);
    }

    #[test]
    fn sorted_is_all_stationary() {
        let id = Permutation::identity(6);
        let l = PaddedList::canonical(&id, 3);
        assert!(decompose_blocks(&l, &id).iter().all(|b| b.kind == BlockKind::Stationary));
        assert_eq!(head_dominance_ratio(&l, &id, 1.0), 1.0);
    }

    #[test]
    fn matches_definition_on_random_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..400 {
            let n = 2 + trial % 9;
            let d = 2 + trial % 3;
            let pi = Permutation::random(n, &mut rng);
            let tau = adm(&Permutation::random(n, &mut rng), &pi);
            let mut l = PaddedList::canonical(&pi, d);
            l.lopt(&tau);
            let fast = decompose_blocks(&l, &tau);
            assert_eq!(fast, brute_force(&l, &tau), "pi={pi} tau={tau} d={d}");
            let covered: usize = fast.iter().map(|b| b.end - b.start + 1).sum();
            assert_eq!(covered, n);
        }
    }
}
