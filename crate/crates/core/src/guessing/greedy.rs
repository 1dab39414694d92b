//! Coverage lists and lazy greedy maximum coverage.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::prob::{DistortionSpec, Seq};

/// For each candidate, the indices of `members` it accepts.
pub(crate) fn coverage_lists(members: &[Seq], candidates: &[Seq], d: &DistortionSpec, limit: f64) -> Vec<Vec<u32>> {
    candidates
        .par_iter()
        .map(|y| {
            members
                .iter()
                .enumerate()
                .filter(|(_, x)| d.accepts(x, y, limit))
                .map(|(i, _)| i as u32)
                .collect()
        })
        .collect()
}

struct Entry {
    gain: f64,
    index: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Max-heap on gain, then on smaller index.
    fn cmp(&self, other: &Self) -> Ordering {
        self.gain
            .total_cmp(&other.gain)
            .then_with(|| other.index.cmp(&self.index))
    }
}

fn gain(list: &[u32], weights: &[f64], covered: &[bool]) -> f64 {
    list.iter()
        .filter(|&&m| !covered[m as usize])
        .map(|&m| weights[m as usize])
        .sum()
}

/// Greedy weighted maximum coverage: repeatedly picks the candidate whose
/// list has the largest uncovered weight (smallest index on ties) until no
/// candidate adds positive weight. Gains only shrink, so stale heap entries
/// are upper bounds and a candidate whose recomputed gain still tops the
/// heap is the exact greedy choice.
///
/// Returns the chosen candidate indices in order and the coverage flags.
pub(crate) fn lazy_greedy(lists: &[Vec<u32>], weights: &[f64]) -> (Vec<usize>, Vec<bool>) {
    let mut covered = vec![false; weights.len()];
    let mut heap: BinaryHeap<Entry> = lists
        .iter()
        .enumerate()
        .map(|(index, l)| Entry {
            gain: gain(l, weights, &covered),
            index,
        })
        .filter(|e| e.gain > 0.0)
        .collect();
    let mut chosen = Vec::new();
    while let Some(top) = heap.pop() {
        let g = gain(&lists[top.index], weights, &covered);
        if g <= 0.0 {
            continue;
        }
        let fresh = Entry {
            gain: g,
            index: top.index,
        };
        if heap.peek().is_none_or(|next| fresh >= *next) {
            for &m in &lists[top.index] {
                covered[m as usize] = true;
            }
            chosen.push(top.index);
        } else {
            heap.push(fresh);
        }
    }
    (chosen, covered)
}
