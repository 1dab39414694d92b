//! Maximization over the probability simplex: dense grid, then a pattern
//! search that moves mass between pairs of coordinates.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::prob::Compositions;

/// One objective evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Eval {
    pub value: f64,
    pub converged: bool,
}

/// A refinement run: where it started and where it ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub start: Vec<f64>,
    pub start_value: f64,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct SearchOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    pub candidates: Vec<Candidate>,
    pub evaluations: usize,
    pub unconverged: usize,
    pub near_ties: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchSettings {
    /// Grid denominator: points are compositions of `divisions`.
    pub divisions: usize,
    pub top_k: usize,
    pub refine: bool,
    pub min_step: f64,
}

/// Ranking: larger value first, then lexicographically smaller point.
fn rank(a: &(f64, Vec<f64>), b: &(f64, Vec<f64>)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| {
        a.1.iter()
            .zip(&b.1)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

struct TopK {
    k: usize,
    items: Vec<(f64, Vec<f64>)>,
}

impl TopK {
    fn offer(&mut self, value: f64, point: &[f64]) {
        if self.items.len() == self.k && value < self.items[self.k - 1].0 {
            return;
        }
        if self.items.iter().any(|(_, p)| p == point) {
            return;
        }
        self.items.push((value, point.to_vec()));
        self.items.sort_by(rank);
        self.items.truncate(self.k);
    }
}

/// Number of grid points for `cells` coordinates and `divisions`.
pub(crate) fn grid_size(cells: usize, divisions: usize) -> u128 {
    crate::prob::count_types(divisions, cells)
}

/// Maximizes `f` over the simplex in `cells` dimensions.
///
/// `extra` points (e.g. the source itself) are evaluated alongside the grid.
pub(crate) fn maximize<F>(cells: usize, extra: &[Vec<f64>], settings: SearchSettings, f: F) -> SearchOutcome
where
    F: Fn(&[f64]) -> Eval + Sync,
{
    let n = settings.divisions.max(1);
    let k = settings.top_k.max(1);

    // Grid slices by the first coordinate, evaluated in parallel and merged
    // in slice order so the outcome does not depend on scheduling.
    let slices: Vec<(TopK, usize, usize)> = (0..=n)
        .into_par_iter()
        .filter(|&a| cells > 1 || a == n)
        .map(|a| {
            let mut top = TopK { k, items: Vec::new() };
            let (mut evals, mut bad) = (0, 0);
            let mut point = vec![0.0; cells];
            point[0] = a as f64 / n as f64;
            let rest: Box<dyn Iterator<Item = Vec<usize>>> = if cells > 1 {
                Box::new(Compositions::new(n - a, cells - 1))
            } else {
                Box::new(std::iter::once(Vec::new()))
            };
            for counts in rest {
                for (slot, c) in point[1..].iter_mut().zip(&counts) {
                    *slot = *c as f64 / n as f64;
                }
                let e = f(&point);
                evals += 1;
                bad += usize::from(!e.converged);
                top.offer(e.value, &point);
            }
            (top, evals, bad)
        })
        .collect();

    let mut top = TopK { k, items: Vec::new() };
    let mut evaluations = 0;
    let mut unconverged = 0;
    for (t, evals, bad) in slices {
        evaluations += evals;
        unconverged += bad;
        for (v, p) in t.items {
            top.offer(v, &p);
        }
    }
    let mut evaluate = |x: &[f64]| {
        let e = f(x);
        evaluations += 1;
        if !e.converged {
            unconverged += 1;
        }
        e.value
    };
    for x in extra {
        let v = evaluate(x);
        top.offer(v, x);
    }

    let starts = top.items;
    let mut candidates = Vec::with_capacity(starts.len());
    for (start_value, start) in starts {
        let (point, value) = if settings.refine {
            pattern_search(&start, start_value, 1.0 / n as f64, settings.min_step, &mut evaluate)
        } else {
            (start.clone(), start_value)
        };
        candidates.push(Candidate {
            start,
            start_value,
            point,
            value,
        });
    }

    let mut ranked: Vec<(f64, Vec<f64>)> = candidates.iter().map(|c| (c.value, c.point.clone())).collect();
    ranked.sort_by(rank);
    let (value, best) = ranked.swap_remove(0);
    let near_ties = candidates
        .iter()
        .filter(|c| (value - c.value).abs() <= 1e-7 && c.point.iter().zip(&best).any(|(a, b)| (a - b).abs() > 1e-3))
        .count();

    SearchOutcome {
        best,
        value,
        candidates,
        evaluations,
        unconverged,
        near_ties,
    }
}

/// Pattern search on the simplex. Each poll tries moving `h` of mass from
/// coordinate `j` to `i` for every ordered pair, takes the best improving
/// move, and halves `h` when nothing improves.
fn pattern_search(
    start: &[f64],
    start_value: f64,
    initial_step: f64,
    min_step: f64,
    evaluate: &mut impl FnMut(&[f64]) -> f64,
) -> (Vec<f64>, f64) {
    let cells = start.len();
    let mut x = start.to_vec();
    let mut fx = start_value;
    let mut h = initial_step;
    if cells < 2 {
        return (x, fx);
    }
    while h >= min_step {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for i in 0..cells {
            for j in 0..cells {
                if i == j || x[j] <= 0.0 {
                    continue;
                }
                let t = h.min(x[j]);
                let mut y = x.clone();
                y[i] += t;
                y[j] = if t == x[j] { 0.0 } else { x[j] - t };
                let fy = evaluate(&y);
                let bar = best.as_ref().map_or(fx, |b| b.1);
                if fy > bar + 1e-13 {
                    best = Some((y, fy));
                }
            }
        }
        match best {
            Some((y, fy)) => {
                x = y;
                fx = fy;
            }
            None => h *= 0.5,
        }
    }
    (x, fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_interior_maximum_off_grid() {
        // Concave quadratic peaked at (0.123, 0.456, 0.421).
        let target = [0.123, 0.456, 0.421];
        let f = |x: &[f64]| Eval {
            value: -x.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            converged: true,
        };
        let settings = SearchSettings {
            divisions: 20,
            top_k: 5,
            refine: true,
            min_step: 1e-6,
        };
        let out = maximize(3, &[], settings, f);
        for (a, b) in out.best.iter().zip(&target) {
            assert!((a - b).abs() < 1e-5);
        }
        assert!((out.best.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(out.candidates.len(), 5);
    }

    #[test]
    fn grid_only_and_extra_points() {
        let f = |x: &[f64]| Eval {
            value: -(x[0] - 0.33).abs(),
            converged: true,
        };
        let settings = SearchSettings {
            divisions: 10,
            top_k: 3,
            refine: false,
            min_step: 1e-6,
        };
        let out = maximize(2, &[vec![0.33, 0.67]], settings, f);
        assert_eq!(out.best, vec![0.33, 0.67]);
        assert_eq!(out.evaluations, 12);
        assert_eq!(grid_size(2, 10), 11);
    }
}
