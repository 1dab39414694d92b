//! Brute-force best strategies for small instances (min-sum set cover with
//! weights `P^n`).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::attack::{exact_expected_guesses, product_probs, AttackReport};
use super::greedy::{coverage_lists, lazy_greedy};
use super::strategy::{build_strategy, Strategy};
use crate::error::{check_limit, Error, Result};
use crate::prob::seq::{all_sequences, seq_from_index, space_size, DEFAULT_SEQUENCE_LIMIT};
use crate::prob::{DistortionSpec, Pmf, Seq};

/// Hard cap on the exhaustive search (it tabulates `2^k` subsets).
pub const MAX_EXHAUSTIVE: usize = 20;
/// Pairwise dominance is only checked below this many distinct candidates.
const DOMINANCE_LIMIT: usize = 1024;
/// Guarantee of greedy min-sum set cover relative to the optimum.
pub const GREEDY_APPROXIMATION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    /// Largest non-dominated candidate count searched exhaustively.
    pub exhaustive_limit: usize,
    /// In greedy mode, return the type-covering strategy instead when it is better.
    pub constructive_fallback: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            exhaustive_limit: 8,
            constructive_fallback: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    /// Optimal over every ordering of the non-dominated candidates.
    Exhaustive,
    /// Greedy by remaining covered mass; heuristic.
    Greedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub strategy: Strategy,
    pub report: AttackReport,
    pub method: OracleMethod,
    /// 1 for exhaustive search, 4 for greedy.
    pub approximation_factor: f64,
    /// Distinct candidate acceptance sets after removing dominated ones
    /// (dominance is only pruned for small pools).
    pub candidates: usize,
    /// The type-covering strategy beat greedy and was returned instead.
    pub used_constructive: bool,
}

/// Best strategy found for `P^n` under limit `d_limit`.
pub fn oracle_best_strategy(p: &Pmf, d: &DistortionSpec, d_limit: f64, n: usize) -> Result<OracleResult> {
    oracle_best_strategy_with(p, d, d_limit, n, &OracleOptions::default())
}

pub fn oracle_best_strategy_with(
    p: &Pmf,
    d: &DistortionSpec,
    d_limit: f64,
    n: usize,
    opts: &OracleOptions,
) -> Result<OracleResult> {
    if p.alphabet_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: p.alphabet_size(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("sequence length must be positive"));
    }
    super::covering::check_limit_value(d_limit)?;
    check_limit("enrollment space", space_size(d.x_size(), n), DEFAULT_SEQUENCE_LIMIT)?;
    let candidates = all_sequences(d.y_size(), n, DEFAULT_SEQUENCE_LIMIT)?;

    let probs = product_probs(p.probs(), n);
    let (members, weights): (Vec<Seq>, Vec<f64>) = probs
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, w)| (seq_from_index(i, d.x_size(), n), *w))
        .unzip();
    let lists = coverage_lists(&members, &candidates, d, d_limit);

    let mut first: HashMap<&[u32], usize> = HashMap::new();
    let mut distinct: Vec<usize> = Vec::new();
    for (i, l) in lists.iter().enumerate() {
        if !l.is_empty() && !first.contains_key(l.as_slice()) {
            first.insert(l, i);
            distinct.push(i);
        }
    }
    let pool = if distinct.len() <= DOMINANCE_LIMIT {
        non_dominated(&distinct, &lists, members.len())
    } else {
        distinct
    };

    let limit = opts.exhaustive_limit.min(MAX_EXHAUSTIVE);
    let (order, method) = if pool.len() <= limit {
        (exhaustive_order(&pool, &lists, &weights), OracleMethod::Exhaustive)
    } else {
        let pool_lists: Vec<Vec<u32>> = pool.iter().map(|&i| lists[i].clone()).collect();
        let (chosen, _) = lazy_greedy(&pool_lists, &weights);
        (chosen.into_iter().map(|j| pool[j]).collect(), OracleMethod::Greedy)
    };
    let guesses: Vec<Seq> = order.into_iter().map(|i| candidates[i].clone()).collect();
    let mut strategy = Strategy::from_guesses(n, d.y_size(), guesses)?;
    let mut report = exact_expected_guesses(p, &strategy, d, d_limit)?;
    let mut used_constructive = false;
    if method == OracleMethod::Greedy && opts.constructive_fallback {
        let constructive = build_strategy(n, p, d, d_limit)?;
        let r = exact_expected_guesses(p, &constructive, d, d_limit)?;
        if r.mean_guesses < report.mean_guesses {
            strategy = constructive;
            report = r;
            used_constructive = true;
        }
    }
    Ok(OracleResult {
        strategy,
        report,
        method,
        approximation_factor: match method {
            OracleMethod::Exhaustive => 1.0,
            OracleMethod::Greedy => GREEDY_APPROXIMATION,
        },
        candidates: pool.len(),
        used_constructive,
    })
}

/// Drops candidates whose acceptance set is a strict subset of another's.
/// Any ordering using one can swap it for its superset without getting worse.
fn non_dominated(distinct: &[usize], lists: &[Vec<u32>], universe: usize) -> Vec<usize> {
    let words = universe.div_ceil(64);
    let bits: Vec<Vec<u64>> = distinct
        .iter()
        .map(|&i| {
            let mut b = vec![0u64; words];
            for &m in &lists[i] {
                b[m as usize / 64] |= 1 << (m % 64);
            }
            b
        })
        .collect();
    let subset = |a: &[u64], b: &[u64]| a.iter().zip(b).all(|(x, y)| x & !y == 0);
    distinct
        .iter()
        .enumerate()
        .filter(|&(a, _)| {
            !(0..distinct.len())
                .any(|b| b != a && lists[distinct[b]].len() > lists[distinct[a]].len() && subset(&bits[a], &bits[b]))
        })
        .map(|(_, &i)| i)
        .collect()
}

/// Optimal ordering by dynamic programming over the set of candidates used:
/// `best(U) = uncovered(U) + min_c best(U + c)`, which equals the minimum
/// over all orderings of `E[G]`.
fn exhaustive_order(pool: &[usize], lists: &[Vec<u32>], weights: &[f64]) -> Vec<usize> {
    let k = pool.len();
    let full = (1usize << k) - 1;
    let mut mask = vec![0usize; weights.len()];
    for (j, &i) in pool.iter().enumerate() {
        for &m in &lists[i] {
            mask[m as usize] |= 1 << j;
        }
    }
    // within[S] = mass of members whose covering candidates all lie in S.
    let mut within = vec![0.0; full + 1];
    for (m, &w) in mask.iter().zip(weights) {
        within[*m] += w;
    }
    for bit in 0..k {
        for s in 0..=full {
            if s & (1 << bit) != 0 {
                within[s] += within[s ^ (1 << bit)];
            }
        }
    }
    let uncovered = |u: usize| within[full & !u];

    let mut best = vec![0.0; full + 1];
    let mut next = vec![usize::MAX; full + 1];
    for u in (0..full).rev() {
        let left = uncovered(u);
        if left <= 0.0 {
            continue;
        }
        let mut top = f64::INFINITY;
        for j in 0..k {
            let v = u | (1 << j);
            if v != u && uncovered(v) < left && best[v] < top {
                top = best[v];
                next[u] = j;
            }
        }
        best[u] = left + top;
    }
    let mut order = Vec::new();
    let mut u = 0;
    while u != full && next[u] != usize::MAX {
        order.push(pool[next[u]]);
        u |= 1 << next[u];
    }
    order
}
