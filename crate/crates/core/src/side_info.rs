//! Adversary with side information `Z^n`: per-`z` strategies from
//! conditional type coverings, the conditional counting function and attack
//! evaluation against joint sources.
//!
//! Strategies are stored once per type of `z^n`, for the sorted
//! representative of that type; a `z^n` with the same type uses the same
//! list with coordinates permuted back.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_limit, Error, Result};
use crate::guessing::{
    build_strategy_with, check_limit_value, counting_function, cover_members, exact_expected_guesses, first_accepted,
    run_blocks, stream_key, AttackMode, AttackReport, CoveringOptions, GuessIndex, Segment, Strategy, StrategyOptions,
};
use crate::prob::seq::{space_size, type_class_members, DEFAULT_SEQUENCE_LIMIT};
use crate::prob::{
    enumerate_types_with_limit, Compositions, DistortionSpec, JointPmf, Seq, TypeComposition, DEFAULT_TYPE_LIMIT,
};
use crate::rd::conditional_rate_distortion_with;

/// Joint sources within this distance of a product are treated as independent.
pub const FACTOR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SiOptions {
    pub covering: CoveringOptions,
}

/// The strategy used for every `z^n` of one type, stated for its sorted representative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiBlock {
    pub z_counts: Vec<usize>,
    pub strategy: Strategy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiLayout {
    /// One list for every `z^n` (independent side information).
    Shared(Strategy),
    /// One list per reachable type of `z^n`.
    PerZType(Vec<SiBlock>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiStrategy {
    pub n: usize,
    pub z_size: usize,
    pub layout: SiLayout,
}

/// Stable sort permutation of `z`: position `i` of the sorted sequence is `z[perm[i]]`.
fn sort_permutation(z: &[u8]) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..z.len()).collect();
    perm.sort_by_key(|&i| z[i]);
    perm
}

impl SiStrategy {
    fn block_for(&self, z_counts: &[usize]) -> Option<&SiBlock> {
        match &self.layout {
            SiLayout::Shared(_) => None,
            SiLayout::PerZType(blocks) => blocks.iter().find(|b| b.z_counts == z_counts),
        }
    }

    /// The guess list for `z`, in the coordinates of `z`. `None` if `z` has
    /// zero probability under the source the strategy was built for.
    pub fn guesses_for(&self, z: &[u8]) -> Option<Vec<Seq>> {
        if z.len() != self.n || z.iter().any(|&b| b as usize >= self.z_size) {
            return None;
        }
        match &self.layout {
            SiLayout::Shared(s) => Some(s.guesses().cloned().collect()),
            SiLayout::PerZType(_) => {
                let counts = TypeComposition::of_sequence(z, self.z_size).ok()?;
                let block = self.block_for(counts.counts())?;
                let perm = sort_permutation(z);
                Some(
                    block
                        .strategy
                        .guesses()
                        .map(|g| {
                            let mut y = vec![0u8; g.len()];
                            for (i, &pi) in perm.iter().enumerate() {
                                y[pi] = g[i];
                            }
                            y
                        })
                        .collect(),
                )
            }
        }
    }
}

/// Per-`z` strategies for a joint source on `X x Z`.
pub fn build_si_strategy(n: usize, p: &JointPmf, d: &DistortionSpec, d_limit: f64) -> Result<SiStrategy> {
    build_si_strategy_with(n, p, d, d_limit, &SiOptions::default())
}

pub fn build_si_strategy_with(
    n: usize,
    p: &JointPmf,
    d: &DistortionSpec,
    d_limit: f64,
    opts: &SiOptions,
) -> Result<SiStrategy> {
    if p.x_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: p.x_size(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("sequence length must be positive"));
    }
    check_limit_value(d_limit)?;
    let z_size = p.z_size();
    if p.is_product(FACTOR_TOL) {
        let s_opts = StrategyOptions {
            covering: opts.covering,
            ..Default::default()
        };
        let s = build_strategy_with(n, &p.x_marginal(), d, d_limit, &s_opts)?;
        return Ok(SiStrategy {
            n,
            z_size,
            layout: SiLayout::Shared(s),
        });
    }

    let pz = p.z_marginal();
    let z_types = enumerate_types_with_limit(n, z_size, DEFAULT_TYPE_LIMIT)?;
    let blocks = z_types
        .iter()
        .filter(|t| t.counts().iter().enumerate().all(|(b, &m)| m == 0 || pz.get(b) > 0.0))
        .map(|t| {
            Ok(SiBlock {
                z_counts: t.counts().to_vec(),
                strategy: block_strategy(t.counts(), p, d, d_limit, opts)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SiStrategy {
        n,
        z_size,
        layout: SiLayout::PerZType(blocks),
    })
}

/// Conditional types of `x^n` given the sorted `z^n` with counts `z_counts`:
/// for each `z` symbol, a composition of its count over the `x` symbols with
/// `P(x, z) > 0`. Returned as flat `x * z_size + z` count vectors, sorted.
fn conditional_types(z_counts: &[usize], p: &JointPmf) -> Vec<Vec<usize>> {
    let (xs, zs) = (p.x_size(), p.z_size());
    let mut out: Vec<Vec<usize>> = vec![vec![0; xs * zs]];
    for (b, &m) in z_counts.iter().enumerate() {
        let allowed: Vec<usize> = (0..xs).filter(|&x| p.get(x, b) > 0.0).collect();
        let parts: Vec<Vec<usize>> = if m == 0 {
            vec![vec![0; allowed.len()]]
        } else {
            Compositions::new(m, allowed.len()).collect()
        };
        out = out
            .iter()
            .flat_map(|base| {
                parts.iter().map(|part| {
                    let mut v = base.clone();
                    for (&x, &c) in allowed.iter().zip(part) {
                        v[x * zs + b] = c;
                    }
                    v
                })
            })
            .collect();
    }
    out.sort();
    out
}

/// The `x` sequences with conditional type `v` given the sorted `z^n`.
fn conditional_class(v: &[usize], z_counts: &[usize], xs: usize, limit: u128) -> Result<Vec<Seq>> {
    let zs = z_counts.len();
    let mut out: Vec<Seq> = vec![Vec::new()];
    let mut size: u128 = 1;
    for (b, &m) in z_counts.iter().enumerate() {
        if m == 0 {
            continue;
        }
        let block = TypeComposition::new((0..xs).map(|x| v[x * zs + b]).collect())?;
        let members = type_class_members(&block, limit)?;
        size = size.saturating_mul(members.len() as u128);
        check_limit("conditional type class", size, limit)?;
        out = out
            .iter()
            .flat_map(|pre| {
                members.iter().map(move |m| {
                    let mut s = pre.clone();
                    s.extend_from_slice(m);
                    s
                })
            })
            .collect();
    }
    Ok(out)
}

fn block_strategy(
    z_counts: &[usize],
    p: &JointPmf,
    d: &DistortionSpec,
    d_limit: f64,
    opts: &SiOptions,
) -> Result<Strategy> {
    let (xs, zs) = (p.x_size(), p.z_size());
    let n: usize = z_counts.iter().sum();
    let z_sorted: Vec<usize> = z_counts
        .iter()
        .enumerate()
        .flat_map(|(b, &m)| std::iter::repeat_n(b, m))
        .collect();
    let cond = conditional_types(z_counts, p);
    let mut segments = cond
        .par_iter()
        .map(|v| {
            let q = JointPmf::new(xs, zs, v.iter().map(|&c| c as f64 / n as f64).collect())?;
            let rd = conditional_rate_distortion_with(&q, d, d_limit, &opts.covering.rd)?;
            let members = conditional_class(v, z_counts, xs, opts.covering.class_limit)?;
            // Output distribution at a position holding z = b.
            let per_z: Vec<Vec<f64>> = (0..zs)
                .map(|b| {
                    let mut r = vec![0.0; d.y_size()];
                    let m = z_counts[b] as f64;
                    if m > 0.0 {
                        for x in 0..xs {
                            let w = v[x * zs + b] as f64 / m;
                            for (ry, t) in r.iter_mut().zip(&rd.test_channel[x * zs + b]) {
                                *ry += w * t;
                            }
                        }
                    }
                    r
                })
                .collect();
            let positions: Vec<Vec<f64>> = z_sorted.iter().map(|&b| per_z[b].clone()).collect();
            let mut key = v.clone();
            key.extend_from_slice(z_counts);
            let (guesses, _) = cover_members(&members, &positions, d, d_limit, &opts.covering, stream_key(&key))?;
            let slack = (guesses.len() as f64).ln() / n as f64 - rd.rate;
            Ok(((rd.rate / 1e-9).round() as i64, v.clone(), rd.rate, slack, guesses))
        })
        .collect::<Result<Vec<_>>>()?;
    segments.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));

    let mut seen = HashSet::new();
    let segments = segments
        .into_iter()
        .map(|(_, v, rate, slack, guesses)| Segment {
            counts: Some(v),
            rate: Some(rate),
            slack: Some(slack),
            covering_size: guesses.len(),
            guesses: guesses.into_iter().filter(|g| seen.insert(g.clone())).collect(),
        })
        .collect();
    Ok(Strategy {
        n,
        y_size: d.y_size(),
        segments,
    })
}

/// `G(x | z)`: position of the first accepted guess in the list for `z`.
pub fn si_counting_function(x: &[u8], z: &[u8], s: &SiStrategy, d: &DistortionSpec, d_limit: f64) -> GuessIndex {
    if x.len() != s.n || z.len() != s.n {
        return GuessIndex::NotCovered;
    }
    match &s.layout {
        SiLayout::Shared(strategy) => counting_function(x, strategy, d, d_limit),
        SiLayout::PerZType(_) => {
            let Ok(counts) = TypeComposition::of_sequence(z, s.z_size) else {
                return GuessIndex::NotCovered;
            };
            let Some(block) = s.block_for(counts.counts()) else {
                return GuessIndex::NotCovered;
            };
            let x_sorted: Seq = sort_permutation(z).into_iter().map(|i| x[i]).collect();
            first_accepted(&x_sorted, block.strategy.guesses(), d, d_limit)
        }
    }
}

/// `E[G(X^n | Z^n)]` under the joint source, exactly or by Monte Carlo.
///
/// Exact evaluation enumerates every `x^n` against the representative of
/// every type of `z^n`, weighting by the type class size, so it is limited
/// by (number of `z` types) x `|X|^n` rather than `|X x Z|^n`.
pub fn evaluate_si_attack(
    p: &JointPmf,
    s: &SiStrategy,
    d: &DistortionSpec,
    d_limit: f64,
    mode: AttackMode,
) -> Result<AttackReport> {
    if p.x_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: p.x_size(),
        });
    }
    if p.z_size() != s.z_size {
        return Err(Error::AlphabetMismatch {
            expected: s.z_size,
            found: p.z_size(),
        });
    }
    check_limit_value(d_limit)?;
    let n = s.n;
    match mode {
        AttackMode::Exact => match &s.layout {
            SiLayout::Shared(strategy) => exact_expected_guesses(&p.x_marginal(), strategy, d, d_limit),
            SiLayout::PerZType(blocks) => exact_per_type(p, blocks, n, d, d_limit),
        },
        AttackMode::MonteCarlo { trials, seed } => {
            if trials == 0 {
                return Err(Error::invalid("at least one trial is required"));
            }
            let sampler = WeightedIndex::new(p.probs()).map_err(|e| Error::invalid(format!("source: {e}")))?;
            let zs = p.z_size();
            let (mean, std_error, uncovered) = run_blocks(trials, seed, |rng| {
                let (x, z): (Seq, Seq) = (0..n)
                    .map(|_| {
                        let cell = sampler.sample(rng);
                        ((cell / zs) as u8, (cell % zs) as u8)
                    })
                    .unzip();
                si_counting_function(&x, &z, s, d, d_limit)
            });
            Ok(AttackReport::new(n, mode, mean, std_error, uncovered))
        }
    }
}

fn exact_per_type(
    p: &JointPmf,
    blocks: &[SiBlock],
    n: usize,
    d: &DistortionSpec,
    d_limit: f64,
) -> Result<AttackReport> {
    let xs = p.x_size();
    let per_block = space_size(xs, n);
    check_limit(
        "side-information enumeration",
        per_block.saturating_mul(blocks.len() as u128),
        DEFAULT_SEQUENCE_LIMIT,
    )?;
    let mut weighted = 0.0;
    let mut total = 0.0;
    let mut uncovered = 0.0;
    for block in blocks {
        let t = TypeComposition::new(block.z_counts.clone())?;
        let class = crate::prob::seq::type_class_count(&t) as f64;
        let z_sorted: Vec<usize> = block
            .z_counts
            .iter()
            .enumerate()
            .flat_map(|(b, &m)| std::iter::repeat_n(b, m))
            .collect();
        // P^n(x, z) for every x against the sorted z.
        let mut probs = vec![1.0];
        for &b in &z_sorted {
            probs = probs
                .iter()
                .flat_map(|a| (0..xs).map(move |x| a * p.get(x, b)))
                .collect();
        }
        let guesses: Vec<&Seq> = block.strategy.guesses().collect();
        let table = crate::guessing::guess_table(xs, &guesses, n, d, d_limit);
        for (&g, &w) in table.iter().zip(&probs) {
            if w <= 0.0 {
                continue;
            }
            total += class * w;
            if g == 0 {
                uncovered += class * w;
            } else {
                weighted += class * w * g as f64;
            }
        }
    }
    Ok(AttackReport::new(
        n,
        AttackMode::Exact,
        weighted / total,
        0.0,
        uncovered / total,
    ))
}
