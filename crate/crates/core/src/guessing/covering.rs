//! Type coverings: sets of reproduction sequences that accept every member
//! of a type class within the distortion limit.

use std::collections::HashSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::greedy::{coverage_lists, lazy_greedy};
use crate::error::{Error, Result};
use crate::prob::seq::{all_sequences, space_size, type_class_count, type_class_members, DEFAULT_SEQUENCE_LIMIT};
use crate::prob::{DistortionSpec, Pmf, Seq, TypeComposition};
use crate::rd::{rate_distortion_with, RdOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CoveringOptions {
    /// Largest type class enumerated.
    pub class_limit: u128,
    /// Largest `|Y|^n` used as a full candidate pool.
    pub pool_limit: u128,
    /// Candidates drawn when the full pool is too large.
    pub samples: usize,
    pub seed: u64,
    pub rd: RdOptions,
}

impl Default for CoveringOptions {
    fn default() -> Self {
        CoveringOptions {
            class_limit: DEFAULT_SEQUENCE_LIMIT,
            pool_limit: DEFAULT_SEQUENCE_LIMIT,
            samples: 100_000,
            seed: 0,
            rd: RdOptions::default(),
        }
    }
}

/// Where the covering's candidates came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidatePool {
    /// Every sequence in `Y^n`.
    Full,
    /// Distinct draws from the optimal output marginal plus zero-distortion
    /// images added for members the draws missed.
    Sampled { drawn: usize, topped_up: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringSet {
    pub counts: TypeComposition,
    pub d_limit: f64,
    /// Guesses in selection order.
    pub guesses: Vec<Seq>,
    pub class_size: u128,
    /// `R(D, Q)` for the type's distribution.
    pub rate: f64,
    /// Measured slack `(1/n) ln |B| - R(D, Q)`.
    pub slack: f64,
    /// Set by an independent exhaustive check over the class.
    pub verified: bool,
    pub pool: CandidatePool,
}

impl CoveringSet {
    pub fn len(&self) -> usize {
        self.guesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.guesses.is_empty()
    }

    /// `(1/n) ln |B|`.
    pub fn log_size_rate(&self) -> f64 {
        (self.guesses.len() as f64).ln() / self.counts.n() as f64
    }
}

/// Greedy covering of the type class of `t` within mean distortion `d_limit`.
pub fn build_covering(t: &TypeComposition, d: &DistortionSpec, d_limit: f64) -> Result<CoveringSet> {
    build_covering_with(t, d, d_limit, &CoveringOptions::default())
}

pub fn build_covering_with(
    t: &TypeComposition,
    d: &DistortionSpec,
    d_limit: f64,
    opts: &CoveringOptions,
) -> Result<CoveringSet> {
    if t.alphabet_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: t.alphabet_size(),
        });
    }
    check_limit_value(d_limit)?;
    let q = t.to_pmf();
    let rd = rate_distortion_with(&q, d, d_limit, &opts.rd)?;
    let members = type_class_members(t, opts.class_limit)?;
    let marginal = output_marginal(&q, &rd.test_channel, d.y_size());
    let positions = vec![marginal; t.n()];
    let (guesses, pool) = cover_members(&members, &positions, d, d_limit, opts, stream_key(t.counts()))?;
    let verified = verify_covering(&members, &guesses, d, d_limit);
    let log_size = (guesses.len() as f64).ln() / t.n() as f64;
    Ok(CoveringSet {
        counts: t.clone(),
        d_limit,
        guesses,
        class_size: type_class_count(t),
        rate: rd.rate,
        slack: log_size - rd.rate,
        verified,
        pool,
    })
}

pub(crate) fn check_limit_value(d_limit: f64) -> Result<()> {
    if d_limit.is_finite() && d_limit >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "distortion limit {d_limit} must be finite and >= 0"
        )))
    }
}

/// `r(y) = sum_x q(x) W(y|x)`.
pub(crate) fn output_marginal(q: &Pmf, channel: &[Vec<f64>], y_size: usize) -> Vec<f64> {
    let mut r = vec![0.0; y_size];
    for (qx, row) in q.probs().iter().zip(channel) {
        for (ry, w) in r.iter_mut().zip(row) {
            *ry += qx * w;
        }
    }
    r
}

/// FNV-1a over the counts, so each class draws from its own stream.
pub(crate) fn stream_key(counts: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &c in counts {
        for b in (c as u64).to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}

/// Greedy cover of `members`. The pool is all of `Y^n` when small enough,
/// otherwise draws from the per-position output distributions `positions`
/// topped up with zero-distortion images of whatever the draws leave
/// uncovered.
pub(crate) fn cover_members(
    members: &[Seq],
    positions: &[Vec<f64>],
    d: &DistortionSpec,
    d_limit: f64,
    opts: &CoveringOptions,
    stream: u64,
) -> Result<(Vec<Seq>, CandidatePool)> {
    let n = positions.len();
    let unit = vec![1.0; members.len()];
    if space_size(d.y_size(), n) <= opts.pool_limit {
        let candidates = all_sequences(d.y_size(), n, opts.pool_limit)?;
        let lists = coverage_lists(members, &candidates, d, d_limit);
        let (chosen, _) = lazy_greedy(&lists, &unit);
        return Ok((
            chosen.into_iter().map(|i| candidates[i].clone()).collect(),
            CandidatePool::Full,
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(stream);
    let samplers = positions
        .iter()
        .map(|r| WeightedIndex::new(r).map_err(|e| Error::invalid(format!("output marginal: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for _ in 0..opts.samples {
        let y: Seq = samplers.iter().map(|s| s.sample(&mut rng) as u8).collect();
        if seen.insert(y.clone()) {
            candidates.push(y);
        }
    }
    let drawn = candidates.len();
    let lists = coverage_lists(members, &candidates, d, d_limit);
    let (chosen, covered) = lazy_greedy(&lists, &unit);
    let mut guesses: Vec<Seq> = chosen.into_iter().map(|i| candidates[i].clone()).collect();
    let mut topped_up = 0;
    let mut picked: HashSet<Seq> = guesses.iter().cloned().collect();
    for (x, _) in members.iter().zip(&covered).filter(|(_, c)| !**c) {
        if guesses.iter().rev().take(topped_up).any(|y| d.accepts(x, y, d_limit)) {
            continue;
        }
        let y: Seq = x.iter().map(|&a| d.zero_image(a as usize) as u8).collect();
        if picked.insert(y.clone()) {
            guesses.push(y);
            topped_up += 1;
        }
    }
    Ok((guesses, CandidatePool::Sampled { drawn, topped_up }))
}

/// Exhaustive check that every member is accepted by some guess.
pub fn verify_covering(members: &[Seq], guesses: &[Seq], d: &DistortionSpec, d_limit: f64) -> bool {
    members.iter().all(|x| guesses.iter().any(|y| d.accepts(x, y, d_limit)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ham() -> DistortionSpec {
        DistortionSpec::hamming(2).unwrap()
    }

    #[test]
    fn balanced_type_at_quarter_distortion() {
        let t = TypeComposition::new(vec![2, 2]).unwrap();
        let c = build_covering(&t, &ham(), 0.25).unwrap();
        assert!(c.verified);
        assert!(c.len() <= 3, "{:?}", c.guesses);
        assert_eq!(c.class_size, 6);
        assert_eq!(c.pool, CandidatePool::Full);
    }

    #[test]
    fn no_two_centres_cover_less_than_the_minimum() {
        // The minimum covering of the balanced weight-2 class of length 4 at
        // radius 1 has two centres, e.g. 1000 and 0111.
        let t = TypeComposition::new(vec![2, 2]).unwrap();
        let members = type_class_members(&t, 100).unwrap();
        let d = ham();
        assert!(verify_covering(
            &members,
            &[vec![1, 0, 0, 0], vec![0, 1, 1, 1]],
            &d,
            0.25
        ));
        let all = all_sequences(2, 4, 100).unwrap();
        assert!(!all
            .iter()
            .any(|y| verify_covering(&members, std::slice::from_ref(y), &d, 0.25)));
    }

    #[test]
    fn trivial_limits() {
        let t = TypeComposition::new(vec![1, 3]).unwrap();
        let c = build_covering(&t, &ham(), 1.0).unwrap();
        assert_eq!(c.len(), 1);
        let c = build_covering(&t, &ham(), 0.0).unwrap();
        assert_eq!(c.len(), 4);
        let members = type_class_members(&t, 100).unwrap();
        assert_eq!(c.guesses, members);
        assert!(c.slack <= 1e-12);
    }

    #[test]
    fn sampled_pool_still_covers() {
        let t = TypeComposition::new(vec![3, 3]).unwrap();
        let opts = CoveringOptions {
            pool_limit: 10,
            samples: 40,
            ..Default::default()
        };
        let c = build_covering_with(&t, &ham(), 1.0 / 6.0, &opts).unwrap();
        assert!(c.verified);
        assert!(matches!(c.pool, CandidatePool::Sampled { .. }));
        let again = build_covering_with(&t, &ham(), 1.0 / 6.0, &opts).unwrap();
        assert_eq!(c, again);
    }
}
