//! Ordered guessing strategies built from type coverings.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::covering::{build_covering_with, CoveringOptions, CoveringSet};
use crate::error::{Error, Result};
use crate::prob::{
    enumerate_types_with_limit, log_type_class_prob, relative_entropy, DistortionSpec, Pmf, Seq, DEFAULT_TYPE_LIMIT,
};

/// How type segments are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentOrder {
    /// Non-decreasing `R(D, Q)`, ties by type counts. Ignores the source.
    #[default]
    Rate,
    /// Non-increasing `P^n(T_Q) / |B_Q|` (Smith's rule), ties as for `Rate`.
    MassPerGuess,
    /// Non-decreasing `R(D, Q) - D(Q || P)`; types outside the support last.
    RateMinusDivergence,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct StrategyOptions {
    pub order: SegmentOrder,
    pub covering: CoveringOptions,
}

/// A run of guesses, usually the covering of one type class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Type counts, or `None` for segments not tied to a type.
    pub counts: Option<Vec<usize>>,
    /// `R(D, Q)` of the type.
    pub rate: Option<f64>,
    /// Measured covering slack of the type.
    pub slack: Option<f64>,
    /// Covering size before guesses seen in earlier segments were dropped.
    pub covering_size: usize,
    pub guesses: Vec<Seq>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub n: usize,
    pub y_size: usize,
    pub segments: Vec<Segment>,
}

/// Rates are compared on a 1e-9 lattice so solver noise cannot split ties.
fn quantize(v: f64) -> i64 {
    (v / 1e-9).round() as i64
}

impl Strategy {
    /// A strategy from an explicit guess list, duplicates dropped.
    pub fn from_guesses(n: usize, y_size: usize, guesses: Vec<Seq>) -> Result<Self> {
        Self::validate_guesses(n, y_size, &guesses)?;
        let covering_size = guesses.len();
        let mut seen = HashSet::new();
        let guesses = guesses.into_iter().filter(|g| seen.insert(g.clone())).collect();
        Ok(Strategy {
            n,
            y_size,
            segments: vec![Segment {
                counts: None,
                rate: None,
                slack: None,
                covering_size,
                guesses,
            }],
        })
    }

    /// A one-segment strategy holding a single covering.
    pub fn from_covering(c: &CoveringSet, y_size: usize) -> Self {
        Strategy {
            n: c.counts.n(),
            y_size,
            segments: vec![Segment {
                counts: Some(c.counts.counts().to_vec()),
                rate: Some(c.rate),
                slack: Some(c.slack),
                covering_size: c.len(),
                guesses: c.guesses.clone(),
            }],
        }
    }

    pub(crate) fn validate_guesses(n: usize, y_size: usize, guesses: &[Seq]) -> Result<()> {
        if n == 0 {
            return Err(Error::invalid("sequence length must be positive"));
        }
        for g in guesses {
            if g.len() != n {
                return Err(Error::invalid(format!(
                    "guess of length {} in a length-{n} strategy",
                    g.len()
                )));
            }
            if let Some(&b) = g.iter().find(|&&b| b as usize >= y_size) {
                return Err(Error::invalid(format!(
                    "guess symbol {b} outside alphabet of size {y_size}"
                )));
            }
        }
        Ok(())
    }

    /// Number of guesses in the flat list.
    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.guesses.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The flat guess list in order.
    pub fn guesses(&self) -> impl Iterator<Item = &Seq> {
        self.segments.iter().flat_map(|s| s.guesses.iter())
    }

    /// Largest covering slack over typed segments (0 if there are none).
    pub fn max_slack(&self) -> f64 {
        self.segments
            .iter()
            .filter_map(|s| s.slack)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    }
}

/// The type-covering strategy: one greedy covering per type of length `n`,
/// concatenated in rate order and de-duplicated (first occurrence kept).
pub fn build_strategy(n: usize, p: &Pmf, d: &DistortionSpec, d_limit: f64) -> Result<Strategy> {
    build_strategy_with(n, p, d, d_limit, &StrategyOptions::default())
}

pub fn build_strategy_with(
    n: usize,
    p: &Pmf,
    d: &DistortionSpec,
    d_limit: f64,
    opts: &StrategyOptions,
) -> Result<Strategy> {
    if p.alphabet_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: p.alphabet_size(),
        });
    }
    if n == 0 {
        return Err(Error::invalid("sequence length must be positive"));
    }
    let types = enumerate_types_with_limit(n, d.x_size(), DEFAULT_TYPE_LIMIT)?;
    let coverings = types
        .par_iter()
        .map(|t| build_covering_with(t, d, d_limit, &opts.covering))
        .collect::<Result<Vec<_>>>()?;

    let mut keyed: Vec<_> = coverings
        .into_iter()
        .map(|c| {
            let mass = match opts.order {
                SegmentOrder::Rate => 0,
                SegmentOrder::MassPerGuess => {
                    let lp = log_type_class_prob(&c.counts, p).expect("alphabets match");
                    let v = lp - (c.len() as f64).ln();
                    if v.is_finite() {
                        -quantize(v)
                    } else {
                        i64::MAX
                    }
                }
                SegmentOrder::RateMinusDivergence => {
                    let div = relative_entropy(&c.counts.to_pmf(), p).expect("alphabets match");
                    if div.is_finite() {
                        quantize(c.rate - div)
                    } else {
                        i64::MAX
                    }
                }
            };
            ((mass, quantize(c.rate), c.counts.counts().to_vec()), c)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0));

    let mut seen = HashSet::new();
    let segments = keyed
        .into_iter()
        .map(|(_, c)| {
            let covering_size = c.len();
            Segment {
                counts: Some(c.counts.counts().to_vec()),
                rate: Some(c.rate),
                slack: Some(c.slack),
                covering_size,
                guesses: c.guesses.into_iter().filter(|g| seen.insert(g.clone())).collect(),
            }
        })
        .collect();
    Ok(Strategy {
        n,
        y_size: d.y_size(),
        segments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::seq::all_sequences;

    fn ham() -> DistortionSpec {
        DistortionSpec::hamming(2).unwrap()
    }

    #[test]
    fn lossless_strategy_is_a_permutation_grouped_by_type() {
        let p = Pmf::uniform(2).unwrap();
        let s = build_strategy(4, &p, &ham(), 0.0).unwrap();
        let mut flat: Vec<Seq> = s.guesses().cloned().collect();
        assert_eq!(flat.len(), 16);
        flat.sort();
        assert_eq!(flat, all_sequences(2, 4, 100).unwrap());
        assert_eq!(s.segments.len(), 5);
        for seg in &s.segments {
            let counts = seg.counts.as_ref().unwrap();
            for g in &seg.guesses {
                assert_eq!(g.iter().filter(|&&b| b == 1).count(), counts[1]);
            }
        }
        // Rates are non-decreasing.
        let rates: Vec<f64> = s.segments.iter().map(|x| x.rate.unwrap()).collect();
        assert!(rates.windows(2).all(|w| w[0] <= w[1] + 1e-9));
    }

    #[test]
    fn first_segment_is_degenerate_type() {
        let p = Pmf::uniform(2).unwrap();
        let s = build_strategy(4, &p, &ham(), 0.25).unwrap();
        assert_eq!(s.segments[0].counts.as_deref(), Some(&[0, 4][..]));
        assert_eq!(s.segments[0].rate, Some(0.0));
        // (1,3) is also at its zero-rate threshold D_max = 0.25.
        assert_eq!(s.segments[1].counts.as_deref(), Some(&[1, 3][..]));
        assert_eq!(s.segments[1].rate, Some(0.0));
        let flat: Vec<&Seq> = s.guesses().collect();
        let unique: HashSet<&Seq> = flat.iter().copied().collect();
        assert_eq!(unique.len(), flat.len());
    }

    #[test]
    fn mass_order_puts_likely_types_first() {
        let p = Pmf::new(vec![0.9, 0.1]).unwrap();
        let opts = StrategyOptions {
            order: SegmentOrder::MassPerGuess,
            ..Default::default()
        };
        let s = build_strategy_with(4, &p, &ham(), 0.0, &opts).unwrap();
        assert_eq!(s.segments[0].counts.as_deref(), Some(&[4, 0][..]));
        assert_eq!(s.segments[1].counts.as_deref(), Some(&[3, 1][..]));
    }

    #[test]
    fn divergence_order_is_complete() {
        let p = Pmf::new(vec![0.9, 0.1]).unwrap();
        let opts = StrategyOptions {
            order: SegmentOrder::RateMinusDivergence,
            ..Default::default()
        };
        let s = build_strategy_with(4, &p, &ham(), 0.0, &opts).unwrap();
        assert_eq!(s.len(), 16);
        let keys: Vec<f64> = s
            .segments
            .iter()
            .map(|seg| {
                let t = crate::prob::TypeComposition::new(seg.counts.clone().unwrap()).unwrap();
                seg.rate.unwrap() - relative_entropy(&t.to_pmf(), &p).unwrap()
            })
            .collect();
        assert!(keys.windows(2).all(|w| w[0] <= w[1] + 1e-9));
    }

    #[test]
    fn from_guesses_drops_duplicates() {
        let s = Strategy::from_guesses(2, 2, vec![vec![0, 1], vec![1, 1], vec![0, 1]]).unwrap();
        assert_eq!(s.len(), 2);
        assert!(Strategy::from_guesses(2, 2, vec![vec![0, 2]]).is_err());
        assert!(Strategy::from_guesses(2, 2, vec![vec![0]]).is_err());
    }
}
