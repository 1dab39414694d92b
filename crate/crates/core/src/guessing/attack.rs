//! The counting function and exact / Monte-Carlo evaluation of `E[G]`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::strategy::Strategy;
use crate::error::{check_limit, Error, Result};
use crate::prob::seq::{seq_from_index, space_size, DEFAULT_SEQUENCE_LIMIT};
use crate::prob::{DistortionSpec, Pmf, Seq};

/// Trials drawn from one generator stream.
pub(crate) const BLOCK: u64 = 4096;

/// Result of the counting function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuessIndex {
    /// 1-based index of the first accepted guess.
    Accepted(usize),
    /// No guess in the list is accepted.
    NotCovered,
}

impl GuessIndex {
    pub fn index(self) -> Option<usize> {
        match self {
            GuessIndex::Accepted(i) => Some(i),
            GuessIndex::NotCovered => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    Exact,
    MonteCarlo { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub n: usize,
    pub mode: AttackMode,
    /// `E[G]`, or the sample mean; infinite if some enrollment is not covered.
    pub mean_guesses: f64,
    /// Standard error of the sample mean (0 for exact evaluation).
    pub std_error: f64,
    /// `(1/n) ln mean_guesses`.
    pub exponent_estimate: f64,
    /// Theoretical exponent to compare against, when known.
    pub theory_value: Option<f64>,
    /// Probability (or sample fraction) of enrollments no guess accepts.
    pub uncovered_mass: f64,
}

impl AttackReport {
    pub(crate) fn new(n: usize, mode: AttackMode, mean: f64, std_error: f64, uncovered: f64) -> Self {
        let mean_guesses = if uncovered > 0.0 { f64::INFINITY } else { mean };
        AttackReport {
            n,
            mode,
            mean_guesses,
            std_error,
            exponent_estimate: mean_guesses.ln() / n as f64,
            theory_value: None,
            uncovered_mass: uncovered,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self.mode {
            AttackMode::Exact => None,
            AttackMode::MonteCarlo { seed, .. } => Some(seed),
        }
    }

    pub fn with_theory(mut self, value: f64) -> Self {
        self.theory_value = Some(value);
        self
    }
}

/// `G(x)`: position of the first guess accepted for enrollment `x`.
pub fn counting_function(x: &[u8], s: &Strategy, d: &DistortionSpec, d_limit: f64) -> GuessIndex {
    first_accepted(x, s.guesses(), d, d_limit)
}

pub(crate) fn first_accepted<'a>(
    x: &[u8],
    guesses: impl Iterator<Item = &'a Seq>,
    d: &DistortionSpec,
    d_limit: f64,
) -> GuessIndex {
    for (i, y) in guesses.enumerate() {
        if d.accepts(x, y, d_limit) {
            return GuessIndex::Accepted(i + 1);
        }
    }
    GuessIndex::NotCovered
}

/// `G` for every enrollment in `X^n`, indexed lexicographically; 0 marks
/// enrollments no guess accepts.
pub(crate) fn guess_table(x_size: usize, guesses: &[&Seq], n: usize, d: &DistortionSpec, d_limit: f64) -> Vec<u32> {
    let size = space_size(x_size, n) as usize;
    (0..size)
        .into_par_iter()
        .map(|i| {
            let x = seq_from_index(i, x_size, n);
            first_accepted(&x, guesses.iter().copied(), d, d_limit)
                .index()
                .map_or(0, |g| g as u32)
        })
        .collect()
}

fn check_strategy(p_size: usize, s: &Strategy, d: &DistortionSpec, d_limit: f64) -> Result<()> {
    if p_size != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: p_size,
        });
    }
    if s.y_size != d.y_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.y_size(),
            found: s.y_size,
        });
    }
    super::covering::check_limit_value(d_limit)
}

/// `P^n` of every sequence in `X^n`, in lexicographic order.
pub(crate) fn product_probs(p: &[f64], n: usize) -> Vec<f64> {
    let mut probs = vec![1.0];
    for _ in 0..n {
        probs = probs.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
    }
    probs
}

/// Exact `E_P[G(X^n)]` by enumerating `X^n` (at most 1e6 sequences).
pub fn exact_expected_guesses(p: &Pmf, s: &Strategy, d: &DistortionSpec, d_limit: f64) -> Result<AttackReport> {
    check_strategy(p.alphabet_size(), s, d, d_limit)?;
    let n = s.n;
    check_limit(
        "enrollment space",
        space_size(p.alphabet_size(), n),
        DEFAULT_SEQUENCE_LIMIT,
    )?;
    let guesses: Vec<&Seq> = s.guesses().collect();
    let table = guess_table(p.alphabet_size(), &guesses, n, d, d_limit);
    let probs = product_probs(p.probs(), n);
    let (mean, uncovered) = weighted_mean(&table, &probs);
    Ok(AttackReport::new(n, AttackMode::Exact, mean, 0.0, uncovered))
}

/// Mean of the table under `probs` and the uncovered mass, both relative to
/// the total enumerated mass so rounding in the products cancels.
pub(crate) fn weighted_mean(table: &[u32], probs: &[f64]) -> (f64, f64) {
    let mut weighted = 0.0;
    let mut total = 0.0;
    let mut uncovered = 0.0;
    for (&g, &w) in table.iter().zip(probs) {
        if w <= 0.0 {
            continue;
        }
        total += w;
        if g == 0 {
            uncovered += w;
        } else {
            weighted += w * g as f64;
        }
    }
    (weighted / total, uncovered / total)
}

/// Running sums over a block of trials.
#[derive(Default, Clone, Copy)]
pub(crate) struct Tally {
    pub sum: f64,
    pub sum_sq: f64,
    pub uncovered: u64,
}

impl Tally {
    pub fn add(&mut self, g: GuessIndex) {
        match g {
            GuessIndex::Accepted(i) => {
                let v = i as f64;
                self.sum += v;
                self.sum_sq += v * v;
            }
            GuessIndex::NotCovered => self.uncovered += 1,
        }
    }
}

/// Runs `trials` trials in blocks of `BLOCK`, block `b` drawing from stream
/// `b` of the seeded generator, and combines block sums in block order.
pub(crate) fn run_blocks<F>(trials: u64, seed: u64, trial: F) -> (f64, f64, f64)
where
    F: Fn(&mut ChaCha8Rng) -> GuessIndex + Sync,
{
    let blocks = trials.div_ceil(BLOCK);
    let tallies: Vec<Tally> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BLOCK.min(trials - b * BLOCK);
            let mut t = Tally::default();
            for _ in 0..count {
                t.add(trial(&mut rng));
            }
            t
        })
        .collect();
    let total = tallies.iter().fold(Tally::default(), |a, t| Tally {
        sum: a.sum + t.sum,
        sum_sq: a.sum_sq + t.sum_sq,
        uncovered: a.uncovered + t.uncovered,
    });
    let covered = (trials - total.uncovered) as f64;
    let mean = if covered > 0.0 { total.sum / covered } else { 0.0 };
    let var = if covered > 1.0 {
        ((total.sum_sq - total.sum * mean) / (covered - 1.0)).max(0.0)
    } else {
        0.0
    };
    let std_error = if covered > 0.0 { (var / covered).sqrt() } else { 0.0 };
    (mean, std_error, total.uncovered as f64 / trials as f64)
}

/// Monte-Carlo estimate of `E_P[G(X^n)]` from `trials` seeded enrollments.
pub fn simulate_attack(
    p: &Pmf,
    s: &Strategy,
    d: &DistortionSpec,
    d_limit: f64,
    trials: u64,
    seed: u64,
) -> Result<AttackReport> {
    check_strategy(p.alphabet_size(), s, d, d_limit)?;
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    let n = s.n;
    let k = p.alphabet_size();
    let sampler = WeightedIndex::new(p.probs()).map_err(|e| Error::invalid(format!("source: {e}")))?;
    let guesses: Vec<&Seq> = s.guesses().collect();
    let table = (space_size(k, n) <= DEFAULT_SEQUENCE_LIMIT).then(|| guess_table(k, &guesses, n, d, d_limit));

    let (mean, std_error, uncovered) = run_blocks(trials, seed, |rng| {
        let x: Seq = (0..n).map(|_| sampler.sample(rng) as u8).collect();
        match &table {
            Some(t) => match t[crate::prob::seq::seq_index(&x, k)] {
                0 => GuessIndex::NotCovered,
                g => GuessIndex::Accepted(g as usize),
            },
            None => first_accepted(&x, guesses.iter().copied(), d, d_limit),
        }
    });
    Ok(AttackReport::new(
        n,
        AttackMode::MonteCarlo { trials, seed },
        mean,
        std_error,
        uncovered,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::guessing::build_strategy;
    use crate::prob::seq::all_sequences;

    fn ham() -> DistortionSpec {
        DistortionSpec::hamming(2).unwrap()
    }

    #[test]
    fn single_letter_probability_order() {
        let p = Pmf::new(vec![0.7, 0.3]).unwrap();
        let s = Strategy::from_guesses(1, 2, vec![vec![0], vec![1]]).unwrap();
        let r = exact_expected_guesses(&p, &s, &ham(), 0.0).unwrap();
        assert!((r.mean_guesses - 1.3).abs() < 1e-12);
        assert_eq!(counting_function(&[0], &s, &ham(), 0.0), GuessIndex::Accepted(1));
        assert_eq!(counting_function(&[1], &s, &ham(), 0.0), GuessIndex::Accepted(2));
    }

    #[test]
    fn uniform_lossless_length_ten() {
        let p = Pmf::uniform(2).unwrap();
        let s = Strategy::from_guesses(10, 2, all_sequences(2, 10, 2000).unwrap()).unwrap();
        let r = exact_expected_guesses(&p, &s, &ham(), 0.0).unwrap();
        assert!((r.mean_guesses - 512.5).abs() < 1e-9);
        assert!((r.exponent_estimate - 512.5f64.ln() / 10.0).abs() < 1e-12);
        assert!(r.exponent_estimate <= 2f64.ln());
    }

    #[test]
    fn full_tolerance_needs_one_guess() {
        let p = Pmf::new(vec![0.2, 0.8]).unwrap();
        let s = build_strategy(5, &p, &ham(), 1.0).unwrap();
        let r = exact_expected_guesses(&p, &s, &ham(), 1.0).unwrap();
        assert_eq!(r.mean_guesses, 1.0);
        assert_eq!(
            counting_function(&[1, 0, 1, 1, 0], &s, &ham(), 1.0),
            GuessIndex::Accepted(1)
        );
    }

    #[test]
    fn uncovered_enrollments_are_reported() {
        let p = Pmf::uniform(2).unwrap();
        let s = Strategy::from_guesses(2, 2, vec![vec![0, 0]]).unwrap();
        let r = exact_expected_guesses(&p, &s, &ham(), 0.0).unwrap();
        assert!((r.uncovered_mass - 0.75).abs() < 1e-12);
        assert!(r.mean_guesses.is_infinite());
        assert_eq!(counting_function(&[1, 1], &s, &ham(), 0.0), GuessIndex::NotCovered);
    }

    #[test]
    fn monte_carlo_agrees_and_is_reproducible() {
        let p = Pmf::new(vec![0.6, 0.4]).unwrap();
        let d = ham();
        let s = build_strategy(6, &p, &d, 1.0 / 6.0).unwrap();
        let exact = exact_expected_guesses(&p, &s, &d, 1.0 / 6.0).unwrap();
        let mc = simulate_attack(&p, &s, &d, 1.0 / 6.0, 20_000, 7).unwrap();
        assert!((mc.mean_guesses - exact.mean_guesses).abs() <= 5.0 * mc.std_error);
        assert_eq!(mc, simulate_attack(&p, &s, &d, 1.0 / 6.0, 20_000, 7).unwrap());
        let one = simulate_attack(&p, &s, &d, 1.0 / 6.0, 1, 3).unwrap();
        assert_eq!(one.mean_guesses.fract(), 0.0);
        assert_eq!(one.std_error, 0.0);
        assert!(simulate_attack(&p, &s, &d, 0.1, 0, 3).is_err());
    }
}
