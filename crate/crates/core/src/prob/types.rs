//! Method-of-types combinatorics: compositions of `n`, type-class sizes and
//! probabilities, all in log space.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;

use super::pmf::Pmf;
use crate::error::{check_limit, Error, Result};

/// Default cap on the number of types `enumerate_types` will materialize.
pub const DEFAULT_TYPE_LIMIT: u128 = 10_000_000;

/// The type (empirical composition) of a length-`n` sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TypeComposition {
    n: usize,
    counts: Vec<usize>,
}

impl TypeComposition {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid("type over an empty alphabet"));
        }
        let n = counts.iter().sum();
        if n == 0 {
            return Err(Error::invalid("type of an empty sequence"));
        }
        Ok(TypeComposition { n, counts })
    }

    /// Type of a symbol sequence over an alphabet of size `k`.
    pub fn of_sequence(seq: &[u8], k: usize) -> Result<Self> {
        let mut counts = vec![0; k];
        for &s in seq {
            let s = s as usize;
            if s >= k {
                return Err(Error::invalid(format!("symbol {s} outside alphabet of size {k}")));
            }
            counts[s] += 1;
        }
        TypeComposition::new(counts)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// The empirical distribution `counts / n`.
    pub fn to_pmf(&self) -> Pmf {
        let n = self.n as f64;
        Pmf::new(self.counts.iter().map(|&c| c as f64 / n).collect()).expect("type frequencies form a distribution")
    }

    /// `ln |T_Q|`, the log multinomial coefficient.
    pub fn log_class_size(&self) -> f64 {
        log_type_class_size(self)
    }
}

/// Number of compositions of `n` into `k` non-negative parts, `C(n+k-1, k-1)`.
pub fn count_types(n: usize, k: usize) -> u128 {
    binomial((n + k - 1) as u128, (k - 1) as u128)
}

pub(crate) fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k.min(n));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Streams the compositions of `n` into `k` parts in ascending lexicographic
/// order, `(0, .., 0, n)` first and `(n, 0, .., 0)` last.
#[derive(Debug, Clone)]
pub struct Compositions {
    next: Option<Vec<usize>>,
}

impl Compositions {
    pub fn new(n: usize, k: usize) -> Self {
        let next = (k > 0).then(|| {
            let mut v = vec![0; k];
            v[k - 1] = n;
            v
        });
        Compositions { next }
    }
}

impl Iterator for Compositions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.take()?;
        let k = current.len();
        // Successor: bump the rightmost position (excluding the last) that
        // still has mass to its right, then dump that remainder at the end.
        let mut succ = current.clone();
        let mut tail = succ[k - 1];
        let mut i = k - 1;
        while i > 0 {
            i -= 1;
            if tail > 0 {
                succ[i] += 1;
                succ[k - 1] = tail - 1;
                self.next = Some(succ);
                break;
            }
            tail += succ[i];
            succ[i] = 0;
        }
        Some(current)
    }
}

/// All types of length-`n` sequences over a `k`-letter alphabet, in
/// lexicographic order of their count vectors.
pub fn enumerate_types(n: usize, k: usize) -> Result<Vec<TypeComposition>> {
    enumerate_types_with_limit(n, k, DEFAULT_TYPE_LIMIT)
}

pub fn enumerate_types_with_limit(n: usize, k: usize, limit: u128) -> Result<Vec<TypeComposition>> {
    if n == 0 || k == 0 {
        return Err(Error::invalid("enumerate_types needs n >= 1 and k >= 1"));
    }
    check_limit("type enumeration", count_types(n, k), limit)?;
    Ok(Compositions::new(n, k)
        .map(|counts| TypeComposition { n, counts })
        .collect())
}

/// `ln (n! / prod_x counts(x)!)`.
pub fn log_type_class_size(t: &TypeComposition) -> f64 {
    ln_factorial(t.n as u64) - t.counts.iter().map(|&c| ln_factorial(c as u64)).sum::<f64>()
}

/// Exact `ln P^n(T_Q)`; `-inf` when the type uses a symbol outside `support(p)`.
pub fn log_type_class_prob(t: &TypeComposition, p: &Pmf) -> Result<f64> {
    if t.alphabet_size() != p.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            expected: p.alphabet_size(),
            found: t.alphabet_size(),
        });
    }
    let mut acc = log_type_class_size(t);
    for (&c, &px) in t.counts.iter().zip(p.probs()) {
        if c > 0 {
            if px <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            acc += c as f64 * px.ln();
        }
    }
    Ok(acc.min(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::pmf::relative_entropy;
    use proptest::prelude::*;

    fn ty(c: &[usize]) -> TypeComposition {
        TypeComposition::new(c.to_vec()).unwrap()
    }

    #[test]
    fn enumeration_counts_and_order() {
        let t = enumerate_types(4, 2).unwrap();
        assert_eq!(t.len(), 5);
        assert_eq!(t[0].counts(), &[0, 4]);
        assert_eq!(t[4].counts(), &[4, 0]);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_types(2, 3).unwrap().len(), 6);
        let t12 = enumerate_types(12, 2).unwrap();
        assert_eq!(t12.len(), 13);
        assert!(t12.len() <= 13usize.pow(2));
        assert_eq!(count_types(30, 4), 5456);
        assert_eq!(enumerate_types(30, 4).unwrap().len(), 5456);
    }

    #[test]
    fn enumeration_limit() {
        let e = enumerate_types_with_limit(100, 4, 1000).unwrap_err();
        assert!(e.is_size_limit());
        assert!(enumerate_types(0, 2).is_err());
    }

    #[test]
    fn class_sizes() {
        assert!((log_type_class_size(&ty(&[2, 2])) - 6f64.ln()).abs() < 1e-12);
        assert!(log_type_class_size(&ty(&[4, 0])).abs() < 1e-12);
        assert!((log_type_class_size(&ty(&[1, 1, 1])) - 6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn class_probabilities() {
        let p = Pmf::new(vec![0.7, 0.3]).unwrap();
        let v = log_type_class_prob(&ty(&[2, 2]), &p).unwrap();
        assert!((v - (6.0 * 0.49 * 0.09f64).ln()).abs() < 1e-12);
        let certain = Pmf::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(log_type_class_prob(&ty(&[5, 0]), &certain).unwrap(), 0.0);
        assert_eq!(log_type_class_prob(&ty(&[4, 1]), &certain).unwrap(), f64::NEG_INFINITY);
        let half = Pmf::new(vec![0.5, 0.5]).unwrap();
        assert!(log_type_class_prob(&ty(&[3, 3]), &half).unwrap() <= 0.0);
    }

    #[test]
    fn large_n_stays_finite() {
        let p = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let v = log_type_class_prob(&ty(&[100, 150, 250]), &p).unwrap();
        assert!(v.is_finite() && v < 0.0);
    }

    fn pmf_strategy(k: usize) -> impl Strategy<Value = Pmf> {
        prop::collection::vec(0.0f64..1.0, k)
            .prop_filter("non-zero", |w| w.iter().sum::<f64>() > 1e-3)
            .prop_map(|w| Pmf::from_weights(&w).unwrap())
    }

    proptest! {
        #[test]
        fn type_class_bound_and_total_mass(p in (2usize..=3).prop_flat_map(pmf_strategy), n in 1usize..=12) {
            let k = p.alphabet_size();
            let types = enumerate_types(n, k).unwrap();
            prop_assert!(types.len() as f64 <= ((n + 1) as f64).powi(k as i32));
            let mut total = 0.0;
            for t in &types {
                let lp = log_type_class_prob(t, &p).unwrap();
                let kl = relative_entropy(&t.to_pmf(), &p).unwrap();
                prop_assert!(lp <= -(n as f64) * kl + 1e-9);
                total += lp.exp();
            }
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn divergence_non_negative(q in pmf_strategy(3), p in pmf_strategy(3)) {
            let d = relative_entropy(&q, &p).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(relative_entropy(&p, &p).unwrap().abs() < 1e-12);
        }

        #[test]
        fn renyi_half_dominates_shannon(p in (2usize..=5).prop_flat_map(pmf_strategy)) {
            let r = crate::prob::renyi_half_entropy(&p);
            prop_assert!(r + 1e-12 >= p.entropy());
            prop_assert!(r <= (p.alphabet_size() as f64).ln() + 1e-12);
        }
    }
}
