//! Fixed-length symbol sequences and their enumeration.

use crate::error::{check_limit, Result};

use super::pmf::Pmf;
use super::types::{binomial, TypeComposition};

/// A length-`n` sequence of symbol indices.
pub type Seq = Vec<u8>;

/// Default cap on exhaustively enumerated sequence sets.
pub const DEFAULT_SEQUENCE_LIMIT: u128 = 1_000_000;

/// `k^n`, saturating.
pub fn space_size(k: usize, n: usize) -> u128 {
    (0..n).fold(1u128, |acc, _| acc.saturating_mul(k as u128))
}

/// Index of `seq` in the lexicographic order of `{0..k}^n` (first symbol most significant).
pub fn seq_index(seq: &[u8], k: usize) -> usize {
    seq.iter().fold(0usize, |acc, &s| acc * k + s as usize)
}

/// Inverse of [`seq_index`].
pub fn seq_from_index(mut index: usize, k: usize, n: usize) -> Seq {
    let mut out = vec![0u8; n];
    for slot in out.iter_mut().rev() {
        *slot = (index % k) as u8;
        index /= k;
    }
    out
}

/// All of `{0..k}^n` in lexicographic order.
pub fn all_sequences(k: usize, n: usize, limit: u128) -> Result<Vec<Seq>> {
    let size = space_size(k, n);
    check_limit("sequence space", size, limit)?;
    Ok((0..size as usize).map(|i| seq_from_index(i, k, n)).collect())
}

/// Number of sequences in a type class, saturating.
pub fn type_class_count(t: &TypeComposition) -> u128 {
    let mut remaining = t.n() as u128;
    let mut acc: u128 = 1;
    for &c in t.counts() {
        acc = acc.saturating_mul(binomial(remaining, c as u128));
        remaining -= c as u128;
    }
    acc
}

/// Members of the type class `T_Q`, in lexicographic order.
pub fn type_class_members(t: &TypeComposition, limit: u128) -> Result<Vec<Seq>> {
    check_limit("type class", type_class_count(t), limit)?;
    let mut out = Vec::new();
    let mut left = t.counts().to_vec();
    let mut buf = Vec::with_capacity(t.n());
    fill_members(&mut left, &mut buf, t.n(), &mut out);
    Ok(out)
}

fn fill_members(left: &mut [usize], buf: &mut Seq, n: usize, out: &mut Vec<Seq>) {
    if buf.len() == n {
        out.push(buf.clone());
        return;
    }
    for s in 0..left.len() {
        if left[s] > 0 {
            left[s] -= 1;
            buf.push(s as u8);
            fill_members(left, buf, n, out);
            buf.pop();
            left[s] += 1;
        }
    }
}

/// `ln P^n(x)`; `-inf` if some symbol has zero probability.
pub fn log_sequence_prob(seq: &[u8], p: &Pmf) -> f64 {
    seq.iter()
        .map(|&s| {
            let v = p.get(s as usize);
            if v > 0.0 {
                v.ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .sum()
}

/// `P^n(x)` computed as a product.
pub fn sequence_prob(seq: &[u8], p: &Pmf) -> f64 {
    seq.iter().map(|&s| p.get(s as usize)).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for i in 0..81 {
            let s = seq_from_index(i, 3, 4);
            assert_eq!(seq_index(&s, 3), i);
        }
        assert_eq!(seq_from_index(5, 2, 4), vec![0, 1, 0, 1]);
    }

    #[test]
    fn members_match_count() {
        let t = TypeComposition::new(vec![2, 2]).unwrap();
        let m = type_class_members(&t, 100).unwrap();
        assert_eq!(m.len(), 6);
        assert_eq!(type_class_count(&t), 6);
        assert_eq!(m[0], vec![0, 0, 1, 1]);
        assert!(m.windows(2).all(|w| w[0] < w[1]));
        let t3 = TypeComposition::new(vec![2, 1, 3]).unwrap();
        assert_eq!(type_class_members(&t3, 1000).unwrap().len(), 60);
        assert!(type_class_members(&t3, 10).is_err());
    }

    #[test]
    fn space_limits() {
        assert_eq!(all_sequences(2, 3, 100).unwrap().len(), 8);
        assert!(all_sequences(2, 30, DEFAULT_SEQUENCE_LIMIT).is_err());
    }
}
