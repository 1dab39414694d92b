use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used whenever a mean distortion is compared against a limit `D`.
pub const DISTORTION_SLACK: f64 = 1e-9;

/// Single-letter distortion measure `d: X x Y -> [0, d_max]`.
///
/// Every source symbol has at least one zero-distortion reproduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistortionSpec {
    x_size: usize,
    y_size: usize,
    d: Vec<f64>,
    d_max: f64,
}

impl DistortionSpec {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self> {
        let x_size = rows.len();
        let y_size = rows.first().map_or(0, Vec::len);
        if x_size == 0 || y_size == 0 {
            return Err(Error::invalid("distortion matrix must be non-empty"));
        }
        if x_size > 256 || y_size > 256 {
            return Err(Error::Unsupported("alphabets above 256 symbols".into()));
        }
        if rows.iter().any(|r| r.len() != y_size) {
            return Err(Error::invalid("distortion matrix rows have different lengths"));
        }
        let d = rows.concat();
        if let Some(v) = d.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("distortion entry {v} is not in [0, inf)")));
        }
        for (x, row) in rows.iter().enumerate() {
            if !row.contains(&0.0) {
                return Err(Error::invalid(format!(
                    "source symbol {x} has no zero-distortion reproduction"
                )));
            }
        }
        let d_max = d.iter().copied().fold(0.0, f64::max);
        Ok(DistortionSpec {
            x_size,
            y_size,
            d,
            d_max,
        })
    }

    /// Hamming distortion on a `k`-letter alphabet.
    pub fn hamming(k: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|x| (0..k).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
            .collect();
        DistortionSpec::new(&rows)
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn y_size(&self) -> usize {
        self.y_size
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.d[x * self.y_size + y]
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.d[x * self.y_size..(x + 1) * self.y_size]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.y_size).map(<[f64]>::to_vec).collect()
    }

    /// Reproductions `y` with `d(x, y) = 0`.
    pub fn zero_set(&self, x: usize) -> Vec<usize> {
        (0..self.y_size).filter(|&y| self.get(x, y) == 0.0).collect()
    }

    /// Smallest-index zero-distortion reproduction of `x`.
    pub fn zero_image(&self, x: usize) -> usize {
        self.row(x)
            .iter()
            .position(|v| *v == 0.0)
            .expect("validated at construction")
    }

    /// True if every source symbol has exactly one zero-distortion reproduction.
    pub fn has_unique_zeros(&self) -> bool {
        (0..self.x_size).all(|x| self.zero_set(x).len() == 1)
    }

    /// Sum of per-letter distortions between two equal-length sequences.
    #[inline]
    pub fn total(&self, x: &[u8], y: &[u8]) -> f64 {
        x.iter().zip(y).map(|(&a, &b)| self.get(a as usize, b as usize)).sum()
    }

    /// `d^(n)(x, y) = (1/n) sum_i d(x_i, y_i)`.
    pub fn mean_distortion(&self, x: &[u8], y: &[u8]) -> Result<f64> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::invalid("sequences must be non-empty and of equal length"));
        }
        if let Some(&a) = x.iter().find(|&&a| a as usize >= self.x_size) {
            return Err(Error::invalid(format!("source symbol {a} out of range")));
        }
        if let Some(&b) = y.iter().find(|&&b| b as usize >= self.y_size) {
            return Err(Error::invalid(format!("reproduction symbol {b} out of range")));
        }
        Ok(self.total(x, y) / x.len() as f64)
    }

    /// Whether `y` is accepted for enrollment `x` under mean-distortion limit `limit`.
    ///
    /// Works on the total distortion with early exit; inputs are trusted.
    #[inline]
    pub fn accepts(&self, x: &[u8], y: &[u8], limit: f64) -> bool {
        let budget = limit * x.len() as f64 + DISTORTION_SLACK;
        let mut acc = 0.0;
        for (&a, &b) in x.iter().zip(y) {
            acc += self.get(a as usize, b as usize);
            if acc > budget {
                return false;
            }
        }
        true
    }

    /// `min_y E_q[d(X, y)]` together with a minimizing `y` (smallest index).
    pub fn max_useful_distortion(&self, q: &[f64]) -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for y in 0..self.y_size {
            let v: f64 = q.iter().enumerate().map(|(x, p)| p * self.get(x, y)).sum();
            if v < best.0 {
                best = (v, y);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamming_basics() {
        let d = DistortionSpec::hamming(2).unwrap();
        assert_eq!(d.d_max(), 1.0);
        assert!(d.has_unique_zeros());
        assert_eq!(d.mean_distortion(&[0, 1, 1, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert!(d.accepts(&[1, 1, 0, 0], &[1, 0, 0, 0], 0.25));
        assert!(!d.accepts(&[1, 1, 0, 0], &[0, 0, 0, 0], 0.25));
        let (dm, y) = d.max_useful_distortion(&[0.7, 0.3]);
        assert!((dm - 0.3).abs() < 1e-15);
        assert_eq!(y, 0);
    }

    #[test]
    fn rejects_rows_without_zero() {
        assert!(DistortionSpec::new(&[vec![0.0, 1.0], vec![0.5, 1.0]]).is_err());
        assert!(DistortionSpec::new(&[vec![0.0, -1.0]]).is_err());
        assert!(DistortionSpec::new(&[vec![0.0, 1.0], vec![0.0]]).is_err());
    }

    #[test]
    fn erasure_style_measure() {
        // Two source letters, a third "erasure" reproduction at cost 0.5.
        let d = DistortionSpec::new(&[vec![0.0, 1.0, 0.5], vec![1.0, 0.0, 0.5]]).unwrap();
        assert_eq!(d.y_size(), 3);
        assert_eq!(d.zero_image(1), 1);
        assert!(d.mean_distortion(&[0, 1], &[2, 2, 2]).is_err());
    }
}
