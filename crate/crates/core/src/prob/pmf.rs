use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the total mass of a distribution.
pub const MASS_TOL: f64 = 1e-12;

fn check_mass(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::invalid("distribution over an empty alphabet"));
    }
    if let Some((i, p)) = probs
        .iter()
        .enumerate()
        .find(|(_, p)| !p.is_finite() || **p < 0.0 || **p > 1.0)
    {
        return Err(Error::invalid(format!(
            "probability {p} at index {i} is outside [0, 1]"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > MASS_TOL {
        return Err(Error::invalid(format!("probabilities sum to {total}, expected 1")));
    }
    Ok(())
}

/// Probability mass function over the alphabet `{0, .., k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_mass(&probs)?;
        Ok(Pmf { probs })
    }

    /// Normalizes non-negative weights. Fails if they are all zero.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("weights sum to zero"));
        }
        Pmf::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("uniform distribution over an empty alphabet"));
        }
        Ok(Pmf {
            probs: vec![1.0 / k as f64; k],
        })
    }

    pub fn alphabet_size(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: usize) -> f64 {
        self.probs[x]
    }

    /// Symbols with positive probability, ascending.
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.probs)
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        Pmf::new(probs)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(p: Pmf) -> Self {
        p.probs
    }
}

/// Joint pmf on `X x Z`, stored row-major (`x` major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct JointPmf {
    x_size: usize,
    z_size: usize,
    probs: Vec<f64>,
}

impl JointPmf {
    pub fn new(x_size: usize, z_size: usize, probs: Vec<f64>) -> Result<Self> {
        if x_size == 0 || z_size == 0 {
            return Err(Error::invalid("joint alphabet sizes must be positive"));
        }
        if probs.len() != x_size * z_size {
            return Err(Error::AlphabetMismatch {
                expected: x_size * z_size,
                found: probs.len(),
            });
        }
        check_mass(&probs)?;
        Ok(JointPmf { x_size, z_size, probs })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let x_size = rows.len();
        let z_size = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != z_size) {
            return Err(Error::invalid("joint pmf rows have different lengths"));
        }
        JointPmf::new(x_size, z_size, rows.concat())
    }

    /// The product distribution `px(x) pz(z)`.
    pub fn product(px: &Pmf, pz: &Pmf) -> Self {
        let probs = px
            .probs()
            .iter()
            .flat_map(|a| pz.probs().iter().map(move |b| a * b))
            .collect();
        JointPmf {
            x_size: px.alphabet_size(),
            z_size: pz.alphabet_size(),
            probs,
        }
    }

    /// `Z = X` with marginal `px`.
    pub fn diagonal(px: &Pmf) -> Self {
        let k = px.alphabet_size();
        let mut probs = vec![0.0; k * k];
        for x in 0..k {
            probs[x * k + x] = px.get(x);
        }
        JointPmf {
            x_size: k,
            z_size: k,
            probs,
        }
    }

    /// Uniform binary `X` observed through a binary symmetric channel.
    pub fn binary_symmetric(crossover: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&crossover) {
            return Err(Error::invalid("crossover must lie in [0, 1]"));
        }
        let same = (1.0 - crossover) / 2.0;
        let diff = crossover / 2.0;
        JointPmf::new(2, 2, vec![same, diff, diff, same])
    }

    pub fn x_size(&self) -> usize {
        self.x_size
    }

    pub fn z_size(&self) -> usize {
        self.z_size
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, x: usize, z: usize) -> f64 {
        self.probs[x * self.z_size + z]
    }

    pub fn x_marginal(&self) -> Pmf {
        let probs = (0..self.x_size)
            .map(|x| (0..self.z_size).map(|z| self.get(x, z)).sum())
            .collect();
        Pmf { probs }
    }

    pub fn z_marginal(&self) -> Pmf {
        let probs = (0..self.z_size)
            .map(|z| (0..self.x_size).map(|x| self.get(x, z)).sum())
            .collect();
        Pmf { probs }
    }

    /// `P(. | z)`, or `None` when `P(z) = 0`.
    pub fn x_given_z(&self, z: usize) -> Option<Pmf> {
        let col: Vec<f64> = (0..self.x_size).map(|x| self.get(x, z)).collect();
        let total: f64 = col.iter().sum();
        (total > 0.0).then(|| Pmf {
            probs: col.iter().map(|p| p / total).collect(),
        })
    }

    /// True when the joint factorizes into its marginals within `tol`.
    pub fn is_product(&self, tol: f64) -> bool {
        let px = self.x_marginal();
        let pz = self.z_marginal();
        (0..self.x_size).all(|x| (0..self.z_size).all(|z| (self.get(x, z) - px.get(x) * pz.get(z)).abs() <= tol))
    }

    /// Flattened cell indices `x * z_size + z` with positive mass.
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.probs)
    }

    pub fn as_flat_pmf(&self) -> Pmf {
        Pmf {
            probs: self.probs.clone(),
        }
    }

    /// H(X|Z) in nats.
    pub fn conditional_entropy(&self) -> f64 {
        entropy(&self.probs) - self.z_marginal().entropy()
    }
}

impl TryFrom<Vec<Vec<f64>>> for JointPmf {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        JointPmf::from_rows(&rows)
    }
}

impl From<JointPmf> for Vec<Vec<f64>> {
    fn from(p: JointPmf) -> Self {
        p.probs.chunks(p.z_size).map(<[f64]>::to_vec).collect()
    }
}

fn support_of(probs: &[f64]) -> Vec<usize> {
    probs
        .iter()
        .enumerate()
        .filter(|(_, p)| **p > 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// `-p ln p` with `0 ln 0 = 0`.
#[inline]
pub fn neg_p_ln_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// Shannon entropy in nats of a (not necessarily validated) probability vector.
pub fn entropy(probs: &[f64]) -> f64 {
    probs.iter().copied().map(neg_p_ln_p).sum()
}

/// Kullback-Leibler divergence `D(q || p)` in nats on raw slices.
///
/// Returns `+inf` when `q` puts mass where `p` does not.
pub fn kl_divergence(q: &[f64], p: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        if qi > 0.0 {
            if pi <= 0.0 {
                return f64::INFINITY;
            }
            acc += qi * (qi / pi).ln();
        }
    }
    // Rounding can push an exact zero slightly negative.
    acc.max(0.0)
}

/// Relative entropy `D(q || p)` in nats.
pub fn relative_entropy(q: &Pmf, p: &Pmf) -> Result<f64> {
    if q.alphabet_size() != p.alphabet_size() {
        return Err(Error::AlphabetMismatch {
            expected: p.alphabet_size(),
            found: q.alphabet_size(),
        });
    }
    Ok(kl_divergence(q.probs(), p.probs()))
}

/// Relative entropy between joint distributions on the same product alphabet.
pub fn joint_relative_entropy(q: &JointPmf, p: &JointPmf) -> Result<f64> {
    if q.x_size != p.x_size || q.z_size != p.z_size {
        return Err(Error::AlphabetMismatch {
            expected: p.probs.len(),
            found: q.probs.len(),
        });
    }
    Ok(kl_divergence(&q.probs, &p.probs))
}

/// Renyi entropy of order 1/2, `2 ln sum_x sqrt(p(x))`, in nats.
pub fn renyi_half_entropy(p: &Pmf) -> f64 {
    let s: f64 = p.probs().iter().map(|v| v.sqrt()).sum();
    (2.0 * s.ln()).max(0.0)
}

/// Conditional Renyi entropy of order 1/2 (Arimoto form),
/// `ln sum_z (sum_x sqrt(P(x, z)))^2`.
pub fn conditional_renyi_half_entropy(p: &JointPmf) -> f64 {
    let s: f64 = (0..p.z_size())
        .map(|z| {
            let col: f64 = (0..p.x_size()).map(|x| p.get(x, z).sqrt()).sum();
            col * col
        })
        .sum();
    s.ln().max(0.0)
}
