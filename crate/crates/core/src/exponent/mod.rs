//! The deception exponent `E(D) = max_Q [R(D, Q) - D(Q || P)]`, its
//! side-information version, and the finite-`n` converse bound.

mod search;
pub mod zeta;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{kl_divergence, DistortionSpec, JointPmf, Pmf};
use crate::rd::{conditional_rate_distortion_with, rate_distortion_with, RdOptions};
pub use search::Candidate;
use search::{grid_size, maximize, Eval, SearchSettings};

/// Resolutions tried, finest first, when none is given for large problems.
const RESOLUTION_LADDER: [f64; 8] = [0.01, 0.02, 0.025, 0.05, 0.1, 0.2, 0.25, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExponentOptions {
    /// Grid spacing on the simplex. `None` picks 0.01 for marginal sources
    /// with at most 4 symbols, otherwise the finest spacing whose grid has at
    /// most `auto_grid_points` points.
    pub resolution: Option<f64>,
    pub auto_grid_points: u128,
    /// Number of best grid points refined by local search.
    pub top_k: usize,
    pub refine: bool,
    /// Local search stops once its step falls below this.
    pub min_step: f64,
    /// Largest number of support cells accepted.
    pub max_cells: usize,
    pub rd: RdOptions,
}

impl Default for ExponentOptions {
    fn default() -> Self {
        ExponentOptions {
            resolution: None,
            auto_grid_points: 10_000,
            top_k: 5,
            refine: true,
            min_step: 1e-6,
            max_cells: 6,
            rd: RdOptions::default(),
        }
    }
}

impl ExponentOptions {
    pub fn with_resolution(resolution: f64) -> Self {
        ExponentOptions {
            resolution: Some(resolution),
            ..Default::default()
        }
    }

    fn divisions(&self, cells: usize, marginal: bool) -> Result<usize> {
        let res = match self.resolution {
            Some(r) => r,
            None if marginal && cells <= 4 => 0.01,
            None => RESOLUTION_LADDER
                .iter()
                .copied()
                .find(|r| grid_size(cells, (1.0 / r).round() as usize) <= self.auto_grid_points)
                .unwrap_or(0.5),
        };
        if !(res > 0.0 && res <= 1.0) {
            return Err(Error::invalid(format!("grid resolution {res} must lie in (0, 1]")));
        }
        Ok((1.0 / res).round().max(1.0) as usize)
    }
}

/// The maximizing distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Argmax {
    Marginal(Pmf),
    Joint(JointPmf),
}

impl Argmax {
    pub fn probs(&self) -> &[f64] {
        match self {
            Argmax::Marginal(p) => p.probs(),
            Argmax::Joint(j) => j.probs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentResult {
    /// Exponent in nats.
    pub value: f64,
    pub argmax_q: Argmax,
    /// `R(D, Q*)` (or `R_{X|Z}`) and `D(Q* || P)` at the reported maximizer.
    pub rate_at_argmax: f64,
    pub divergence_at_argmax: f64,
    /// Refinement runs from the best grid points.
    pub objective_trace: Vec<Candidate>,
    pub grid_resolution: f64,
    pub refined: bool,
    /// Whether the rate-distortion solve at the maximizer converged.
    pub converged: bool,
    pub evaluations: usize,
    pub unconverged_evaluations: usize,
    /// Refined candidates within 1e-7 of the maximum at a different point.
    pub near_ties: usize,
}

fn check_inputs(cells: usize, d_limit: f64, opts: &ExponentOptions) -> Result<()> {
    if !d_limit.is_finite() || d_limit < 0.0 {
        return Err(Error::invalid(format!(
            "distortion limit {d_limit} must be finite and >= 0"
        )));
    }
    if cells > opts.max_cells {
        return Err(Error::Unsupported(format!(
            "{cells} support cells exceed the optimizer limit of {}",
            opts.max_cells
        )));
    }
    Ok(())
}

/// Embeds a point on the support simplex into the full alphabet.
fn embed(point: &[f64], support: &[usize], size: usize) -> Vec<f64> {
    let total: f64 = point.iter().sum();
    let mut full = vec![0.0; size];
    for (&s, &v) in support.iter().zip(point) {
        full[s] = v.max(0.0) / total;
    }
    full
}

/// Marginal objective `R(D, q) - D(q || p)`.
pub fn exponent_objective(p: &Pmf, d: &DistortionSpec, d_limit: f64, q: &Pmf) -> Result<f64> {
    let r = rate_distortion_with(q, d, d_limit, &RdOptions::default())?;
    Ok(r.rate - crate::prob::relative_entropy(q, p)?)
}

/// Joint objective `R_{X|Z}(D, q) - D(q || p)`.
pub fn exponent_objective_si(p: &JointPmf, d: &DistortionSpec, d_limit: f64, q: &JointPmf) -> Result<f64> {
    let r = conditional_rate_distortion_with(q, d, d_limit, &RdOptions::default())?;
    Ok(r.rate - crate::prob::joint_relative_entropy(q, p)?)
}

/// Fast path for `D = 0` with one zero reproduction per symbol: the
/// lossless rate is the entropy of the reproduced symbol, computed without
/// running the solver.
struct LosslessMap {
    image: Vec<usize>,
    y_size: usize,
}

impl LosslessMap {
    fn new(d: &DistortionSpec, d_limit: f64) -> Option<Self> {
        (d_limit == 0.0 && d.has_unique_zeros()).then(|| LosslessMap {
            image: (0..d.x_size()).map(|x| d.zero_image(x)).collect(),
            y_size: d.y_size(),
        })
    }

    /// `H(g(X) | Z)` for a joint laid out `x * z_size + z` (`z_size = 1` for marginals).
    fn rate(&self, q: &[f64], z_size: usize) -> f64 {
        let mut acc = 0.0;
        let mut buf = vec![0.0; self.y_size];
        for z in 0..z_size {
            buf.iter_mut().for_each(|v| *v = 0.0);
            let mut qz = 0.0;
            for (x, &y) in self.image.iter().enumerate() {
                let v = q[x * z_size + z];
                buf[y] += v;
                qz += v;
            }
            if qz > 0.0 {
                acc += buf
                    .iter()
                    .filter(|v| **v > 0.0)
                    .map(|v| -v * (v / qz).ln())
                    .sum::<f64>();
            }
        }
        acc
    }
}

/// `E(D)` for source `p` under distortion `d`.
pub fn deception_exponent(p: &Pmf, d: &DistortionSpec, d_limit: f64) -> Result<ExponentResult> {
    deception_exponent_with(p, d, d_limit, &ExponentOptions::default())
}

pub fn deception_exponent_with(
    p: &Pmf,
    d: &DistortionSpec,
    d_limit: f64,
    opts: &ExponentOptions,
) -> Result<ExponentResult> {
    if p.alphabet_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: p.alphabet_size(),
        });
    }
    let support = p.support();
    check_inputs(support.len(), d_limit, opts)?;
    let divisions = opts.divisions(support.len(), true)?;
    let k = p.alphabet_size();
    let fast = LosslessMap::new(d, d_limit);

    let objective = |point: &[f64]| -> Eval {
        let q = embed(point, &support, k);
        let div = kl_divergence(&q, p.probs());
        if let Some(map) = &fast {
            return Eval {
                value: map.rate(&q, 1) - div,
                converged: true,
            };
        }
        let q = Pmf::new(q).expect("embedded point is a distribution");
        let r = rate_distortion_with(&q, d, d_limit, &opts.rd).expect("inputs validated");
        Eval {
            value: r.rate - div,
            converged: r.converged,
        }
    };
    let own: Vec<f64> = support.iter().map(|&s| p.get(s)).collect();
    let settings = SearchSettings {
        divisions,
        top_k: opts.top_k,
        refine: opts.refine,
        min_step: opts.min_step,
    };
    let out = maximize(support.len(), &[own], settings, objective);

    let q = Pmf::new(embed(&out.best, &support, k)).expect("embedded point is a distribution");
    let r = rate_distortion_with(&q, d, d_limit, &opts.rd)?;
    let div = crate::prob::relative_entropy(&q, p)?;
    Ok(ExponentResult {
        value: out.value.max(0.0),
        argmax_q: Argmax::Marginal(q),
        rate_at_argmax: r.rate,
        divergence_at_argmax: div,
        objective_trace: out.candidates,
        grid_resolution: 1.0 / divisions as f64,
        refined: opts.refine,
        converged: r.converged,
        evaluations: out.evaluations,
        unconverged_evaluations: out.unconverged,
        near_ties: out.near_ties,
    })
}

/// `E_Z(D)` for a joint source `p` on `X x Z` (side information `Z` at the adversary).
pub fn deception_exponent_si(p: &JointPmf, d: &DistortionSpec, d_limit: f64) -> Result<ExponentResult> {
    deception_exponent_si_with(p, d, d_limit, &ExponentOptions::default())
}

pub fn deception_exponent_si_with(
    p: &JointPmf,
    d: &DistortionSpec,
    d_limit: f64,
    opts: &ExponentOptions,
) -> Result<ExponentResult> {
    if p.x_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: p.x_size(),
        });
    }
    let support = p.support();
    check_inputs(support.len(), d_limit, opts)?;
    let divisions = opts.divisions(support.len(), false)?;
    let (xs, zs) = (p.x_size(), p.z_size());
    let fast = LosslessMap::new(d, d_limit);

    let objective = |point: &[f64]| -> Eval {
        let q = embed(point, &support, xs * zs);
        let div = kl_divergence(&q, p.probs());
        if let Some(map) = &fast {
            return Eval {
                value: map.rate(&q, zs) - div,
                converged: true,
            };
        }
        let q = JointPmf::new(xs, zs, q).expect("embedded point is a distribution");
        let r = conditional_rate_distortion_with(&q, d, d_limit, &opts.rd).expect("inputs validated");
        Eval {
            value: r.rate - div,
            converged: r.converged,
        }
    };
    let own: Vec<f64> = support.iter().map(|&s| p.probs()[s]).collect();
    let settings = SearchSettings {
        divisions,
        top_k: opts.top_k,
        refine: opts.refine,
        min_step: opts.min_step,
    };
    let out = maximize(support.len(), &[own], settings, objective);

    let q = JointPmf::new(xs, zs, embed(&out.best, &support, xs * zs))?;
    let r = conditional_rate_distortion_with(&q, d, d_limit, &opts.rd)?;
    let div = crate::prob::joint_relative_entropy(&q, p)?;
    Ok(ExponentResult {
        value: out.value.max(0.0),
        argmax_q: Argmax::Joint(q),
        rate_at_argmax: r.rate,
        divergence_at_argmax: div,
        objective_trace: out.candidates,
        grid_resolution: 1.0 / divisions as f64,
        refined: opts.refine,
        converged: r.converged,
        evaluations: out.evaluations,
        unconverged_evaluations: out.unconverged,
        near_ties: out.near_ties,
    })
}

/// Finite-`n` lower bound on `(1/n) ln E_P[G]` valid for every strategy:
///
/// `-D(q || p) + R(D, q) / (1 + eps) - (ln 2 - ln C(eps)) / (n (1 + eps))`
///
/// with `C(eps) = 1 / zeta(1 + eps)`.
pub fn converse_lower_bound(q: &Pmf, p: &Pmf, d: &DistortionSpec, d_limit: f64, eps: f64, n: usize) -> Result<f64> {
    if eps.is_nan() || eps <= 0.0 || !eps.is_finite() {
        return Err(Error::invalid(format!("eps = {eps} must be positive")));
    }
    if n == 0 {
        return Err(Error::invalid("sequence length must be positive"));
    }
    let rate = rate_distortion_with(q, d, d_limit, &RdOptions::default())?.rate;
    Ok(converse_from_parts(crate::prob::relative_entropy(q, p)?, rate, eps, n))
}

/// The converse bound from precomputed `D(q || p)` and `R(D, q)`.
pub fn converse_from_parts(divergence: f64, rate: f64, eps: f64, n: usize) -> f64 {
    let c = zeta::prior_normalizer(eps);
    -divergence + rate / (1.0 + eps) - (2f64.ln() - c.ln()) / (n as f64 * (1.0 + eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{entropy, renyi_half_entropy};

    fn h(p: f64) -> f64 {
        entropy(&[p, 1.0 - p])
    }

    fn ham(k: usize) -> DistortionSpec {
        DistortionSpec::hamming(k).unwrap()
    }

    #[test]
    fn binary_uniform_closed_form() {
        let p = Pmf::uniform(2).unwrap();
        let e = deception_exponent(&p, &ham(2), 0.11).unwrap();
        assert!((e.value - (2f64.ln() - h(0.11))).abs() < 1e-6);
        assert!((e.value - 0.346_632).abs() < 1e-6);
        assert!(e.converged);
    }

    #[test]
    fn lossless_matches_renyi_half() {
        let p = Pmf::new(vec![0.3, 0.7]).unwrap();
        let e = deception_exponent(&p, &ham(2), 0.0).unwrap();
        assert!((e.value - renyi_half_entropy(&p)).abs() < 1e-6);
        // Maximizer is proportional to sqrt(p).
        let s = 0.3f64.sqrt() + 0.7f64.sqrt();
        assert!((e.argmax_q.probs()[0] - 0.3f64.sqrt() / s).abs() < 1e-4);
    }

    #[test]
    fn zero_above_half() {
        let p = Pmf::new(vec![0.2, 0.8]).unwrap();
        for t in [0.5, 0.7, 1.0] {
            let e = deception_exponent(&p, &ham(2), t).unwrap();
            assert_eq!(e.value, 0.0);
        }
    }

    #[test]
    fn degenerate_source_has_zero_exponent() {
        let p = Pmf::new(vec![1.0, 0.0, 0.0]).unwrap();
        let e = deception_exponent(&p, &ham(3), 0.0).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.argmax_q.probs(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_large_alphabets_and_bad_limits() {
        let p = Pmf::uniform(7).unwrap();
        let err = deception_exponent(&p, &ham(7), 0.1).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        let p2 = Pmf::uniform(2).unwrap();
        assert!(deception_exponent(&p2, &ham(2), -1.0).is_err());
        assert!(deception_exponent(&p2, &ham(3), 0.1).is_err());
    }

    #[test]
    fn converse_example() {
        let p = Pmf::uniform(2).unwrap();
        let v = converse_lower_bound(&p, &p, &ham(2), 0.0, 1.0, 10).unwrap();
        // ln2/2 - (ln 2 + ln(pi^2/6)) / 20
        let expect = 2f64.ln() / 2.0 - (2f64.ln() + (std::f64::consts::PI.powi(2) / 6.0).ln()) / 20.0;
        assert!((v - expect).abs() < 1e-12);
        assert!((v - 0.287_031_216_128_438).abs() < 1e-12);
        assert!(converse_lower_bound(&p, &p, &ham(2), 0.0, 0.0, 10).is_err());
        let vacuous = converse_lower_bound(&p, &p, &ham(2), 0.5, 1.0, 10).unwrap();
        assert!(vacuous < 0.0);
    }

    #[test]
    fn converse_tightens_with_n_and_eps() {
        let p = Pmf::new(vec![0.4, 0.6]).unwrap();
        let q = Pmf::new(vec![0.45, 0.55]).unwrap();
        let d = ham(2);
        let limit = 0.1;
        let target = exponent_objective(&p, &d, limit, &q).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for (n, eps) in [(10, 1.0), (100, 0.1), (1000, 0.01)] {
            let b = converse_lower_bound(&q, &p, &d, limit, eps, n).unwrap();
            assert!(b > prev && b < target);
            prev = b;
        }
        assert!(target - prev < 0.01);
    }

    #[test]
    fn side_information_examples() {
        let d = ham(2);
        let px = Pmf::new(vec![0.3, 0.7]).unwrap();
        let diag = JointPmf::diagonal(&px);
        for t in [0.0, 0.2] {
            let e = deception_exponent_si(&diag, &d, t).unwrap();
            assert!(e.value.abs() < 1e-9);
        }
        let indep = JointPmf::product(&Pmf::uniform(2).unwrap(), &Pmf::uniform(2).unwrap());
        let e = deception_exponent_si(&indep, &d, 0.0).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 1e-6);
    }
}
