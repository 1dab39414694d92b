//! Rate-distortion functions `R(D, Q)` and `R_{X|Z}(D, Q)`.
//!
//! Both are solved the same way: Blahut-Arimoto at a Lagrange slope `s`,
//! with `s` bisected until the achieved distortion meets the target. The
//! conditional function is a family of per-`z` problems sharing one slope,
//! which is the optimal distortion allocation for a convex sum.

mod blahut;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{DistortionSpec, JointPmf, Pmf};
use blahut::{blahut_arimoto, constant_point, lossless_point, mix, BaPoint, BaSettings, Component};

/// Solver tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RdOptions {
    /// Target accuracy on the rate, in nats.
    pub rate_tol: f64,
    /// Accepted gap between achieved and target distortion.
    pub d_tol: f64,
    /// Blahut-Arimoto stops when its duality bound is below this.
    pub gap_tol: f64,
    pub max_iterations: usize,
    pub max_bisections: usize,
}

impl Default for RdOptions {
    fn default() -> Self {
        RdOptions {
            rate_tol: 1e-7,
            d_tol: 1e-9,
            gap_tol: 1e-10,
            max_iterations: 10_000,
            max_bisections: 200,
        }
    }
}

impl RdOptions {
    fn settings(&self) -> BaSettings {
        BaSettings {
            gap_tol: self.gap_tol,
            max_iterations: self.max_iterations,
        }
    }
}

/// A point on the rate-distortion curve with its certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdResult {
    /// Rate in nats: the mutual information of `test_channel`.
    pub rate: f64,
    pub target_d: f64,
    pub achieved_d: f64,
    /// `P(y | x)` rows; for the conditional function, rows are indexed by
    /// `x * z_size + z` like [`JointPmf`].
    pub test_channel: Vec<Vec<f64>>,
    /// Lagrange slope; `0` on the zero-rate branch, `inf` at `D = 0`.
    pub slope: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Duality bound on the excess of `rate` over `R(achieved_d)`.
    pub gap: f64,
}

/// Solved family of components sharing one slope.
struct FamilySolution {
    points: Vec<BaPoint>,
    slope: f64,
    iterations: usize,
    converged: bool,
}

impl FamilySolution {
    fn gap(&self, comps: &[Component]) -> f64 {
        self.points.iter().zip(comps).map(|(p, c)| c.weight * p.gap).sum()
    }
}

fn weighted(points: &[BaPoint], comps: &[Component]) -> (f64, f64) {
    points.iter().zip(comps).fold((0.0, 0.0), |(r, d), (p, c)| {
        (r + c.weight * p.rate, d + c.weight * p.distortion)
    })
}

fn solve_family(comps: &[Component], d: &DistortionSpec, target: f64, opts: &RdOptions) -> FamilySolution {
    let settings = opts.settings();
    let at_zero: Vec<BaPoint> = comps.iter().map(|c| constant_point(c, d)).collect();
    let (_, d_max) = weighted(&at_zero, comps);
    if target >= d_max {
        return FamilySolution {
            points: at_zero,
            slope: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    if target == 0.0 {
        let points: Vec<BaPoint> = comps.iter().map(|c| lossless_point(c, d, settings)).collect();
        return FamilySolution {
            iterations: points.iter().map(|p| p.iterations).sum(),
            converged: points.iter().all(|p| p.converged),
            points,
            slope: f64::INFINITY,
        };
    }

    let mut iterations = 0;
    let mut eval = |s: f64| -> (Vec<BaPoint>, f64) {
        let pts: Vec<BaPoint> = comps.iter().map(|c| blahut_arimoto(c, d, s, settings, None)).collect();
        iterations += pts.iter().map(|p| p.iterations).sum::<usize>();
        let (_, dist) = weighted(&pts, comps);
        (pts, dist)
    };

    // Bracket: distortion is non-increasing in the slope.
    let (mut s_lo, mut lo, mut d_lo) = (0.0, at_zero, d_max);
    let mut s_hi = 1.0;
    let (mut hi, mut d_hi) = eval(s_hi);
    while d_hi > target && s_hi < 1e12 {
        s_lo = s_hi;
        lo = hi;
        d_lo = d_hi;
        s_hi *= 2.0;
        (hi, d_hi) = eval(s_hi);
    }
    if d_hi > target {
        let hi_inf: Vec<BaPoint> = comps.iter().map(|c| lossless_point(c, d, settings)).collect();
        (hi, d_hi) = (hi_inf, 0.0);
        s_hi = f64::INFINITY;
    }

    for _ in 0..opts.max_bisections {
        if (d_hi - target).abs() <= opts.d_tol {
            return FamilySolution {
                converged: hi.iter().all(|p| p.converged),
                points: hi,
                slope: s_hi,
                iterations,
            };
        }
        if (d_lo - target).abs() <= opts.d_tol {
            return FamilySolution {
                converged: lo.iter().all(|p| p.converged),
                points: lo,
                slope: s_lo,
                iterations,
            };
        }
        if !s_hi.is_finite() || s_hi - s_lo <= 1e-13 * s_hi {
            break;
        }
        let s_mid = 0.5 * (s_lo + s_hi);
        let (mid, d_mid) = eval(s_mid);
        if d_mid > target {
            (s_lo, lo, d_lo) = (s_mid, mid, d_mid);
        } else {
            (s_hi, hi, d_hi) = (s_mid, mid, d_mid);
        }
    }

    // The bracket collapsed on a jump of D(s) (a straight piece of the
    // curve): time-share the two end channels to hit the target exactly.
    let lambda = ((target - d_hi) / (d_lo - d_hi)).clamp(0.0, 1.0);
    let points: Vec<BaPoint> = comps
        .iter()
        .zip(lo.iter().zip(&hi))
        .map(|(c, (a, b))| mix(c, d, a, b, lambda))
        .collect();
    FamilySolution {
        converged: points.iter().all(|p| p.converged),
        points,
        slope: if s_hi.is_finite() { 0.5 * (s_lo + s_hi) } else { s_lo },
        iterations,
    }
}

/// Expands a component's channel to full-alphabet rows; symbols outside the
/// support go deterministically to their zero-distortion reproduction.
fn full_rows(comp: &Component, point: &BaPoint, d: &DistortionSpec) -> Vec<Vec<f64>> {
    let ny = d.y_size();
    (0..d.x_size())
        .map(|x| match comp.symbols.iter().position(|&s| s == x) {
            Some(i) => point.channel[i * ny..(i + 1) * ny].to_vec(),
            None => {
                let mut row = vec![0.0; ny];
                row[d.zero_image(x)] = 1.0;
                row
            }
        })
        .collect()
}

fn check_target(target: f64) -> Result<()> {
    if !target.is_finite() || target < 0.0 {
        return Err(Error::invalid(format!(
            "distortion limit {target} must be finite and >= 0"
        )));
    }
    Ok(())
}

/// `R(D, q)`: minimum `I(X; Y)` over test channels with `E d(X, Y) <= D`.
pub fn rate_distortion(q: &Pmf, d: &DistortionSpec, target: f64) -> Result<RdResult> {
    rate_distortion_with(q, d, target, &RdOptions::default())
}

pub fn rate_distortion_with(q: &Pmf, d: &DistortionSpec, target: f64, opts: &RdOptions) -> Result<RdResult> {
    check_target(target)?;
    if q.alphabet_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: q.alphabet_size(),
        });
    }
    let comp = Component::from_probs(1.0, q.probs());
    let sol = solve_family(std::slice::from_ref(&comp), d, target, opts);
    let point = &sol.points[0];
    Ok(RdResult {
        rate: point.rate,
        target_d: target,
        achieved_d: point.distortion,
        test_channel: full_rows(&comp, point, d),
        slope: sol.slope,
        iterations: sol.iterations,
        converged: sol.converged,
        gap: sol.gap(std::slice::from_ref(&comp)),
    })
}

/// `R_{X|Z}(D, q)` with side information at both encoder and decoder.
pub fn conditional_rate_distortion(q: &JointPmf, d: &DistortionSpec, target: f64) -> Result<RdResult> {
    conditional_rate_distortion_with(q, d, target, &RdOptions::default())
}

pub fn conditional_rate_distortion_with(
    q: &JointPmf,
    d: &DistortionSpec,
    target: f64,
    opts: &RdOptions,
) -> Result<RdResult> {
    check_target(target)?;
    if q.x_size() != d.x_size() {
        return Err(Error::AlphabetMismatch {
            expected: d.x_size(),
            found: q.x_size(),
        });
    }
    let qz = q.z_marginal();
    let mut comps = Vec::new();
    let mut zs = Vec::new();
    for z in 0..q.z_size() {
        if let Some(cond) = q.x_given_z(z) {
            comps.push(Component::from_probs(qz.get(z), cond.probs()));
            zs.push(z);
        }
    }
    let sol = solve_family(&comps, d, target, opts);
    let (rate, achieved) = weighted(&sol.points, &comps);

    let ny = d.y_size();
    let mut rows = vec![vec![0.0; ny]; q.x_size() * q.z_size()];
    for x in 0..q.x_size() {
        for z in 0..q.z_size() {
            rows[x * q.z_size() + z][d.zero_image(x)] = 1.0;
        }
    }
    for ((comp, point), &z) in comps.iter().zip(&sol.points).zip(&zs) {
        for (x, row) in full_rows(comp, point, d).into_iter().enumerate() {
            if comp.symbols.contains(&x) {
                rows[x * q.z_size() + z] = row;
            }
        }
    }
    Ok(RdResult {
        rate,
        target_d: target,
        achieved_d: achieved,
        test_channel: rows,
        slope: sol.slope,
        iterations: sol.iterations,
        converged: sol.converged,
        gap: sol.gap(&comps),
    })
}

/// `R(D, q)` along an ascending grid of distortion limits.
pub fn rd_curve(q: &Pmf, d: &DistortionSpec, grid: &[f64]) -> Result<Vec<RdResult>> {
    rd_curve_with(q, d, grid, &RdOptions::default())
}

pub fn rd_curve_with(q: &Pmf, d: &DistortionSpec, grid: &[f64], opts: &RdOptions) -> Result<Vec<RdResult>> {
    check_grid(grid)?;
    grid.par_iter().map(|&t| rate_distortion_with(q, d, t, opts)).collect()
}

/// Grids must be non-empty, finite, non-negative and ascending.
pub fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("empty distortion grid"));
    }
    for &t in grid {
        check_target(t)?;
    }
    if grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("distortion grid must be sorted ascending"));
    }
    Ok(())
}

/// `I(X; Y)` for input `q` and channel rows `w`.
pub fn mutual_information(q: &Pmf, w: &[Vec<f64>]) -> f64 {
    let ny = w.first().map_or(0, Vec::len);
    let mut out = vec![0.0; ny];
    for (qx, row) in q.probs().iter().zip(w) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += qx * v;
        }
    }
    let mut mi = 0.0;
    for (qx, row) in q.probs().iter().zip(w) {
        for (v, o) in row.iter().zip(&out) {
            if *qx > 0.0 && *v > 0.0 {
                mi += qx * v * (v / o).ln();
            }
        }
    }
    mi
}

/// `E d(X, Y)` for input `q` and channel rows `w`.
pub fn expected_distortion(q: &Pmf, w: &[Vec<f64>], d: &DistortionSpec) -> f64 {
    q.probs()
        .iter()
        .zip(w)
        .enumerate()
        .map(|(x, (qx, row))| qx * row.iter().enumerate().map(|(y, v)| v * d.get(x, y)).sum::<f64>())
        .sum()
}

/// Objective trace of a single Blahut-Arimoto run at a fixed slope.
///
/// Exposed for diagnostics and for checking the monotone descent of the
/// iteration; the solver itself does not keep traces.
pub fn blahut_arimoto_trace(q: &Pmf, d: &DistortionSpec, slope: f64, opts: &RdOptions) -> Result<(Vec<f64>, bool)> {
    if slope.is_nan() || slope < 0.0 {
        return Err(Error::invalid("slope must be non-negative"));
    }
    let comp = Component::from_probs(1.0, q.probs());
    let mut trace = Vec::new();
    let p = blahut_arimoto(&comp, d, slope, opts.settings(), Some(&mut trace));
    Ok((trace, p.converged))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(p: f64) -> f64 {
        crate::prob::entropy(&[p, 1.0 - p])
    }

    fn hamming2() -> DistortionSpec {
        DistortionSpec::hamming(2).unwrap()
    }

    #[test]
    fn binary_closed_form() {
        let q = Pmf::new(vec![0.7, 0.3]).unwrap();
        let r = rate_distortion(&q, &hamming2(), 0.1).unwrap();
        assert!(r.converged);
        assert!((r.rate - 0.285_781_328_663_445_3).abs() < 1e-7, "{}", r.rate);
        assert!((r.rate - (h(0.3) - h(0.1))).abs() < 1e-7);
        assert!(r.achieved_d <= 0.1 + 1e-9);
    }

    #[test]
    fn zero_rate_branch() {
        let q = Pmf::new(vec![0.7, 0.3]).unwrap();
        for t in [0.3, 0.45, 1.0] {
            let r = rate_distortion(&q, &hamming2(), t).unwrap();
            assert_eq!(r.rate, 0.0);
            assert_eq!(r.slope, 0.0);
        }
    }

    #[test]
    fn lossless_is_entropy() {
        let q = Pmf::new(vec![0.5, 0.5]).unwrap();
        let r = rate_distortion(&q, &hamming2(), 0.0).unwrap();
        assert!((r.rate - 2f64.ln()).abs() < 1e-15);
        let q3 = Pmf::new(vec![0.2, 0.3, 0.5]).unwrap();
        let r3 = rate_distortion(&q3, &DistortionSpec::hamming(3).unwrap(), 0.0).unwrap();
        assert!((r3.rate - q3.entropy()).abs() < 1e-12);
    }

    #[test]
    fn lossless_with_shared_zero_reproduction() {
        // Both source letters may be reproduced by y=2 at no cost: R(0) = 0.
        let d = DistortionSpec::new(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0]]).unwrap();
        let q = Pmf::new(vec![0.4, 0.6]).unwrap();
        let r = rate_distortion(&q, &d, 0.0).unwrap();
        assert!(r.rate < 1e-9);
    }

    #[test]
    fn rejects_negative_target() {
        let q = Pmf::new(vec![0.5, 0.5]).unwrap();
        assert!(rate_distortion(&q, &hamming2(), -0.1).is_err());
        assert!(rate_distortion(&q, &DistortionSpec::hamming(3).unwrap(), 0.1).is_err());
    }

    #[test]
    fn zero_mass_symbols_are_dropped() {
        let q = Pmf::new(vec![0.0, 0.4, 0.6]).unwrap();
        let r = rate_distortion(&q, &DistortionSpec::hamming(3).unwrap(), 0.1).unwrap();
        let q2 = Pmf::new(vec![0.4, 0.6]).unwrap();
        let r2 = rate_distortion(&q2, &hamming2(), 0.1).unwrap();
        // Reproducing the dropped letter is never useful here.
        assert!((r.rate - r2.rate).abs() < 1e-7);
        assert_eq!(r.test_channel[0], vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn conditional_examples() {
        let d = hamming2();
        let px = Pmf::new(vec![0.5, 0.5]).unwrap();
        let diag = JointPmf::diagonal(&px);
        for t in [0.0, 0.1, 0.3] {
            assert!(conditional_rate_distortion(&diag, &d, t).unwrap().rate < 1e-12);
        }
        let qx = Pmf::new(vec![0.35, 0.65]).unwrap();
        let prod = JointPmf::product(&qx, &Pmf::new(vec![0.2, 0.8]).unwrap());
        for t in [0.0, 0.05, 0.2] {
            let a = conditional_rate_distortion(&prod, &d, t).unwrap().rate;
            let b = rate_distortion(&qx, &d, t).unwrap().rate;
            assert!((a - b).abs() < 1e-6, "{t}: {a} vs {b}");
        }
        let bsc = JointPmf::binary_symmetric(0.1).unwrap();
        let r = conditional_rate_distortion(&bsc, &d, 0.0).unwrap();
        assert!((r.rate - 0.325_082_973_391_448_2).abs() < 1e-12);
        // Per-z binary problems with q(x|z) = (0.9, 0.1): R = h(0.1) - h(D).
        let r = conditional_rate_distortion(&bsc, &d, 0.05).unwrap();
        assert!((r.rate - (h(0.1) - h(0.05))).abs() < 1e-6);
    }

    #[test]
    fn curve_endpoints_and_determinism() {
        let q = Pmf::new(vec![0.5, 0.5]).unwrap();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
        let curve = rd_curve(&q, &hamming2(), &grid).unwrap();
        for (t, r) in grid.iter().zip(&curve) {
            let expect = if *t >= 0.5 { 0.0 } else { 2f64.ln() - h(*t) };
            assert!((r.rate - expect).abs() < 1e-6, "{t}");
        }
        let again = rd_curve(&q, &hamming2(), &[0.2, 0.2]).unwrap();
        assert_eq!(again[0], again[1]);
        assert!(rd_curve(&q, &hamming2(), &[0.2, 0.1]).is_err());
    }

    #[test]
    fn blahut_descends() {
        let q = Pmf::new(vec![0.2, 0.5, 0.3]).unwrap();
        let d = DistortionSpec::hamming(3).unwrap();
        for s in [0.5, 2.0, 7.0] {
            let (trace, converged) = blahut_arimoto_trace(&q, &d, s, &RdOptions::default()).unwrap();
            assert!(converged);
            assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        }
    }
}
