//! Blahut-Arimoto iteration at a fixed slope.

use crate::prob::DistortionSpec;

/// A source restricted to its support, ready for the solver.
#[derive(Debug, Clone)]
pub(crate) struct Component {
    /// Mixing weight in the overall objective (`q_Z(z)`, or 1).
    pub weight: f64,
    /// Original source symbols kept (those with positive mass).
    pub symbols: Vec<usize>,
    /// Their probabilities.
    pub probs: Vec<f64>,
}

impl Component {
    pub fn from_probs(weight: f64, probs: &[f64]) -> Self {
        let (symbols, probs) = probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(x, p)| (x, *p))
            .unzip();
        Component { weight, symbols, probs }
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }
}

/// The output of one solver run on one component.
#[derive(Debug, Clone)]
pub(crate) struct BaPoint {
    /// Row-major `len x y_size` channel over the kept symbols.
    pub channel: Vec<f64>,
    pub distortion: f64,
    pub rate: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final duality bound on the objective.
    pub gap: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct BaSettings {
    pub gap_tol: f64,
    pub max_iterations: usize,
}

/// Kernel `exp(-s d(x, y))`; `s = inf` keeps only zero-distortion pairs.
fn kernel(comp: &Component, d: &DistortionSpec, slope: f64) -> Vec<f64> {
    let ny = d.y_size();
    let mut k = Vec::with_capacity(comp.len() * ny);
    for &x in &comp.symbols {
        for y in 0..ny {
            let v = d.get(x, y);
            k.push(if slope.is_infinite() {
                if v == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                (-slope * v).exp()
            });
        }
    }
    k
}

/// Objective, update factors and duality bound at one output marginal.
struct Eval {
    objective: f64,
    c: Vec<f64>,
    gap: f64,
}

struct Problem<'a> {
    probs: &'a [f64],
    kernel: Vec<f64>,
    ny: usize,
}

impl Problem<'_> {
    fn normalizers(&self, r: &[f64]) -> Vec<f64> {
        self.kernel
            .chunks(self.ny)
            .map(|row| row.iter().zip(r).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn eval(&self, r: &[f64]) -> Eval {
        let z = self.normalizers(r);
        let objective = -self.probs.iter().zip(&z).map(|(q, zx)| q * zx.ln()).sum::<f64>();
        let mut c = vec![0.0; self.ny];
        for ((row, q), zx) in self.kernel.chunks(self.ny).zip(self.probs).zip(&z) {
            let w = q / zx;
            for (cy, kxy) in c.iter_mut().zip(row) {
                *cy += w * kxy;
            }
        }
        let gap = c.iter().copied().fold(0.0, f64::max).ln().max(0.0);
        Eval { objective, c, gap }
    }

    /// The Blahut-Arimoto map `r <- r * c / sum(r * c)`.
    fn update(r: &[f64], c: &[f64]) -> Vec<f64> {
        let mut next: Vec<f64> = r.iter().zip(c).map(|(a, b)| a * b).collect();
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        next
    }
}

/// Runs Blahut-Arimoto on `comp` at Lagrange slope `slope >= 0`.
///
/// Minimizes `G(r) = -sum_x q(x) ln sum_y r(y) exp(-s d(x,y))` over output
/// marginals `r`. Stops once `ln max_y c(y)` (an upper bound on
/// `G(r) - min G`) drops below `gap_tol`.
///
/// Every two plain updates are followed by a squared extrapolation step
/// (SQUAREM), kept only if it does not increase `G`, so the accepted
/// iterates still descend monotonically. When `trace` is given, `G` is
/// recorded at every accepted iterate. `iterations` counts evaluations of `G`.
pub(crate) fn blahut_arimoto(
    comp: &Component,
    d: &DistortionSpec,
    slope: f64,
    settings: BaSettings,
    mut trace: Option<&mut Vec<f64>>,
) -> BaPoint {
    let ny = d.y_size();
    let problem = Problem {
        probs: &comp.probs,
        kernel: kernel(comp, d, slope),
        ny,
    };
    let mut record = |g: f64| {
        if let Some(t) = trace.as_deref_mut() {
            t.push(g);
        }
    };

    let mut r = vec![1.0 / ny as f64; ny];
    let mut cur = problem.eval(&r);
    record(cur.objective);
    let mut iterations = 1;
    let budget = settings.max_iterations.max(1);

    while cur.gap >= settings.gap_tol && iterations < budget {
        let r1 = Problem::update(&r, &cur.c);
        let e1 = problem.eval(&r1);
        record(e1.objective);
        iterations += 1;
        if e1.gap < settings.gap_tol || iterations >= budget {
            (r, cur) = (r1, e1);
            break;
        }
        let r2 = Problem::update(&r1, &e1.c);
        let e2 = problem.eval(&r2);
        record(e2.objective);
        iterations += 1;
        if e2.gap < settings.gap_tol || iterations + 2 > budget {
            (r, cur) = (r2, e2);
            continue;
        }

        let u: Vec<f64> = r1.iter().zip(&r).map(|(a, b)| a - b).collect();
        let v: Vec<f64> = r2.iter().zip(&r1).zip(&u).map(|((a, b), du)| a - b - du).collect();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let alpha = if nv > 0.0 { (-nu / nv).min(-1.0) } else { -1.0 };
        if alpha < -1.0 {
            let mut jump: Vec<f64> = r
                .iter()
                .zip(&u)
                .zip(&v)
                .zip(&r2)
                .map(|(((r0, du), dv), floor)| {
                    let x = r0 - 2.0 * alpha * du + alpha * alpha * dv;
                    if x > 0.0 {
                        x
                    } else {
                        floor * 1e-6
                    }
                })
                .collect();
            let total: f64 = jump.iter().sum();
            jump.iter_mut().for_each(|x| *x /= total);
            let ej = problem.eval(&jump);
            let r3 = Problem::update(&jump, &ej.c);
            let e3 = problem.eval(&r3);
            iterations += 2;
            if e3.objective <= e2.objective {
                record(e3.objective);
                (r, cur) = (r3, e3);
                continue;
            }
        }
        (r, cur) = (r2, e2);
    }

    let z = problem.normalizers(&r);
    let channel = channel_from_marginal(&problem.kernel, &r, &z, comp.len(), ny);
    let (rate, distortion) = evaluate_channel(comp, d, &channel);
    BaPoint {
        channel,
        distortion,
        rate,
        iterations,
        converged: cur.gap < settings.gap_tol,
        gap: cur.gap,
    }
}

fn channel_from_marginal(k: &[f64], r: &[f64], z: &[f64], m: usize, ny: usize) -> Vec<f64> {
    let mut w = vec![0.0; m * ny];
    for xi in 0..m {
        for y in 0..ny {
            w[xi * ny + y] = r[y] * k[xi * ny + y] / z[xi];
        }
    }
    w
}

/// Mutual information and expected distortion of a channel on a component.
pub(crate) fn evaluate_channel(comp: &Component, d: &DistortionSpec, w: &[f64]) -> (f64, f64) {
    let ny = d.y_size();
    let mut out = vec![0.0; ny];
    let mut dist = 0.0;
    for (xi, (&x, &q)) in comp.symbols.iter().zip(&comp.probs).enumerate() {
        for y in 0..ny {
            let v = w[xi * ny + y];
            out[y] += q * v;
            dist += q * v * d.get(x, y);
        }
    }
    let mut mi = 0.0;
    for (xi, &q) in comp.probs.iter().enumerate() {
        for y in 0..ny {
            let v = w[xi * ny + y];
            if v > 0.0 {
                mi += q * v * (v / out[y]).ln();
            }
        }
    }
    (mi.max(0.0), dist)
}

/// The zero-rate solution: every symbol mapped to the best constant reproduction.
pub(crate) fn constant_point(comp: &Component, d: &DistortionSpec) -> BaPoint {
    let ny = d.y_size();
    let mut full = vec![0.0; d.x_size()];
    for (&x, &q) in comp.symbols.iter().zip(&comp.probs) {
        full[x] = q;
    }
    let (dist, y0) = d.max_useful_distortion(&full);
    let mut channel = vec![0.0; comp.len() * ny];
    for xi in 0..comp.len() {
        channel[xi * ny + y0] = 1.0;
    }
    BaPoint {
        channel,
        distortion: dist,
        rate: 0.0,
        iterations: 0,
        converged: true,
        gap: 0.0,
    }
}

/// Zero-distortion solution. With a unique zero reproduction per symbol the
/// channel is deterministic; otherwise the support-restricted minimization
/// is solved by the infinite-slope iteration.
pub(crate) fn lossless_point(comp: &Component, d: &DistortionSpec, settings: BaSettings) -> BaPoint {
    let unique = comp.symbols.iter().all(|&x| d.zero_set(x).len() == 1);
    if !unique {
        return blahut_arimoto(comp, d, f64::INFINITY, settings, None);
    }
    let ny = d.y_size();
    let mut channel = vec![0.0; comp.len() * ny];
    for (xi, &x) in comp.symbols.iter().enumerate() {
        channel[xi * ny + d.zero_image(x)] = 1.0;
    }
    let (rate, distortion) = evaluate_channel(comp, d, &channel);
    BaPoint {
        channel,
        distortion,
        rate,
        iterations: 0,
        converged: true,
        gap: 0.0,
    }
}

/// Pointwise mixture `lambda a + (1 - lambda) b` of two points.
pub(crate) fn mix(comp: &Component, d: &DistortionSpec, a: &BaPoint, b: &BaPoint, lambda: f64) -> BaPoint {
    let channel: Vec<f64> = a
        .channel
        .iter()
        .zip(&b.channel)
        .map(|(u, v)| lambda * u + (1.0 - lambda) * v)
        .collect();
    let (rate, distortion) = evaluate_channel(comp, d, &channel);
    BaPoint {
        channel,
        distortion,
        rate,
        iterations: 0,
        converged: a.converged && b.converged,
        gap: a.gap.max(b.gap),
    }
}
