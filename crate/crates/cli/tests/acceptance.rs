//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::Command;
use std::time::{Duration, Instant};

use deception_core::guessing::{
    build_covering, oracle_best_strategy_with, OracleMethod, OracleOptions, GREEDY_APPROXIMATION, MAX_EXHAUSTIVE,
};
use deception_core::prob::renyi_half_entropy;
use deception_core::{
    build_strategy, converse_lower_bound, deception_exponent, deception_exponent_si, deception_exponent_si_with,
    exact_expected_guesses, rate_distortion, simulate_attack, DistortionSpec, ExponentOptions, JointPmf, Pmf, Strategy,
    TypeComposition,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn h(x: f64) -> f64 {
    let t = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
    t(x) + t(1.0 - x)
}

fn hamming2() -> DistortionSpec {
    DistortionSpec::hamming(2).unwrap()
}

fn binary(p: f64) -> Pmf {
    Pmf::new(vec![p, 1.0 - p]).unwrap()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
}

/// The 50 binary q values used by the converse checks.
fn q_grid() -> Vec<Pmf> {
    (1..=50).map(|i| binary(i as f64 / 51.0)).collect()
}

const EPSILONS: [f64; 3] = [1.0, 0.3, 0.1];

fn closed_form_rd() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let d = hamming2();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p: f64 = rng.random_range(0.02..0.98);
        let m = p.min(1.0 - p);
        let limit = rng.random_range(0.01 * m..0.99 * m);
        let r = rate_distortion(&binary(p), &d, limit).map_err(|e| e.to_string())?;
        worst = worst.max((r.rate - (h(p) - h(limit))).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-6, || format!("max error {worst:e} > 1e-6"))?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("max error {worst:.2e} over 20 pairs in {elapsed:.2?}"))
}

fn renyi_identity() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = ExponentOptions::with_resolution(0.005);
    let mut sources: Vec<Pmf> = (0..20).map(|_| binary(rng.random_range(0.03..0.97))).collect();
    for _ in 0..10 {
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
        sources.push(Pmf::from_weights(&w).unwrap());
    }
    let mut worst: f64 = 0.0;
    for p in &sources {
        let d = DistortionSpec::hamming(p.alphabet_size()).unwrap();
        let e = deception_core::exponent::deception_exponent_with(p, &d, 0.0, &opts).map_err(|e| e.to_string())?;
        worst = worst.max((e.value - renyi_half_entropy(p)).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-4, || format!("max error {worst:e} > 1e-4"))?;
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "max error {worst:.2e} over 20 binary + 10 ternary in {elapsed:.2?}"
    ))
}

fn binary_uniform_closed_form() -> Check {
    let d = hamming2();
    let p = Pmf::uniform(2).unwrap();
    let mut worst: f64 = 0.0;
    let mut grid: Vec<f64> = (0..=10).map(|i| i as f64 * 0.05).collect();
    grid.push(0.11);
    for limit in grid {
        let e = deception_exponent(&p, &d, limit).map_err(|e| e.to_string())?;
        let expect = 2f64.ln() - h(limit);
        worst = worst.max((e.value - expect).abs());
    }
    ensure(worst <= 1e-3, || format!("max error {worst:e} > 1e-3"))?;
    Ok(format!("max error {worst:.2e} over 11 grid points plus D = 0.11"))
}

const CELLS_N: [usize; 3] = [8, 10, 12];
const CELLS_D: [f64; 3] = [0.0, 0.125, 0.25];

fn achievability() -> Check {
    let start = Instant::now();
    let d = hamming2();
    let p = Pmf::uniform(2).unwrap();
    let mut lines = Vec::new();
    for &limit in &CELLS_D {
        let e = deception_exponent(&p, &d, limit).map_err(|e| e.to_string())?.value;
        for &n in &CELLS_N {
            let s = build_strategy(n, &p, &d, limit).map_err(|e| e.to_string())?;
            let r = exact_expected_guesses(&p, &s, &d, limit).map_err(|e| e.to_string())?;
            let slack = s.max_slack();
            let bound = e + 2.0 * ((n + 1) as f64).ln() / n as f64 + slack;
            ensure(r.exponent_estimate <= bound, || {
                format!("n={n} D={limit}: {} > {bound}", r.exponent_estimate)
            })?;
            lines.push(format!("n={n},D={limit}:{:.4}<={bound:.4}", r.exponent_estimate));
        }
    }
    let elapsed = start.elapsed();
    within(elapsed, Duration::from_secs(300))?;
    Ok(format!("9/9 cells in {elapsed:.2?} [{}]", lines.join(" ")))
}

/// Number of (q, eps) pairs where `rate` falls below the converse bound.
fn converse_violations(p: &Pmf, d: &DistortionSpec, limit: f64, n: usize, rate: f64) -> Result<usize, String> {
    let mut bad = 0;
    for q in q_grid() {
        for eps in EPSILONS {
            let b = converse_lower_bound(&q, p, d, limit, eps, n).map_err(|e| e.to_string())?;
            if rate < b - 1e-12 {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

fn converse() -> Check {
    let d = hamming2();
    let p = Pmf::uniform(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut tested = 0;
    let mut violations = 0;
    for &limit in &CELLS_D {
        for &n in &CELLS_N {
            let mut strategies = vec![build_strategy(n, &p, &d, limit).map_err(|e| e.to_string())?];
            if n == 8 {
                let opts = OracleOptions {
                    exhaustive_limit: 0,
                    constructive_fallback: false,
                };
                let o = oracle_best_strategy_with(&p, &d, limit, n, &opts).map_err(|e| e.to_string())?;
                strategies.push(o.strategy);
                let all = deception_core::prob::seq::all_sequences(2, n, 1 << 20).map_err(|e| e.to_string())?;
                for _ in 0..50 {
                    let mut order = all.clone();
                    order.shuffle(&mut rng);
                    strategies.push(Strategy::from_guesses(n, 2, order).map_err(|e| e.to_string())?);
                }
            }
            for s in &strategies {
                let r = exact_expected_guesses(&p, s, &d, limit).map_err(|e| e.to_string())?;
                violations += converse_violations(&p, &d, limit, n, r.exponent_estimate)?;
                tested += 1;
            }
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    Ok(format!(
        "0 violations over {tested} strategies x 50 q x {} eps",
        EPSILONS.len()
    ))
}

fn oracle_dominance() -> Check {
    let d = hamming2();
    let mut instances = 0;
    let mut worst_ratio: f64 = 1.0;
    for p in [0.5, 0.3, 0.1] {
        let p = binary(p);
        for n in 1..=4 {
            for limit in [0.0, 0.25, 0.5] {
                let exhaustive = oracle_best_strategy_with(
                    &p,
                    &d,
                    limit,
                    n,
                    &OracleOptions {
                        exhaustive_limit: MAX_EXHAUSTIVE,
                        constructive_fallback: false,
                    },
                )
                .map_err(|e| e.to_string())?;
                let greedy = oracle_best_strategy_with(
                    &p,
                    &d,
                    limit,
                    n,
                    &OracleOptions {
                        exhaustive_limit: 0,
                        constructive_fallback: false,
                    },
                )
                .map_err(|e| e.to_string())?;
                let constructed = build_strategy(n, &p, &d, limit).map_err(|e| e.to_string())?;
                let built = exact_expected_guesses(&p, &constructed, &d, limit).map_err(|e| e.to_string())?;
                let tag = || format!("p={:?} n={n} D={limit}", p.probs());
                ensure(exhaustive.method == OracleMethod::Exhaustive, || {
                    format!("{}: not exhaustive", tag())
                })?;
                ensure(greedy.method == OracleMethod::Greedy, || {
                    format!("{}: not greedy", tag())
                })?;
                ensure(greedy.approximation_factor == GREEDY_APPROXIMATION, || {
                    format!("{}: greedy factor not recorded", tag())
                })?;
                let (ex, gr) = (exhaustive.report.mean_guesses, greedy.report.mean_guesses);
                ensure(ex <= built.mean_guesses + 1e-9, || {
                    format!("{}: oracle {ex} > constructed {}", tag(), built.mean_guesses)
                })?;
                ensure(ex <= gr + 1e-9 && gr <= GREEDY_APPROXIMATION * ex + 1e-9, || {
                    format!("{}: exhaustive {ex}, greedy {gr}", tag())
                })?;
                let bad = converse_violations(&p, &d, limit, n, exhaustive.report.exponent_estimate)?;
                ensure(bad == 0, || format!("{}: {bad} converse violations", tag()))?;
                worst_ratio = worst_ratio.max(gr / ex);
                instances += 1;
            }
        }
    }
    Ok(format!(
        "{instances} instances; worst greedy/exhaustive ratio {worst_ratio:.4} (flag {GREEDY_APPROXIMATION})"
    ))
}

fn side_information() -> Check {
    let d = hamming2();
    let px = binary(0.3);
    let diag = JointPmf::diagonal(&px);
    for limit in [0.0, 0.25] {
        let v = deception_exponent_si(&diag, &d, limit)
            .map_err(|e| e.to_string())?
            .value;
        ensure(v.abs() <= 1e-6, || format!("diagonal D={limit}: E_Z = {v}"))?;
    }
    let indep = JointPmf::product(&px, &binary(0.6));
    let mut worst: f64 = 0.0;
    for limit in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let ez = deception_exponent_si(&indep, &d, limit)
            .map_err(|e| e.to_string())?
            .value;
        let e = deception_exponent(&px, &d, limit).map_err(|e| e.to_string())?.value;
        worst = worst.max((ez - e).abs());
    }
    ensure(worst <= 1e-3, || format!("independent: max |E_Z - E| = {worst}"))?;
    let bsc = JointPmf::binary_symmetric(0.1).unwrap();
    let ez = deception_exponent_si(&bsc, &d, 0.0).map_err(|e| e.to_string())?.value;
    let e = deception_exponent(&bsc.x_marginal(), &d, 0.0)
        .map_err(|e| e.to_string())?
        .value;
    ensure(ez <= e - 0.01, || format!("BSC: E_Z(0) = {ez}, E(0) = {e}"))?;
    let fine = deception_exponent_si_with(&bsc, &d, 0.0, &ExponentOptions::with_resolution(0.002))
        .map_err(|e| e.to_string())?
        .value;
    ensure((fine - ez).abs() <= 1e-3, || {
        format!("BSC: default {ez} vs fine grid {fine}")
    })?;
    let closed = 1.6f64.ln();
    ensure((fine - closed).abs() <= 1e-3, || {
        format!("BSC: fine grid {fine} vs ln 1.6 = {closed}")
    })?;
    Ok(format!(
        "diagonal 0; independent max gap {worst:.1e}; BSC E_Z(0) = {ez:.6} (fine {fine:.6}, ln 1.6 = {closed:.6}) < E(0) = {e:.6}"
    ))
}

fn coverings() -> Check {
    let d = hamming2();
    let mut total = 0;
    for &limit in &CELLS_D {
        for &n in &CELLS_N {
            for k in 0..=n {
                let t = TypeComposition::new(vec![k, n - k]).unwrap();
                let c = build_covering(&t, &d, limit).map_err(|e| e.to_string())?;
                ensure(c.verified, || {
                    format!("type {:?} at D={limit} not verified", t.counts())
                })?;
                total += 1;
            }
        }
    }
    let c = build_covering(&TypeComposition::new(vec![2, 2]).unwrap(), &d, 0.25).map_err(|e| e.to_string())?;
    ensure(c.verified && c.len() <= 3, || {
        format!("(2,2) at D=0.25: |B| = {}", c.len())
    })?;
    Ok(format!(
        "{total}/{total} coverings verified; (2,2) at D=0.25 has |B| = {}",
        c.len()
    ))
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_deception"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr))
    })?;
    Ok(out.stdout)
}

fn reproducibility() -> Check {
    let d = hamming2();
    let p = binary(0.3);
    let s = build_strategy(10, &p, &d, 0.1).map_err(|e| e.to_string())?;
    let report = || -> Result<String, String> {
        let r = simulate_attack(&p, &s, &d, 0.1, 20_000, 42).map_err(|e| e.to_string())?;
        serde_json::to_string(&r).map_err(|e| e.to_string())
    };
    let (a, b) = (report()?, report()?);
    ensure(a == b, || "AttackReport JSON differs between runs".into())?;

    let invocations: [&[&str]; 3] = [
        &["sweep", "--source", "0.3,0.7", "--grid", "0,0.1,0.2,0.3"],
        &[
            "attack", "--source", "0.3,0.7", "--D", "0.1", "--n", "10", "--mode", "mc", "--trials", "20000", "--seed",
            "7", "--format", "csv",
        ],
        &["rd-curve", "--source", "0.2,0.3,0.5", "--grid", "0,0.1,0.2,0.4"],
    ];
    for args in invocations {
        let (x, y) = (run_cli(args)?, run_cli(args)?);
        ensure(x == y, || format!("{args:?}: CSV output differs between runs"))?;
    }
    Ok("AttackReport JSON and 3 CLI CSV outputs byte-identical across two runs".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("closed-form binary RD (tol 1e-6, < 5 s)", closed_form_rd),
        ("Renyi identity at D=0 (tol 1e-4, < 2 min)", renyi_identity),
        (
            "binary uniform E(D) = ln2 - h(D) (tol 1e-3)",
            binary_uniform_closed_form,
        ),
        ("finite-n achievability (9 cells, < 5 min)", achievability),
        ("finite-n converse (zero violations)", converse),
        ("oracle dominance on micro instances", oracle_dominance),
        ("side-information sanity", side_information),
        ("covering verification", coverings),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} ({elapsed:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why} ({elapsed:.2?})", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
