//! One function per subcommand. Each renders its full output as text.

use deception_core::exponent::{deception_exponent_si_with, deception_exponent_with, ExponentOptions};
use deception_core::guessing::{build_covering_with, simulate_attack, CoveringOptions};
use deception_core::prob::seq::{space_size, DEFAULT_SEQUENCE_LIMIT};
use deception_core::rd::rate_distortion_with;
use deception_core::side_info::build_si_strategy;
use deception_core::strategy_io::write_strategy;
use deception_core::{
    build_strategy, conditional_rate_distortion, converse_lower_bound, evaluate_si_attack, exact_expected_guesses,
    AttackMode, AttackReport, Error, ExponentResult, Pmf, Strategy, TypeComposition,
};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::output::{csv_preamble, csv_rows, meta, Render};
use crate::spec::{Format, Mode, Problem, Source};

/// Sequence length used by the sweep's converse column when none is given.
pub const DEFAULT_CONVERSE_N: usize = 100;
pub const DEFAULT_CONVERSE_EPS: f64 = 0.1;
pub const DEFAULT_TRIALS: u64 = 100_000;

pub struct Outcome {
    pub text: String,
    /// False when a solver reported non-convergence at a reported point.
    pub converged: bool,
    /// Extra file to write (e.g. the covering export), with its contents.
    pub side_file: Option<String>,
}

pub struct Context<'a> {
    pub problem: &'a Problem,
    pub render: Render,
    pub format: Option<Format>,
}

impl Context<'_> {
    fn seed(&self) -> u64 {
        self.problem.spec.seed.unwrap_or(0)
    }

    fn meta(&self, command: &str) -> Map<String, Value> {
        meta(self.problem, command, self.seed(), self.render.units)
    }

    fn exponent_options(&self) -> ExponentOptions {
        ExponentOptions {
            resolution: self.problem.spec.grid_resolution,
            rd: self.problem.rd_options(),
            ..Default::default()
        }
    }

    fn exponent(&self, d_limit: f64) -> Result<ExponentResult, CliError> {
        let p = self.problem;
        let opts = self.exponent_options();
        Ok(match &p.source {
            Source::Marginal(q) => deception_exponent_with(q, &p.distortion, d_limit, &opts)?,
            Source::Joint(j) => deception_exponent_si_with(j, &p.distortion, d_limit, &opts)?,
        })
    }

    /// `R(D, P)`, or `R_{X|Z}(D, P)` for joint sources.
    fn source_rate(&self, d_limit: f64) -> Result<f64, CliError> {
        let p = self.problem;
        Ok(match &p.source {
            Source::Marginal(q) => rate_distortion_with(q, &p.distortion, d_limit, &p.rd_options())?.rate,
            Source::Joint(j) => conditional_rate_distortion(j, &p.distortion, d_limit)?.rate,
        })
    }
}

fn sweep_header(cells: usize) -> Vec<String> {
    let mut h = vec!["D".to_string(), "E".to_string()];
    h.extend((0..cells).map(|i| format!("q_{i}")));
    h.push("R_D_P".into());
    h.push("converse_bound".into());
    h
}

struct SweepRow {
    d: f64,
    result: ExponentResult,
    rate_p: f64,
    converse: Option<f64>,
}

impl SweepRow {
    fn cells(&self, r: &Render) -> Vec<String> {
        let mut row = vec![r.cell(self.d), r.cell(r.info(self.result.value))];
        row.extend(self.result.argmax_q.probs().iter().map(|v| r.cell(*v)));
        row.push(r.cell(r.info(self.rate_p)));
        row.push(self.converse.map_or(String::new(), |v| r.cell(r.info(v))));
        row
    }

    fn json(&self, r: &Render) -> Value {
        json!({
            "D": self.d,
            "E": r.info(self.result.value),
            "argmax_q": self.result.argmax_q.probs(),
            "R_D_P": r.info(self.rate_p),
            "converse_bound": self.converse.map(|v| r.info(v)),
            "converged": self.result.converged,
        })
    }
}

fn sweep_row(ctx: &Context<'_>, d_limit: f64) -> Result<SweepRow, CliError> {
    let p = ctx.problem;
    let result = ctx.exponent(d_limit)?;
    let rate_p = ctx.source_rate(d_limit)?;
    let converse = match (&p.source, &result.argmax_q) {
        (Source::Marginal(src), deception_core::Argmax::Marginal(q)) => Some(converse_lower_bound(
            q,
            src,
            &p.distortion,
            d_limit,
            p.spec.converse_eps.unwrap_or(DEFAULT_CONVERSE_EPS),
            p.spec.n.unwrap_or(DEFAULT_CONVERSE_N),
        )?),
        _ => None,
    };
    Ok(SweepRow {
        d: d_limit,
        result,
        rate_p,
        converse,
    })
}

pub fn exponent(ctx: &Context<'_>) -> Result<Outcome, CliError> {
    let d_limit = ctx.problem.d_limit()?;
    let row = sweep_row(ctx, d_limit)?;
    let r = &ctx.render;
    let res = &row.result;
    let text = match ctx.format.unwrap_or(Format::Json) {
        Format::Csv => {
            csv_preamble(&ctx.meta("exponent")) + &csv_rows(&sweep_header(res.argmax_q.probs().len()), &[row.cells(r)])
        }
        Format::Json => {
            let mut m = ctx.meta("exponent");
            let argmax = match &res.argmax_q {
                deception_core::Argmax::Marginal(q) => json!(q.probs()),
                deception_core::Argmax::Joint(j) => json!(j),
            };
            let trace: Vec<Value> = res
                .objective_trace
                .iter()
                .map(|c| {
                    json!({
                        "start": c.start,
                        "start_value": r.info(c.start_value),
                        "point": c.point,
                        "value": r.info(c.value),
                    })
                })
                .collect();
            let extra = json!({
                "D": d_limit,
                "value": r.info(res.value),
                "value_nats": res.value,
                "value_bits": res.value / std::f64::consts::LN_2,
                "argmax_q": argmax,
                "rate_at_argmax": r.info(res.rate_at_argmax),
                "divergence_at_argmax": r.info(res.divergence_at_argmax),
                "R_D_P": r.info(row.rate_p),
                "converse_bound": row.converse.map(|v| r.info(v)),
                "converged": res.converged,
                "grid_resolution": res.grid_resolution,
                "refined": res.refined,
                "evaluations": res.evaluations,
                "unconverged_evaluations": res.unconverged_evaluations,
                "near_ties": res.near_ties,
                "objective_trace": trace,
            });
            m.extend(extra.as_object().expect("object").clone());
            r.json(Value::Object(m))
        }
    };
    Ok(Outcome {
        text,
        converged: res.converged,
        side_file: None,
    })
}

pub fn sweep(ctx: &Context<'_>) -> Result<Outcome, CliError> {
    let grid = ctx.problem.grid()?;
    let rows = grid.iter().map(|&d| sweep_row(ctx, d)).collect::<Result<Vec<_>, _>>()?;
    let converged = rows.iter().all(|r| r.result.converged);
    let r = &ctx.render;
    let text = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let cells = rows[0].result.argmax_q.probs().len();
            let body: Vec<Vec<String>> = rows.iter().map(|row| row.cells(r)).collect();
            csv_preamble(&ctx.meta("sweep")) + &csv_rows(&sweep_header(cells), &body)
        }
        Format::Json => {
            let mut m = ctx.meta("sweep");
            m.insert("rows".into(), rows.iter().map(|row| row.json(r)).collect());
            r.json(Value::Object(m))
        }
    };
    Ok(Outcome {
        text,
        converged,
        side_file: None,
    })
}

fn report_json(r: &Render, report: &AttackReport) -> Value {
    let (mode, trials) = match report.mode {
        AttackMode::Exact => ("exact", None),
        AttackMode::MonteCarlo { trials, .. } => ("mc", Some(trials)),
    };
    let comparison = report.theory_value.map(|t| {
        format!(
            "exponent_estimate {} vs theory {} (difference {})",
            r.number(r.info(report.exponent_estimate)),
            r.number(r.info(t)),
            r.number(r.info(report.exponent_estimate - t)),
        )
    });
    json!({
        "n": report.n,
        "mode": mode,
        "trials": trials,
        "mean_guesses": report.mean_guesses,
        "std_error": report.std_error,
        "exponent_estimate": r.info(report.exponent_estimate),
        "theory_value": report.theory_value.map(|v| r.info(v)),
        "uncovered_mass": report.uncovered_mass,
        "theory_comparison": comparison,
    })
}

pub fn attack(ctx: &Context<'_>) -> Result<Outcome, CliError> {
    let p = ctx.problem;
    let d_limit = p.d_limit()?;
    let n = p.n()?;
    let mode = match p.spec.mode.unwrap_or(Mode::Exact) {
        Mode::Exact => AttackMode::Exact,
        Mode::Mc => AttackMode::MonteCarlo {
            trials: p.spec.trials.unwrap_or(DEFAULT_TRIALS),
            seed: ctx.seed(),
        },
    };
    let d = &p.distortion;
    if mode == AttackMode::Exact {
        // Fail before the (possibly slow) strategy construction.
        let size = space_size(p.source.x_size(), n);
        if size > DEFAULT_SEQUENCE_LIMIT {
            return Err(CliError::Core(Error::SizeLimit {
                what: "enrollment space for exact evaluation",
                size,
                limit: DEFAULT_SEQUENCE_LIMIT,
            }));
        }
    }
    let (report, size, slack) = match &p.source {
        Source::Marginal(src) => {
            let s = build_strategy(n, src, d, d_limit)?;
            let report = match mode {
                AttackMode::Exact => exact_expected_guesses(src, &s, d, d_limit)?,
                AttackMode::MonteCarlo { trials, seed } => simulate_attack(src, &s, d, d_limit, trials, seed)?,
            };
            (report, s.len(), s.max_slack())
        }
        Source::Joint(j) => {
            let s = build_si_strategy(n, j, d, d_limit)?;
            let report = evaluate_si_attack(j, &s, d, d_limit, mode)?;
            let (size, slack) = match &s.layout {
                deception_core::side_info::SiLayout::Shared(inner) => (inner.len(), inner.max_slack()),
                deception_core::side_info::SiLayout::PerZType(blocks) => (
                    blocks.iter().map(|b| b.strategy.len()).max().unwrap_or(0),
                    blocks.iter().map(|b| b.strategy.max_slack()).fold(0.0, f64::max),
                ),
            };
            (report, size, slack)
        }
    };
    // The theoretical exponent is only available where the optimizer runs.
    let theory = match ctx.exponent(d_limit) {
        Ok(e) => Some(e),
        Err(CliError::Core(e)) if e.is_size_limit() => None,
        Err(e) => return Err(e),
    };
    let converged = theory.as_ref().is_none_or(|t| t.converged);
    let report = match &theory {
        Some(t) => report.with_theory(t.value),
        None => report,
    };

    let r = &ctx.render;
    let mut body = report_json(r, &report);
    let extra = body.as_object_mut().expect("object");
    extra.insert("D".into(), json!(d_limit));
    extra.insert("strategy_size".into(), json!(size));
    extra.insert("max_covering_slack".into(), json!(r.info(slack)));
    let text = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut m = ctx.meta("attack");
            m.extend(extra.clone());
            r.json(Value::Object(m))
        }
        Format::Csv => {
            let header: Vec<String> = [
                "n",
                "D",
                "mode",
                "trials",
                "mean_guesses",
                "std_error",
                "exponent_estimate",
                "theory_value",
                "uncovered_mass",
                "strategy_size",
            ]
            .map(String::from)
            .to_vec();
            let (mode_name, trials) = match report.mode {
                AttackMode::Exact => ("exact", String::new()),
                AttackMode::MonteCarlo { trials, .. } => ("mc", trials.to_string()),
            };
            let row = vec![
                n.to_string(),
                r.cell(d_limit),
                mode_name.into(),
                trials,
                r.cell(report.mean_guesses),
                r.cell(report.std_error),
                r.cell(r.info(report.exponent_estimate)),
                report.theory_value.map_or(String::new(), |v| r.cell(r.info(v))),
                r.cell(report.uncovered_mass),
                size.to_string(),
            ];
            csv_preamble(&ctx.meta("attack")) + &csv_rows(&header, &[row])
        }
    };
    Ok(Outcome {
        text,
        converged,
        side_file: None,
    })
}

pub fn covering(ctx: &Context<'_>) -> Result<Outcome, CliError> {
    let p = ctx.problem;
    let d_limit = p.d_limit()?;
    let counts = p
        .spec
        .type_counts
        .clone()
        .ok_or_else(|| CliError::Invalid("type counts ('type_counts' or --counts) are required".into()))?;
    let t = TypeComposition::new(counts)?;
    let opts = CoveringOptions {
        seed: ctx.seed(),
        rd: p.rd_options(),
        ..Default::default()
    };
    let c = build_covering_with(&t, &p.distortion, d_limit, &opts)?;
    let r = &ctx.render;
    let pool = serde_json::to_value(c.pool).expect("pool serializes");
    let stats = json!({
        "counts": t.counts(),
        "n": t.n(),
        "D": d_limit,
        "size": c.len(),
        "class_size": c.class_size.to_string(),
        "log_size_rate": r.info(c.log_size_rate()),
        "rate": r.info(c.rate),
        "delta_n": r.info(c.slack),
        "verified": c.verified,
        "pool": pool,
    });
    let text = match ctx.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut m = ctx.meta("covering");
            m.extend(stats.as_object().expect("object").clone());
            r.json(Value::Object(m))
        }
        Format::Csv => {
            let header = [
                "n",
                "D",
                "size",
                "class_size",
                "log_size_rate",
                "rate",
                "delta_n",
                "verified",
            ]
            .map(String::from)
            .to_vec();
            let row = vec![
                t.n().to_string(),
                r.cell(d_limit),
                c.len().to_string(),
                c.class_size.to_string(),
                r.cell(r.info(c.log_size_rate())),
                r.cell(r.info(c.rate)),
                r.cell(r.info(c.slack)),
                c.verified.to_string(),
            ];
            csv_preamble(&ctx.meta("covering")) + &csv_rows(&header, &[row])
        }
    };
    Ok(Outcome {
        text,
        converged: true,
        side_file: Some(write_strategy(&Strategy::from_covering(&c, p.distortion.y_size()))),
    })
}

pub fn rd_curve(ctx: &Context<'_>) -> Result<Outcome, CliError> {
    let p = ctx.problem;
    let grid = p.grid()?;
    let opts = p.rd_options();
    let points = match &p.source {
        Source::Marginal(q) => deception_core::rd::rd_curve_with(q, &p.distortion, &grid, &opts)?,
        Source::Joint(j) => grid
            .iter()
            .map(|&d| deception_core::rd::conditional_rate_distortion_with(j, &p.distortion, d, &opts))
            .collect::<Result<Vec<_>, _>>()?,
    };
    let converged = points.iter().all(|x| x.converged);
    let r = &ctx.render;
    let text = match ctx.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let header = ["D", "R", "achieved_D", "slope", "iterations", "converged", "gap"]
                .map(String::from)
                .to_vec();
            let rows: Vec<Vec<String>> = points
                .iter()
                .map(|x| {
                    vec![
                        r.cell(x.target_d),
                        r.cell(r.info(x.rate)),
                        r.cell(x.achieved_d),
                        r.cell(x.slope),
                        x.iterations.to_string(),
                        x.converged.to_string(),
                        r.cell(x.gap),
                    ]
                })
                .collect();
            csv_preamble(&ctx.meta("rd-curve")) + &csv_rows(&header, &rows)
        }
        Format::Json => {
            let mut m = ctx.meta("rd-curve");
            let rows: Vec<Value> = points
                .iter()
                .map(|x| {
                    json!({
                        "D": x.target_d,
                        "R": r.info(x.rate),
                        "achieved_D": x.achieved_d,
                        "slope": if x.slope.is_finite() { json!(x.slope) } else { json!("inf") },
                        "iterations": x.iterations,
                        "converged": x.converged,
                        "gap": x.gap,
                        "test_channel": x.test_channel,
                    })
                })
                .collect();
            m.insert("rows".into(), rows.into());
            r.json(Value::Object(m))
        }
    };
    Ok(Outcome {
        text,
        converged,
        side_file: None,
    })
}

/// Uniform source over `k` symbols, used when only a type is given.
pub fn uniform(k: usize) -> Result<Pmf, CliError> {
    Ok(Pmf::uniform(k)?)
}
