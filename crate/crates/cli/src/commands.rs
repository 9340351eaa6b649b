//! One function per subcommand. Each returns a report and the series to plot;
//! [`run`] renders them in the requested format.

use std::fs;
use std::path::Path;

use dixlab_core::acceptance::{run_all, CriterionResult};
use dixlab_core::{
    build_counterexample, cesaro, classify_good_upper_bound, classify_limit_condition, classify_sedaev,
    counterexample_report, dx_bound_constant, heat_kernel_matrix, heat_kernel_series, lidskii_cutoff_series,
    marcinkiewicz_norm_function, marcinkiewicz_norm_sequence, partial_sum_ratio, singular_values,
    trace_estimate_compare, ClassifierConfig, LogValue, MatrixSpec, SequenceNorm, StepFunction, WindowSeries,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, Command, Failure, Format, NGrid};

/// Fraction of the grid treated as its tail.
const TAIL: f64 = 0.1;
/// Tail oscillation below which a series counts as converged.
const CONVERGED: f64 = 1e-2;
const RANDOM_DIM: usize = 64;

pub struct Output {
    pub text: String,
    /// False only when `accept` saw a failing criterion.
    pub ok: bool,
}

#[derive(Serialize)]
struct Artifact<'a> {
    schema: &'static str,
    command: String,
    config: Value,
    report: Value,
    series: &'a [WindowSeries],
}

pub fn run(cli: &Cli) -> Result<Output, Failure> {
    let (report, series, ok) = match cli.command {
        Command::Norm => with_ok(norm(cli)?),
        Command::PsiCheck => with_ok(psi_check(cli)?),
        Command::Estimate => with_ok(estimate(cli)?),
        Command::Lidskii => with_ok(lidskii(cli)?),
        Command::Counterexample => with_ok(counterexample(cli)?),
        Command::Heatkernel => with_ok(heatkernel(cli)?),
        Command::Accept => accept(),
    };
    let text = match cli.format {
        Format::Json => {
            let artifact = Artifact {
                schema: dixlab_core::series::SCHEMA_VERSION,
                command: cli.command.to_string(),
                config: config_echo(cli),
                report,
                series: &series,
            };
            let mut s = serde_json::to_string_pretty(&artifact).expect("artifact serializes");
            s.push('\n');
            s
        }
        Format::Csv => dixlab_core::SeriesDocument::new(series).to_csv(),
    };
    Ok(Output { text, ok })
}

fn with_ok((report, series): (Value, Vec<WindowSeries>)) -> (Value, Vec<WindowSeries>, bool) {
    (report, series, true)
}

fn config_echo(cli: &Cli) -> Value {
    let pts = cli.grid.points();
    json!({
        "psi": cli.psi.to_string(),
        "mode": cli.mode.to_string(),
        "alpha": cli.alpha,
        "kmax": cli.kmax,
        "ngrid": cli.ngrid.map(|NGrid(a, b)| format!("{a}:{b}")),
        "grid": { "u_min": pts[0], "u_max": cli.grid.last(), "points": pts.len() },
        "seed": cli.seed,
        "input": cli.input.as_ref().map(|p| p.display().to_string()),
        "matrix": cli.matrix.as_ref().map(|p| p.display().to_string()),
    })
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Config(format!("reading {}: {e}", path.display())))
}

fn load_step(cli: &Cli) -> Result<Option<StepFunction>, Failure> {
    cli.input
        .as_deref()
        .map(|p| StepFunction::parse_text(&read(p)?).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))))
        .transpose()
}

fn load_matrix(cli: &Cli) -> Result<Option<MatrixSpec>, Failure> {
    cli.matrix
        .as_deref()
        .map(|p| MatrixSpec::parse_text(&read(p)?).map_err(|e| Failure::Config(format!("{}: {e}", p.display()))))
        .transpose()
}

fn require_step(cli: &Cli) -> Result<StepFunction, Failure> {
    load_step(cli)?.ok_or_else(|| Failure::Config(format!("`{}` needs --input", cli.command)))
}

/// Tail envelope, and the midpoint when the tail has settled.
fn tail_summary(s: &WindowSeries) -> Value {
    let (lo, hi) = s.tail_envelope(TAIL);
    json!({
        "meta": s.meta,
        "tail_min": lo,
        "tail_max": hi,
        "value": (hi - lo < CONVERGED).then_some(0.5 * (lo + hi)),
    })
}

fn norm(cli: &Cli) -> Result<(Value, Vec<WindowSeries>), Failure> {
    if let Some(x) = load_step(cli)? {
        let value = marcinkiewicz_norm_function(&x, &cli.psi)?;
        let ratio = partial_sum_ratio(&x.rearranged()?, &cli.psi, &cli.grid)?;
        return Ok((json!({ "source": "input", "norm": value }), vec![ratio]));
    }
    if let Some(t) = load_matrix(cli)? {
        let s = singular_values(&t)?;
        let value = marcinkiewicz_norm_sequence(&s, SequenceNorm::Weight(cli.psi))?;
        let shifted = marcinkiewicz_norm_sequence(&s, SequenceNorm::ShiftedLog)?;
        let u: Vec<f64> = (1..=s.len()).map(|n| (n as f64).ln()).collect();
        let series = WindowSeries::new("singular values", u, s)?;
        return Ok((
            json!({ "source": "matrix", "norm": value, "norm_shifted_log": shifted }),
            vec![series],
        ));
    }
    Err(Failure::Config("`norm` needs --input or --matrix".into()))
}

fn psi_check(cli: &Cli) -> Result<(Value, Vec<WindowSeries>), Failure> {
    let psi = cli.psi;
    let cfg = ClassifierConfig::default();
    let pts = cli.grid.points();
    // logarithms, since psi(t psi(t))/psi(t) overflows for power weights
    let doubling = WindowSeries::from_fn("ln(psi(2t)/psi(t))", &cli.grid, |u| {
        let t = LogValue::from_ln(u);
        Ok(psi.value(t.mul(LogValue::from_real(2.0))).div(psi.value(t)).ln_f64())
    })?;
    let sedaev = WindowSeries::from_fn("ln(psi(t psi(t))/psi(t))", &cli.grid, |u| {
        let t = LogValue::from_ln(u);
        let p = psi.value(t);
        Ok(psi.value(t.mul(p)).div(p).ln_f64())
    })?;
    let report = json!({
        "psi": psi.to_string(),
        "good_upper_bound": classify_good_upper_bound(&psi, &cfg),
        "limit_condition": classify_limit_condition(&psi, &cfg),
        "sedaev": classify_sedaev(&psi, &cfg),
        "concavity_defect": psi.concavity_defect(pts),
    });
    Ok((report, vec![doubling, sedaev]))
}

fn estimate(cli: &Cli) -> Result<(Value, Vec<WindowSeries>), Failure> {
    let x = require_step(cli)?.rearranged()?;
    let psr = partial_sum_ratio(&x, &cli.psi, &cli.grid)?;
    let cut = lidskii_cutoff_series(&x, &cli.psi, cli.mode, &cli.grid)?;
    let psr_m = cesaro(&psr)?;
    let cut_m = cesaro(&cut)?;
    let dx = match dx_bound_constant(&x, &cli.psi, &cli.grid) {
        Ok(b) => json!(b),
        Err(e @ dixlab_core::Error::Divergence { .. }) => json!({ "divergence": e.to_string() }),
        Err(e) => return Err(e.into()),
    };
    let report = json!({
        "psi": cli.psi.to_string(),
        "mode": cli.mode.to_string(),
        "tails": [tail_summary(&psr), tail_summary(&cut), tail_summary(&psr_m), tail_summary(&cut_m)],
        "dx_bound": dx,
    });
    Ok((report, vec![psr, cut, psr_m, cut_m]))
}

fn lidskii(cli: &Cli) -> Result<(Value, Vec<WindowSeries>), Failure> {
    let (t, source) = match load_matrix(cli)? {
        Some(t) => (t, "matrix".to_string()),
        None => {
            let t = MatrixSpec::random_batch(1, RANDOM_DIM, cli.seed)?.remove(0);
            (
                t,
                format!("random gaussian {RANDOM_DIM}x{RANDOM_DIM}, seed {}", cli.seed),
            )
        }
    };
    let NGrid(a, b) = cli.ngrid.unwrap_or(NGrid(1, t.dim() as u64));
    let cmp = trace_estimate_compare(&t, &cli.psi, a, b)?;
    let series = cmp.to_series()?;
    let report = json!({ "source": source, "dim": t.dim(), "comparison": cmp });
    Ok((report, series))
}

fn counterexample(cli: &Cli) -> Result<(Value, Vec<WindowSeries>), Failure> {
    let report = counterexample_report(cli.kmax)?;
    let mut series = Vec::new();
    if !report.window_means.is_empty() {
        let (k, w): (Vec<f64>, Vec<f64>) = report.window_means.iter().map(|&(k, w)| (k as f64, w)).unzip();
        series.push(WindowSeries::new("window_mean by k", k, w)?);
    }
    let (u, r): (Vec<f64>, Vec<f64>) = report.sedaev_ratios.iter().copied().unzip();
    series.push(WindowSeries::new(
        "psi(n_x(1/t))/psi(t) for exp(sqrt(log t)) by ln t",
        u,
        r,
    )?);
    let x = build_counterexample(cli.kmax)?.rearranged()?;
    series.push(partial_sum_ratio(&x, &dixlab_core::WeightFunction::Log, &cli.grid)?);
    Ok((json!(report), series))
}

fn heatkernel(cli: &Cli) -> Result<(Value, Vec<WindowSeries>), Failure> {
    if let Some(x) = load_step(cli)? {
        let h = heat_kernel_series(&x, cli.alpha, &cli.grid)?;
        let psr = partial_sum_ratio(&x.rearranged()?, &cli.psi, &cli.grid)?;
        let report = json!({ "source": "input", "alpha": cli.alpha, "tails": [tail_summary(&h), tail_summary(&psr)] });
        return Ok((report, vec![h, psr]));
    }
    if let Some(t) = load_matrix(cli)? {
        let h = heat_kernel_matrix(&t, cli.alpha, &cli.grid)?;
        let report = json!({ "source": "matrix", "alpha": cli.alpha, "tails": [tail_summary(&h)] });
        return Ok((report, vec![h]));
    }
    Err(Failure::Config("`heatkernel` needs --input or --matrix".into()))
}

/// Timings go to stderr only, so the artifact stays reproducible.
fn accept() -> (Value, Vec<WindowSeries>, bool) {
    let results: Vec<CriterionResult> = run_all();
    for r in &results {
        eprintln!("{r}");
    }
    let ok = results.iter().all(|r| r.passed);
    let rows: Vec<Value> = results
        .iter()
        .map(|r| json!({ "id": r.id, "title": r.title, "passed": r.passed, "detail": r.detail }))
        .collect();
    let ids = results.iter().map(|r| r.id as f64).collect();
    let passed = results.iter().map(|r| if r.passed { 1.0 } else { 0.0 }).collect();
    let series = WindowSeries::new("acceptance: passed by criterion", ids, passed).expect("ids increase");
    (json!({ "all_passed": ok, "criteria": rows }), vec![series], ok)
}
