//! The ten acceptance checks, shared by `dixlab accept` and the `acceptance` test target.
//!
//! Each check returns a [`CriterionResult`]; a computation error inside a
//! check counts as a failure and its message becomes the detail line.

use std::fmt;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::counterexample::{build_counterexample, gap_window, norm_limit, sedaev_discrepancy, window_mean};
use crate::error::Result;
use crate::functionals::{
    check_adjusted_agreement, check_lower_estimate_lemma, check_upper_estimate_lemmas, heat_kernel_series,
    partial_sum_ratio_at, pi_window_step,
};
use crate::logscale::{Dd, LogValue};
use crate::piecewise::{check_eq3, Decreasing, DecreasingFunction, Dilation, StepFunction};
use crate::series::Grid;
use crate::spectral::{
    eigen_cutoff_sum, heat_kernel_matrix, ringrose_split, spectrum, trace_estimate_compare, triangularize, weyl_check,
    MatrixSpec, C64,
};
use crate::weights::{
    classify_good_upper_bound, classify_limit_condition, classify_sedaev, marcinkiewicz_norm_function,
    ClassifierConfig, Verdict, WeightFunction,
};

/// Seed of every random draw in the suite.
pub const SUITE_SEED: u64 = 42;

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: f64,
    pub budget_ms: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] AC{:<2} {} ({:.0} ms of {:.0} ms): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.elapsed_ms,
            self.budget_ms,
            self.detail
        )
    }
}

type Check = fn() -> Result<(bool, String)>;

const CRITERIA: [(u8, &str, u64, Check); 10] = [
    (1, "jump-sum identity on random step functions", 1, eq3_exactness),
    (2, "counterexample norm bound", 1, counterexample_norm),
    (3, "counterexample window gap", 5, counterexample_gap),
    (4, "adjusted-cutoff sandwich", 5, adjusted_sandwich),
    (5, "weight classifiers", 1, weight_classifiers),
    (6, "exp(sqrt(log t)) discrepancy", 1, sedaev_example),
    (7, "heat kernel normalisation", 5, heat_kernel),
    (8, "spectral layer", 5, spectral_layer),
    (9, "harmonic matrix comparison", 5, lidskii_matrix),
    (10, "window normalisation and dilation", 2, normalisation_and_dilation),
];

fn run(id: u8, title: &'static str, budget_s: u64, check: Check) -> CriterionResult {
    let start = Instant::now();
    let outcome = check();
    let elapsed = start.elapsed();
    let budget = Duration::from_secs(budget_s);
    let (mut passed, mut detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    if elapsed > budget {
        passed = false;
        detail.push_str("; over time budget");
    }
    CriterionResult {
        id,
        title,
        passed,
        detail,
        elapsed_ms: elapsed.as_secs_f64() * 1e3,
        budget_ms: budget.as_secs_f64() * 1e3,
    }
}

/// Runs one criterion by number, `1..=10`.
pub fn run_criterion(id: u8) -> Option<CriterionResult> {
    CRITERIA
        .iter()
        .find(|c| c.0 == id)
        .map(|&(id, title, budget, check)| run(id, title, budget, check))
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA
        .iter()
        .map(|&(id, title, budget, check)| run(id, title, budget, check))
        .collect()
}

fn ln_close(a: LogValue, b: LogValue, tol: f64) -> bool {
    match (a.ln(), b.ln()) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).to_f64().abs() <= tol,
        _ => false,
    }
}

/// Random nonincreasing step function with at most 16 blocks.
fn random_decreasing(rng: &mut ChaCha8Rng) -> Result<StepFunction> {
    let blocks = rng.random_range(1..=16);
    let mut values: Vec<f64> = (0..blocks).map(|_| rng.random_range(-10.0..5.0)).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    let pieces: Vec<(LogValue, LogValue)> = values
        .iter()
        .map(|&v| (LogValue::from_ln(rng.random_range(-3.0..3.0)), LogValue::from_ln(v)))
        .collect();
    StepFunction::from_blocks(&pieces)
}

fn eq3_exactness() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..200 {
        let f = random_decreasing(&mut rng)?;
        let values = f.values().to_vec();
        for j in 0..5 {
            // every other cutoff sits exactly on a block value
            let level = if j % 2 == 0 {
                LogValue::from_ln(rng.random_range(-12.0..6.0))
            } else {
                values[rng.random_range(0..values.len())]
            };
            let (lhs, rhs) = check_eq3(&f, level)?;
            if let (Some(a), Some(b)) = (lhs.ln(), rhs.ln()) {
                worst = worst.max((a - b).to_f64().abs());
            }
            if !ln_close(lhs, rhs, 1e-10) {
                failures += 1;
            }
        }
    }
    Ok((
        failures == 0,
        format!("1000 cutoffs, {failures} mismatches, worst |ln(lhs/rhs)| = {worst:.2e}"),
    ))
}

fn counterexample_norm() -> Result<(bool, String)> {
    let x = build_counterexample(500)?;
    let norm = marcinkiewicz_norm_function(&x, &WeightFunction::Log)?;
    let limit = norm_limit();
    Ok((norm <= limit, format!("norm = {norm:.6} <= {limit:.6}")))
}

fn counterexample_gap() -> Result<(bool, String)> {
    let x = build_counterexample(500)?.rearranged()?;
    let mut ok = true;
    let mut detail = Vec::new();
    for k in [100, 300, 500] {
        let g = gap_window(&x, k)?;
        ok &= g >= 0.9;
        detail.push(format!("gap(k={k}) = {g:.6}"));
    }
    let w = window_mean(500)?;
    ok &= (0.997..=1.0).contains(&w);
    detail.push(format!("window_mean(500) = {w:.6}"));
    Ok((ok, detail.join(", ")))
}

fn adjusted_sandwich() -> Result<(bool, String)> {
    let psi = WeightFunction::Log;
    let reciprocal = DecreasingFunction::Reciprocal { scale: 1.0 };
    let derivative = DecreasingFunction::WeightDerivative(psi);
    let blocks = build_counterexample(40)?.rearranged()?;
    let short = Grid::geometric(1.0, 1e4, 64)?;
    // reaches past the last block, which ends near e^(40 + e^40)
    let long = Grid::geometric(1.0, 3e17, 64)?;
    let cases: [(&str, &dyn Decreasing, &Grid); 3] = [
        ("min(1,1/s)", &reciprocal, &short),
        ("psi'", &derivative, &short),
        ("counterexample(40)", &blocks, &long),
    ];
    let mut failing = Vec::new();
    let mut worst_lemma = 0.0f64;
    let mut worst_excess = 0.0f64;
    let mut worst_gap = 0.0f64;
    for (name, x, grid) in cases {
        for n in [2u32, 8, 32] {
            let upper = check_upper_estimate_lemmas(x, &psi, n, grid)?;
            let lower = check_lower_estimate_lemma(x, &psi, n, grid)?;
            let agree = check_adjusted_agreement(x, &psi, n, grid)?;
            let lemma = upper
                .simple_violation
                .max(upper.adjusted_violation)
                .max(lower.violation);
            if lemma != 0.0 || agree.max_excess > 1e-12 {
                failing.push(format!("{name} at n = {n}"));
            }
            worst_lemma = worst_lemma.max(lemma);
            worst_excess = worst_excess.max(agree.max_excess);
            worst_gap = worst_gap.max(agree.max_gap);
        }
    }
    let mut detail =
        format!("lemma violation {worst_lemma:e}, agreement excess {worst_excess:.2e} (largest gap {worst_gap:.4})");
    if !failing.is_empty() {
        detail.push_str(&format!("; failing: {}", failing.join(", ")));
    }
    Ok((failing.is_empty(), detail))
}

fn weight_classifiers() -> Result<(bool, String)> {
    let cfg = ClassifierConfig::default();
    let (log, esl, pow) = (
        WeightFunction::Log,
        WeightFunction::ExpSqrtLog,
        WeightFunction::power(0.5)?,
    );
    let classes = |psi: &WeightFunction| {
        [
            classify_good_upper_bound(psi, &cfg),
            classify_limit_condition(psi, &cfg),
            classify_sedaev(psi, &cfg),
        ]
    };
    let [l4, l6, l9] = classes(&log);
    let [e4, _, e9] = classes(&esl);
    let [p4, p6, p9] = classes(&pow);
    let half = 0.5f64.exp();
    let ok = l4.holds()
        && l6.holds()
        && l9.holds()
        && e4.holds()
        && e9.verdict == Verdict::Fails
        && (e9.estimate - half).abs() <= 1e-2
        && p4.holds()
        && (p4.estimate - 2f64.sqrt()).abs() <= 1e-6
        && p6.verdict == Verdict::Fails
        && p9.verdict == Verdict::Diverges;
    let v = |c: &crate::weights::Classification| format!("{:?}", c.verdict).to_lowercase();
    Ok((
        ok,
        format!(
            "log {}/{}/{}; exp_sqrt_log {}/{} (est {:.5}); power(1/2) {} (est {:.9})/{}/{}",
            v(&l4),
            v(&l6),
            v(&l9),
            v(&e4),
            v(&e9),
            e9.estimate,
            v(&p4),
            p4.estimate,
            v(&p6),
            v(&p9)
        ),
    ))
}

fn sedaev_example() -> Result<(bool, String)> {
    let (_, ratio) = sedaev_discrepancy(&[1e8])?[0];
    let want = 0.5f64.exp();
    Ok((
        (ratio - want).abs() <= 0.01,
        format!("ratio at u = 1e8: {ratio:.6} vs {want:.6}"),
    ))
}

fn heat_kernel() -> Result<(bool, String)> {
    let reciprocal = DecreasingFunction::Reciprocal { scale: 1.0 };
    let x = reciprocal.sample(1e-2, 1e14, 64)?;
    let at = Grid::from_points(vec![1e4f64.ln()])?;
    let psr_tail = partial_sum_ratio_at(&reciprocal, &WeightFunction::Log, Dd::new(1e4));

    let k_max = 10_000usize;
    let diag: Vec<f64> = (1..=k_max).map(|k| 1.0 / k as f64).collect();
    let blocks: Vec<(LogValue, LogValue)> = diag.iter().map(|&v| (LogValue::ONE, LogValue::from_real(v))).collect();
    let sequence = StepFunction::from_blocks(&blocks)?;
    let matrix = MatrixSpec::real_diagonal(&diag)?;
    let grid = Grid::geometric(0.5, 1e4f64.ln(), 64)?;

    let mut ok = true;
    let mut detail = Vec::new();
    for alpha in [0.5, 1.0, 2.0] {
        let h = heat_kernel_series(&x, alpha, &at)?.value[0];
        let m = heat_kernel_matrix(&matrix, alpha, &grid)?;
        let c = heat_kernel_series(&sequence, alpha, &grid)?;
        let gap = m
            .value
            .iter()
            .zip(&c.value)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ok &= (h - 1.0).abs() <= 1e-2 && (h - psr_tail).abs() <= 2e-2 && gap <= 1e-3;
        detail.push(format!("alpha={alpha}: H = {h:.6}, matrix gap {gap:.1e}"));
    }
    detail.push(format!("partial-sum tail {psr_tail:.6}"));
    Ok((ok, detail.join("; ")))
}

fn spectral_layer() -> Result<(bool, String)> {
    let mut worst_residual = 0.0f64;
    let mut ringrose_ok = true;
    let mut worst_weyl = f64::NEG_INFINITY;
    for t in MatrixSpec::random_batch(100, 8, SUITE_SEED)? {
        worst_residual = worst_residual.max(triangularize(&t)?.reconstruction_residual(&t));
        ringrose_ok &= ringrose_split(&t)?.check(&t)?.holds;
        let w = weyl_check(&spectrum(&t)?);
        worst_weyl = worst_weyl.max(w.max_slack_violation);
    }
    let weyl_ok = worst_weyl <= crate::spectral::WEYL_SLACK;

    let t = MatrixSpec::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 2.0]])?;
    let split = ringrose_split(&t)?;
    let s = MatrixSpec::real_diagonal(&[1.0, 2.0])?.to_dense();
    let q = MatrixSpec::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]])?.to_dense();
    let example_ok = (&split.normal - s).camax() <= 1e-14 && (&split.nilpotent - q).camax() <= 1e-14;

    let jordan = spectrum(&MatrixSpec::jordan_block(8, C64::new(0.0, 0.0))?)?;
    let mut nil_ok = true;
    for cutoff in [0.0, 1e-12, 1e-3, 0.5, 1.0, 10.0] {
        nil_ok &= eigen_cutoff_sum(&jordan, cutoff)? == C64::new(0.0, 0.0);
    }
    Ok((
        worst_residual < 1e-10 && ringrose_ok && weyl_ok && example_ok && nil_ok,
        format!(
            "residual {worst_residual:.1e}, ringrose {ringrose_ok}, weyl slack {worst_weyl:.1e}, [[1,1],[0,2]] {example_ok}, jordan {nil_ok}"
        ),
    ))
}

fn lidskii_matrix() -> Result<(bool, String)> {
    let n_max = 10_000u64;
    let diag: Vec<f64> = (1..=n_max).map(|k| 1.0 / k as f64).collect();
    let t = MatrixSpec::real_diagonal(&diag)?;
    let cmp = trace_estimate_compare(&t, &WeightFunction::Log, 2, n_max)?;
    let a = cmp.a.as_ref().expect("diagonal of positives is positive semidefinite");
    let (a_end, b_end) = (*a.last().unwrap(), cmp.b.last().unwrap().re);
    let mut worst = f64::NEG_INFINITY;
    for ((&n, a), b) in cmp.n.iter().zip(a).zip(&cmp.b) {
        let ln_n = (n as f64).ln();
        let bound = (ln_n.ln() + 1.0) / ln_n;
        worst = worst.max((a - b.re).abs() + b.im.abs() - bound);
    }
    let ok = (a_end - 1.0627).abs() <= 1e-3 && (b_end - 0.8215).abs() <= 1e-3 && worst <= 0.0;
    Ok((
        ok,
        format!("a = {a_end:.5}, b = {b_end:.5}, worst gap minus bound {worst:.3}"),
    ))
}

fn random_bounded(rng: &mut ChaCha8Rng) -> Result<StepFunction> {
    let blocks = rng.random_range(1..=40);
    let mut cuts: Vec<f64> = (0..blocks).map(|_| rng.random_range(0.0..400.0)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut bps = vec![LogValue::ZERO];
    bps.extend(cuts.iter().map(|&u| LogValue::from_ln(u)));
    let values: Vec<LogValue> = (0..cuts.len())
        .map(|_| {
            if rng.random_bool(0.2) {
                LogValue::ZERO
            } else {
                LogValue::from_real(rng.random_range(0.0..3.0))
            }
        })
        .collect();
    let tail = LogValue::from_real(rng.random_range(0.0..3.0));
    StepFunction::new(bps, values, tail)
}

fn normalisation_and_dilation() -> Result<(bool, String)> {
    let one = StepFunction::new(vec![LogValue::ZERO], vec![], LogValue::ONE)?;
    let grid = Grid::geometric(1.0, 1e4, 64)?;
    let mut norm_ok = true;
    // the first grid point is N = e, where log log N = 0
    for &u in grid.points().iter().filter(|&&u| u > 1.0) {
        norm_ok &= pi_window_step(&one, Dd::new(u))? == 1.0;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let windows = [2.0, 5.0, 20.0, 60.0, 150.0, 390.0];
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        let x = random_bounded(&mut rng)?;
        let sup = x.sup_norm().to_f64();
        for n in [2u32, 10] {
            for dir in [Dilation::Expand, Dilation::Contract] {
                let y = x.dilate(n, dir)?;
                for &u in &windows {
                    let u = Dd::new(u);
                    let defect = (pi_window_step(&x, u)? - pi_window_step(&y, u)?).abs();
                    let bound = 2.0 * sup * (n as f64).ln() / u.ln();
                    worst = worst.max(defect - bound);
                }
            }
        }
    }
    let dilation_ok = worst <= 1e-12;
    Ok((
        norm_ok && dilation_ok,
        format!("normalisation exact: {norm_ok}; worst defect minus bound {worst:.3}"),
    ))
}
