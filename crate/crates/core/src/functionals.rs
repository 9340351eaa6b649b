//! Finite-scale surrogates for the arguments of a generalised limit:
//! partial-sum ratios, Cesàro means, the π window, Lidskii cutoff series and
//! heat-kernel series, plus pointwise checks of the estimate lemmas.
//!
//! Point evaluators take `u = ln t` as a [`Dd`] so that windows sitting at
//! `u ~ e^k` keep their offsets; the series builders sample them on a [`Grid`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::logscale::{log_sub, log_sum, Dd, LogValue};
use crate::piecewise::{Decreasing, StepFunction};
use crate::quad;
use crate::series::{Grid, WindowSeries};
use crate::weights::{classify_good_upper_bound, classify_sedaev, ClassifierConfig, WeightFunction};

/// Which level cuts the spectrum at scale `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffMode {
    /// `1 / t`
    Fixed,
    /// `psi(t) / t`
    Adjusted,
}

impl fmt::Display for CutoffMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CutoffMode::Fixed => "fixed",
            CutoffMode::Adjusted => "adjusted",
        })
    }
}

impl FromStr for CutoffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fixed" => Ok(CutoffMode::Fixed),
            "adjusted" => Ok(CutoffMode::Adjusted),
            _ => Err(Error::invalid(
                "CutoffMode",
                format!("expected fixed|adjusted, got `{s}`"),
            )),
        }
    }
}

pub fn cutoff_level(psi: &WeightFunction, mode: CutoffMode, t: LogValue) -> LogValue {
    match mode {
        CutoffMode::Fixed => LogValue::ONE.div(t),
        CutoffMode::Adjusted => psi.value(t).div(t),
    }
}

/// `(1/psi(t)) int_0^t x*(s) ds` at `t = e^u`.
pub fn partial_sum_ratio_at<D: Decreasing + ?Sized>(x: &D, psi: &WeightFunction, u: Dd) -> f64 {
    let t = LogValue::from_ln_dd(u);
    x.primitive(t).ratio(psi.value(t))
}

/// `(1/psi(t)) int_0^{n_x(c(t))} x*(s) ds` at `t = e^u`, with `c(t)` from `mode`.
pub fn lidskii_cutoff_at<D: Decreasing + ?Sized>(x: &D, psi: &WeightFunction, mode: CutoffMode, u: Dd) -> f64 {
    let t = LogValue::from_ln_dd(u);
    x.cutoff_mass(cutoff_level(psi, mode, t)).ratio(psi.value(t))
}

pub fn partial_sum_ratio<D: Decreasing + ?Sized>(x: &D, psi: &WeightFunction, grid: &Grid) -> Result<WindowSeries> {
    WindowSeries::from_fn(format!("partial_sum_ratio psi={psi}"), grid, |u| {
        Ok(partial_sum_ratio_at(x, psi, Dd::new(u)))
    })
}

pub fn lidskii_cutoff_series<D: Decreasing + ?Sized>(
    x: &D,
    psi: &WeightFunction,
    mode: CutoffMode,
    grid: &Grid,
) -> Result<WindowSeries> {
    WindowSeries::from_fn(format!("lidskii_cutoff mode={mode} psi={psi}"), grid, |u| {
        Ok(lidskii_cutoff_at(x, psi, mode, Dd::new(u)))
    })
}

/// `(Mg)(e^U) = (1/U) int_0^U g(e^u) du` by the trapezoidal rule on the series grid.
///
/// If the grid starts above zero, `g` is extended linearly to `u = 0` from its
/// first two samples. The output drops the first grid point.
pub fn cesaro(series: &WindowSeries) -> Result<WindowSeries> {
    let (u, g) = (&series.u, &series.value);
    if u.len() < 2 {
        return Err(Error::invalid("cesaro", "need at least two grid points"));
    }
    if u[0] < 0.0 {
        return Err(Error::invalid("cesaro", "grid must start at u >= 0"));
    }
    let slope = (g[1] - g[0]) / (u[1] - u[0]);
    let g_origin = g[0] - slope * u[0];
    let mut area = 0.5 * u[0] * (g_origin + g[0]);
    let mut out = Vec::with_capacity(u.len() - 1);
    for j in 1..u.len() {
        area += 0.5 * (u[j] - u[j - 1]) * (g[j] + g[j - 1]);
        out.push(area / u[j]);
    }
    WindowSeries::new(format!("cesaro({})", series.meta), u[1..].to_vec(), out)
}

fn window_length(u: Dd) -> Result<f64> {
    if !(u > Dd::new(1.0)) || !u.is_finite() {
        return Err(Error::invalid("pi_window", format!("need ln N > 1, got {u}")));
    }
    Ok(u.ln())
}

/// `(1/ln U) int_U^{U + ln U} x(e^u) du` for a step function `x`, exactly.
pub fn pi_window_step(x: &StepFunction, u: Dd) -> Result<f64> {
    let len = window_length(u)?;
    let end = u + len;
    let mut acc = 0.0;
    let bps = x.breakpoints();
    let values = x.values().iter().copied().chain(std::iter::once(x.tail()));
    for (i, v) in values.enumerate() {
        if v.is_zero() {
            continue;
        }
        let lo = bps[i].ln().map_or(u, |b| b.max(u));
        let hi = bps.get(i + 1).and_then(|b| b.ln()).map_or(end, |b| b.min(end));
        if lo < hi {
            acc += v.to_f64() * (hi - lo).to_f64();
        }
    }
    Ok(acc / len)
}

/// Window mean of a sampled series; the series is interpolated linearly and
/// must cover `[U, U + ln U]`.
pub fn pi_window_series(series: &WindowSeries, u: f64) -> Result<f64> {
    let len = window_length(Dd::new(u))?;
    let end = u + len;
    let (lo, hi) = (series.u[0], *series.u.last().unwrap());
    if u < lo || end > hi {
        return Err(Error::invalid(
            "pi_window",
            format!("window [{u}, {end}] leaves the series grid [{lo}, {hi}]"),
        ));
    }
    let mut nodes = vec![u];
    nodes.extend(series.u.iter().copied().filter(|&s| s > u && s < end));
    nodes.push(end);
    let mut area = 0.0;
    let mut width = 0.0;
    for w in nodes.windows(2) {
        let a = series.interpolate(w[0]).unwrap();
        let b = series.interpolate(w[1]).unwrap();
        area += 0.5 * (a + b) * (w[1] - w[0]);
        width += w[1] - w[0];
    }
    Ok(area / width)
}

/// Window mean of `g(u)` by Romberg integration, restarting at `kinks`.
pub fn pi_window_fn<F: Fn(Dd) -> f64>(g: F, u: Dd, kinks: &[Dd]) -> Result<f64> {
    let len = window_length(u)?;
    let splits: Vec<f64> = kinks.iter().map(|&k| (k - u).to_f64()).collect();
    let integral = quad::integrate(|v| g(u + v), 0.0, len, &splits, 1e-12)?;
    Ok(integral / len)
}

/// Log-coordinates where the fixed-cutoff series of `x` jumps: `1/t` hits a value of `x*`.
pub fn fixed_cutoff_kinks<D: Decreasing + ?Sized>(x: &D) -> Vec<Dd> {
    let mut k: Vec<Dd> = x.kinks();
    k.extend(x.jump_levels().into_iter().filter_map(|v| v.ln()).map(|l| -l));
    k
}

/// `(1/psi(n)) * sum of x_k` over entries above the cutoff: `x_k > 1/n` (fixed)
/// or `x_k >= psi(n)/n` (adjusted).
pub fn sequence_cutoff_sum(x: &[f64], psi: &WeightFunction, n: u64, mode: CutoffMode) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("sequence_cutoff_sum", "n must be positive"));
    }
    if x.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid(
            "sequence_cutoff_sum",
            "entries must be positive and finite",
        ));
    }
    if x.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("sequence_cutoff_sum", "sequence must be nonincreasing"));
    }
    let nn = LogValue::from_real(n as f64);
    let psi_n = psi.value(nn).to_f64();
    let sum: f64 = match mode {
        CutoffMode::Fixed => {
            let c = 1.0 / n as f64;
            x.iter().take_while(|&&v| v > c).sum()
        }
        CutoffMode::Adjusted => {
            let c = psi.value(nn).div(nn).to_f64();
            x.iter().take_while(|&&v| v >= c).sum()
        }
    };
    Ok(sum / psi_n)
}

/// `alpha / Gamma(1/alpha)`.
///
/// Gamma comes from `statrs`, which uses a Lanczos approximation (g = 10.900511,
/// 11 coefficients, after Pugh 2004), accurate to about 1e-15 relative on the positive axis.
pub fn heat_kernel_normalisation(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(
            "heat_kernel",
            format!("alpha must be positive, got {alpha}"),
        ));
    }
    Ok(alpha / gamma(1.0 / alpha))
}

/// `(alpha/Gamma(1/alpha)) (1/t) sum_i mu_i exp(-(t v_i)^-alpha)` at `t = e^u`,
/// summed over the blocks `(v_i, mu_i)` of `x`.
pub fn heat_kernel_at(x: &StepFunction, alpha: f64, u: Dd) -> Result<f64> {
    let norm = heat_kernel_normalisation(alpha)?;
    if !x.tail().is_zero() {
        return Err(Error::Divergence {
            op: "heat_kernel",
            detail: "x has unbounded support".into(),
        });
    }
    let terms = x.blocks().filter(|(_, _, v)| !v.is_zero()).map(|(s, e, v)| {
        let mu = log_sub(e, s).expect("increasing breakpoints");
        let ln_tv = (u + v.ln().unwrap()).to_f64();
        mu.mul(LogValue::from_ln(-(-alpha * ln_tv).exp()))
    });
    let total = log_sum(terms);
    Ok(norm * total.div(LogValue::from_ln_dd(u)).to_f64())
}

pub fn heat_kernel_series(x: &StepFunction, alpha: f64, grid: &Grid) -> Result<WindowSeries> {
    heat_kernel_normalisation(alpha)?;
    WindowSeries::from_fn(format!("heat_kernel alpha={alpha}"), grid, |u| {
        heat_kernel_at(x, alpha, Dd::new(u))
    })
}

/// `ln(lhs / rhs)` clipped at zero.
fn log_excess(lhs: LogValue, rhs: LogValue) -> f64 {
    if lhs <= rhs {
        0.0
    } else {
        lhs.div(rhs).ln_f64()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperEstimateReport {
    pub points: usize,
    /// Worst `ln(lhs/rhs)` of `int_0^t x* <= int_0^{n_x(1/t)} x* + 1`, zero if it holds everywhere.
    pub simple_violation: f64,
    /// Same for `int_0^t x* <= int_0^{n_x(psi(nt)/nt)} x* + psi(nt)/n`.
    pub adjusted_violation: f64,
}

pub fn check_upper_estimate_lemmas<D: Decreasing + ?Sized>(
    x: &D,
    psi: &WeightFunction,
    n: u32,
    grid: &Grid,
) -> Result<UpperEstimateReport> {
    if n == 0 {
        return Err(Error::invalid("check_upper_estimate_lemmas", "n must be positive"));
    }
    let nn = LogValue::from_real(n as f64);
    let mut report = UpperEstimateReport {
        points: grid.len(),
        simple_violation: 0.0,
        adjusted_violation: 0.0,
    };
    for &u in grid.points() {
        let t = LogValue::from_ln(u);
        let lhs = x.primitive(t);
        let simple = crate::logscale::log_add(x.cutoff_mass(LogValue::ONE.div(t)), LogValue::ONE);
        report.simple_violation = report.simple_violation.max(log_excess(lhs, simple));

        let nt = nn.mul(t);
        let psi_nt = psi.value(nt);
        let adjusted = crate::logscale::log_add(x.cutoff_mass(psi_nt.div(nt)), psi_nt.div(nn));
        report.adjusted_violation = report.adjusted_violation.max(log_excess(lhs, adjusted));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LowerEstimateReport {
    pub points: usize,
    /// Grid points where `n_x(psi(t)/t) > c t`, so the lemma says nothing there.
    pub hypothesis_failures: usize,
    /// Worst `ln(lhs/rhs)` of `int_0^{n_x(psi(t)/t)} x* <= int_0^{ct} x*` where the hypothesis holds.
    pub violation: f64,
}

pub fn check_lower_estimate_lemma<D: Decreasing + ?Sized>(
    x: &D,
    psi: &WeightFunction,
    c: u32,
    grid: &Grid,
) -> Result<LowerEstimateReport> {
    if c == 0 {
        return Err(Error::invalid("check_lower_estimate_lemma", "c must be positive"));
    }
    let cc = LogValue::from_real(c as f64);
    let mut report = LowerEstimateReport {
        points: grid.len(),
        hypothesis_failures: 0,
        violation: 0.0,
    };
    for &u in grid.points() {
        let t = LogValue::from_ln(u);
        let level = psi.value(t).div(t);
        let ct = cc.mul(t);
        if x.distribution(level) > ct {
            report.hypothesis_failures += 1;
            continue;
        }
        report.violation = report.violation.max(log_excess(x.cutoff_mass(level), x.primitive(ct)));
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport {
    pub points: usize,
    /// `max |h_adj(t) - psr(t)|`
    pub max_gap: f64,
    /// `max (|h_adj(t) - psr(t)| - 2/n - grid_error(t))`, clipped at zero.
    pub max_excess: f64,
}

/// Compares the adjusted-cutoff series with the partial-sum ratio.
///
/// The two estimate lemmas sandwich `h_adj(t)` between
/// `(1/psi(t)) int_0^{t/n} x* - 1/n` and `(1/psi(t)) int_0^{nt} x*`, so the
/// two series differ by at most `1/n` plus how much the partial integral
/// moves across `[t/n, nt]`. That movement is reported as `grid_error(t)`.
pub fn check_adjusted_agreement<D: Decreasing + ?Sized>(
    x: &D,
    psi: &WeightFunction,
    n: u32,
    grid: &Grid,
) -> Result<AgreementReport> {
    if n == 0 {
        return Err(Error::invalid("check_adjusted_agreement", "n must be positive"));
    }
    let nn = LogValue::from_real(n as f64);
    let mut report = AgreementReport {
        points: grid.len(),
        max_gap: 0.0,
        max_excess: 0.0,
    };
    for &u in grid.points() {
        let t = LogValue::from_ln(u);
        let psi_t = psi.value(t);
        let psr = x.primitive(t).ratio(psi_t);
        let h = lidskii_cutoff_at(x, psi, CutoffMode::Adjusted, Dd::new(u));
        let below = log_sub(x.primitive(t), x.primitive(t.div(nn)))?.ratio(psi_t);
        let above = log_sub(x.primitive(t.mul(nn)), x.primitive(t))?.ratio(psi_t);
        let gap = (h - psr).abs();
        report.max_gap = report.max_gap.max(gap);
        let allowed = 2.0 / n as f64 + below.max(above);
        report.max_excess = report.max_excess.max(gap - allowed);
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DxBound {
    /// `max n_x(1/t) / (t psi(t))` over the upper half of the grid.
    pub c_fixed: f64,
    /// `max n_x(psi(t)/t) / t` over the upper half of the grid.
    pub c_adjusted: f64,
    pub warnings: Vec<String>,
}

fn running_max(op: &'static str, what: &str, ratios: &[f64]) -> Result<f64> {
    let max = ratios.iter().copied().fold(0.0, f64::max);
    let (first, last) = (ratios[0], *ratios.last().unwrap());
    let growing = last >= max && last > 2.0 * first && last > 0.0;
    if !max.is_finite() || growing {
        return Err(Error::Divergence {
            op,
            detail: format!("{what} grows from {first:e} to {last:e} across the grid tail"),
        });
    }
    Ok(max)
}

pub fn dx_bound_constant<D: Decreasing + ?Sized>(x: &D, psi: &WeightFunction, grid: &Grid) -> Result<DxBound> {
    let cfg = ClassifierConfig::default();
    let mut warnings = Vec::new();
    if !classify_good_upper_bound(psi, &cfg).holds() {
        warnings.push(format!(
            "{psi}: limsup psi(2t)/psi(t) < 2 not confirmed; c_adjusted may be meaningless"
        ));
    }
    if !classify_sedaev(psi, &cfg).holds() {
        warnings.push(format!(
            "{psi}: psi(t psi(t))/psi(t) -> 1 not confirmed; c_fixed may be meaningless"
        ));
    }
    let pts = grid.points();
    let tail = &pts[pts.len() / 2..];
    let mut fixed = Vec::with_capacity(tail.len());
    let mut adjusted = Vec::with_capacity(tail.len());
    for &u in tail {
        let t = LogValue::from_ln(u);
        let psi_t = psi.value(t);
        fixed.push(x.distribution(LogValue::ONE.div(t)).ratio(t.mul(psi_t)));
        adjusted.push(x.distribution(psi_t.div(t)).ratio(t));
    }
    Ok(DxBound {
        c_fixed: running_max("dx_bound_constant", "n_x(1/t)/(t psi(t))", &fixed)?,
        c_adjusted: running_max("dx_bound_constant", "n_x(psi(t)/t)/t", &adjusted)?,
        warnings,
    })
}

/// `(1/ln t) int_t^{n_x(1/t)} (x*(s) - 1/t) ds` with the integral oriented, so
/// it is nonnegative whichever of `t`, `n_x(1/t)` is larger.
pub fn tail_gap_at<D: Decreasing + ?Sized>(x: &D, u: Dd) -> Result<f64> {
    if !(u > Dd::ZERO) {
        return Err(Error::invalid("tail_gap", "need t > 1"));
    }
    let t = LogValue::from_ln_dd(u);
    let n = x.distribution(LogValue::ONE.div(t));
    if n.is_infinite() {
        return Err(Error::Divergence {
            op: "tail_gap",
            detail: "n_x(1/t) is infinite".into(),
        });
    }
    let ln_t = LogValue::from_real_dd(u);
    let (lo, hi, sign) = if n >= t { (t, n, 1.0) } else { (n, t, -1.0) };
    let mass = log_sub(x.primitive(hi), x.primitive(lo))?.div(ln_t).to_f64();
    let level_mass = log_sub(hi, lo)?.div(t).div(ln_t).to_f64();
    Ok(sign * (mass - level_mass))
}

pub fn tail_gap_series<D: Decreasing + ?Sized>(x: &D, grid: &Grid) -> Result<WindowSeries> {
    WindowSeries::from_fn("tail_gap", grid, |u| tail_gap_at(x, Dd::new(u)))
}
