//! The explicit witnesses: a function on which the fixed-cutoff formula
//! disagrees with every Dixmier trace, and the `exp(sqrt(log t))` weight on
//! which `psi(n_x(1/t)) / psi(t)` stays away from 1.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::{fixed_cutoff_kinks, lidskii_cutoff_at, partial_sum_ratio_at, pi_window_fn, CutoffMode};
use crate::logscale::{log_sub, Dd, LogValue};
use crate::piecewise::{Decreasing, DecreasingStep, StepFunction};
use crate::weights::{marcinkiewicz_norm_function, WeightFunction};

pub const MAX_K: u32 = 700;

/// `e^2 / (e - 1)`
pub fn norm_limit() -> f64 {
    let e = std::f64::consts::E;
    e * e / (e - 1.0)
}

/// `E_k = e^k` as a double; every breakpoint is built from these.
fn e_pow(k: u32) -> f64 {
    (k as f64).exp()
}

/// `ln` of the right end of block `k`: `k + e^k`, exact as a double-double.
pub fn block_end(k: u32) -> Dd {
    Dd::sum(k as f64, e_pow(k))
}

/// `x = sup_k e^{-e^k} chi_[1, e^{k + e^k}]`, realised as disjoint blocks:
/// value `e^{-e^k}` on `[e^{k-1+e^{k-1}}, e^{k+e^k})` and `e^{-e}` on `[1, e^{1+e})`.
pub fn build_counterexample(k_max: u32) -> Result<StepFunction> {
    if !(1..=MAX_K).contains(&k_max) {
        return Err(Error::invalid(
            "build_counterexample",
            format!("k_max must lie in [1, {MAX_K}], got {k_max}"),
        ));
    }
    let mut bps = vec![LogValue::ZERO, LogValue::ONE];
    let mut vals = vec![LogValue::ZERO];
    for k in 1..=k_max {
        bps.push(LogValue::from_ln_dd(block_end(k)));
        vals.push(LogValue::from_ln(-e_pow(k)));
    }
    StepFunction::new(bps, vals, LogValue::ZERO)
}

/// Literal pointwise supremum at `s = e^u` (for cross-checking the block form).
pub fn counterexample_sup(k_max: u32, u: Dd) -> LogValue {
    if u < Dd::ZERO {
        return LogValue::ZERO;
    }
    (1..=k_max)
        .filter(|&k| u <= block_end(k))
        .map(|k| LogValue::from_ln(-e_pow(k)))
        .max()
        .unwrap_or(LogValue::ZERO)
}

fn check_window_k(k: u32) -> Result<()> {
    if !(3..=MAX_K).contains(&k) {
        return Err(Error::invalid(
            "window_mean",
            format!("k must lie in [3, {MAX_K}], got {k}"),
        ));
    }
    Ok(())
}

/// `(1/log log N) int_N^{N log N} (1/log t) int_t^{n_x(1/t)} x*(s) ds dt/t` at `N = e^{e^k}`.
pub fn window_mean(k: u32) -> Result<f64> {
    check_window_k(k)?;
    let x = build_counterexample(k)?.rearranged()?;
    let integrand = |u: Dd| {
        let t = LogValue::from_ln_dd(u);
        let n = x.distribution(LogValue::ONE.div(t));
        if n <= t {
            return 0.0;
        }
        let mass = log_sub(x.primitive(n), x.primitive(t)).expect("primitive is nondecreasing");
        mass.div(LogValue::from_real_dd(u)).to_f64()
    };
    pi_window_fn(integrand, Dd::new(e_pow(k)), &fixed_cutoff_kinks(&x))
}

/// `(e^k / k) log(1 + k e^{-k})`
pub fn window_mean_leading_term(k: u32) -> f64 {
    let k = k as f64;
    k.exp() / k * (k * (-k).exp()).ln_1p()
}

/// π window at `N = e^{e^k}` of the fixed-cutoff series minus the partial-sum ratio, `psi = LOG`.
pub fn gap_window(x: &DecreasingStep, k: u32) -> Result<f64> {
    check_window_k(k)?;
    let psi = WeightFunction::Log;
    let gap = |u: Dd| lidskii_cutoff_at(x, &psi, CutoffMode::Fixed, u) - partial_sum_ratio_at(x, &psi, u);
    pi_window_fn(gap, Dd::new(e_pow(k)), &fixed_cutoff_kinks(x))
}

/// `psi(n_x(1/t)) / psi(t)` for `psi = exp(sqrt(log t))`, `x = psi'`, at `t = e^u`.
pub fn sedaev_discrepancy(u_grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let psi = WeightFunction::ExpSqrtLog;
    u_grid
        .iter()
        .map(|&u| {
            if !(u >= 10.0 && u.is_finite()) {
                return Err(Error::invalid(
                    "sedaev_discrepancy",
                    format!("need finite u >= 10, got {u}"),
                ));
            }
            let t = LogValue::from_ln(u);
            let n = psi.derivative_level_set(LogValue::ONE.div(t))?;
            Ok((u, psi.value(n).ratio(psi.value(t))))
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CounterexampleReport {
    pub k_range: (u32, u32),
    /// Observed Marcinkiewicz norm for `psi = LOG`.
    pub norm_bound: f64,
    /// `e^2 / (e - 1)`
    pub norm_limit: f64,
    pub window_means: Vec<(u32, f64)>,
    pub sedaev_ratios: Vec<(f64, f64)>,
}

impl CounterexampleReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Norm of `build_counterexample(k_max)`, window means for `3 <= k <= k_max`,
/// and the discrepancy ratios at `u = 10, 100, ..., 1e8`.
pub fn counterexample_report(k_max: u32) -> Result<CounterexampleReport> {
    let x = build_counterexample(k_max)?;
    let norm_bound = marcinkiewicz_norm_function(&x, &WeightFunction::Log)?;
    let window_means = (3..=k_max)
        .map(|k| window_mean(k).map(|w| (k, w)))
        .collect::<Result<Vec<_>>>()?;
    let sedaev_grid: Vec<f64> = (1..=8).map(|j| 10f64.powi(j)).collect();
    Ok(CounterexampleReport {
        k_range: (1, k_max),
        norm_bound,
        norm_limit: norm_limit(),
        window_means,
        sedaev_ratios: sedaev_discrepancy(&sedaev_grid)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block() {
        let x = build_counterexample(1).unwrap();
        assert_eq!(x.values().len(), 2);
        assert!(x.values()[0].is_zero());
        assert!((x.values()[1].ln_f64() + std::f64::consts::E).abs() < 1e-15);
        assert_eq!(x.breakpoints()[1], LogValue::ONE);
        assert!((x.breakpoints()[2].ln_f64() - (1.0 + std::f64::consts::E)).abs() < 1e-15);
        assert!(build_counterexample(0).is_err());
        assert!(build_counterexample(701).is_err());
    }

    #[test]
    fn blocks_match_literal_sup() {
        let k_max = 60;
        let x = build_counterexample(k_max).unwrap();
        // zero on [0, 1), so the rearrangement is the block sequence moved left by 1
        let r = x.rearrangement().unwrap();
        assert_eq!(r.values(), &x.values()[1..]);
        for (a, b) in r.breakpoints()[1..].iter().zip(&x.breakpoints()[2..]) {
            // a = b - 1, so ln(b / a) = -ln(1 - 1/b)
            let want = -(-b.to_f64().recip()).ln_1p();
            assert!((b.div(*a).ln_f64() - want).abs() < 1e-14, "{a} {b}");
        }
        for k in 1..=k_max {
            let end = block_end(k);
            for u in [end - 1e-3, end - 0.5 * k as f64, end + 1e-3, Dd::new(e_pow(k)) + 0.5] {
                assert_eq!(x.eval(LogValue::from_ln_dd(u)), counterexample_sup(k_max, u), "k={k}");
            }
        }
        assert_eq!(x.eval(LogValue::from_real(0.5)), LogValue::ZERO);
    }

    #[test]
    fn value_inside_window() {
        let x = build_counterexample(200).unwrap();
        for k in [5u32, 50, 200] {
            let u = Dd::new(e_pow(k)) + 0.5 * k as f64;
            assert_eq!(x.eval(LogValue::from_ln_dd(u)).ln_f64(), -e_pow(k));
        }
    }

    #[test]
    fn block_integrals_are_geometric() {
        let x = build_counterexample(30).unwrap();
        for k in [1u32, 5, 30] {
            let total = x
                .integral(LogValue::ZERO, LogValue::from_ln_dd(block_end(k)))
                .unwrap()
                .to_f64();
            // block n contributes e^n - e^{n - 1 + e^{n-1} - e^n}
            let oracle: f64 = (1..=k)
                .map(|n| {
                    let n = n as f64;
                    let start = if n == 1.0 { 0.0 } else { n - 1.0 + (n - 1.0).exp() };
                    n.exp() - (start - n.exp()).exp()
                })
                .sum();
            assert!((total / oracle - 1.0).abs() < 1e-13, "k={k}");
            let geometric: f64 = (1..=k).map(|n| (n as f64).exp()).sum();
            assert!((total / geometric - 1.0).abs() < 0.03);
        }
    }

    #[test]
    fn leading_term() {
        let v = window_mean_leading_term(20);
        assert!((v - (1.0 - 10.0 * (-20f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn window_mean_ranges() {
        let w = window_mean(100).unwrap();
        assert!((0.98..=1.0).contains(&w), "{w}");
        let w = window_mean(20).unwrap();
        // v in [0, k]: ((e^k - e^v) / (e^k + v)) averaged over the window
        let k = 20f64;
        let oracle = (k.exp() * k - (k.exp() - 1.0)) / (k.exp() * k);
        assert!((w - oracle).abs() < 1e-6, "{w} vs {oracle}");
        assert!(window_mean(2).is_err());
    }

    #[test]
    fn gap_window_matches_window_mean() {
        let x = build_counterexample(60).unwrap().rearranged().unwrap();
        for k in [10u32, 60] {
            let a = gap_window(&x, k).unwrap();
            let b = window_mean(k).unwrap();
            assert!((a - b).abs() < 1e-9, "{k}: {a} vs {b}");
        }
    }

    #[test]
    fn sedaev_values() {
        let r = sedaev_discrepancy(&[1e4, 1e8]).unwrap();
        for &(u, ratio) in &r {
            // r^2 - r + ln r + ln 2 = u by bisection, ratio = exp(r - sqrt u)
            let g = |r: f64| r * r - r + r.ln() + std::f64::consts::LN_2 - u;
            let (mut lo, mut hi) = (1.0, 2.0 * u.sqrt() + 2.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((ratio - (lo - u.sqrt()).exp()).abs() < 1e-9, "{u}");
        }
        assert!((r[0].1 - 1.606).abs() < 2e-3);
        assert!((r[1].1 - 0.5f64.exp()).abs() < 2e-3);
        assert!(sedaev_discrepancy(&[5.0]).is_err());
    }

    #[test]
    fn norm_is_below_limit() {
        let x = build_counterexample(40).unwrap();
        let norm = marcinkiewicz_norm_function(&x, &WeightFunction::Log).unwrap();
        assert!(norm <= norm_limit());
        let e = std::f64::consts::E;
        assert!((norm - e / (e - 1.0)).abs() < 0.05, "{norm}");
    }
}
