//! Nonnegative step functions on `[0, inf)` in log-coordinates.
//!
//! A breakpoint `t` is stored as the [`LogValue`] of `t`, so the origin is
//! [`LogValue::ZERO`] and every other breakpoint is `u = ln t`. Values are
//! [`LogValue`]s as well. Integrals are assembled block by block with
//! [`log_add`]/[`log_sub`], so there is no quadrature error.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::logscale::{log_add, log_sub, log_sum, Dd, LogValue};
use crate::weights::WeightFunction;

/// Right-continuous step function: `values[i]` on `[breakpoints[i], breakpoints[i+1])`
/// and `tail` on `[breakpoints.last(), inf)`.
///
/// Invariants: `breakpoints[0]` is the origin, breakpoints strictly increase,
/// and no two adjacent pieces (including the tail) share a value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepFunction {
    breakpoints: Vec<LogValue>,
    values: Vec<LogValue>,
    tail: LogValue,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dilation {
    /// `x(t) -> x(t / n)`
    Expand,
    /// `x(t) -> x(n t)`
    Contract,
}

impl StepFunction {
    /// Builds a step function. If the first breakpoint is not the origin the
    /// function is taken to vanish on `[0, breakpoints[0])`.
    pub fn new(mut breakpoints: Vec<LogValue>, mut values: Vec<LogValue>, tail: LogValue) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::invalid("StepFunction", "no breakpoints"));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::invalid(
                "StepFunction",
                format!(
                    "{} breakpoints need {} values, got {}",
                    breakpoints.len(),
                    breakpoints.len() - 1,
                    values.len()
                ),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("StepFunction", "breakpoints must strictly increase"));
        }
        if breakpoints.iter().any(|b| b.is_infinite()) || values.iter().chain([&tail]).any(|v| v.is_infinite()) {
            return Err(Error::invalid("StepFunction", "infinite breakpoint or value"));
        }
        if !breakpoints[0].is_zero() {
            breakpoints.insert(0, LogValue::ZERO);
            values.insert(0, LogValue::ZERO);
        }
        let mut f = StepFunction {
            breakpoints,
            values,
            tail,
        };
        f.canonicalize();
        Ok(f)
    }

    fn canonicalize(&mut self) {
        let mut bps = Vec::with_capacity(self.breakpoints.len());
        let mut vals: Vec<LogValue> = Vec::with_capacity(self.values.len() + 1);
        let all = self.values.iter().chain(std::iter::once(&self.tail));
        for (&b, &v) in self.breakpoints.iter().zip(all) {
            if vals.last() == Some(&v) {
                continue;
            }
            bps.push(b);
            vals.push(v);
        }
        self.tail = vals.pop().expect("at least the origin piece");
        self.breakpoints = bps;
        self.values = vals;
    }

    pub fn zero() -> Self {
        StepFunction {
            breakpoints: vec![LogValue::ZERO],
            values: vec![],
            tail: LogValue::ZERO,
        }
    }

    /// `value * chi_[a, b)`.
    pub fn indicator(a: f64, b: f64, value: f64) -> Result<Self> {
        if !(a >= 0.0 && a < b && b.is_finite()) {
            return Err(Error::invalid(
                "StepFunction::indicator",
                format!("bad interval [{a}, {b})"),
            ));
        }
        StepFunction::from_reals(&[a, b], &[value])
    }

    /// Breakpoints and values given as plain reals; the tail is zero.
    pub fn from_reals(points: &[f64], values: &[f64]) -> Result<Self> {
        let bps = points
            .iter()
            .map(|&p| LogValue::try_from_real(p))
            .collect::<Result<Vec<_>>>()?;
        let vals = values
            .iter()
            .map(|&v| LogValue::try_from_real(v))
            .collect::<Result<Vec<_>>>()?;
        StepFunction::new(bps, vals, LogValue::ZERO)
    }

    /// Builds from `(length, value)` blocks laid end to end from the origin.
    pub fn from_blocks(blocks: &[(LogValue, LogValue)]) -> Result<Self> {
        let mut bps = vec![LogValue::ZERO];
        let mut vals = Vec::with_capacity(blocks.len());
        for &(len, v) in blocks {
            if len.is_zero() {
                continue;
            }
            let end = log_add(*bps.last().unwrap(), len);
            bps.push(end);
            vals.push(v);
        }
        StepFunction::new(bps, vals, LogValue::ZERO)
    }

    pub fn breakpoints(&self) -> &[LogValue] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[LogValue] {
        &self.values
    }

    pub fn tail(&self) -> LogValue {
        self.tail
    }

    /// Finite pieces as `(start, end, value)`.
    pub fn blocks(&self) -> impl Iterator<Item = (LogValue, LogValue, LogValue)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, &v)| (w[0], w[1], v))
    }

    fn piece_index(&self, t: LogValue) -> usize {
        self.breakpoints.partition_point(|b| *b <= t) - 1
    }

    pub fn eval(&self, t: LogValue) -> LogValue {
        let i = self.piece_index(t);
        self.values.get(i).copied().unwrap_or(self.tail)
    }

    /// Evaluation at a real point; negative `t` is rejected.
    pub fn eval_at(&self, t: f64) -> Result<LogValue> {
        if t.is_nan() || t < 0.0 {
            return Err(Error::invalid(
                "StepFunction::eval",
                format!("{t} lies below the origin"),
            ));
        }
        Ok(self.eval(LogValue::from_real(t)))
    }

    pub fn sup_norm(&self) -> LogValue {
        self.values.iter().copied().fold(self.tail, LogValue::max)
    }

    /// `int_a^b f(s) ds`.
    pub fn integral(&self, a: LogValue, b: LogValue) -> Result<LogValue> {
        if a > b {
            return Err(Error::invalid(
                "StepFunction::integral",
                "lower limit above upper limit",
            ));
        }
        let mut terms = Vec::new();
        for (s, e, v) in self.blocks() {
            let lo = s.max(a);
            let hi = e.min(b);
            if lo < hi && !v.is_zero() {
                terms.push(v.mul(log_sub(hi, lo)?));
            }
        }
        if !self.tail.is_zero() {
            let lo = self.breakpoints.last().copied().unwrap().max(a);
            if lo < b {
                terms.push(if b.is_infinite() {
                    LogValue::INFINITY
                } else {
                    self.tail.mul(log_sub(b, lo)?)
                });
            }
        }
        Ok(log_sum(terms))
    }

    pub fn total_integral(&self) -> Result<LogValue> {
        self.integral(LogValue::ZERO, LogValue::INFINITY)
    }

    /// Measure of `{s : f(s) > level}`.
    pub fn distribution(&self, level: LogValue) -> LogValue {
        if self.tail > level {
            return LogValue::INFINITY;
        }
        log_sum(
            self.blocks()
                .filter(|&(_, _, v)| v > level)
                .map(|(s, e, _)| log_sub(e, s).expect("increasing breakpoints")),
        )
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.values
            .iter()
            .chain(std::iter::once(&self.tail))
            .collect::<Vec<_>>()
            .windows(2)
            .all(|w| w[0] >= w[1])
    }

    /// Decreasing rearrangement `f*`.
    pub fn rearrangement(&self) -> Result<StepFunction> {
        if !self.tail.is_zero() {
            return Err(Error::invalid("rearrangement", "tail value must be zero"));
        }
        if self.is_nonincreasing() {
            return Ok(self.clone());
        }
        let mut blocks: Vec<(LogValue, LogValue)> = self
            .blocks()
            .filter(|(_, _, v)| !v.is_zero())
            .map(|(s, e, v)| (v, log_sub(e, s).expect("increasing breakpoints")))
            .collect();
        blocks.sort_by_key(|b| std::cmp::Reverse(b.0));
        let mut merged: Vec<(LogValue, Vec<LogValue>)> = Vec::new();
        for (v, len) in blocks {
            match merged.last_mut() {
                Some((w, lens)) if *w == v => lens.push(len),
                _ => merged.push((v, vec![len])),
            }
        }
        let merged: Vec<(LogValue, LogValue)> = merged.into_iter().map(|(v, lens)| (log_sum(lens), v)).collect();
        StepFunction::from_blocks(&merged)
    }

    /// Rearranges and precomputes partial integrals.
    pub fn rearranged(&self) -> Result<DecreasingStep> {
        Ok(DecreasingStep::new(self.rearrangement()?))
    }

    pub fn dilate(&self, n: u32, direction: Dilation) -> Result<StepFunction> {
        if n == 0 {
            return Err(Error::invalid("dilate", "factor must be positive"));
        }
        let shift = match direction {
            Dilation::Expand => (n as f64).ln(),
            Dilation::Contract => -(n as f64).ln(),
        };
        let factor = LogValue::from_ln(shift);
        let bps = self.breakpoints.iter().map(|b| b.mul(factor)).collect();
        StepFunction::new(bps, self.values.clone(), self.tail)
    }

    pub fn scale(&self, c: LogValue) -> StepFunction {
        let values = self.values.iter().map(|v| v.mul(c)).collect();
        let mut f = StepFunction {
            breakpoints: self.breakpoints.clone(),
            values,
            tail: self.tail.mul(c),
        };
        f.canonicalize();
        f
    }

    /// Pointwise sum.
    pub fn add(&self, other: &StepFunction) -> StepFunction {
        let mut bps: Vec<LogValue> = self.breakpoints.iter().chain(&other.breakpoints).copied().collect();
        bps.sort();
        bps.dedup();
        let mut values: Vec<LogValue> = bps.iter().map(|&b| log_add(self.eval(b), other.eval(b))).collect();
        let tail = values.pop().unwrap();
        // the last merged breakpoint starts the combined tail
        let mut f = StepFunction {
            breakpoints: bps,
            values,
            tail,
        };
        f.canonicalize();
        f
    }

    /// Text form: one `u log_value` pair per line, `u` is `origin` or
    /// `ln t` (`hi` or `hi:lo`), `log_value` is `zero` or `ln` of the value
    /// from that breakpoint on. The last line carries the tail value.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# dixlab step function: <ln t | origin> <ln value | zero>\n");
        let all = self.values.iter().chain(std::iter::once(&self.tail));
        for (b, v) in self.breakpoints.iter().zip(all) {
            let u = if b.is_zero() {
                "origin".to_string()
            } else {
                b.to_string()
            };
            writeln!(out, "{u} {v}").unwrap();
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<StepFunction> {
        let mut bps = Vec::new();
        let mut vals = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |reason: &str| Error::Parse {
                line: lineno + 1,
                reason: reason.to_string(),
            };
            let mut parts = line.split_whitespace();
            let (Some(u), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(err("expected `<u> <log_value>`"));
            };
            let b = if u == "origin" {
                LogValue::ZERO
            } else {
                LogValue::from_ln_dd(parse_dd(u).ok_or_else(|| err("bad breakpoint"))?)
            };
            let val = if v == "zero" {
                LogValue::ZERO
            } else {
                LogValue::from_ln_dd(parse_dd(v).ok_or_else(|| err("bad value"))?)
            };
            bps.push(b);
            vals.push(val);
        }
        let tail = vals.pop().ok_or(Error::Parse {
            line: 0,
            reason: "no breakpoints".into(),
        })?;
        StepFunction::new(bps, vals, tail)
    }
}

fn parse_dd(s: &str) -> Option<Dd> {
    let (hi, lo) = match s.split_once(':') {
        Some((h, l)) => (h.parse::<f64>().ok()?, l.parse::<f64>().ok()?),
        None => (s.parse::<f64>().ok()?, 0.0),
    };
    (hi.is_finite() && lo.is_finite()).then(|| Dd::sum(hi, lo))
}

/// Checks `int_0^{n_f(level)} f* = -int_level^inf mu dn_f(mu)`.
///
/// The left side goes through partial integrals of `f*`; the right side is
/// the jump sum over levels above `level`, computed from the blocks directly.
pub fn check_eq3(f: &StepFunction, level: LogValue) -> Result<(LogValue, LogValue)> {
    let d = f.rearranged()?;
    let lhs = d.primitive(d.distribution(level));
    let rhs = log_sum(
        d.step()
            .blocks()
            .filter(|&(_, _, v)| v > level)
            .map(|(s, e, v)| v.mul(log_sub(e, s).expect("increasing breakpoints"))),
    );
    Ok((lhs, rhs))
}

/// A nonincreasing function on `[0, inf)`, accessed through the quantities
/// the trace functionals need.
pub trait Decreasing {
    /// `x*(t)`
    fn value(&self, t: LogValue) -> LogValue;

    /// `int_0^t x*(s) ds`
    fn primitive(&self, t: LogValue) -> LogValue;

    /// `n_x(level)`, the measure of `{x* > level}`.
    fn distribution(&self, level: LogValue) -> LogValue;

    /// `int_0^{n_x(level)} x*(s) ds`
    fn cutoff_mass(&self, level: LogValue) -> LogValue {
        self.primitive(self.distribution(level))
    }

    /// Log-coordinates where `x*` or its level structure changes formula.
    fn kinks(&self) -> Vec<Dd> {
        Vec::new()
    }

    /// Values at which `x*` jumps (relevant to cutoff functionals).
    fn jump_levels(&self) -> Vec<LogValue> {
        Vec::new()
    }
}

/// A nonincreasing step function with cached partial integrals.
#[derive(Clone, Debug)]
pub struct DecreasingStep {
    f: StepFunction,
    prefix: Vec<LogValue>,
}

impl DecreasingStep {
    fn new(f: StepFunction) -> Self {
        debug_assert!(f.is_nonincreasing());
        let mut prefix = Vec::with_capacity(f.breakpoints.len());
        prefix.push(LogValue::ZERO);
        for (s, e, v) in f.blocks() {
            let mass = v.mul(log_sub(e, s).expect("increasing breakpoints"));
            let next = log_add(*prefix.last().unwrap(), mass);
            prefix.push(next);
        }
        DecreasingStep { f, prefix }
    }

    pub fn step(&self) -> &StepFunction {
        &self.f
    }

    /// Right end of the support.
    pub fn support_end(&self) -> LogValue {
        if self.f.tail.is_zero() {
            *self.f.breakpoints.last().unwrap()
        } else {
            LogValue::INFINITY
        }
    }
}

impl Decreasing for DecreasingStep {
    fn value(&self, t: LogValue) -> LogValue {
        self.f.eval(t)
    }

    fn primitive(&self, t: LogValue) -> LogValue {
        if t.is_infinite() {
            return if self.f.tail.is_zero() {
                *self.prefix.last().unwrap()
            } else {
                LogValue::INFINITY
            };
        }
        let i = self.f.piece_index(t);
        let v = self.f.values.get(i).copied().unwrap_or(self.f.tail);
        let start = self.f.breakpoints[i];
        if v.is_zero() || t == start {
            return self.prefix[i];
        }
        log_add(self.prefix[i], v.mul(log_sub(t, start).expect("t inside its piece")))
    }

    fn distribution(&self, level: LogValue) -> LogValue {
        let i = self.f.values.partition_point(|v| *v > level);
        if i < self.f.values.len() || self.f.tail <= level {
            self.f.breakpoints[i]
        } else {
            LogValue::INFINITY
        }
    }

    fn cutoff_mass(&self, level: LogValue) -> LogValue {
        let i = self.f.values.partition_point(|v| *v > level);
        if i < self.f.values.len() || self.f.tail <= level {
            self.prefix[i]
        } else {
            LogValue::INFINITY
        }
    }

    fn kinks(&self) -> Vec<Dd> {
        self.f.breakpoints.iter().filter_map(|b| b.ln()).collect()
    }

    fn jump_levels(&self) -> Vec<LogValue> {
        self.f.values.clone()
    }
}

/// Closed-form nonincreasing functions, plus step functions.
#[derive(Clone, Debug)]
pub enum DecreasingFunction {
    /// `min(c, c / t)`
    Reciprocal {
        scale: f64,
    },
    /// `psi'` for a built-in weight.
    WeightDerivative(WeightFunction),
    Step(DecreasingStep),
}

impl DecreasingFunction {
    /// Samples onto a step function whose breakpoints are `t_min * 10^(j / points_per_decade)`
    /// up to `t_max`, plus `[0, t_min)`. Each block carries the exact block average,
    /// so partial integrals agree with the closed form at every breakpoint.
    pub fn sample(&self, t_min: f64, t_max: f64, points_per_decade: usize) -> Result<StepFunction> {
        if !(t_min > 0.0 && t_min < t_max && t_max.is_finite() && points_per_decade >= 1) {
            return Err(Error::invalid("DecreasingFunction::sample", "bad sampling range"));
        }
        let step = std::f64::consts::LN_10 / points_per_decade as f64;
        let (u0, u1) = (t_min.ln(), t_max.ln());
        let n = ((u1 - u0) / step).ceil() as usize;
        let mut bps = vec![LogValue::ZERO];
        bps.extend((0..=n).map(|j| LogValue::from_ln((u0 + j as f64 * step).min(u1))));
        bps.dedup();
        let mut vals = Vec::with_capacity(bps.len());
        for w in bps.windows(2) {
            let mass = log_sub(self.primitive(w[1]), self.primitive(w[0]))?;
            vals.push(mass.div(log_sub(w[1], w[0])?));
        }
        StepFunction::new(bps, vals, LogValue::ZERO)
    }
}

impl Decreasing for DecreasingFunction {
    fn value(&self, t: LogValue) -> LogValue {
        match self {
            DecreasingFunction::Reciprocal { scale } => {
                let c = LogValue::from_real(*scale);
                if t <= LogValue::ONE {
                    c
                } else {
                    c.div(t)
                }
            }
            DecreasingFunction::WeightDerivative(psi) => psi.derivative(t),
            DecreasingFunction::Step(s) => s.value(t),
        }
    }

    fn primitive(&self, t: LogValue) -> LogValue {
        match self {
            DecreasingFunction::Reciprocal { scale } => {
                let c = LogValue::from_real(*scale);
                match t.ln() {
                    None => LogValue::ZERO,
                    Some(u) if u <= Dd::ZERO => c.mul(t),
                    Some(u) => c.mul(LogValue::from_real_dd(u + 1.0)),
                }
            }
            DecreasingFunction::WeightDerivative(psi) => psi.value(t),
            DecreasingFunction::Step(s) => s.primitive(t),
        }
    }

    fn distribution(&self, level: LogValue) -> LogValue {
        match self {
            DecreasingFunction::Reciprocal { scale } => {
                let c = LogValue::from_real(*scale);
                if level >= c {
                    LogValue::ZERO
                } else {
                    c.div(level)
                }
            }
            DecreasingFunction::WeightDerivative(psi) => psi
                .derivative_level_set(level)
                .expect("level-set solver converges for built-in weights"),
            DecreasingFunction::Step(s) => s.distribution(level),
        }
    }

    fn cutoff_mass(&self, level: LogValue) -> LogValue {
        match self {
            DecreasingFunction::Step(s) => s.cutoff_mass(level),
            _ => self.primitive(self.distribution(level)),
        }
    }

    fn kinks(&self) -> Vec<Dd> {
        match self {
            DecreasingFunction::Reciprocal { .. } => vec![Dd::ZERO],
            DecreasingFunction::WeightDerivative(WeightFunction::Power(_)) => vec![Dd::ZERO],
            DecreasingFunction::WeightDerivative(_) => vec![Dd::new(1.0)],
            DecreasingFunction::Step(s) => s.kinks(),
        }
    }

    fn jump_levels(&self) -> Vec<LogValue> {
        match self {
            DecreasingFunction::Step(s) => s.jump_levels(),
            DecreasingFunction::WeightDerivative(WeightFunction::ExpSqrtLog) => {
                vec![LogValue::ONE, LogValue::from_real(0.5)]
            }
            DecreasingFunction::WeightDerivative(WeightFunction::Power(p)) => {
                vec![LogValue::ONE, LogValue::from_real(*p)]
            }
            DecreasingFunction::WeightDerivative(WeightFunction::Log) => vec![LogValue::from_ln(-1.0)],
            DecreasingFunction::Reciprocal { scale } => vec![LogValue::from_real(*scale)],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn real(v: LogValue) -> f64 {
        v.to_f64()
    }

    fn two_chi_0_3() -> StepFunction {
        StepFunction::indicator(0.0, 3.0, 2.0).unwrap()
    }

    #[test]
    fn eval_is_right_continuous() {
        let f = two_chi_0_3();
        assert!((f.eval_at(1.0).unwrap().ln_f64() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(f.eval_at(3.0).unwrap(), LogValue::ZERO);
        assert_eq!(f.eval_at(0.0).unwrap(), LogValue::from_real(2.0));
        assert!(f.eval_at(-1.0).is_err());
    }

    #[test]
    fn integrals() {
        let one = StepFunction::indicator(0.0, 1.0, 1.0).unwrap();
        assert_eq!(one.integral(LogValue::ZERO, LogValue::ONE).unwrap().ln_f64(), 0.0);
        let f = StepFunction::indicator(0.0, 2.0, 3.0).unwrap();
        assert!((f.total_integral().unwrap().ln_f64() - 6f64.ln()).abs() < 1e-15);
        let part = f.integral(LogValue::from_real(0.5), LogValue::from_real(1.5)).unwrap();
        assert!((real(part) - 3.0).abs() < 1e-14);
        assert!(f.integral(LogValue::ONE, LogValue::ZERO).is_err());
    }

    #[test]
    fn canonical_form_merges_equal_neighbours() {
        let f = StepFunction::from_reals(&[0.0, 1.0, 2.0, 3.0], &[2.0, 2.0, 1.0]).unwrap();
        assert_eq!(f.breakpoints().len(), 3);
        assert_eq!(f, StepFunction::from_reals(&[0.0, 2.0, 3.0], &[2.0, 1.0]).unwrap());
    }

    #[test]
    fn rearrangement_two_block_swap() {
        let f = StepFunction::from_reals(&[0.0, 1.0, 2.0], &[1.0, 3.0]).unwrap();
        let r = f.rearrangement().unwrap();
        assert_eq!(r.values().len(), 2);
        assert!((real(r.values()[0]) - 3.0).abs() < 1e-15);
        assert!((real(r.values()[1]) - 1.0).abs() < 1e-15);
        assert!((real(r.breakpoints()[1]) - 1.0).abs() < 1e-15);
        assert!((real(r.breakpoints()[2]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rearrangement_keeps_decreasing_input() {
        let f = StepFunction::from_reals(&[0.0, 1.0, 4.0], &[5.0, 0.5]).unwrap();
        assert_eq!(f.rearrangement().unwrap(), f);
    }

    #[test]
    fn rearrangement_matches_sort_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let mut pts = vec![0.0];
            let mut vals = Vec::new();
            for _ in 0..10 {
                let last = *pts.last().unwrap();
                pts.push(last + rng.random_range(0.1..3.0));
                vals.push(rng.random_range(0.0..5.0));
            }
            let f = StepFunction::from_reals(&pts, &vals).unwrap();
            let r = f.rearrangement().unwrap();
            // oracle: sort (value, length) by value, accumulate lengths
            let mut blocks: Vec<(f64, f64)> = vals
                .iter()
                .zip(pts.windows(2))
                .map(|(&v, w)| (v, w[1] - w[0]))
                .collect();
            blocks.sort_by(|a, b| b.0.total_cmp(&a.0));
            let mut acc = 0.0;
            for (v, len) in blocks {
                let mid = acc + len / 2.0;
                acc += len;
                assert!((real(r.eval(LogValue::from_real(mid))) - v).abs() < 1e-12);
            }
            assert!(r.is_nonincreasing());
        }
    }

    #[test]
    fn distribution_uses_strict_inequality() {
        let f = two_chi_0_3();
        assert!((f.distribution(LogValue::ONE).ln_f64() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(f.distribution(LogValue::from_real(2.0)), LogValue::ZERO);
    }

    #[test]
    fn dilation() {
        let f = StepFunction::indicator(0.0, 1.0, 1.0).unwrap();
        let g = f.dilate(2, Dilation::Expand).unwrap();
        assert!((real(g.breakpoints()[1]) - 2.0).abs() < 1e-15);
        let back = g.dilate(2, Dilation::Contract).unwrap();
        assert!((real(back.breakpoints()[1]) - 1.0).abs() < 1e-15);

        let h = StepFunction::from_reals(&[0.5, 1.0, 2.5], &[3.0, 1.0]).unwrap();
        let i0 = real(h.total_integral().unwrap());
        let i5 = real(h.dilate(5, Dilation::Expand).unwrap().total_integral().unwrap());
        assert!((i5 - 5.0 * i0).abs() < 1e-12);
    }

    #[test]
    fn eq3_examples() {
        let (l, r) = check_eq3(&two_chi_0_3(), LogValue::ONE).unwrap();
        assert!((l.ln_f64() - 6f64.ln()).abs() < 1e-15);
        assert!((r.ln_f64() - 6f64.ln()).abs() < 1e-15);
        let (l, r) = check_eq3(&two_chi_0_3(), LogValue::from_real(5.0)).unwrap();
        assert!(l.is_zero() && r.is_zero());
    }

    #[test]
    fn text_round_trip() {
        let f = StepFunction::new(
            vec![
                LogValue::ZERO,
                LogValue::from_ln_dd(Dd::sum(1e20, 3.0)),
                LogValue::from_ln(1e21),
            ],
            vec![LogValue::from_ln(-2.5), LogValue::from_ln_dd(Dd::sum(-1e20, 0.25))],
            LogValue::ZERO,
        )
        .unwrap();
        let back = StepFunction::parse_text(&f.to_text()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = StepFunction::parse_text("origin 0\n1.0 zero extra\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(StepFunction::parse_text("# nothing\n").is_err());
    }

    #[test]
    fn pointwise_sum() {
        let f = StepFunction::indicator(0.0, 2.0, 1.0).unwrap();
        let g = StepFunction::indicator(1.0, 3.0, 2.0).unwrap();
        let h = f.add(&g);
        for (t, want) in [(0.5, 1.0), (1.5, 3.0), (2.5, 2.0), (3.5, 0.0)] {
            assert!((real(h.eval_at(t).unwrap()) - want).abs() < 1e-14, "{t}");
        }
    }

    #[test]
    fn closed_form_reciprocal() {
        let x = DecreasingFunction::Reciprocal { scale: 1.0 };
        let t = LogValue::from_ln(100.0);
        assert!((real(x.primitive(t)) - 101.0).abs() < 1e-12);
        assert!((x.distribution(LogValue::from_ln(-100.0)).ln_f64() - 100.0).abs() < 1e-12);
        assert_eq!(x.distribution(LogValue::from_real(2.0)), LogValue::ZERO);
    }

    #[test]
    fn sampled_function_is_decreasing_with_exact_breakpoint_integrals() {
        let x = DecreasingFunction::Reciprocal { scale: 1.0 };
        let s = x.sample(1e-2, 1e8, 64).unwrap();
        assert!(s.is_nonincreasing());
        let d = s.rearranged().unwrap();
        for &b in &s.breakpoints()[1..] {
            let rel = d.primitive(b).ratio(x.primitive(b)) - 1.0;
            assert!(rel.abs() < 1e-12);
        }
    }

    #[test]
    fn closed_forms_are_nonincreasing() {
        let fns = [
            DecreasingFunction::Reciprocal { scale: 2.0 },
            DecreasingFunction::WeightDerivative(WeightFunction::Log),
            DecreasingFunction::WeightDerivative(WeightFunction::ExpSqrtLog),
            DecreasingFunction::WeightDerivative(WeightFunction::Power(0.3)),
        ];
        for f in &fns {
            let vals: Vec<LogValue> = (0..500)
                .map(|j| f.value(LogValue::from_ln(-10.0 + 0.1 * j as f64)))
                .collect();
            assert!(vals.windows(2).all(|w| w[0] >= w[1]), "{f:?}");
        }
    }
}
