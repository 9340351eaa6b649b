//! Magnitudes stored as natural logarithms.
//!
//! A [`LogValue`] holds `ln r` for a nonnegative real `r`, with an explicit
//! bottom element for `r = 0`. The logarithm itself is kept as a
//! double-double ([`Dd`]) so that log-coordinates such as `k + e^k` keep the
//! small summand: `(k + e^k) - e^k` evaluates to exactly `k` even when `e^k`
//! is far beyond `2^53`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};

/// Unevaluated sum `hi + lo` of two doubles with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub const fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact sum of two doubles.
    pub fn sum(a: f64, b: f64) -> Self {
        if !(a.is_finite() && b.is_finite()) {
            return Dd::new(a + b);
        }
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite()
    }

    /// Natural log of a positive value, to double precision.
    pub fn ln(self) -> f64 {
        if self.lo == 0.0 {
            self.hi.ln()
        } else {
            self.hi.ln() + (self.lo / self.hi).ln_1p()
        }
    }

    /// Product with a double, keeping the rounding error of the leading term.
    pub fn scale(self, p: f64) -> Self {
        let hi = self.hi * p;
        if !hi.is_finite() {
            return Dd::new(hi);
        }
        let err = self.hi.mul_add(p, -hi);
        let (hi, lo) = quick_two_sum(hi, err + self.lo * p);
        Dd { hi, lo }
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::new(x)
    }
}

impl Add for Dd {
    type Output = Dd;

    fn add(self, rhs: Dd) -> Dd {
        if !(self.hi.is_finite() && rhs.hi.is_finite()) {
            return Dd::new(self.hi + rhs.hi);
        }
        let (s, e) = two_sum(self.hi, rhs.hi);
        let (t, f) = two_sum(self.lo, rhs.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Add<f64> for Dd {
    type Output = Dd;

    fn add(self, rhs: f64) -> Dd {
        self + Dd::new(rhs)
    }
}

impl Neg for Dd {
    type Output = Dd;

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;

    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Sub<f64> for Dd {
    type Output = Dd;

    fn sub(self, rhs: f64) -> Dd {
        self + Dd::new(-rhs)
    }
}

impl PartialEq for Dd {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dd {}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dd {
    fn cmp(&self, other: &Self) -> Ordering {
        // `0.0 == -0.0` must hold, so compare with `partial_cmp` first.
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo).unwrap_or(Ordering::Equal),
            Some(o) => o,
            None => self.hi.total_cmp(&other.hi),
        }
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.lo == 0.0 {
            write!(f, "{}", self.hi)
        } else {
            write!(f, "{}:{}", self.hi, self.lo)
        }
    }
}

/// A nonnegative real stored as its natural logarithm.
///
/// `LogValue::ZERO` is the bottom element: it absorbs under [`LogValue::mul`]
/// and is the identity of [`log_add`]. Ordering follows the represented
/// real, so `ZERO` is the minimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogValue(Option<Dd>);

impl LogValue {
    pub const ZERO: LogValue = LogValue(None);
    pub const ONE: LogValue = LogValue(Some(Dd::ZERO));
    pub const INFINITY: LogValue = LogValue(Some(Dd::new(f64::INFINITY)));

    pub fn from_ln(ln: f64) -> Self {
        Self::from_ln_dd(Dd::new(ln))
    }

    pub fn from_ln_dd(ln: Dd) -> Self {
        assert!(!ln.hi.is_nan(), "LogValue from NaN logarithm");
        if ln.hi == f64::NEG_INFINITY {
            LogValue::ZERO
        } else {
            LogValue(Some(ln))
        }
    }

    /// Panics if `r` is negative or NaN.
    pub fn from_real(r: f64) -> Self {
        Self::try_from_real(r).unwrap_or_else(|_| panic!("LogValue::from_real({r})"))
    }

    pub fn try_from_real(r: f64) -> Result<Self> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::invalid("LogValue", format!("{r} is not a nonnegative real")));
        }
        Ok(if r == 0.0 {
            LogValue::ZERO
        } else {
            LogValue::from_ln(r.ln())
        })
    }

    /// `r` for a positive double-double `r`.
    pub fn from_real_dd(r: Dd) -> Self {
        if r.hi <= 0.0 {
            assert!(r.hi == 0.0, "LogValue::from_real_dd of a negative value");
            LogValue::ZERO
        } else {
            LogValue::from_ln(r.ln())
        }
    }

    pub fn ln(self) -> Option<Dd> {
        self.0
    }

    /// The logarithm as a double, `-inf` for zero.
    pub fn ln_f64(self) -> f64 {
        self.0.map_or(f64::NEG_INFINITY, Dd::to_f64)
    }

    pub fn is_zero(self) -> bool {
        self.0.is_none()
    }

    pub fn is_infinite(self) -> bool {
        matches!(self.0, Some(d) if d.hi == f64::INFINITY)
    }

    pub fn to_f64(self) -> f64 {
        match self.0 {
            None => 0.0,
            Some(d) => d.hi.exp() * d.lo.exp(),
        }
    }

    pub fn mul(self, other: LogValue) -> LogValue {
        match (self.0, other.0) {
            (Some(a), Some(b)) => LogValue(Some(a + b)),
            _ => LogValue::ZERO,
        }
    }

    /// Quotient; dividing a nonzero value by zero yields [`LogValue::INFINITY`].
    pub fn div(self, other: LogValue) -> LogValue {
        match (self.0, other.0) {
            (None, _) => LogValue::ZERO,
            (Some(_), None) => LogValue::INFINITY,
            (Some(a), Some(b)) => LogValue(Some(a - b)),
        }
    }

    pub fn powf(self, p: f64) -> LogValue {
        match self.0 {
            None if p > 0.0 => LogValue::ZERO,
            None if p == 0.0 => LogValue::ONE,
            None => LogValue::INFINITY,
            Some(d) => LogValue::from_ln(d.to_f64() * p),
        }
    }

    /// Ratio `self / other` as a plain double.
    pub fn ratio(self, other: LogValue) -> f64 {
        self.div(other).to_f64()
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.0, other.0) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(a), Some(b)) => a.cmp(&b),
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            None => f.write_str("zero"),
            Some(d) => d.fmt(f),
        }
    }
}

/// `ln(e^a + e^b)`, stabilised on the larger argument.
pub fn log_add(a: LogValue, b: LogValue) -> LogValue {
    let (hi, lo) = match (a.0, b.0) {
        (None, _) => return b,
        (_, None) => return a,
        (Some(x), Some(y)) if x >= y => (x, y),
        (Some(x), Some(y)) => (y, x),
    };
    if !hi.is_finite() {
        return LogValue(Some(hi));
    }
    let d = (lo - hi).to_f64();
    LogValue(Some(hi + d.exp().ln_1p()))
}

/// `ln(e^a - e^b)` for `a >= b`; exact cancellation gives [`LogValue::ZERO`].
pub fn log_sub(a: LogValue, b: LogValue) -> Result<LogValue> {
    match (a.0, b.0) {
        (_, None) => Ok(a),
        (None, Some(_)) => Err(Error::NegativeDifference { op: "log_sub" }),
        (Some(x), Some(y)) => {
            if x < y {
                return Err(Error::NegativeDifference { op: "log_sub" });
            }
            if x == y {
                return Ok(LogValue::ZERO);
            }
            if !x.is_finite() {
                return Ok(a);
            }
            let d = (y - x).to_f64();
            Ok(LogValue::from_ln_dd(x + (-d.exp_m1()).ln()))
        }
    }
}

/// Log of a sum of magnitudes, pivoted on the maximum element.
///
/// The scaled terms are accumulated with Neumaier compensation so the result
/// does not depend on the input order beyond a few ulps.
pub fn log_sum<I>(values: I) -> LogValue
where
    I: IntoIterator<Item = LogValue>,
{
    let values: Vec<Dd> = values.into_iter().filter_map(LogValue::ln).collect();
    let Some(&pivot) = values.iter().max() else {
        return LogValue::ZERO;
    };
    if !pivot.is_finite() {
        return LogValue(Some(pivot));
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in &values {
        let term = (*v - pivot).to_f64().exp();
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    LogValue(Some(pivot + (sum + comp).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn lv(x: f64) -> LogValue {
        LogValue::from_ln(x)
    }

    #[test]
    fn log_add_equal_magnitudes() {
        assert!((log_add(lv(0.0), lv(0.0)).ln_f64() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn log_add_zero_is_identity() {
        assert_eq!(log_add(LogValue::ZERO, lv(5.0)), lv(5.0));
        assert_eq!(log_add(lv(5.0), LogValue::ZERO), lv(5.0));
    }

    #[test]
    fn log_add_large_does_not_overflow() {
        let r = log_add(lv(1000.0), lv(1000.0)).ln_f64();
        assert!(r.is_finite());
        assert!((r - (1000.0 + LN_2)).abs() < 1e-12);
    }

    #[test]
    fn log_sub_basic() {
        let r = log_sub(lv(3f64.ln()), lv(0.0)).unwrap();
        assert!((r.ln_f64() - LN_2).abs() < 1e-15);
        assert_eq!(log_sub(lv(7.0), lv(7.0)).unwrap(), LogValue::ZERO);
    }

    #[test]
    fn log_sub_high_magnitude() {
        let r = log_sub(lv(1000.0), lv(999.0)).unwrap().ln_f64();
        let expected = 1000.0 + (1.0 - (-1.0f64).exp()).ln();
        assert!((r - expected).abs() < 1e-12);
    }

    #[test]
    fn log_sub_rejects_negative() {
        assert!(log_sub(lv(1.0), lv(2.0)).is_err());
        assert!(log_sub(LogValue::ZERO, lv(2.0)).is_err());
    }

    #[test]
    fn log_sum_cases() {
        let four = log_sum([lv(0.0); 4]);
        assert!((four.ln_f64() - 4f64.ln()).abs() < 1e-15);
        assert_eq!(log_sum(Vec::new()), LogValue::ZERO);
        let six = log_sum([lv(0.0), lv(LN_2), lv(3f64.ln())]);
        assert!((six.ln_f64() - 6f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn zero_absorbs_under_mul() {
        assert_eq!(LogValue::ZERO.mul(lv(3.0)), LogValue::ZERO);
        assert_eq!(lv(3.0).mul(LogValue::ZERO), LogValue::ZERO);
    }

    #[test]
    fn double_double_keeps_small_summand() {
        let e500 = 500f64.exp();
        let u = Dd::sum(e500, 500.0);
        assert_eq!((u - Dd::new(e500)).to_f64(), 500.0);
        // The same cancellation in plain doubles loses the summand.
        assert_eq!((e500 + 500.0) - e500, 0.0);
    }

    #[test]
    fn real_round_trip() {
        for r in [1e-300, 1e-5, 0.3, 1.0, 7.5, 1e300] {
            let back = LogValue::from_real(r).to_f64();
            // exp amplifies the rounding of ln r by |ln r|
            let tol = 4.0 * f64::EPSILON * r.ln().abs().max(1.0);
            assert!(((back - r) / r).abs() < tol, "{r} -> {back}");
        }
    }

    #[test]
    fn ordering_puts_zero_first() {
        assert!(LogValue::ZERO < lv(-1e300));
        assert!(lv(1.0) < lv(2.0));
        assert!(LogValue::from_ln_dd(Dd::sum(10.0, 1e-20)) > lv(10.0));
    }
}
