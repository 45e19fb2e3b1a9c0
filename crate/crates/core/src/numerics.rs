//! Probability values under three interchangeable numeric backends.
//!
//! A [`ProbValue`] is either an exact rational (arbitrary-precision, always in
//! lowest terms), a 64-bit float, or a log-domain float. Every evaluation picks
//! one [`NumericMode`] up front and all intermediate values share it; mixing
//! backends in a single arithmetic operation is an error rather than an
//! implicit conversion.
//!
//! Powers follow the convention `0^0 = 1` in every backend. Without it the
//! boundary branches of the visit formulas break at `N = 1` and at degenerate
//! transition probabilities.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Which backend a computation runs in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NumericMode {
    Exact,
    Float,
    LogSpace,
}

impl NumericMode {
    pub const ALL: [NumericMode; 3] = [NumericMode::Exact, NumericMode::Float, NumericMode::LogSpace];

    pub fn as_str(self) -> &'static str {
        match self {
            NumericMode::Exact => "exact",
            NumericMode::Float => "float",
            NumericMode::LogSpace => "logspace",
        }
    }
}

impl fmt::Display for NumericMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NumericMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "exact" => Ok(NumericMode::Exact),
            "float" => Ok(NumericMode::Float),
            "logspace" | "log" => Ok(NumericMode::LogSpace),
            other => Err(Error::InvalidArgument(format!("unknown numeric mode {other:?}"))),
        }
    }
}

/// A probability stored as its natural logarithm.
///
/// Zero probability has its own variant so it never has to masquerade as a
/// large negative float.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LogProb {
    Zero,
    Ln(f64),
}

impl LogProb {
    /// Wraps a natural log. `-inf` maps to [`LogProb::Zero`].
    pub fn from_ln(ln: f64) -> LogProb {
        if ln == f64::NEG_INFINITY {
            LogProb::Zero
        } else {
            LogProb::Ln(ln)
        }
    }

    pub fn ln(self) -> f64 {
        match self {
            LogProb::Zero => f64::NEG_INFINITY,
            LogProb::Ln(x) => x,
        }
    }

    pub fn exp(self) -> f64 {
        match self {
            LogProb::Zero => 0.0,
            LogProb::Ln(x) => x.exp(),
        }
    }

    pub fn is_zero(self) -> bool {
        matches!(self, LogProb::Zero)
    }
}

/// A probability under one of the three backends.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbValue {
    Exact(BigRational),
    Float(f64),
    LogSpace(LogProb),
}

impl ProbValue {
    pub fn zero(mode: NumericMode) -> ProbValue {
        match mode {
            NumericMode::Exact => ProbValue::Exact(BigRational::zero()),
            NumericMode::Float => ProbValue::Float(0.0),
            NumericMode::LogSpace => ProbValue::LogSpace(LogProb::Zero),
        }
    }

    pub fn one(mode: NumericMode) -> ProbValue {
        match mode {
            NumericMode::Exact => ProbValue::Exact(BigRational::one()),
            NumericMode::Float => ProbValue::Float(1.0),
            NumericMode::LogSpace => ProbValue::LogSpace(LogProb::Ln(0.0)),
        }
    }

    /// Exact `num/den`; fails unless the ratio lies in [0, 1].
    pub fn exact(num: i64, den: i64) -> Result<ProbValue> {
        if den == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let r = BigRational::new(num.into(), den.into());
        ProbValue::from_ratio(r)
    }

    /// Exact value from an arbitrary rational; fails unless it lies in [0, 1].
    pub fn from_ratio(r: BigRational) -> Result<ProbValue> {
        if r.is_negative() || r > BigRational::one() {
            return Err(Error::InvalidProbability {
                field: "value".into(),
                value: format_ratio(&r),
            });
        }
        Ok(ProbValue::Exact(r))
    }

    /// Float probability; fails unless `x` is finite and in [0, 1].
    pub fn float(x: f64) -> Result<ProbValue> {
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            return Err(Error::InvalidProbability {
                field: "value".into(),
                value: x.to_string(),
            });
        }
        Ok(ProbValue::Float(x))
    }

    /// Log-domain probability from its natural log (`<= 0`, or `-inf` for zero).
    pub fn from_ln(ln: f64) -> Result<ProbValue> {
        if ln.is_nan() || ln > 0.0 || ln == f64::INFINITY {
            return Err(Error::InvalidProbability {
                field: "log value".into(),
                value: ln.to_string(),
            });
        }
        Ok(ProbValue::LogSpace(LogProb::from_ln(ln)))
    }

    /// Parses `"a/b"` or a decimal string (`"0.25"`, `"1e-3"`).
    ///
    /// Exact mode keeps the decimal exactly; float mode takes the nearest
    /// double; log mode takes the log of the exact value.
    pub fn parse(s: &str, mode: NumericMode) -> Result<ProbValue> {
        let ratio = parse_ratio(s)?;
        if ratio.is_negative() || ratio > BigRational::one() {
            return Err(Error::InvalidProbability {
                field: "value".into(),
                value: s.trim().to_string(),
            });
        }
        Ok(match mode {
            NumericMode::Exact => ProbValue::Exact(ratio),
            NumericMode::Float => {
                let t = s.trim();
                // Rust's float parser is correctly rounded for plain decimals.
                let x = if t.contains('/') {
                    ratio_to_f64(&ratio)
                } else {
                    t.parse::<f64>().unwrap_or_else(|_| ratio_to_f64(&ratio))
                };
                ProbValue::Float(x)
            }
            NumericMode::LogSpace => ProbValue::LogSpace(LogProb::from_ln(ln_ratio(&ratio))),
        })
    }

    pub fn mode(&self) -> NumericMode {
        match self {
            ProbValue::Exact(_) => NumericMode::Exact,
            ProbValue::Float(_) => NumericMode::Float,
            ProbValue::LogSpace(_) => NumericMode::LogSpace,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ProbValue::Exact(r) => r.is_zero(),
            ProbValue::Float(x) => *x == 0.0,
            ProbValue::LogSpace(l) => l.is_zero(),
        }
    }

    fn mismatch(&self, other: &ProbValue) -> Error {
        Error::BackendMismatch {
            expected: self.mode(),
            found: other.mode(),
        }
    }

    pub fn checked_mul(&self, other: &ProbValue) -> Result<ProbValue> {
        Ok(match (self, other) {
            (ProbValue::Exact(a), ProbValue::Exact(b)) => ProbValue::Exact(a * b),
            (ProbValue::Float(a), ProbValue::Float(b)) => ProbValue::Float(a * b),
            (ProbValue::LogSpace(a), ProbValue::LogSpace(b)) => ProbValue::LogSpace(match (a, b) {
                (LogProb::Ln(x), LogProb::Ln(y)) => LogProb::Ln(x + y),
                _ => LogProb::Zero,
            }),
            _ => return Err(self.mismatch(other)),
        })
    }

    pub fn checked_add(&self, other: &ProbValue) -> Result<ProbValue> {
        Ok(match (self, other) {
            (ProbValue::Exact(a), ProbValue::Exact(b)) => ProbValue::Exact(a + b),
            (ProbValue::Float(a), ProbValue::Float(b)) => ProbValue::Float(a + b),
            (ProbValue::LogSpace(a), ProbValue::LogSpace(b)) => {
                ProbValue::LogSpace(LogProb::from_ln(log_sum_exp(&[a.ln(), b.ln()])))
            }
            _ => return Err(self.mismatch(other)),
        })
    }

    /// `1 - self`, computed in the value's own backend.
    pub fn complement(&self) -> ProbValue {
        match self {
            ProbValue::Exact(r) => ProbValue::Exact(BigRational::one() - r),
            ProbValue::Float(x) => ProbValue::Float(1.0 - x),
            ProbValue::LogSpace(l) => ProbValue::LogSpace(match l {
                LogProb::Zero => LogProb::Ln(0.0),
                LogProb::Ln(x) => LogProb::from_ln(log1m_exp(*x)),
            }),
        }
    }

    pub fn pow(&self, exponent: u64) -> ProbValue {
        pow_prob(self, exponent)
    }

    /// Nearest double (exponentiating log values).
    pub fn to_f64(&self) -> f64 {
        match self {
            ProbValue::Exact(r) => ratio_to_f64(r),
            ProbValue::Float(x) => *x,
            ProbValue::LogSpace(l) => l.exp(),
        }
    }

    /// Natural log; `-inf` for zero.
    pub fn ln(&self) -> f64 {
        match self {
            ProbValue::Exact(r) => ln_ratio(r),
            ProbValue::Float(x) => x.ln(),
            ProbValue::LogSpace(l) => l.ln(),
        }
    }

    /// The exact rational this value denotes. Floats are dyadic, so this is
    /// lossless for the Float backend.
    pub fn to_ratio(&self) -> BigRational {
        match self {
            ProbValue::Exact(r) => r.clone(),
            ProbValue::Float(x) => BigRational::from_float(*x).unwrap_or_else(BigRational::zero),
            ProbValue::LogSpace(l) => BigRational::from_float(l.exp()).unwrap_or_else(BigRational::zero),
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            ProbValue::Exact(r) => Some(r),
            _ => None,
        }
    }

    pub fn convert(&self, target: NumericMode) -> ProbValue {
        convert(self, target)
    }

    /// Decimal rendering with `sig` significant digits in `d.ddd…e±x` form.
    pub fn to_decimal_string(&self, sig: usize) -> String {
        match self {
            ProbValue::Exact(r) => ratio_to_scientific(r, sig),
            ProbValue::Float(x) => format!("{:.*e}", sig.saturating_sub(1), x),
            ProbValue::LogSpace(l) => ln_to_scientific(l.ln(), sig),
        }
    }
}

impl fmt::Display for ProbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbValue::Exact(r) => f.write_str(&format_ratio(r)),
            ProbValue::Float(x) => write!(f, "{x}"),
            ProbValue::LogSpace(LogProb::Zero) => f.write_str("exp(-inf)"),
            ProbValue::LogSpace(LogProb::Ln(x)) => write!(f, "exp({x})"),
        }
    }
}

/// `base^exponent` with `0^0 = 1` in every backend.
pub fn pow_prob(base: &ProbValue, exponent: u64) -> ProbValue {
    if exponent == 0 {
        return ProbValue::one(base.mode());
    }
    match base {
        ProbValue::Exact(r) => {
            let e = exponent_u32(exponent);
            ProbValue::Exact(BigRational::new_raw(
                num_traits::pow(r.numer().clone(), e as usize),
                num_traits::pow(r.denom().clone(), e as usize),
            ))
        }
        ProbValue::Float(x) => ProbValue::Float(powu(*x, exponent)),
        ProbValue::LogSpace(l) => ProbValue::LogSpace(match l {
            LogProb::Zero => LogProb::Zero,
            LogProb::Ln(x) => LogProb::Ln(x * exponent as f64),
        }),
    }
}

fn exponent_u32(exponent: u64) -> u32 {
    u32::try_from(exponent).expect("exact exponent exceeds u32::MAX")
}

/// Float power with `0^0 = 1`.
pub(crate) fn powu(x: f64, exponent: u64) -> f64 {
    match i32::try_from(exponent) {
        Ok(e) => x.powi(e),
        Err(_) => x.powf(exponent as f64),
    }
}

/// Sums values that all live in `mode`.
///
/// Exact mode is exact, log mode uses log-sum-exp anchored at the largest
/// term, float mode uses Neumaier compensated summation. The empty sum is zero.
pub fn sum_values(mode: NumericMode, terms: &[ProbValue]) -> Result<ProbValue> {
    if let Some(bad) = terms.iter().find(|t| t.mode() != mode) {
        return Err(Error::BackendMismatch {
            expected: mode,
            found: bad.mode(),
        });
    }
    Ok(match mode {
        NumericMode::Exact => {
            let mut acc = BigRational::zero();
            for t in terms {
                if let ProbValue::Exact(r) = t {
                    acc += r;
                }
            }
            ProbValue::Exact(acc)
        }
        NumericMode::Float => {
            let mut acc = CompensatedSum::default();
            for t in terms {
                acc.add(t.to_f64());
            }
            ProbValue::Float(acc.value())
        }
        NumericMode::LogSpace => {
            let logs: Vec<f64> = terms.iter().map(ProbValue::ln).collect();
            ProbValue::LogSpace(LogProb::from_ln(log_sum_exp(&logs)))
        }
    })
}

/// Converts between backends. Exact to float rounds to nearest; float to
/// exact is lossless.
pub fn convert(value: &ProbValue, target: NumericMode) -> ProbValue {
    match (value, target) {
        (v, t) if v.mode() == t => v.clone(),
        (ProbValue::Exact(r), NumericMode::Float) => ProbValue::Float(ratio_to_f64(r)),
        (ProbValue::Exact(r), NumericMode::LogSpace) => ProbValue::LogSpace(LogProb::from_ln(ln_ratio(r))),
        (ProbValue::Float(x), NumericMode::Exact) => {
            ProbValue::Exact(BigRational::from_float(*x).unwrap_or_else(BigRational::zero))
        }
        (ProbValue::Float(x), NumericMode::LogSpace) => ProbValue::LogSpace(LogProb::from_ln(x.ln())),
        (ProbValue::LogSpace(l), NumericMode::Float) => ProbValue::Float(l.exp()),
        (ProbValue::LogSpace(l), NumericMode::Exact) => {
            ProbValue::Exact(BigRational::from_float(l.exp()).unwrap_or_else(BigRational::zero))
        }
        _ => unreachable!(),
    }
}

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// `ln(Σ exp(x_i))`, shifted by the maximum. All `-inf` (or empty) gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut acc = CompensatedSum::default();
    for &v in values {
        acc.add((v - max).exp());
    }
    max + acc.value().ln()
}

/// `ln(1 - exp(x))` for `x <= 0`.
pub fn log1m_exp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NEG_INFINITY
    } else if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

/// Natural log of a non-negative big integer.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    let shift = bits.saturating_sub(64);
    let top = (x >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural log of a non-negative rational; `-inf` for zero.
pub fn ln_ratio(r: &BigRational) -> f64 {
    if r.is_zero() {
        return f64::NEG_INFINITY;
    }
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

/// Nearest double to a rational.
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// `"num/den"`, or just `"num"` when the denominator is one.
pub fn format_ratio(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses `"a/b"`, a plain integer, or a decimal with optional exponent into
/// an exact rational.
pub fn parse_ratio(s: &str) -> Result<BigRational> {
    let t = s.trim();
    let fail = |reason: &str| Error::Parse {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    if t.is_empty() {
        return Err(fail("empty string"));
    }
    if let Some((a, b)) = t.split_once('/') {
        let num: BigInt = a.trim().parse().map_err(|_| fail("bad numerator"))?;
        let den: BigInt = b.trim().parse().map_err(|_| fail("bad denominator"))?;
        if den.is_zero() {
            return Err(fail("zero denominator"));
        }
        return Ok(BigRational::new(num, den));
    }

    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = t[pos + 1..].parse().map_err(|_| fail("bad exponent"))?;
            (&t[..pos], e)
        }
        None => (t, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(fail("no digits"));
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(fail("not a decimal number"));
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut num: BigInt = all_digits.parse().map_err(|_| fail("not a decimal number"))?;
    if negative {
        num = -num;
    }
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let p = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * p)
    } else {
        BigRational::new(num, p)
    })
}

fn split_scientific_digits(digits: &str, exp10: i64) -> String {
    let (head, tail) = digits.split_at(1);
    if tail.is_empty() {
        format!("{head}e{exp10}")
    } else {
        format!("{head}.{tail}e{exp10}")
    }
}

/// Correctly rounded (half-up) scientific rendering of a rational.
fn ratio_to_scientific(r: &BigRational, sig: usize) -> String {
    let sig = sig.max(1);
    if r.is_zero() {
        return format!("{:.*e}", sig - 1, 0.0);
    }
    let sign = if r.is_negative() { "-" } else { "" };
    let r = r.abs();
    // Initial exponent guess from the log, then fix it up exactly.
    let mut exp10 = (ln_ratio(&r) / std::f64::consts::LN_10).floor() as i64;
    let ten = BigRational::from_integer(10.into());
    let pow10 = |e: i64| -> BigRational {
        let p = num_traits::pow(ten.clone(), e.unsigned_abs() as usize);
        if e >= 0 {
            p
        } else {
            p.recip()
        }
    };
    loop {
        let lo = pow10(exp10);
        if r < lo {
            exp10 -= 1;
        } else if r >= &lo * &ten {
            exp10 += 1;
        } else {
            break;
        }
    }
    let scaled = &r * pow10(sig as i64 - 1 - exp10);
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let mut digits = q;
    if rem.clone() * 2 >= *scaled.denom() {
        digits += 1;
    }
    let mut s = digits.to_string();
    if s.len() > sig {
        exp10 += 1;
        s.truncate(sig);
    }
    format!("{sign}{}", split_scientific_digits(&s, exp10))
}

fn ln_to_scientific(ln: f64, sig: usize) -> String {
    let sig = sig.max(1);
    if ln == f64::NEG_INFINITY {
        return format!("{:.*e}", sig - 1, 0.0);
    }
    let x = ln.exp();
    if x.is_normal() {
        return format!("{:.*e}", sig - 1, x);
    }
    // Below the double range: split the base-10 log into exponent and mantissa.
    let log10 = ln / std::f64::consts::LN_10;
    let mut exp10 = log10.floor();
    let mut mantissa = 10f64.powf(log10 - exp10);
    let mut text = format!("{:.*}", sig - 1, mantissa);
    if text.starts_with("10") {
        exp10 += 1.0;
        mantissa /= 10.0;
        text = format!("{:.*}", sig - 1, mantissa);
    }
    format!("{text}e{}", exp10 as i64)
}
