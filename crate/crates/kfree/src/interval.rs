//! Outward-rounded interval arithmetic: the numeric carrier for every
//! certified bound in the toolkit.
//!
//! Endpoints are MPFR floats; every operation rounds the lower endpoint
//! toward −∞ and the upper endpoint toward +∞, so the returned interval
//! always contains the exact mathematical result. Upper endpoints are
//! therefore certificates, not approximations.

use crate::error::{Error, Result};
use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::ser::{Serialize, SerializeStruct, Serializer};
use std::cmp::Ordering;
use std::fmt;

/// Default working precision in bits. The paper's constants carry four
/// decimal places; 96 bits leaves ample slack.
pub const DEFAULT_PREC: u32 = 96;

/// Minimum precision below which certified evaluation is refused.
pub const MIN_PREC: u32 = 24;

/// Exact rational numbers (arbitrary precision, lowest terms).
pub type ExactRational = Rational;

/// A closed real interval `[lo, hi]` with outward-rounded endpoints.
#[derive(Clone, Debug)]
pub struct CertInterval {
    lo: Float,
    hi: Float,
}

impl CertInterval {
    fn new(lo: Float, hi: Float) -> Self {
        debug_assert!(lo <= hi, "interval invariant lo <= hi violated: [{lo}, {hi}]");
        CertInterval { lo, hi }
    }

    /// Working precision in bits.
    pub fn precision_bits(&self) -> u32 {
        self.lo.prec()
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn lo_f64(&self) -> f64 {
        self.lo.to_f64_round(Round::Down)
    }

    pub fn hi_f64(&self) -> f64 {
        self.hi.to_f64_round(Round::Up)
    }

    /// Exact rational value of the lower endpoint.
    pub fn lo_rational(&self) -> Rational {
        self.lo.to_rational().expect("finite endpoint")
    }

    /// Exact rational value of the upper endpoint.
    pub fn hi_rational(&self) -> Rational {
        self.hi.to_rational().expect("finite endpoint")
    }

    /// Upper bound on the interval width, rounded up.
    pub fn width(&self) -> Float {
        Float::with_val_round(self.precision_bits(), &self.hi - &self.lo, Round::Up).0
    }

    // ----- constructors -------------------------------------------------

    /// Tightest interval containing an exact rational at the given precision.
    pub fn from_rational(r: &Rational, prec: u32) -> Self {
        let lo = Float::with_val_round(prec, r, Round::Down).0;
        let hi = Float::with_val_round(prec, r, Round::Up).0;
        CertInterval::new(lo, hi)
    }

    /// Interval with exact rational endpoints `[lo, hi]`.
    pub fn from_rational_pair(lo: &Rational, hi: &Rational, prec: u32) -> Self {
        assert!(lo <= hi);
        let lo = Float::with_val_round(prec, lo, Round::Down).0;
        let hi = Float::with_val_round(prec, hi, Round::Up).0;
        CertInterval::new(lo, hi)
    }

    pub fn from_integer<T: Into<Integer>>(n: T, prec: u32) -> Self {
        let n: Integer = n.into();
        let lo = Float::with_val_round(prec, &n, Round::Down).0;
        let hi = Float::with_val_round(prec, &n, Round::Up).0;
        CertInterval::new(lo, hi)
    }

    /// Parses a decimal literal such as `0.4995`, `1.3860` or `17/100` into an
    /// exact rational and widens it to an interval. This is how every paper
    /// constant is ingested, avoiding binary-representation drift.
    pub fn from_decimal(s: &str, prec: u32) -> Result<Self> {
        let r = parse_rational(s)?;
        Ok(CertInterval::from_rational(&r, prec))
    }

    /// π as a certified interval.
    pub fn pi(prec: u32) -> Self {
        use rug::float::Constant;
        let lo = Float::with_val_round(prec, Constant::Pi, Round::Down).0;
        let hi = Float::with_val_round(prec, Constant::Pi, Round::Up).0;
        CertInterval::new(lo, hi)
    }

    /// e^t for an exact rational t (e.g. the evaluation points e^116, e^400).
    pub fn exp_rational(t: &Rational, prec: u32) -> Self {
        CertInterval::from_rational(t, prec).exp()
    }

    // ----- arithmetic ---------------------------------------------------

    fn op_prec(&self, rhs: &CertInterval) -> u32 {
        self.precision_bits().max(rhs.precision_bits())
    }

    pub fn add(&self, rhs: &CertInterval) -> CertInterval {
        let prec = self.op_prec(rhs);
        let lo = Float::with_val_round(prec, &self.lo + &rhs.lo, Round::Down).0;
        let hi = Float::with_val_round(prec, &self.hi + &rhs.hi, Round::Up).0;
        CertInterval::new(lo, hi)
    }

    pub fn sub(&self, rhs: &CertInterval) -> CertInterval {
        let prec = self.op_prec(rhs);
        let lo = Float::with_val_round(prec, &self.lo - &rhs.hi, Round::Down).0;
        let hi = Float::with_val_round(prec, &self.hi - &rhs.lo, Round::Up).0;
        CertInterval::new(lo, hi)
    }

    pub fn neg(&self) -> CertInterval {
        let prec = self.precision_bits();
        let lo = Float::with_val_round(prec, -&self.hi, Round::Down).0;
        let hi = Float::with_val_round(prec, -&self.lo, Round::Up).0;
        CertInterval::new(lo, hi)
    }

    pub fn mul(&self, rhs: &CertInterval) -> CertInterval {
        let prec = self.op_prec(rhs);
        let pairs = [
            (&self.lo, &rhs.lo),
            (&self.lo, &rhs.hi),
            (&self.hi, &rhs.lo),
            (&self.hi, &rhs.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let down = Float::with_val_round(prec, a * b, Round::Down).0;
            let up = Float::with_val_round(prec, a * b, Round::Up).0;
            lo = Some(match lo {
                Some(cur) if cur <= down => cur,
                _ => down,
            });
            hi = Some(match hi {
                Some(cur) if cur >= up => cur,
                _ => up,
            });
        }
        CertInterval::new(lo.unwrap(), hi.unwrap())
    }

    pub fn div(&self, rhs: &CertInterval) -> Result<CertInterval> {
        if rhs.contains_zero() {
            return Err(Error::Domain(format!("division by interval containing zero: {rhs}")));
        }
        let prec = self.op_prec(rhs);
        let pairs = [
            (&self.lo, &rhs.lo),
            (&self.lo, &rhs.hi),
            (&self.hi, &rhs.lo),
            (&self.hi, &rhs.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let down = Float::with_val_round(prec, a / b, Round::Down).0;
            let up = Float::with_val_round(prec, a / b, Round::Up).0;
            lo = Some(match lo {
                Some(cur) if cur <= down => cur,
                _ => down,
            });
            hi = Some(match hi {
                Some(cur) if cur >= up => cur,
                _ => up,
            });
        }
        Ok(CertInterval::new(lo.unwrap(), hi.unwrap()))
    }

    pub fn recip(&self) -> Result<CertInterval> {
        CertInterval::from_integer(1, self.precision_bits()).div(self)
    }

    /// Convenience: multiply by an exact rational.
    pub fn mul_rational(&self, r: &Rational) -> CertInterval {
        self.mul(&CertInterval::from_rational(r, self.precision_bits()))
    }

    pub fn sqrt(&self) -> Result<CertInterval> {
        if self.lo < 0 {
            return Err(Error::Domain(format!("sqrt of interval with negative part: {self}")));
        }
        let prec = self.precision_bits();
        let lo = Float::with_val_round(prec, self.lo.sqrt_ref(), Round::Down).0;
        let hi = Float::with_val_round(prec, self.hi.sqrt_ref(), Round::Up).0;
        Ok(CertInterval::new(lo, hi))
    }

    pub fn ln(&self) -> Result<CertInterval> {
        if self.lo <= 0 {
            return Err(Error::Domain(format!("log of non-positive interval: {self}")));
        }
        let prec = self.precision_bits();
        let lo = Float::with_val_round(prec, self.lo.ln_ref(), Round::Down).0;
        let hi = Float::with_val_round(prec, self.hi.ln_ref(), Round::Up).0;
        Ok(CertInterval::new(lo, hi))
    }

    pub fn exp(&self) -> CertInterval {
        let prec = self.precision_bits();
        let lo = Float::with_val_round(prec, self.lo.exp_ref(), Round::Down).0;
        let hi = Float::with_val_round(prec, self.hi.exp_ref(), Round::Up).0;
        CertInterval::new(lo, hi)
    }

    /// Integer power with correct handling of sign and parity.
    pub fn pow_int(&self, n: i32) -> Result<CertInterval> {
        let prec = self.precision_bits();
        if n == 0 {
            return Ok(CertInterval::from_integer(1, prec));
        }
        if n < 0 {
            return self.pow_int(-n)?.recip();
        }
        let k = n as u32;
        let lo_k_down = Float::with_val_round(prec, (&self.lo).pow(k), Round::Down).0;
        let lo_k_up = Float::with_val_round(prec, (&self.lo).pow(k), Round::Up).0;
        let hi_k_down = Float::with_val_round(prec, (&self.hi).pow(k), Round::Down).0;
        let hi_k_up = Float::with_val_round(prec, (&self.hi).pow(k), Round::Up).0;
        if k % 2 == 1 {
            return Ok(CertInterval::new(lo_k_down, hi_k_up));
        }
        // Even power: x^k = |x|^k, minimized at the point of smallest |x|.
        if self.lo >= 0 {
            Ok(CertInterval::new(lo_k_down, hi_k_up))
        } else if self.hi <= 0 {
            Ok(CertInterval::new(hi_k_down, lo_k_up))
        } else {
            let zero = Float::with_val(prec, 0);
            let hi = if lo_k_up >= hi_k_up { lo_k_up } else { hi_k_up };
            Ok(CertInterval::new(zero, hi))
        }
    }

    /// x^r for exact rational exponent r; requires x > 0 unless r is an
    /// integer. Computed as exp(r·log x), which preserves directed rounding
    /// through monotone correctly-rounded primitives.
    pub fn pow_rational(&self, r: &Rational) -> Result<CertInterval> {
        if r.denom() == &Integer::from(1) {
            let n = r
                .numer()
                .to_i32()
                .ok_or_else(|| Error::Overflow("integer exponent out of range".into()))?;
            return self.pow_int(n);
        }
        if self.lo <= 0 {
            return Err(Error::Domain(format!(
                "fractional power {r} of non-positive interval: {self}"
            )));
        }
        let rr = CertInterval::from_rational(r, self.precision_bits());
        Ok(self.ln()?.mul(&rr).exp())
    }

    /// Pointwise maximum with zero (used to clamp block counts).
    pub fn max_zero(&self) -> CertInterval {
        let prec = self.precision_bits();
        let zero = Float::with_val(prec, 0);
        let lo = if self.lo > 0 { self.lo.clone() } else { zero.clone() };
        let hi = if self.hi > 0 { self.hi.clone() } else { zero };
        CertInterval::new(lo, hi)
    }

    /// Interval hull of two intervals.
    pub fn union(&self, rhs: &CertInterval) -> CertInterval {
        let lo = if self.lo <= rhs.lo { self.lo.clone() } else { rhs.lo.clone() };
        let hi = if self.hi >= rhs.hi { self.hi.clone() } else { rhs.hi.clone() };
        CertInterval::new(lo, hi)
    }

    // ----- predicates ---------------------------------------------------

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    pub fn contains_rational(&self, r: &Rational) -> bool {
        self.lo <= *r && self.hi >= *r
    }

    /// True iff every point of `self` is ≤ every point of `rhs`.
    pub fn certainly_le(&self, rhs: &CertInterval) -> bool {
        self.hi <= rhs.lo
    }

    /// True iff every point of `self` is < every point of `rhs`.
    pub fn certainly_lt(&self, rhs: &CertInterval) -> bool {
        self.hi < rhs.lo
    }

    /// True iff every point of `self` is ≤ r.
    pub fn certainly_le_rational(&self, r: &Rational) -> bool {
        self.hi <= *r
    }

    /// True iff every point of `self` is ≥ r.
    pub fn certainly_ge_rational(&self, r: &Rational) -> bool {
        self.lo >= *r
    }

    pub fn is_certainly_positive(&self) -> bool {
        self.lo > 0
    }

    /// Three-way certified comparison against another interval:
    /// `Less` iff self < rhs everywhere, `Greater` iff self > rhs everywhere,
    /// `None` when the intervals overlap (caller must bisect or widen).
    pub fn compare_certain(&self, rhs: &CertInterval) -> Option<Ordering> {
        if self.hi < rhs.lo {
            Some(Ordering::Less)
        } else if self.lo > rhs.hi {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && rhs.lo == rhs.hi && self.lo == rhs.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    /// Floor of the interval as an exact integer, provided it is unambiguous
    /// (both endpoints share the same floor).
    pub fn unambiguous_floor(&self) -> Result<Integer> {
        let fl = self.lo.clone().floor().to_integer().ok_or_else(|| {
            Error::Domain("floor of non-finite endpoint".into())
        })?;
        let fh = self.hi.clone().floor().to_integer().ok_or_else(|| {
            Error::Domain("floor of non-finite endpoint".into())
        })?;
        if fl != fh {
            return Err(Error::Precision(format!(
                "floor ambiguous at this precision: {self}"
            )));
        }
        Ok(fl)
    }
}

impl fmt::Display for CertInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", endpoint_string(&self.lo, Round::Down), endpoint_string(&self.hi, Round::Up))
    }
}

/// Decimal rendering that rounds in the endpoint's safe direction, so a
/// printed interval still encloses the stored one.
pub fn endpoint_string(f: &Float, dir: Round) -> String {
    let (sign, digits, exp) = f.to_sign_string_exp_round(10, Some(27), dir);
    let sign = if sign { "-" } else { "" };
    match exp {
        Some(e) => format!("{sign}0.{digits}e{e}"),
        None => format!("{sign}{digits}"),
    }
}

impl Serialize for CertInterval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("CertInterval", 2)?;
        st.serialize_field("lo", &endpoint_string(&self.lo, Round::Down))?;
        st.serialize_field("hi", &endpoint_string(&self.hi, Round::Up))?;
        st.end()
    }
}

/// Parses an exact rational from an integer (`17`), decimal (`0.4995`,
/// `-1.386`), or fraction (`17/100`) literal.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Spec("empty numeric literal".into()));
    }
    if s.contains('/') {
        return s
            .parse::<Rational>()
            .map_err(|e| Error::Spec(format!("bad rational literal {s:?}: {e}")));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Spec(format!("bad numeric literal {s:?}")));
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Spec(format!("bad numeric literal {s:?}")));
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = if digits.is_empty() { "0".to_string() } else { digits };
    let numer = digits
        .parse::<Integer>()
        .map_err(|e| Error::Spec(format!("bad numeric literal {s:?}: {e}")))?;
    let denom = Integer::from(10).pow(frac_part.len() as u32);
    Ok(Rational::from((numer * sign, denom)))
}
