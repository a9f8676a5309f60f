//! Terms of the canonical shape c·x^α·(log x)^β and their monotonicity
//! classification, which mechanizes the paper-style range arguments
//! ("this term is decreasing for x ≥ …").

use crate::error::{Error, Result};
use crate::interval::{CertInterval, MIN_PREC};
use rug::Rational;

/// c·x^α·(log x)^β with rational α and integer β.
#[derive(Clone, Debug)]
pub struct Monomial {
    pub c: CertInterval,
    pub alpha: Rational,
    pub beta: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MonotoneClass {
    /// Non-increasing for all x ≥ the given floor.
    Decreasing,
    /// Non-decreasing for all x ≥ the given floor.
    Increasing,
    Indeterminate,
}

impl Monomial {
    pub fn new(c: CertInterval, alpha: Rational, beta: i32) -> Self {
        Monomial { c, alpha, beta }
    }

    /// Evaluates the monomial over an x-interval with outward rounding.
    pub fn evaluate(&self, x: &CertInterval) -> Result<CertInterval> {
        if self.c.precision_bits() < MIN_PREC || x.precision_bits() < MIN_PREC {
            return Err(Error::Precision(format!(
                "monomial evaluation requires at least {MIN_PREC} bits"
            )));
        }
        if x.lo() <= &1 && self.beta != 0 {
            return Err(Error::Domain(
                "monomial with log factor requires x.lo > 1".into(),
            ));
        }
        if x.lo() <= &0 {
            return Err(Error::Domain("monomial requires x > 0".into()));
        }
        let pow = x.pow_rational(&self.alpha)?;
        let mut out = self.c.mul(&pow);
        if self.beta != 0 {
            out = out.mul(&x.ln()?.pow_int(self.beta)?);
        }
        Ok(out)
    }

    /// Monotonicity in x for x ≥ x_floor, assuming c ≥ 0 (sign of c only
    /// flips the direction; callers with signed coefficients handle that).
    ///
    /// The derivative of x^α(log x)^β has the sign of α·log x + β (for
    /// x > 1), which is tested on the floor when the plain sign rules are
    /// inconclusive.
    pub fn monotone_class(&self, x_floor: &CertInterval) -> MonotoneClass {
        classify(&self.alpha, &Rational::from(self.beta), x_floor)
    }
}

/// Shared classifier, also used by the bound-pipeline's internal power-log
/// terms with rational β.
pub(crate) fn classify(alpha: &Rational, beta: &Rational, x_floor: &CertInterval) -> MonotoneClass {
    let zero = Rational::new();
    if *alpha == zero {
        return if *beta > zero {
            MonotoneClass::Increasing
        } else {
            // β ≤ 0: constant counts as non-increasing.
            MonotoneClass::Decreasing
        };
    }
    if *alpha > zero && *beta >= zero {
        return MonotoneClass::Increasing;
    }
    if *alpha < zero && *beta <= zero {
        return MonotoneClass::Decreasing;
    }
    // Mixed signs: decide by the sign of α·log x + β at the floor. The
    // expression is monotone in x in the direction of α's sign, so a
    // certified sign at the floor settles the whole tail.
    let prec = x_floor.precision_bits();
    let ln = match x_floor.ln() {
        Ok(l) => l,
        Err(_) => return MonotoneClass::Indeterminate,
    };
    let s = CertInterval::from_rational(alpha, prec)
        .mul(&ln)
        .add(&CertInterval::from_rational(beta, prec));
    if *alpha > zero {
        // s is increasing in x; s ≥ 0 at the floor ⇒ increasing beyond it.
        if s.lo() >= &0 {
            return MonotoneClass::Increasing;
        }
        MonotoneClass::Indeterminate
    } else {
        // α < 0, β > 0: s is decreasing in x; s ≤ 0 at the floor ⇒
        // decreasing beyond it.
        if s.hi() <= &0 {
            return MonotoneClass::Decreasing;
        }
        MonotoneClass::Indeterminate
    }
}
