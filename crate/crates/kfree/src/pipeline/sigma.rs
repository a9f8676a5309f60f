//! Certified σ₀ and σ₂ and the budget 1 − 1/h.

use crate::error::{Error, Result};
use crate::interval::CertInterval;
use crate::primes::{pi_exact, prime_square_aggregates};
use rug::ops::Pow;
use rug::{Integer, Rational};

/// σ₀(h, J) = 1 − ∏_{p≤J}(1 − p⁻²) − Σ_{p≤J} p⁻² + 2^π(J)/h,
/// with the prime aggregates exact and 2^π(J) exact.
pub fn sigma0(h: &CertInterval, j: u64) -> Result<CertInterval> {
    if h.lo() <= &0 {
        return Err(Error::Domain("sigma0 requires h > 0".into()));
    }
    let prec = h.precision_bits();
    let (sum, product) = prime_square_aggregates(j)?;
    let rational_part = Rational::from(1) - product - sum;
    let two_pow = Integer::from(2).pow(pi_exact(j) as u32);
    let correction = CertInterval::from_integer(two_pow, prec).div(h)?;
    Ok(CertInterval::from_rational(&rational_part, prec).add(&correction))
}

/// σ₂(h, m) = (m / log(mh)) (1 + 1.5/log(mh)), the Rosser–Schoenfeld
/// contribution of the primes in (h, H].
pub fn sigma2(h: &CertInterval, m: &CertInterval) -> Result<CertInterval> {
    let mh = m.mul(h);
    if mh.lo() <= &1 {
        return Err(Error::Domain("sigma2 requires m*h > 1".into()));
    }
    let prec = mh.precision_bits();
    let ell = mh.ln()?;
    let one = CertInterval::from_integer(1, prec);
    let three_halves = CertInterval::from_rational(&Rational::from((3, 2)), prec);
    Ok(m.div(&ell)?.mul(&one.add(&three_halves.div(&ell)?)))
}

/// The budget 1 − 1/h from Eq. 2.10.
pub fn budget(h: &CertInterval) -> Result<CertInterval> {
    if h.lo() <= &0 {
        return Err(Error::Domain("budget requires h > 0".into()));
    }
    let prec = h.precision_bits();
    let one = CertInterval::from_integer(1, prec);
    Ok(one.sub(&h.recip()?))
}
