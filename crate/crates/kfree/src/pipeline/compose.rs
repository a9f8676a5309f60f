//! Dyadic composition: per-block bounds on |S(M)| summed over a geometric
//! covering M_j = M₀ λ^j of an M-range.

use crate::error::{Error, Result};
use crate::interval::CertInterval;
use rug::Rational;

/// One power term c·M^γ of a per-block bound.
#[derive(Clone, Debug)]
pub struct MTerm {
    pub name: &'static str,
    pub coef: CertInterval,
    pub gamma: Rational,
}

impl MTerm {
    pub fn new(name: &'static str, coef: CertInterval, gamma: Rational) -> Self {
        Self { name, coef, gamma }
    }
}

/// Composition of per-block terms over the covering of (m_lo, m_hi].
#[derive(Clone, Debug)]
pub struct Composition {
    /// Certified bound for each input term's geometric sum, in input order.
    pub parts: Vec<(&'static str, CertInterval)>,
    /// Sum of all parts.
    pub total: CertInterval,
}

/// Bounds Σ_j Σ_terms coef·M_j^γ over block bottoms M_j = m_lo·λ^j < m_hi.
///
/// For γ > 0 the geometric sum is anchored at the top:
///   Σ coef·M_j^γ ≤ coef·m_hi^γ / (1 − λ^{−γ}).
/// For γ < 0 it is anchored at the bottom:
///   Σ coef·M_j^γ ≤ coef·m_lo^γ / (1 − λ^{γ}).
/// For γ = 0 the count of blocks is ≤ log(m_hi/m_lo)/log λ + 1.
///
/// All three bounds require λ > 1 and coef ≥ 0, and hold for every covering
/// of (m_lo, m_hi] by blocks (M_j, λM_j] with M_j < m_hi.
pub fn compose_terms(
    terms: &[MTerm],
    m_lo: &CertInterval,
    m_hi: &CertInterval,
    lambda: &CertInterval,
) -> Result<Composition> {
    let prec = lambda.precision_bits();
    if lambda.lo() <= &1 {
        return Err(Error::Hypothesis("compose_terms requires lambda > 1".into()));
    }
    if m_lo.lo() <= &0 {
        return Err(Error::Domain("compose_terms requires m_lo > 0".into()));
    }
    let zero = CertInterval::from_integer(0, prec);
    // Empty range: no blocks at all.
    if m_hi.certainly_le(m_lo) {
        let parts = terms.iter().map(|t| (t.name, zero.clone())).collect();
        return Ok(Composition {
            parts,
            total: zero,
        });
    }
    let one = CertInterval::from_integer(1, prec);
    let block_count = {
        let ratio = m_hi.div(m_lo)?;
        ratio.ln()?.max_zero().div(&lambda.ln()?)?.add(&one)
    };
    let mut parts = Vec::with_capacity(terms.len());
    let mut total = zero;
    for term in terms {
        if term.coef.lo() < &0 {
            return Err(Error::Domain(format!(
                "compose_terms requires nonnegative coefficients, term {} may be negative",
                term.name
            )));
        }
        let value = match term.gamma.cmp0() {
            std::cmp::Ordering::Greater => {
                let neg_gamma = -term.gamma.clone();
                let shrink = one.sub(&lambda.pow_rational(&neg_gamma)?);
                term.coef.mul(&m_hi.pow_rational(&term.gamma)?).div(&shrink)?
            }
            std::cmp::Ordering::Less => {
                let shrink = one.sub(&lambda.pow_rational(&term.gamma)?);
                term.coef.mul(&m_lo.pow_rational(&term.gamma)?).div(&shrink)?
            }
            std::cmp::Ordering::Equal => term.coef.mul(&block_count),
        };
        total = total.add(&value);
        parts.push((term.name, value));
    }
    Ok(Composition { parts, total })
}

/// Which single-block estimate feeds the composition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockBound {
    /// |S(M)| ≤ (λ−1)x/0.4995 · M⁻² + 1, for M ≥ x^(2/5), λ ≤ 2.
    Corollary1,
    /// |S(M)| ≤ 1.4430(λ−1)x^(1/3)M^(−1/3) + 2, for M ≥ 1.5h, λ ≤ 1.2.
    Corollary3,
}

/// Per-block terms for `kind` at trichotomy parameter λ, to be fed to
/// [`compose_terms`]. Errors if λ violates the corollary's hypothesis.
pub fn block_terms(kind: BlockBound, x: &CertInterval, lambda: &CertInterval) -> Result<Vec<MTerm>> {
    let prec = x.precision_bits();
    let one = CertInterval::from_integer(1, prec);
    let lam_minus_1 = lambda.sub(&one);
    if lam_minus_1.lo() <= &0 {
        return Err(Error::Hypothesis("block bound requires lambda > 1".into()));
    }
    match kind {
        BlockBound::Corollary1 => {
            if !lambda.certainly_le_rational(&Rational::from(2)) {
                return Err(Error::Hypothesis(
                    "Corollary 1 block bound requires lambda <= 2".into(),
                ));
            }
            let scale = CertInterval::from_rational(&Rational::from((10_000, 4_995)), prec);
            Ok(vec![
                MTerm::new("main", lam_minus_1.mul(x).mul(&scale), Rational::from(-2)),
                MTerm::new("count", one, Rational::new()),
            ])
        }
        BlockBound::Corollary3 => {
            if !lambda.certainly_le_rational(&Rational::from((12, 10))) {
                return Err(Error::Hypothesis(
                    "Corollary 3 block bound requires lambda <= 1.2".into(),
                ));
            }
            let scale = CertInterval::from_rational(&Rational::from((14_430, 10_000)), prec);
            let third = x.pow_rational(&Rational::from((1, 3)))?;
            Ok(vec![
                MTerm::new(
                    "main",
                    lam_minus_1.mul(&third).mul(&scale),
                    Rational::from((-1, 3)),
                ),
                MTerm::new("count", CertInterval::from_integer(2, prec), Rational::new()),
            ])
        }
    }
}

/// Result of composing a per-block bound A₁M^b₁ + A₂M^(−b₂) + A₃ over
/// (x^u, x^v].
#[derive(Clone, Debug)]
pub struct ComposedBound {
    pub a1_prime: CertInterval,
    pub a2_prime: CertInterval,
    pub a3_prime: CertInterval,
    /// A₁′x^(b₁v) + A₂′x^(−b₂u) + A₃′log x + A₃.
    pub total: CertInterval,
}

/// Exact form of the composition lemma: if |S(M)| ≤ A₁M^b₁ + A₂M^(−b₂) + A₃
/// on [x^u, x^v] then
///   |S(x^u, x^v)| ≤ A₁′x^(b₁v) + A₂′x^(−b₂u) + A₃′log x + A₃,
/// with A₁′ = A₁/(1−λ^(−b₁)), A₂′ = A₂/(1−λ^(−b₂)), A₃′ = A₃(v−u)/log λ.
///
/// Requires λ > 1, b₁ > 0, b₂ > 0, u < v, A₁ ≥ 0, A₂ ≥ 0, A₃ ≥ 0.
#[allow(clippy::too_many_arguments)]
pub fn lemma1_compose(
    x: &CertInterval,
    u: &Rational,
    v: &Rational,
    a1: &CertInterval,
    b1: &Rational,
    a2: &CertInterval,
    b2: &Rational,
    a3: &CertInterval,
    lambda: &CertInterval,
) -> Result<ComposedBound> {
    let prec = x.precision_bits();
    if lambda.lo() <= &1 {
        return Err(Error::Hypothesis("lemma1_compose requires lambda > 1".into()));
    }
    if b1.cmp0() != std::cmp::Ordering::Greater || b2.cmp0() != std::cmp::Ordering::Greater {
        return Err(Error::Domain("lemma1_compose requires b1 > 0 and b2 > 0".into()));
    }
    if u >= v {
        return Err(Error::Domain("lemma1_compose requires u < v".into()));
    }
    if a1.lo() < &0 || a2.lo() < &0 || a3.lo() < &0 {
        return Err(Error::Domain(
            "lemma1_compose requires nonnegative coefficients".into(),
        ));
    }
    if x.lo() <= &1 {
        return Err(Error::Domain("lemma1_compose requires x > 1".into()));
    }
    let one = CertInterval::from_integer(1, prec);
    let a1_prime = {
        let neg_b1 = -b1.clone();
        a1.div(&one.sub(&lambda.pow_rational(&neg_b1)?))?
    };
    let a2_prime = {
        let neg_b2 = -b2.clone();
        a2.div(&one.sub(&lambda.pow_rational(&neg_b2)?))?
    };
    let span = CertInterval::from_rational(&Rational::from(v - u), prec);
    let a3_prime = a3.mul(&span).div(&lambda.ln()?)?;
    let term1 = a1_prime.mul(&x.pow_rational(&Rational::from(b1 * v))?);
    let term2 = a2_prime.mul(&x.pow_rational(&(-Rational::from(b2 * u)))?);
    let term3 = a3_prime.mul(&x.ln()?);
    let total = term1.add(&term2).add(&term3).add(a3);
    Ok(ComposedBound {
        a1_prime,
        a2_prime,
        a3_prime,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interval::parse_rational;
    use crate::monomial::Monomial;

    fn ci(s: &str) -> CertInterval {
        CertInterval::from_rational(&parse_rational(s).unwrap(), 96)
    }

    /// Explicit covering sum Σ_j coef·(m_lo λ^j)^γ over M_j < m_hi, as an
    /// independent oracle.
    fn explicit_sum(terms: &[MTerm], m_lo: f64, m_hi: f64, lambda: f64) -> f64 {
        let mut total = 0.0;
        let mut m = m_lo;
        while m < m_hi {
            for t in terms {
                let c = (t.coef.lo_f64() + t.coef.hi_f64()) / 2.0;
                total += c * m.powf(t.gamma.to_f64());
            }
            m *= lambda;
        }
        total
    }

    #[test]
    fn dominates_explicit_sum() {
        let lambda = CertInterval::from_rational(&parse_rational("1.045").unwrap(), 96);
        let terms = vec![
            MTerm::new("up", ci("0.7"), Rational::from((7, 3))),
            MTerm::new("down", ci("2.5"), Rational::from((-1, 3))),
            MTerm::new("flat", ci("2"), Rational::new()),
        ];
        for (lo, hi) in [(10.0, 1000.0), (3.0, 3.5), (100.0, 1e8)] {
            let m_lo = CertInterval::from_rational(&Rational::from_f64(lo).unwrap(), 96);
            let m_hi = CertInterval::from_rational(&Rational::from_f64(hi).unwrap(), 96);
            let composed = compose_terms(&terms, &m_lo, &m_hi, &lambda).unwrap();
            let oracle = explicit_sum(&terms, lo, hi, 1.045);
            assert!(
                composed.total.hi_f64() >= oracle,
                "composition {} must dominate explicit sum {oracle}",
                composed.total.hi_f64()
            );
            // And it should not be wildly loose: within a factor 5 even for
            // coverings only a few blocks long.
            assert!(composed.total.hi_f64() <= 5.0 * oracle);
        }
    }

    #[test]
    fn empty_range_is_zero() {
        let lambda = ci("1.1");
        let terms = vec![MTerm::new("t", ci("5"), Rational::from(2))];
        let c = compose_terms(&terms, &ci("100"), &ci("50"), &lambda).unwrap();
        assert!(c.total.hi() <= &0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let terms = vec![MTerm::new("t", ci("1"), Rational::from(1))];
        assert!(compose_terms(&terms, &ci("1"), &ci("2"), &ci("1")).is_err());
        assert!(compose_terms(&terms, &ci("0"), &ci("2"), &ci("1.1")).is_err());
        let neg = vec![MTerm::new("t", ci("-1"), Rational::from(1))];
        assert!(compose_terms(&neg, &ci("1"), &ci("2"), &ci("1.1")).is_err());
    }

    #[test]
    fn block_terms_hypotheses() {
        let x = CertInterval::exp_rational(&Rational::from(41), 96);
        assert!(block_terms(BlockBound::Corollary1, &x, &ci("2.1")).is_err());
        assert!(block_terms(BlockBound::Corollary1, &x, &ci("1.5")).is_ok());
        assert!(block_terms(BlockBound::Corollary3, &x, &ci("1.25")).is_err());
        assert!(block_terms(BlockBound::Corollary3, &x, &ci("1.025")).is_ok());
        assert!(block_terms(BlockBound::Corollary3, &x, &ci("1.0")).is_err());
    }

    #[test]
    fn corollary1_tail_paper_value() {
        // x = e^116, λ = 1.045, composed over (x^(2/5), √(2x)]: the whole
        // tail is ≤ 0.0009h with h = 11x^(1/5) log x.
        let x = CertInterval::exp_rational(&Rational::from(116), 96);
        let lambda = ci("1.045");
        let h = Monomial::new(CertInterval::from_integer(11, 96), Rational::from((1, 5)), 1)
            .evaluate(&x)
            .unwrap();
        let m_lo = x.pow_rational(&Rational::from((2, 5))).unwrap();
        let m_hi = x.mul(&CertInterval::from_integer(2, 96)).sqrt().unwrap();
        let terms = block_terms(BlockBound::Corollary1, &x, &lambda).unwrap();
        let composed = compose_terms(&terms, &m_lo, &m_hi, &lambda).unwrap();
        let ratio = composed.total.div(&h).unwrap();
        assert!(ratio.hi() <= &parse_rational("0.0009").unwrap());
        assert!(ratio.lo() > &parse_rational("0.0005").unwrap());
    }

    #[test]
    fn corollary3_paper_composition() {
        // x = e^41, h = 5x^(1/4), H = 1.75h, λ = 1.025, over (H, √(2x)]:
        // main term ≤ 0.4272h + tolerance, total ≤ 0.4331h + tolerance.
        let x = CertInterval::exp_rational(&Rational::from(41), 96);
        let lambda = ci("1.025");
        let h = Monomial::new(CertInterval::from_integer(5, 96), Rational::from((1, 4)), 0)
            .evaluate(&x)
            .unwrap();
        let m_lo = h.mul(&ci("1.75"));
        let m_hi = x.mul(&CertInterval::from_integer(2, 96)).sqrt().unwrap();
        let terms = block_terms(BlockBound::Corollary3, &x, &lambda).unwrap();
        let composed = compose_terms(&terms, &m_lo, &m_hi, &lambda).unwrap();
        let tol = parse_rational("0.0005").unwrap();
        let main = composed.parts[0].1.div(&h).unwrap();
        assert!(main.hi() <= &(parse_rational("0.4272").unwrap() + tol.clone()));
        assert!(main.lo() > &parse_rational("0.42").unwrap());
        let total = composed.total.div(&h).unwrap();
        assert!(total.hi() <= &(parse_rational("0.4331").unwrap() + tol));
        assert!(total.lo() > &parse_rational("0.43").unwrap());
    }

    #[test]
    fn lemma1_examples() {
        // Single-term sanity: A₁ = 1, b₁ = 1, A₂ = A₃ = 0 over (x^0.5, x^1),
        // λ = 2: A₁′ = 1/(1−1/2) = 2, total = 2x.
        let x = CertInterval::from_integer(100, 96);
        let zero = CertInterval::from_integer(0, 96);
        let one = CertInterval::from_integer(1, 96);
        let two = CertInterval::from_integer(2, 96);
        let b = lemma1_compose(
            &x,
            &Rational::from((1, 2)),
            &Rational::from(1),
            &one,
            &Rational::from(1),
            &zero,
            &Rational::from(1),
            &zero,
            &two,
        )
        .unwrap();
        assert!(b.a1_prime.contains_rational(&Rational::from(2)));
        assert!(b.total.contains_rational(&Rational::from(200)));

        // Degenerate/invalid inputs.
        assert!(lemma1_compose(
            &x,
            &Rational::from(1),
            &Rational::from(1),
            &one,
            &Rational::from(1),
            &zero,
            &Rational::from(1),
            &zero,
            &two
        )
        .is_err());
        assert!(lemma1_compose(
            &x,
            &Rational::from((1, 2)),
            &Rational::from(1),
            &one,
            &Rational::new(),
            &zero,
            &Rational::from(1),
            &zero,
            &two
        )
        .is_err());
    }

    #[test]
    fn lemma1_corollary3_instance() {
        // The Corollary 3 composition recast in x^u..x^v form, x = e^41,
        // h = 5x^(1/4), H = 1.75h = 8.75x^(1/4), λ = 1.025:
        // u ≲ log_x(8.75)/41-style exponent chosen to round the range
        // outward. Leading (decreasing) term ≤ 0.4272h + tol, total ≤
        // 0.4331h + tol.
        let x = CertInterval::exp_rational(&Rational::from(41), 96);
        let lambda = ci("1.025");
        let h = Monomial::new(CertInterval::from_integer(5, 96), Rational::from((1, 4)), 0)
            .evaluate(&x)
            .unwrap();
        // u = 0.3029 < 1/4 + ln(8.75)/41 = 0.302904..., v = 0.50846 >
        // 1/2 + ln(√2)/41 = 0.508453...
        let u = parse_rational("0.3029").unwrap();
        let v = parse_rational("0.50846").unwrap();
        let a2 = ci("0.025")
            .mul(&ci("1.4430"))
            .mul(&x.pow_rational(&Rational::from((1, 3))).unwrap());
        let tiny_b1 = Rational::from((1, 1_000_000));
        let bound = lemma1_compose(
            &x,
            &u,
            &v,
            &CertInterval::from_integer(0, 96),
            &tiny_b1,
            &a2,
            &Rational::from((1, 3)),
            &CertInterval::from_integer(2, 96),
            &lambda,
        )
        .unwrap();
        let tol = parse_rational("0.0007").unwrap();
        let lead = bound
            .a2_prime
            .mul(&x.pow_rational(&(-Rational::from((1, 3)) * u.clone())).unwrap())
            .div(&h)
            .unwrap();
        assert!(lead.hi() <= &(parse_rational("0.4272").unwrap() + tol.clone()));
        let total = bound.total.div(&h).unwrap();
        assert!(total.hi() <= &(parse_rational("0.4331").unwrap() + tol));
        assert!(total.lo() > &parse_rational("0.42").unwrap());
    }
}
