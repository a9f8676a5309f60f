//! Range certification: adaptive bisection over log x for finite ranges and
//! closed-form monotone envelopes (a "tail certificate") for unbounded ones.

use crate::error::{Error, Result};
use crate::interval::CertInterval;
use crate::monomial::{classify, MonotoneClass};
use crate::pipeline::assemble::{assemble_margin, ParamSet, Route};
use crate::pipeline::prop1::{
    derived_coeffs, large_coeff_derived, large_coeff_paper, paper_coeffs, ConstMode, Prop1Coeffs,
    B_MIN,
};
use crate::pipeline::sigma::{budget, sigma0, sigma2};
use crate::pipeline::assemble::sigma1_constant;
use rug::Rational;
use serde::Serialize;

/// Narrowest subinterval (in log x) the bisection will attempt before giving
/// up on a stubborn spot.
fn min_width() -> Rational {
    Rational::from((1, 4096))
}

const MAX_DEPTH: u32 = 48;

/// One proved leaf of the bisection: the budget clears on all of
/// [e^t_lo, e^t_hi].
#[derive(Clone, Debug, Serialize)]
pub struct SubCertificate {
    pub t_lo: String,
    pub t_hi: String,
    pub case_label: String,
    pub margin_lo: String,
}

/// Envelope value of one closed-form tail term at the frontier.
#[derive(Clone, Debug, Serialize)]
pub struct TailTerm {
    pub name: String,
    pub sup: CertInterval,
}

/// Certificate that the budget clears for every x ≥ e^frontier_log: each
/// σ-component is replaced by a monotone non-increasing envelope and
/// evaluated at the frontier.
#[derive(Clone, Debug, Serialize)]
pub struct TailCertificate {
    pub frontier_log: String,
    pub terms: Vec<TailTerm>,
    pub total_sup: CertInterval,
    pub budget_floor: CertInterval,
    pub margin: CertInterval,
}

/// Full output of [`prove_range`].
#[derive(Clone, Debug, Serialize)]
pub struct RangeCertificate {
    pub params: ParamSet,
    pub proved: bool,
    pub subintervals: Vec<SubCertificate>,
    pub tail: Option<TailCertificate>,
    pub failure: Option<String>,
}

/// Proves the budget over the parameter set's whole x-range.
///
/// Finite ranges are bisected in t = log x until every leaf's interval
/// evaluation has a certainly-positive margin. Unbounded ranges first search
/// for a frontier whose tail certificate closes, then bisect the finite part
/// up to the frontier.
pub fn prove_range(params: &ParamSet) -> Result<RangeCertificate> {
    let t_lo = params.x_lo_log.clone();
    match &params.x_hi_log {
        Some(t_hi) => {
            if t_hi < &t_lo {
                return Err(Error::Domain("prove_range requires x_lo <= x_hi".into()));
            }
            let outcome = bisect(params, &t_lo, t_hi, 0);
            Ok(finish(params, outcome, None))
        }
        None => {
            let mut frontier = t_lo.clone();
            let mut last_err = String::new();
            for _ in 0..6 {
                match tail_certificate(params, &frontier) {
                    Ok(tail) if tail.margin.is_certainly_positive() => {
                        let outcome = if frontier == t_lo {
                            Ok(Vec::new())
                        } else {
                            bisect(params, &t_lo, &frontier, 0)
                        };
                        return Ok(finish(params, outcome, Some(tail)));
                    }
                    Ok(tail) => {
                        last_err = format!(
                            "tail margin at e^{frontier} not certainly positive: {}",
                            tail.margin
                        );
                    }
                    Err(e) => last_err = e.to_string(),
                }
                frontier *= Rational::from(2);
            }
            Ok(RangeCertificate {
                params: params.clone(),
                proved: false,
                subintervals: Vec::new(),
                tail: None,
                failure: Some(format!(
                    "no frontier up to e^{frontier} admits a tail certificate; last obstacle: {last_err}"
                )),
            })
        }
    }
}

fn finish(
    params: &ParamSet,
    outcome: std::result::Result<Vec<SubCertificate>, String>,
    tail: Option<TailCertificate>,
) -> RangeCertificate {
    match outcome {
        Ok(subintervals) => RangeCertificate {
            params: params.clone(),
            proved: true,
            subintervals,
            tail,
            failure: None,
        },
        Err(failure) => RangeCertificate {
            params: params.clone(),
            proved: false,
            subintervals: Vec::new(),
            tail,
            failure: Some(failure),
        },
    }
}

/// Recursive bisection; Ok carries the ordered list of proved leaves.
fn bisect(
    params: &ParamSet,
    t_lo: &Rational,
    t_hi: &Rational,
    depth: u32,
) -> std::result::Result<Vec<SubCertificate>, String> {
    let x = CertInterval::exp_rational(t_lo, params.prec)
        .union(&CertInterval::exp_rational(t_hi, params.prec));
    match assemble_margin(&x, params) {
        Ok(b) if b.proved => {
            return Ok(vec![SubCertificate {
                t_lo: t_lo.to_string(),
                t_hi: t_hi.to_string(),
                case_label: b.case_label,
                margin_lo: format!("{:e}", b.margin.lo_f64()),
            }]);
        }
        // An undecided margin, a case straddle, or a hypothesis made
        // spurious by interval width: all are retried at half width.
        Ok(_) | Err(Error::Hypothesis(_)) | Err(Error::Straddle(_)) => {}
        Err(e) => return Err(e.to_string()),
    }
    let width = Rational::from(t_hi - t_lo);
    if width <= min_width() || depth >= MAX_DEPTH {
        let detail = match assemble_margin(&x, params) {
            Ok(b) => format!("margin {} not certainly positive", b.margin),
            Err(e) => e.to_string(),
        };
        return Err(format!("cannot certify log-x range [{t_lo}, {t_hi}]: {detail}"));
    }
    let mid = Rational::from(t_lo + t_hi) / Rational::from(2);
    let (left, right) = rayon::join(
        || bisect(params, t_lo, &mid, depth + 1),
        || bisect(params, &mid, t_hi, depth + 1),
    );
    let mut leaves = left?;
    leaves.extend(right?);
    Ok(leaves)
}

/// A term K·x^α (log x)^β with K ≥ 0 after clamping; its sup over
/// x ≥ e^t is its value at the frontier when it is non-increasing there.
struct PowerLog {
    name: &'static str,
    coef: CertInterval,
    alpha: Rational,
    beta: Rational,
}

impl PowerLog {
    fn new(name: &'static str, coef: CertInterval, alpha: Rational, beta: Rational) -> Self {
        Self { name, coef, alpha, beta }
    }

    fn sup_at(&self, t_f: &Rational, x_f: &CertInterval, prec: u32) -> Result<CertInterval> {
        let coef = self.coef.max_zero();
        if coef.hi() <= &0 {
            return Ok(CertInterval::from_integer(0, prec));
        }
        if classify(&self.alpha, &self.beta, x_f) != MonotoneClass::Decreasing {
            return Err(Error::Hypothesis(format!(
                "tail term {} is not certified non-increasing past the frontier",
                self.name
            )));
        }
        let mut value = coef.mul(&x_f.pow_rational(&self.alpha)?);
        if self.beta.cmp0() != std::cmp::Ordering::Equal {
            value = value.mul(&CertInterval::from_rational(t_f, prec).pow_rational(&self.beta)?);
        }
        Ok(value)
    }
}

struct TailContext {
    prec: u32,
    lam: CertInterval,
    ln_lam: CertInterval,
    one: CertInterval,
    mc: CertInterval,
    c: CertInterval,
}

impl TailContext {
    fn shrink(&self, gamma: &Rational) -> Result<CertInterval> {
        // 1 − λ^(−γ) for γ > 0 (the geometric-sum denominator).
        let neg = -gamma.clone();
        Ok(self.one.sub(&self.lam.pow_rational(&neg)?))
    }
}

/// Builds the σ₃ envelope terms (each already divided by h) for the
/// Corollary-3 route with h = c x^(1/4).
fn cor3_tail_terms(
    params: &ParamSet,
    ctx: &TailContext,
    x_f: &CertInterval,
) -> Result<Vec<PowerLog>> {
    let prec = ctx.prec;
    if params.alpha != Rational::from((1, 4)) || params.beta != 0 {
        return Err(Error::Limit(
            "tail certificates for the Corollary 3 route support h = c x^(1/4) only".into(),
        ));
    }
    // h ≤ 2x^(1/3) for all x ≥ x_f: h³/x = c³ x^(−1/4) is decreasing.
    let window = ctx
        .c
        .pow_int(3)?
        .mul(&x_f.pow_rational(&Rational::from((-1, 4)))?);
    if window.hi() > &8 {
        return Err(Error::Hypothesis(
            "tail requires h <= 2x^(1/3) at the frontier".into(),
        ));
    }
    if params.m.lo() < &Rational::from((3, 2)) {
        return Err(Error::Hypothesis("Corollary 3 route requires m >= 1.5".into()));
    }
    if !(params.lambda > 1 && params.lambda <= Rational::from((12, 10))) {
        return Err(Error::Hypothesis(
            "Corollary 3 block bound requires 1 < lambda <= 1.2".into(),
        ));
    }
    let lam_minus_1 = CertInterval::from_rational(&params.lambda, prec).sub(&ctx.one);
    // Main term: 1.4430(λ−1)x^(1/3)M^(−1/3), bottom-anchored at H = mc·x^(1/4):
    //   /h = 1.4430(λ−1)(mc)^(−1/3) x^(1/3 − 1/12 − 1/4) / (c(1−λ^(−1/3)))
    // — constant in x for this shape.
    let third = Rational::from((1, 3));
    let k_main = CertInterval::from_rational(&Rational::from((14_430, 10_000)), prec)
        .mul(&lam_minus_1)
        .mul(&ctx.mc.pow_rational(&(-third.clone()))?)
        .div(&ctx.c)?
        .div(&ctx.shrink(&third)?)?;
    // Block count ≤ (t/4 + log(√2/mc))/log λ + 1, so the per-block "+2"
    // contributes 2·count/h; the t-proportional part and the constant part
    // are split, with the latter clamped at zero if negative.
    let count_rate = CertInterval::from_rational(&Rational::from((1, 2)), prec)
        .div(&ctx.ln_lam)?
        .div(&ctx.c)?;
    let sqrt2 = CertInterval::from_integer(2, prec).sqrt()?;
    let count_const = sqrt2
        .div(&ctx.mc)?
        .ln()?
        .div(&ctx.ln_lam)?
        .add(&ctx.one)
        .mul(&CertInterval::from_integer(2, prec))
        .div(&ctx.c)?;
    Ok(vec![
        PowerLog::new("S_main", k_main, Rational::new(), Rational::new()),
        PowerLog::new(
            "S_count_rate",
            count_rate,
            Rational::from((-1, 4)),
            Rational::from(1),
        ),
        PowerLog::new(
            "S_count_const",
            count_const,
            Rational::from((-1, 4)),
            Rational::new(),
        ),
    ])
}

/// Builds the σ₃ envelope terms for the Proposition-1 route with
/// h = c x^(1/5) log x, assuming the split case H ≤ 5x^(1/4) holds at (and
/// hence beyond) the frontier.
fn prop1_tail_terms(
    params: &ParamSet,
    ctx: &TailContext,
    coeffs: &Prop1Coeffs,
    t_f: &Rational,
    x_f: &CertInterval,
) -> Result<Vec<PowerLog>> {
    let prec = ctx.prec;
    if params.alpha != Rational::from((1, 5)) || params.beta != 1 {
        return Err(Error::Limit(
            "tail certificates for the Proposition 1 route support h = c x^(1/5) log x only"
                .into(),
        ));
    }
    // Case-1 gate: H/(5x^(1/4)) = (mc/5) x^(−1/20) log x must be ≤ 1 at the
    // frontier and non-increasing beyond it (needs t_f ≥ 20).
    if *t_f < 20 {
        return Err(Error::Hypothesis("tail frontier must satisfy log x >= 20".into()));
    }
    let q = ctx
        .mc
        .div(&CertInterval::from_integer(5, prec))?
        .mul(&x_f.pow_rational(&Rational::from((-1, 20)))?)
        .mul(&CertInterval::from_rational(t_f, prec));
    if q.hi() > &1 {
        return Err(Error::Hypothesis(
            "tail requires H <= 5x^(1/4) at the frontier (advance the frontier)".into(),
        ));
    }
    // B = δ·mc·log x at the base of the M-range is increasing in x.
    let b = CertInterval::from_rational(&params.delta, prec)
        .mul(&ctx.mc)
        .mul(&CertInterval::from_rational(t_f, prec));
    if b.lo() < &B_MIN {
        return Err(Error::Hypothesis(format!(
            "tail requires B = delta m c log x >= {B_MIN} at the frontier"
        )));
    }
    // h ≤ 2x^(1/3) for all x ≥ x_f: c³x^(−2/5)(log x)³ is non-increasing for
    // t ≥ 7.5 and must be ≤ 8 at the frontier.
    let window = ctx
        .c
        .pow_int(3)?
        .mul(&x_f.pow_rational(&Rational::from((-2, 5)))?)
        .mul(&CertInterval::from_rational(t_f, prec).pow_int(3)?);
    if window.hi() > &8 {
        return Err(Error::Hypothesis(
            "tail requires h <= 2x^(1/3) at the frontier".into(),
        ));
    }

    let large = match params.consts {
        ConstMode::Paper => large_coeff_paper(prec),
        ConstMode::Derived => {
            large_coeff_derived(&params.lambda, &CertInterval::from_integer(5, prec), prec)?
        }
    };
    let five = CertInterval::from_integer(5, prec);
    let third = Rational::from((1, 3));
    let mut terms = Vec::new();

    // Piece [H, 5x^(1/4)], small-M σ₄, top-anchored at 5x^(1/4):
    //   small·5^(7/3) x^(−2/3+7/12) / (1−λ^(−7/3)) = K x^(−1/12).
    terms.push(PowerLog::new(
        "low_small",
        coeffs
            .small
            .mul(&five.pow_rational(&Rational::from((7, 3)))?)
            .div(&ctx.shrink(&Rational::from((7, 3)))?)?,
        Rational::from((-1, 12)),
        Rational::new(),
    ));
    // p3 term bottom-anchored at H = mc x^(1/5) log x:
    //   p3 (mc)^(−1/3) (log x)^(−1/3) / (1−λ^(−1/3)).
    terms.push(PowerLog::new(
        "low_p3",
        coeffs
            .p3
            .mul(&ctx.mc.pow_rational(&(-third.clone()))?)
            .div(&ctx.shrink(&third)?)?,
        Rational::new(),
        Rational::from((-1, 3)),
    ));
    // p2 term top-anchored at 5x^(1/4): 5 p2 x^(−3/20) / (c(1−λ⁻¹) log x).
    terms.push(PowerLog::new(
        "low_p2",
        coeffs
            .p2
            .mul(&five)
            .div(&ctx.c)?
            .div(&ctx.shrink(&Rational::from(1))?)?,
        Rational::from((-3, 20)),
        Rational::from(-1),
    ));
    // The per-block x^(1/5) coefficient times the block count of the low
    // piece. count₁ ≤ (t/20 + log(5/mc))/log λ + 1 (the −log t correction
    // is dropped, which only enlarges the envelope).
    let log5_over_mc = five.div(&ctx.mc)?.ln()?;
    let count1_const = log5_over_mc.div(&ctx.ln_lam)?.add(&ctx.one);
    let p1_over_c = coeffs.p1.div(&ctx.c)?;
    terms.push(PowerLog::new(
        "low_p1_rate",
        p1_over_c
            .div(&ctx.ln_lam)?
            .div(&CertInterval::from_integer(20, prec))?,
        Rational::new(),
        Rational::new(),
    ));
    terms.push(PowerLog::new(
        "low_p1_const",
        p1_over_c.mul(&count1_const),
        Rational::new(),
        Rational::from(-1),
    ));
    // Per-block additive constant (derived mode): constant·count₁/h.
    if coeffs.constant.hi() > &0 {
        let const_over_c = coeffs.constant.div(&ctx.c)?;
        terms.push(PowerLog::new(
            "low_const_rate",
            const_over_c
                .div(&ctx.ln_lam)?
                .div(&CertInterval::from_integer(20, prec))?,
            Rational::from((-1, 5)),
            Rational::new(),
        ));
        terms.push(PowerLog::new(
            "low_const_const",
            const_over_c.mul(&count1_const),
            Rational::from((-1, 5)),
            Rational::from(-1),
        ));
    }

    // Piece [5x^(1/4), x^(2/5)], large-M σ₄ top-anchored at x^(2/5):
    //   large·x^(−1/9+2/45)/(1−λ^(−1/9)) = K x^(−1/15).
    terms.push(PowerLog::new(
        "high_large",
        large.div(&ctx.shrink(&Rational::from((1, 9)))?)?,
        Rational::from((-1, 15)),
        Rational::new(),
    ));
    // p3 bottom-anchored at 5x^(1/4): p3·5^(−1/3) x^(1/15−1/12) — here the
    // h factor of the term cancels the leading 1/h.
    terms.push(PowerLog::new(
        "high_p3",
        coeffs
            .p3
            .mul(&five.pow_rational(&(-third.clone()))?)
            .div(&ctx.shrink(&third)?)?,
        Rational::from((-1, 60)),
        Rational::new(),
    ));
    // p2 top-anchored at x^(2/5): p2/(c(1−λ⁻¹) log x).
    terms.push(PowerLog::new(
        "high_p2",
        coeffs
            .p2
            .div(&ctx.c)?
            .div(&ctx.shrink(&Rational::from(1))?)?,
        Rational::new(),
        Rational::from(-1),
    ));
    // count₂ = (3t/20 − log 5)/log λ + 1.
    let count2_const = ctx.one.sub(&five.ln()?.div(&ctx.ln_lam)?);
    terms.push(PowerLog::new(
        "high_p1_rate",
        p1_over_c
            .mul(&CertInterval::from_rational(&Rational::from((3, 20)), prec))
            .div(&ctx.ln_lam)?,
        Rational::new(),
        Rational::new(),
    ));
    terms.push(PowerLog::new(
        "high_p1_const",
        p1_over_c.mul(&count2_const),
        Rational::new(),
        Rational::from(-1),
    ));
    if coeffs.constant.hi() > &0 {
        let const_over_c = coeffs.constant.div(&ctx.c)?;
        terms.push(PowerLog::new(
            "high_const_rate",
            const_over_c
                .mul(&CertInterval::from_rational(&Rational::from((3, 20)), prec))
                .div(&ctx.ln_lam)?,
            Rational::from((-1, 5)),
            Rational::new(),
        ));
        terms.push(PowerLog::new(
            "high_const_const",
            const_over_c.mul(&count2_const),
            Rational::from((-1, 5)),
            Rational::from(-1),
        ));
    }

    // Corollary-1 piece [x^(2/5), √(2x)]: main term bottom-anchored at
    // x^(2/5) gives (λ−1)(10000/4995) x^(1/5) / (1−λ^(−2)); divided by h
    // this is K/log x.
    let lam_minus_1 = CertInterval::from_rational(&params.lambda, prec).sub(&ctx.one);
    terms.push(PowerLog::new(
        "cor1_main",
        lam_minus_1
            .mul(&CertInterval::from_rational(&Rational::from((10_000, 4_995)), prec))
            .div(&ctx.c)?
            .div(&ctx.shrink(&Rational::from(2))?)?,
        Rational::new(),
        Rational::from(-1),
    ));
    // count₃ = (t/10 + (log 2)/2)/log λ + 1, times the per-block "+1".
    let half_log2 = CertInterval::from_integer(2, prec)
        .ln()?
        .div(&CertInterval::from_integer(2, prec))?;
    terms.push(PowerLog::new(
        "cor1_count_rate",
        ctx.one
            .div(&ctx.ln_lam)?
            .div(&CertInterval::from_integer(10, prec))?
            .div(&ctx.c)?,
        Rational::from((-1, 5)),
        Rational::new(),
    ));
    terms.push(PowerLog::new(
        "cor1_count_const",
        half_log2.div(&ctx.ln_lam)?.add(&ctx.one).div(&ctx.c)?,
        Rational::from((-1, 5)),
        Rational::from(-1),
    ));
    Ok(terms)
}

/// Certifies the budget for every x ≥ e^t_f by evaluating monotone
/// envelopes of every σ-component at the frontier.
pub fn tail_certificate(params: &ParamSet, t_f: &Rational) -> Result<TailCertificate> {
    let prec = params.prec;
    if params.lambda <= 1 {
        return Err(Error::Hypothesis("tail requires lambda > 1".into()));
    }
    let x_f = CertInterval::exp_rational(t_f, prec);
    let lam = CertInterval::from_rational(&params.lambda, prec);
    let ctx = TailContext {
        prec,
        ln_lam: lam.ln()?,
        lam,
        one: CertInterval::from_integer(1, prec),
        mc: params.m.mul(&CertInterval::from_rational(&params.c, prec)),
        c: CertInterval::from_rational(&params.c, prec),
    };
    let power_terms = match params.route {
        Route::Corollary3 => cor3_tail_terms(params, &ctx, &x_f)?,
        Route::Proposition1 => {
            let coeffs = match params.consts {
                ConstMode::Paper => {
                    if params.lambda != Rational::from((1045, 1000))
                        || params.c != 11
                        || params.m.lo() < &Rational::from((11, 2))
                        || params.delta != Rational::from((17, 100))
                    {
                        return Err(Error::Hypothesis(
                            "published mid-range constants require lambda = 1.045, m >= 5.5, \
                             delta = 0.17 and c = 11"
                                .into(),
                        ));
                    }
                    paper_coeffs(prec)
                }
                ConstMode::Derived => {
                    derived_coeffs(&params.lambda, &params.m, &params.delta, prec)?
                }
            };
            prop1_tail_terms(params, &ctx, &coeffs, t_f, &x_f)?
        }
    };
    let h_f = params.h_monomial().evaluate(&x_f)?;
    if h_f.lo() < &1000 {
        return Err(Error::Hypothesis("tail requires h >= 1000 at the frontier".into()));
    }
    let x_route_floor = match (params.route, params.consts) {
        (Route::Proposition1, ConstMode::Paper) => 116,
        _ => 41,
    };
    if *t_f < x_route_floor {
        return Err(Error::Hypothesis(format!(
            "tail frontier must satisfy log x >= {x_route_floor} for this route"
        )));
    }

    let mut terms = Vec::new();
    let mut total_sup = CertInterval::from_integer(0, prec);
    // σ₀ and σ₂ are non-increasing in x (h and log(mh) grow), so their
    // frontier values bound the tail; σ₁ is a constant.
    for (name, value) in [
        ("sigma0", sigma0(&h_f, params.j)?),
        ("sigma1", sigma1_constant().clone()),
        ("sigma2", sigma2(&h_f, &params.m)?),
    ] {
        total_sup = total_sup.add(&value);
        terms.push(TailTerm { name: name.into(), sup: value });
    }
    for term in &power_terms {
        let sup = term.sup_at(t_f, &x_f, prec)?;
        total_sup = total_sup.add(&sup);
        terms.push(TailTerm { name: term.name.into(), sup });
    }
    // The budget 1 − 1/h is increasing in x, so its frontier value is a
    // valid lower bound on the whole tail.
    let budget_floor = budget(&h_f)?;
    let margin = budget_floor.sub(&total_sup);
    Ok(TailCertificate {
        frontier_log: t_f.to_string(),
        terms,
        total_sup,
        budget_floor,
        margin,
    })
}
