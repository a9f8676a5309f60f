//! End-to-end σ-budget assembly: given a parameter set and an x-enclosure,
//! computes σ₀ + σ₁ + σ₂ + σ₃ and compares it with the budget 1 − 1/h.

use crate::error::{Error, Result};
use crate::interval::{CertInterval, DEFAULT_PREC};
use crate::monomial::Monomial;
use crate::pipeline::compose::{block_terms, compose_terms, BlockBound, MTerm};
use crate::pipeline::prop1::{
    derived_coeffs, large_coeff_derived, large_coeff_paper, paper_coeffs, ConstMode, Prop1Coeffs,
    B_MIN,
};
use crate::pipeline::sigma::{budget, sigma0, sigma2};
use crate::primes::sigma1_upper;
use rug::Rational;
use serde::Serialize;
use std::sync::OnceLock;

/// Which mid-range estimate carries the composition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Corollary-3 style single bound over the whole range (H, √(2x)].
    Corollary3,
    /// Proposition-1 style split with the x^(2/5)-to-√(2x) tail handled by
    /// the Corollary-1 bound.
    Proposition1,
}

fn ser_rational<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

fn ser_opt_rational<S: serde::Serializer>(
    r: &Option<Rational>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_some(&r.to_string()),
        None => s.serialize_none(),
    }
}

/// A complete parameter set for one theorem instance: the interval length is
/// h = c·x^α (log x)^β and the x-range is [e^(x_lo_log), e^(x_hi_log)] (or
/// unbounded above).
#[derive(Clone, Debug, Serialize)]
pub struct ParamSet {
    pub name: String,
    #[serde(serialize_with = "ser_rational")]
    pub x_lo_log: Rational,
    #[serde(serialize_with = "ser_opt_rational")]
    pub x_hi_log: Option<Rational>,
    #[serde(serialize_with = "ser_rational")]
    pub c: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub alpha: Rational,
    pub beta: i32,
    pub j: u64,
    pub m: CertInterval,
    #[serde(serialize_with = "ser_rational")]
    pub lambda: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub delta: Rational,
    pub route: Route,
    pub consts: ConstMode,
    pub prec: u32,
}

impl ParamSet {
    pub fn h_monomial(&self) -> Monomial {
        Monomial::new(
            CertInterval::from_rational(&self.c, self.prec),
            self.alpha.clone(),
            self.beta,
        )
    }

    pub fn x_lo(&self) -> CertInterval {
        CertInterval::exp_rational(&self.x_lo_log, self.prec)
    }

    pub fn x_hi(&self) -> Option<CertInterval> {
        self.x_hi_log
            .as_ref()
            .map(|t| CertInterval::exp_rational(t, self.prec))
    }
}

/// The certified σ-budget at one x (or one x-enclosure).
#[derive(Clone, Debug, Serialize)]
pub struct SigmaBreakdown {
    pub case_label: String,
    pub h: CertInterval,
    pub sigma0: CertInterval,
    pub sigma1: CertInterval,
    pub sigma2: CertInterval,
    pub sigma3: CertInterval,
    /// Named components of σ₃ (each already divided by h).
    pub internals: Vec<(String, CertInterval)>,
    pub total: CertInterval,
    pub budget: CertInterval,
    /// budget − total; the instance is proved when this is certainly > 0.
    pub margin: CertInterval,
    pub proved: bool,
}

/// σ₁ = Σ_p p⁻² upper enclosure, computed once (P = 10⁶).
pub fn sigma1_constant() -> &'static CertInterval {
    static CACHE: OnceLock<CertInterval> = OnceLock::new();
    CACHE.get_or_init(|| sigma1_upper(1_000_000).expect("sigma1 partial sum"))
}

fn e_power(t: i64, prec: u32) -> CertInterval {
    CertInterval::exp_rational(&Rational::from(t), prec)
}

/// Per-block terms of the mid-range estimate, as functions of the block
/// bottom M. `sigma4` supplies the branch-specific term.
fn prop1_terms(
    x: &CertInterval,
    h: &CertInterval,
    coeffs: &Prop1Coeffs,
    sigma4: MTerm,
) -> Result<Vec<MTerm>> {
    let fifth = Rational::from((1, 5));
    let mut terms = vec![
        MTerm::new(
            "p1",
            coeffs.p1.mul(&x.pow_rational(&fifth)?),
            Rational::new(),
        ),
        MTerm::new(
            "p2",
            coeffs.p2.mul(&x.pow_rational(&(-fifth.clone()))?),
            Rational::from(1),
        ),
        MTerm::new(
            "p3",
            coeffs.p3.mul(h).mul(&x.pow_rational(&Rational::from((1, 15)))?),
            Rational::from((-1, 3)),
        ),
        sigma4,
    ];
    if coeffs.constant.hi() > &0 {
        terms.push(MTerm::new("const", coeffs.constant.clone(), Rational::new()));
    }
    Ok(terms)
}

fn small_m_term(x: &CertInterval, h: &CertInterval, coeffs: &Prop1Coeffs) -> Result<MTerm> {
    Ok(MTerm::new(
        "sigma4_small",
        coeffs
            .small
            .mul(h)
            .mul(&x.pow_rational(&Rational::from((-2, 3)))?),
        Rational::from((7, 3)),
    ))
}

fn large_m_term(x: &CertInterval, h: &CertInterval, coef: &CertInterval) -> Result<MTerm> {
    Ok(MTerm::new(
        "sigma4_large",
        coef.mul(h).mul(&x.pow_rational(&Rational::from((-1, 9)))?),
        Rational::from((1, 9)),
    ))
}

/// Runs the full budget at an x-enclosure. A genuinely wide `x` is allowed:
/// every bound is then simultaneously valid for all points of the enclosure,
/// which is what the range prover relies on.
pub fn assemble_margin(x: &CertInterval, params: &ParamSet) -> Result<SigmaBreakdown> {
    let prec = params.prec.max(DEFAULT_PREC);
    if params.lambda <= 1 {
        return Err(Error::Hypothesis("assemble requires lambda > 1".into()));
    }
    let lam = CertInterval::from_rational(&params.lambda, prec);
    let h = params.h_monomial().evaluate(x)?;
    // Eq. 3.0 window: 1000 ≤ h and h³ ≤ 8x, and x large enough for the
    // spacing lemmas.
    if h.lo() < &1000 {
        return Err(Error::Hypothesis("assemble requires h >= 1000".into()));
    }
    // h³/x = c³ x^(3α−1) (log x)^(3β), evaluated with the exponents combined
    // so a wide x-enclosure does not decorrelate the ratio.
    let window = Monomial::new(
        CertInterval::from_rational(&params.c, prec).pow_int(3)?,
        Rational::from(3) * params.alpha.clone() - 1,
        3 * params.beta,
    )
    .evaluate(x)?;
    if window.hi() > &8 {
        return Err(Error::Hypothesis("assemble requires h <= 2x^(1/3)".into()));
    }
    let x_floor = match params.route {
        Route::Corollary3 => 41,
        Route::Proposition1 => match params.consts {
            ConstMode::Paper => 116,
            ConstMode::Derived => 41,
        },
    };
    // Endpoint-to-endpoint comparison so exact boundary instances are
    // admitted (the route constants carry far more slack than the enclosure
    // width).
    if x.lo() < e_power(x_floor, prec).lo() {
        return Err(Error::Hypothesis(format!(
            "assemble requires x >= e^{x_floor} for this route"
        )));
    }

    let cap_h = params.m.mul(&h);
    let sqrt_2x = x.mul(&CertInterval::from_integer(2, prec)).sqrt()?;
    let mut internals: Vec<(String, CertInterval)> = Vec::new();
    let mut s_total = CertInterval::from_integer(0, prec);
    let case_label;

    match params.route {
        Route::Corollary3 => {
            if params.m.lo() < &Rational::from((3, 2)) {
                return Err(Error::Hypothesis(
                    "Corollary 3 route requires m >= 1.5".into(),
                ));
            }
            let terms = block_terms(BlockBound::Corollary3, x, &lam)?;
            let composed = compose_terms(&terms, &cap_h, &sqrt_2x, &lam)?;
            internals.push(("S_main".into(), composed.parts[0].1.div(&h)?));
            internals.push(("S_count".into(), composed.parts[1].1.div(&h)?));
            s_total = s_total.add(&composed.total);
            case_label = "corollary3".to_string();
        }
        Route::Proposition1 => {
            if params.consts == ConstMode::Paper {
                let ok = params.lambda == Rational::from((1045, 1000))
                    && params.c == 11
                    && params.alpha == Rational::from((1, 5))
                    && params.beta == 1
                    && params.delta == Rational::from((17, 100))
                    && params.m.lo() >= &Rational::from((11, 2));
                if !ok {
                    return Err(Error::Hypothesis(
                        "published mid-range constants require lambda = 1.045, m >= 5.5, \
                         delta = 0.17 and h = 11x^(1/5) log x"
                            .into(),
                    ));
                }
            }
            let coeffs = match params.consts {
                ConstMode::Paper => paper_coeffs(prec),
                ConstMode::Derived => {
                    derived_coeffs(&params.lambda, &params.m, &params.delta, prec)?
                }
            };
            let x25 = x.pow_rational(&Rational::from((2, 5)))?;
            if cap_h.hi() > x25.hi() {
                return Err(Error::Hypothesis(
                    "Proposition 1 route requires H = m h <= x^(2/5)".into(),
                ));
            }
            // B = δ m c x^(α−1/5) (log x)^β at the base of the range, with
            // the exponents combined to keep the enclosure tight.
            let b_at_base = CertInterval::from_rational(&params.delta, prec)
                .mul(&params.m)
                .mul(
                    &Monomial::new(
                        CertInterval::from_rational(&params.c, prec),
                        params.alpha.clone() - Rational::from((1, 5)),
                        params.beta,
                    )
                    .evaluate(x)?,
                );
            if b_at_base.lo() < &B_MIN {
                return Err(Error::Hypothesis(format!(
                    "Proposition 1 route requires B = delta x^(-1/5) H >= {B_MIN}"
                )));
            }
            let branch_point = x
                .pow_rational(&Rational::from((1, 4)))?
                .mul(&CertInterval::from_integer(5, prec));
            let split = matches!(
                cap_h.compare_certain(&branch_point),
                Some(std::cmp::Ordering::Less | std::cmp::Ordering::Equal)
            );
            if split {
                // H ≤ 5x^(1/4): small-M piece on [H, 5x^(1/4)], then the
                // large-M piece up to x^(2/5).
                let low_terms =
                    prop1_terms(x, &h, &coeffs, small_m_term(x, &h, &coeffs)?)?;
                let low = compose_terms(&low_terms, &cap_h, &branch_point, &lam)?;
                let large = match params.consts {
                    ConstMode::Paper => large_coeff_paper(prec),
                    ConstMode::Derived => large_coeff_derived(
                        &params.lambda,
                        &CertInterval::from_integer(5, prec),
                        prec,
                    )?,
                };
                let high_terms = prop1_terms(x, &h, &coeffs, large_m_term(x, &h, &large)?)?;
                let high = compose_terms(&high_terms, &branch_point, &x25, &lam)?;
                internals.push(("S_split_low".into(), low.total.div(&h)?));
                internals.push(("S_split_high".into(), high.total.div(&h)?));
                s_total = s_total.add(&low.total).add(&high.total);
                case_label = "split_at_5x14".to_string();
            } else {
                // H ≥ 5x^(1/4), or uncertain: one large-M piece over
                // [H, x^(2/5)], with the σ₄ coefficient valid for every
                // block bottom ≥ r x^(1/4) where r encloses H x^(-1/4).
                // That stays sound even if H dips slightly below 5x^(1/4).
                let r = cap_h.div(&x.pow_rational(&Rational::from((1, 4)))?)?;
                let certainly_above = matches!(
                    cap_h.compare_certain(&branch_point),
                    Some(std::cmp::Ordering::Greater)
                );
                let large = if params.consts == ConstMode::Paper && certainly_above {
                    large_coeff_paper(prec)
                } else {
                    large_coeff_derived(&params.lambda, &r, prec)?
                };
                let terms = prop1_terms(x, &h, &coeffs, large_m_term(x, &h, &large)?)?;
                let composed = compose_terms(&terms, &cap_h, &x25, &lam)?;
                internals.push(("S_main".into(), composed.total.div(&h)?));
                s_total = s_total.add(&composed.total);
                case_label = if certainly_above {
                    "single_large".to_string()
                } else {
                    "single_large_straddle".to_string()
                };
            }
            let cor1_terms = block_terms(BlockBound::Corollary1, x, &lam)?;
            let cor1 = compose_terms(&cor1_terms, &x25, &sqrt_2x, &lam)?;
            internals.push(("S_tail_cor1".into(), cor1.total.div(&h)?));
            s_total = s_total.add(&cor1.total);
        }
    }

    let sigma3 = s_total.div(&h)?;
    let sigma0 = sigma0(&h, params.j)?;
    let sigma1 = sigma1_constant().clone();
    let sigma2 = sigma2(&h, &params.m)?;
    let total = sigma0.add(&sigma1).add(&sigma2).add(&sigma3);
    let budget = budget(&h)?;
    let margin = budget.sub(&total);
    let proved = margin.is_certainly_positive();
    Ok(SigmaBreakdown {
        case_label,
        h,
        sigma0,
        sigma1,
        sigma2,
        sigma3,
        internals,
        total,
        budget,
        margin,
        proved,
    })
}
