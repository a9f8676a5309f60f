//! Exact enumeration of the critical sets S(M, N) and empirical validation
//! of the spacing lemmas, plus exact divided differences.

use crate::error::{Error, Result};
use rayon::prelude::*;
use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Smallest integer ≥ e^41; x ≥ e^41 for integer x iff x ≥ this constant.
/// The enclosure e^41 ∈ (639843493530054949, 639843493530054950) is verified
/// by a certified interval evaluation in the tests.
pub const E41_CEIL: u64 = 639_843_493_530_054_950;

/// S(M, N): odd u in (M, N] with x mod u² ≥ u² − h.
#[derive(Clone, Debug, Serialize)]
pub struct CriticalSet {
    pub x: u64,
    pub h: u64,
    pub m: u64,
    pub n: u64,
    pub members: Vec<u64>,
}

/// Enumerates S(M, N) by direct scan over odd u with exact integer
/// arithmetic, parallelized over disjoint u-subranges with an ordered merge.
pub fn enumerate_s(x: u64, h: u64, m: u64, n: u64) -> Result<CriticalSet> {
    if m < 2 || n <= m {
        return Err(Error::Domain(format!(
            "enumerate_s requires 2 <= M < N, got M={m}, N={n}"
        )));
    }
    if n >= 1u64 << 63 {
        return Err(Error::Overflow("N must be < 2^63 so u² fits 128 bits".into()));
    }
    if h < 1 {
        return Err(Error::Domain("enumerate_s requires h >= 1".into()));
    }
    let first = if m.is_multiple_of(2) { m + 1 } else { m + 2 };
    let mut members = Vec::new();
    if first <= n {
        let count = (n - first) / 2 + 1; // odd candidates first, first+2, ...
        const CHUNK: u64 = 1 << 18;
        let chunks = count.div_ceil(CHUNK);
        let mut parts: Vec<Vec<u64>> = Vec::new();
        (0..chunks as usize)
            .into_par_iter()
            .map(|c| {
                let c = c as u64;
                let lo = first + 2 * c * CHUNK;
                let cnt = CHUNK.min(count - c * CHUNK);
                let mut out = Vec::new();
                for i in 0..cnt {
                    let u = lo + 2 * i;
                    let u2 = u as u128 * u as u128;
                    let r = x as u128 % u2;
                    if r >= u2.saturating_sub(h as u128) {
                        out.push(u);
                    }
                }
                out
            })
            .collect_into_vec(&mut parts);
        members = parts.concat();
    }
    Ok(CriticalSet { x, h, m, n, members })
}

/// Divided difference f[t₀, …, t_s] by the recursive definition, exactly.
pub fn divided_difference(points: &[Rational], values: &[Rational]) -> Result<Rational> {
    if points.is_empty() || points.len() != values.len() {
        return Err(Error::Domain(
            "divided_difference requires equally many points and values, at least one".into(),
        ));
    }
    for w in points.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::Domain(
                "divided_difference requires strictly increasing points".into(),
            ));
        }
    }
    Ok(dd_recursive(points, values))
}

fn dd_recursive(points: &[Rational], values: &[Rational]) -> Rational {
    let s = points.len() - 1;
    if s == 0 {
        return values[0].clone();
    }
    let upper = dd_recursive(&points[1..], &values[1..]);
    let lower = dd_recursive(&points[..s], &values[..s]);
    let span = Rational::from(&points[s] - &points[0]);
    (upper - lower) / span
}

/// Gap histogram of the thinned set S₁ (every other element of S).
#[derive(Clone, Debug, Default, Serialize)]
pub struct GapHistogram {
    pub s1_len: usize,
    pub counts: BTreeMap<u64, u64>,
}

pub fn gap_histogram(s: &CriticalSet) -> GapHistogram {
    let s1: Vec<u64> = s.members.iter().copied().step_by(2).collect();
    let mut counts = BTreeMap::new();
    for w in s1.windows(2) {
        *counts.entry(w[1] - w[0]).or_insert(0u64) += 1;
    }
    GapHistogram { s1_len: s1.len(), counts }
}

/// Which lemma hypotheses hold for a validation context.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct HypothesisFlags {
    /// Eq. 3.0 window: 1000 ≤ h ≤ 2x^(1/3) and x ≥ e^41 (all exact).
    pub eq30: bool,
    /// H ≤ M.
    pub h_cap_le_m: bool,
    /// Pair lemma cap λ ≤ 2.
    pub lambda_pair: bool,
    /// Triple lemma caps λ ≤ 1.2 and m ≥ 1.5.
    pub lambda_triple: bool,
    /// Quadruple/dichotomy caps λ ≤ 1.05 and m ≥ 5.
    pub lambda_quad: bool,
}

/// One failed (or informational) check.
#[derive(Clone, Debug, Serialize)]
pub struct Violation {
    pub check: String,
    pub detail: String,
    /// True when the governing hypotheses do not hold, so the lemma makes no
    /// claim and the record is informational only.
    pub informational: bool,
}

/// Spacing statistics of one quadruple configuration u, u+a, u+b, u+a+b.
#[derive(Clone, Debug, Serialize)]
pub struct QuadStat {
    pub u: u64,
    pub a: u64,
    pub b: u64,
    pub a3b: String,
    pub ab3: String,
}

/// Observed spacing statistics of S(M) = S(M, λM) versus the lemma
/// thresholds, all compared in exact rational arithmetic.
#[derive(Clone, Debug, Serialize)]
pub struct SpacingReport {
    pub x: u64,
    pub h: u64,
    pub cap_h: u64,
    pub m_lower: u64,
    pub n_upper: u64,
    pub lambda: String,
    pub set_size: usize,
    pub hypothesis_flags: HypothesisFlags,
    pub pair_min_gap: Option<u64>,
    pub triple_min_b: Option<u64>,
    pub quadruple_stats: Vec<QuadStat>,
    pub violations: Vec<Violation>,
}

fn flags(x: u64, h: u64, cap_h: u64, m_lower: u64, lambda: &Rational) -> HypothesisFlags {
    let h3 = Integer::from(h).pow(3);
    let eq30 = h >= 1000 && h3 <= Integer::from(x) * 8u32 && x >= E41_CEIL;
    let m_ratio = Rational::from((cap_h, h)); // m = H/h
    HypothesisFlags {
        eq30,
        h_cap_le_m: cap_h <= m_lower,
        lambda_pair: *lambda <= 2u32,
        lambda_triple: *lambda <= Rational::from((12, 10)) && m_ratio >= Rational::from((3, 2)),
        lambda_quad: *lambda <= Rational::from((105, 100)) && m_ratio >= 5,
    }
}

/// Enumerates S(M) = S(M, λM) and checks the pair, triple, quadruple and
/// dichotomy spacing statements with exact arithmetic.
pub fn validate_spacing(
    x: u64,
    h: u64,
    cap_h: u64,
    m_lower: u64,
    lambda: &Rational,
) -> Result<SpacingReport> {
    if *lambda <= 1u32 {
        return Err(Error::Domain("validate_spacing requires lambda > 1".into()));
    }
    let n_upper_rat = lambda.clone() * Rational::from(m_lower);
    let n_upper = n_upper_rat
        .floor()
        .into_numer_denom()
        .0
        .to_u64()
        .ok_or_else(|| Error::Overflow("lambda*M out of range".into()))?;
    let set = enumerate_s(x, h, m_lower, n_upper.max(m_lower + 1))?;
    Ok(spacing_report_for(set, cap_h, lambda))
}

/// Spacing checks over an already-enumerated set; exposed so synthetic
/// member lists can be validated too (counterexample tests).
pub fn spacing_report_for(set: CriticalSet, cap_h: u64, lambda: &Rational) -> SpacingReport {
    let CriticalSet { x, h, m, n, members } = set;
    let fl = flags(x, h, cap_h, m, lambda);
    let mut violations = Vec::new();
    let xi = Integer::from(x);
    let mi = Integer::from(m);

    // (i) pair spacing, Lemma 3: every gap a satisfies a > 0.4995 x⁻¹ M³,
    // i.e. a·x·10⁴ > 4995·M³.
    let pair_required = fl.eq30 && fl.h_cap_le_m && fl.lambda_pair;
    let pair_threshold = Integer::from(4995) * mi.clone().pow(3);
    let mut pair_min_gap: Option<u64> = None;
    for w in members.windows(2) {
        let a = w[1] - w[0];
        pair_min_gap = Some(pair_min_gap.map_or(a, |g| g.min(a)));
        if Integer::from(a) * &xi * 10_000u32 <= pair_threshold {
            violations.push(Violation {
                check: "pair_spacing_eq_3_1".into(),
                detail: format!("gap {a} between {} and {} is <= 0.4995 x^-1 M^3", w[0], w[1]),
                informational: !pair_required,
            });
        }
    }

    // (ii) triple spacing, Lemma 4: for any three elements spanning b,
    // b ≥ 1.3860 x^(-1/3) M^(4/3), i.e. b³·x·10⁹ ≥ 1386³·M⁴.
    let triple_required = fl.eq30 && fl.h_cap_le_m && fl.lambda_triple;
    let triple_threshold = Integer::from(1386).pow(3) * mi.clone().pow(4);
    let mut triple_min_b: Option<u64> = None;
    for w in members.windows(3) {
        let b = w[2] - w[0];
        triple_min_b = Some(triple_min_b.map_or(b, |t| t.min(b)));
        if Integer::from(b).pow(3) * &xi * 1_000_000_000u64 < triple_threshold {
            violations.push(Violation {
                check: "triple_spacing_eq_3_11a".into(),
                detail: format!("triple ({}, {}, {}) has span b={b} < 1.3860 x^-1/3 M^4/3", w[0], w[1], w[2]),
                informational: !triple_required,
            });
        }
    }

    // (iii) quadruple configurations u, u+a, u+b, u+a+b with 0 < a, 2a ≤ b.
    let quad_required = fl.eq30 && fl.h_cap_le_m && fl.lambda_quad;
    let member_set: BTreeSet<u64> = members.iter().copied().collect();
    let quad_threshold = Integer::from(6600) * mi.clone().pow(5);
    let m_ratio = Rational::from((cap_h.max(1), h)); // m = H/h
    let lambda6_h_m4_over_x = lambda.clone().pow(6)
        * Rational::from(h)
        * Rational::from(mi.clone().pow(4))
        / Rational::from(xi.clone());
    let dichotomy_upper = (Rational::from((1, 2)) - Rational::from(lambda / &m_ratio))
        * Rational::from(mi.clone().pow(5))
        / Rational::from(xi.clone());
    let mut quadruple_stats = Vec::new();
    for (i, &u) in members.iter().enumerate() {
        for &ua in &members[i + 1..] {
            let a = ua - u;
            for &ub in &members[i + 1..] {
                let b = ub - u;
                if b < 2 * a {
                    continue;
                }
                if !member_set.contains(&(u + a + b)) {
                    continue;
                }
                let a3b = Integer::from(a).pow(3) * b;
                let ab3 = Integer::from(b).pow(3) * a;
                quadruple_stats.push(QuadStat {
                    u,
                    a,
                    b,
                    a3b: a3b.to_string(),
                    ab3: ab3.to_string(),
                });
                // ab³ ≥ 0.6600 x⁻¹ M⁵, i.e. a·b³·x·10⁴ ≥ 6600·M⁵.
                if ab3.clone() * &xi * 10_000u32 < quad_threshold {
                    violations.push(Violation {
                        check: "quadruple_eq_4_1".into(),
                        detail: format!("(u,a,b)=({u},{a},{b}): ab^3 < 0.6600 x^-1 M^5"),
                        informational: !quad_required,
                    });
                }
                // Dichotomy (Eqs. 4.5/4.6): exactly one of
                // a³b < λ⁶ h x⁻¹ M⁴  and  a³b > (1/2 − λ/m) x⁻¹ M⁵.
                let a3b_rat = Rational::from(a3b);
                let small = a3b_rat < lambda6_h_m4_over_x;
                let large = a3b_rat > dichotomy_upper;
                if small == large {
                    violations.push(Violation {
                        check: "dichotomy_eq_4_5_4_6".into(),
                        detail: format!(
                            "(u,a,b)=({u},{a},{b}): conditions hold {}",
                            if small { "both" } else { "neither" }
                        ),
                        informational: !quad_required,
                    });
                }
            }
        }
    }

    SpacingReport {
        x,
        h,
        cap_h,
        m_lower: m,
        n_upper: n,
        lambda: lambda.to_string(),
        set_size: members.len(),
        hypothesis_flags: fl,
        pair_min_gap,
        triple_min_b,
        quadruple_stats,
        violations,
    }
}
