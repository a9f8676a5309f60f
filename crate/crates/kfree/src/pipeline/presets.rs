//! Named parameter sets for the published theorem instances.

use crate::error::{Error, Result};
use crate::interval::{parse_rational, CertInterval, DEFAULT_PREC};
use crate::pipeline::assemble::{ParamSet, Route};
use crate::pipeline::prop1::ConstMode;
use rug::Rational;

/// Names of all built-in parameter sets.
pub const PRESET_NAMES: [&str; 6] = [
    "theorem1-large-x",
    "prop3",
    "prop4",
    "thm3-e400",
    "thm3-e1800",
    "thm3-e500000",
];

fn rat(s: &str) -> Rational {
    parse_rational(s).expect("preset literal")
}

/// m = √(log x₀) as a certified enclosure.
fn sqrt_log_m(t0: u32) -> CertInterval {
    CertInterval::from_integer(t0, DEFAULT_PREC)
        .sqrt()
        .expect("nonnegative")
}

fn thm3_row(name: &str, t0: u32, c: u32, delta: &str) -> ParamSet {
    ParamSet {
        name: name.into(),
        x_lo_log: Rational::from(t0),
        x_hi_log: None,
        c: Rational::from(c),
        alpha: Rational::from((1, 5)),
        beta: 1,
        j: 100,
        m: sqrt_log_m(t0),
        lambda: rat("1.02"),
        delta: rat(delta),
        route: Route::Proposition1,
        consts: ConstMode::Derived,
        prec: DEFAULT_PREC,
    }
}

/// Looks up a built-in parameter set by name.
pub fn preset(name: &str) -> Result<ParamSet> {
    match name {
        // Main theorem, asymptotic regime: h = 11 x^(1/5) log x on
        // [e^116, ∞).
        "theorem1-large-x" => Ok(ParamSet {
            name: name.into(),
            x_lo_log: Rational::from(116),
            x_hi_log: None,
            c: Rational::from(11),
            alpha: Rational::from((1, 5)),
            beta: 1,
            j: 120,
            m: CertInterval::from_rational(&rat("5.5"), DEFAULT_PREC),
            lambda: rat("1.045"),
            delta: rat("0.17"),
            route: Route::Proposition1,
            consts: ConstMode::Paper,
            prec: DEFAULT_PREC,
        }),
        // Mid-range bridge: h = 5 x^(1/4) on [e^41, e^110].
        "prop3" => Ok(ParamSet {
            name: name.into(),
            x_lo_log: Rational::from(41),
            x_hi_log: Some(Rational::from(110)),
            c: Rational::from(5),
            alpha: Rational::from((1, 4)),
            beta: 0,
            j: 19,
            m: CertInterval::from_rational(&rat("1.75"), DEFAULT_PREC),
            lambda: rat("1.025"),
            delta: rat("0.17"),
            route: Route::Corollary3,
            consts: ConstMode::Derived,
            prec: DEFAULT_PREC,
        }),
        // Sharper quarter-power interval: h = 3.8 x^(1/4) on [e^109, ∞).
        "prop4" => Ok(ParamSet {
            name: name.into(),
            x_lo_log: Rational::from(109),
            x_hi_log: None,
            c: rat("3.8"),
            alpha: Rational::from((1, 4)),
            beta: 0,
            j: 100,
            m: CertInterval::from_rational(&rat("4.5"), DEFAULT_PREC),
            lambda: rat("1.0001"),
            delta: rat("0.17"),
            route: Route::Corollary3,
            consts: ConstMode::Derived,
            prec: DEFAULT_PREC,
        }),
        // Smaller leading constants at larger thresholds, re-derived
        // mid-range constants with m = √(log x₀).
        "thm3-e400" => Ok(thm3_row(name, 400, 5, "0.3")),
        "thm3-e1800" => Ok(thm3_row(name, 1800, 2, "0.6")),
        "thm3-e500000" => Ok(thm3_row(name, 500_000, 1, "0.87")),
        other => Err(Error::Domain(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}
