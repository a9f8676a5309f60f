//! The certified bound pipeline: σ-budget pieces, dyadic composition, the
//! mid-range estimate, whole-budget assembly, and range certification.

pub mod assemble;
pub mod compose;
pub mod presets;
pub mod prop1;
pub mod prove;
pub mod sigma;

pub use assemble::{assemble_margin, ParamSet, Route, SigmaBreakdown};
pub use compose::{block_terms, compose_terms, lemma1_compose, BlockBound, MTerm};
pub use presets::{preset, PRESET_NAMES};
pub use prop1::{
    derived_coeffs, paper_coeffs, prop1_bounds, Branch, ConstMode, Prop1Bound, Prop1Coeffs,
};
pub use prove::{prove_range, tail_certificate, RangeCertificate, TailCertificate};
pub use sigma::{budget, sigma0, sigma2};
