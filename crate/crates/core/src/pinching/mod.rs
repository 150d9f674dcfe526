//! Generating terms, threshold searches and sampled curvature ranges.

pub mod range;
pub mod terms;

pub use range::{
    attach_terms, curvature_range, family_range, find_min_r, MinRReport, PinchReport, RBuilder, SamplingSpec,
    Verdict,
};
pub use terms::{
    arithmetic_grid, find_alpha0, geometric_grid, generating_terms, Alpha0Report, Hypotheses, TermValue, WarpFamily,
    T_SAMPLES,
};
