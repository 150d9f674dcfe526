//! Explicit metric families: the tube ρ_r, the twisted λ_r and (λ_r)_s.

pub mod gluing;
pub mod piecewise;
pub mod step;

pub use gluing::{check_isotopy, GluingMap, Isotopy, Support, TwistIsotopy};
pub use piecewise::{
    breakpoint_smoothness, build_lambda_r, build_lambda_r_s, build_lambda_r_unchecked, build_rho_r,
    BreakpointCheck, PiecewiseWarpMetric, Regime, SmoothnessReport, BREAKPOINTS, T_RANGE,
};
pub use step::{delta_profiles, eta_profile, FamilyProfiles, SmoothStep, StepShape};
