//! Heat flow of closed curves into 2-D targets; the harmonic limits are
//! closed geodesics.

pub mod curve;
pub mod flow;

pub use curve::{ClosedCurve, CurveState};
pub use flow::{cfl_bound, flow_step, flow_until, FlowStatus, FlowTrace, StepRecord};
