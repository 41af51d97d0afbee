//! Escape-time statistics and numerical checks of the landscape's properties.

mod escape;

pub use escape::{escape_report, EscapeReport, EscapeTracker, SaddleEscape};
mod non_escape;
pub use non_escape::{
    non_escape_horizon, verify_non_escape, NonEscapeOutcome, NonEscapeWitness, DEFAULT_STEP_BUDGET,
};
mod sosp;
pub use sosp::{distance_to_stationary, scan_small_gradient, sosp_check, ScanHit, ScanPoints, ScanReport};
mod smoothness;
pub use smoothness::{estimate_smoothness, loglog_slope, SmoothnessEstimate, SmoothnessEstimator};
pub mod checks;
mod suites;
pub use suites::{run_suite, sosp_epsilon, Suite, SuiteOptions, SuiteReport};
