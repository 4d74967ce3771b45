//! Numerical checks of the distance metric, restricted isometry, noise
//! bound, structural lemmas, local curvature/smoothness and the contraction
//! constant.

mod alignment;
mod contraction;
mod gradcheck;
mod lemmas;
mod probes;
mod report;
mod rip;
mod suites;

pub use alignment::{distance, AlignmentResult};
pub use contraction::{contraction_rho, ContractionReport, SpectralSummary, SIMPLIFIED_STEP_CONSTANT};
pub use gradcheck::{gradcheck, GradcheckReport};
pub use lemmas::{
    check_lemma_a1, check_lemma_b2, check_lemma_b3_b4, LemmaA1Report, LemmaB2Report, LemmaB3B4Report, LEMMA_SLACK,
};
pub use probes::{probe_curvature_smoothness, smoothness_bound, ProbeReport};
pub use report::Report;
pub use rip::{
    check_lemma_b1, noise_assumption_check, random_unit_low_rank, rip_estimate, rip_estimate_from, rip_estimate_range,
    rip_ratio, LemmaB1Report, RipEstimate,
};
pub use suites::{
    gradcheck_suite, lemma_suite, probe_suite, random_balanced, random_dims, LemmaSuiteSummary, ProbeSuiteConfig,
    ProbeSuiteSummary, SuiteTally,
};

/// Slack used when comparing the two sides of an inequality: `slack` scaled
/// by the larger of 1 and the magnitudes involved.
pub(crate) fn holds_with_slack(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs + slack * 1f64.max(lhs.abs()).max(rhs.abs())
}
