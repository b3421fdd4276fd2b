//! Non-convexity certificates, probability bounds, Monte Carlo experiments,
//! loss landscapes and the connecting path between solutions.

pub mod certificate;
pub mod landscape;
pub mod monte_carlo;
pub mod path;
pub mod probability;

pub use certificate::{
    augmented_nonconvexity, check_sufficient_condition, midpoint_certificate, segment_convexity_scan, Certificate,
    CertificateKind, ScanOutcome, Witness, SCAN_TOLERANCE,
};
pub use landscape::{landscape_grid, LandscapeGrid};
pub use monte_carlo::{monte_carlo_nonconvexity, monte_carlo_nonconvexity_with_epsilon, McReport, McRow};
pub use path::{lift_path, verify_path_isometry};
pub use probability::{lemma_gate, p_r_for_rectangle, theoretical_bound, wilson_interval, DEFAULT_EPSILON};
