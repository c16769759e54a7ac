//! Domain `D`, exact probability scans over it, variance scans and numeric
//! checkers for the concentration and slope-map inequalities.

pub mod bounds;
pub mod domain;
pub mod stats;
pub mod variance;

pub use bounds::{
    azuma_bound, check_bonetto_refined, hoeffding_bound, hoeffding_tail_check, BonettoCheck,
    SlopeMapSpec, TailCheck,
};
pub use domain::{
    calibrate_c, coverage, make_domain, min_prob_over_d, ratio_check, Calibration, DomainD,
    ProbExtremum,
};
pub use stats::{linear_fit, LinearFit};
pub use variance::{variance_scan, VarianceRow, VarianceTable};
