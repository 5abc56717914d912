//! Independent oracles for support values: the one-constraint extremum,
//! rank-one attainment and deterministic sampling of the image.

mod exactness;
mod gtrs;
mod sample;

pub use exactness::{
    check_exactness, check_exactness_with, rel_gap, DirectionRecord, ExactnessOptions, ExactnessReport, OracleKind,
};
pub use gtrs::{gtrs_solve, has_slater_point, GtrsResult};
pub use sample::{
    grid_support, homogeneous_lift, sample_image, sample_pairs, sample_params, sampled_support,
};
