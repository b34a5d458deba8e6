pub mod common;
pub mod coverage;
pub mod diameter;
pub mod norm_bounds;
pub mod single_band;
pub mod voting_bands;
