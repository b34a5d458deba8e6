//! Nonparametric simultaneous confidence bands for band-limited regression
//! functions.
//!
//! The regression function is assumed to lie in the Paley-Wiener space with
//! band limit `eta`, an RKHS with the sinc kernel. Given a confidence ellipsoid
//! for the noiseless outputs at a subsample and a high-probability bound
//! `tau` on the squared RKHS norm, the band at `x0` is the range of values of
//! all functions consistent with both. Several bands built on disjoint
//! subsamples can be combined by majority voting.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for `f32`
//! and `f64`); the aliases below fix `f64`.

// `!(x > 0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod band;
pub mod concentration;
pub mod ellipsoid;
pub mod error;
pub mod normbound;
pub mod paley_wiener;
pub mod quadopt;
pub mod scalar;
pub mod simgen;
pub mod voting;

pub use band::{band_over_grid, interval_at, BandConfig, IntervalEstimate};
pub use concentration::{
    empirical_bernstein_term, empirical_variance, hoeffding_term, randomized_hoeffding_term, switch_threshold,
    TailBudget, Threshold,
};
pub use ellipsoid::{Ellipsoid, EllipsoidProvider, EllipsoidRecord};
pub use error::{Error, Result};
pub use normbound::{BoundMethod, DensityModel, NormBound};
pub use paley_wiener::{
    evaluate, gram, kernel_eval, min_norm_interpolant, rkhs_norm_sq, Interpolant, KernelConfig, SampleSet,
};
pub use quadopt::{
    endpoint_program, max_quadratic_over_ellipsoid, min_quadratic_over_ellipsoid, Extremum, QuadraticObjective, Sense,
};
pub use scalar::Real;
pub use voting::{IntervalCollection, UnionOfIntervals, WeightVector};

pub type KernelConfig64 = KernelConfig<f64>;
pub type SampleSet64 = SampleSet<f64>;
pub type Interpolant64 = Interpolant<f64>;
pub type Ellipsoid64 = Ellipsoid<f64>;
pub type NormBound64 = NormBound<f64>;
pub type BandConfig64 = BandConfig<f64>;
pub type IntervalEstimate64 = IntervalEstimate<f64>;
pub type Union64 = UnionOfIntervals<f64>;

pub type KernelConfig32 = KernelConfig<f32>;
pub type Ellipsoid32 = Ellipsoid<f32>;
pub type Interpolant32 = Interpolant<f32>;
