//! Numerical laboratory for dilatively stable stochastic processes.
//!
//! The crate evaluates characteristic exponents of generalized fractional
//! Lévy processes (and a few closed-form companions), verifies scaling laws
//! against them, and cross-checks everything with seeded Monte Carlo.
//!
//! Numerical code is generic over the scalar type ([`Real`] for `f32`/`f64`,
//! [`Field`] for exact parameter arithmetic); the aliases at the crate root
//! fix the usual `f64` instantiations.

// `!(x > 0)` also rejects NaN, which is the point of every such guard
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charexp;
pub mod error;
pub mod kernels;
pub mod laws;
pub mod levy;
pub mod montecarlo;
pub mod quadrature;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod scaling;

pub use error::{Error, Result};
pub use laws::{
    as_to_ds, ds_to_as, stable_family_laws, AggregateSimilarityLaw, GeneralizedScalingLaw, ScaleFn,
    ScalingLaw,
};
pub use scalar::{Field, Real};

pub type Kernel = kernels::Kernel<f64>;
pub type LevyModel = levy::LevyModel<f64>;
pub type StableLevy = levy::StableLevy<f64>;
pub type QuadratureConfig = quadrature::QuadratureConfig<f64>;
pub type Estimate = quadrature::Estimate<f64>;

pub type Law = laws::ScalingLaw<f64>;
pub type AggLaw = laws::AggregateSimilarityLaw<f64>;
pub type ExponentQuery = charexp::ExponentQuery<f64>;
pub type VerificationReport = scaling::VerificationReport<f64>;
pub type ScalingGrid = scaling::ScalingGrid<f64>;

/// Exact rational laws for conversions that must round-trip bit for bit.
pub type RationalLaw = laws::ScalingLaw<num_rational::Ratio<i64>>;
pub type RationalAggLaw = laws::AggregateSimilarityLaw<num_rational::Ratio<i64>>;
