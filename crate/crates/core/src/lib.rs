//! Markovian gauge-invariant symmetric random norms.
//!
//! A norm process `X_t = ∫_0^t f(Y_s) ds`, driven by a finite-state CTMC `Y`
//! with slopes `f` in `[0, 1]`, parametrizes a random norm on the plane: for
//! sorted `v1 >= v2 >= 0` the norm `p(v)` is the root of
//! `v1 / p + X(v2 / p) = 1`. This crate samples such norms, computes the law
//! of `X_t` with a PDE engine, an integral-equation engine and Monte Carlo,
//! and tabulates expected-norm unit circles and spheres.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`.

// `!(x >= 0)` is how argument checks reject NaN along with negatives.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ctmc;
pub mod distribution;
pub mod error;
pub mod export;
pub mod gsrn;
pub mod norm_process;
pub mod scalar;
pub mod validation;

pub use error::{Error, Result};
pub use scalar::{Entry, Real};

pub type GeneratorMatrix = ctmc::GeneratorMatrix<f64>;
pub type RewardFunction = ctmc::RewardFunction<f64>;
pub type Trajectory = ctmc::Trajectory<f64>;
pub type NormPath = norm_process::NormPath<f64>;
pub type GsrnSample = norm_process::GsrnSample<f64>;
pub type DistributionGrid = distribution::DistributionGrid<f64>;
pub type CharFnEvaluator = distribution::CharFnEvaluator<f64>;
pub type SortedVector = gsrn::SortedVector<f64>;
pub type ExpectedNormTable = gsrn::ExpectedNormTable<f64>;

pub type GeneratorMatrixF32 = ctmc::GeneratorMatrix<f32>;
pub type RewardFunctionF32 = ctmc::RewardFunction<f32>;
pub type NormPathF32 = norm_process::NormPath<f32>;
pub type DistributionGridF32 = distribution::DistributionGrid<f32>;
