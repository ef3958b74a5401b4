//! Extinction and survival probabilities of supercritical Galton-Watson processes.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `f64` aliases below are
//! what most callers want.

// `!(x > 0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classify_f3;
pub mod classify_gp;
pub mod error;
pub mod fl_bounds;
pub mod genetics;
pub mod pgf_core;
pub mod scalar;
pub mod sinf_estimates;
pub mod specfun;

pub use error::{Error, Result};
pub use fl_bounds::{BoundDirection, FLParams};
pub use pgf_core::{Family, FixedPoint, Moments, OffspringModel};
pub use scalar::Scalar;
pub use sinf_estimates::{MuDerivatives, SeriesCoeffs};

pub type Model = OffspringModel<f64>;
pub type ModelF32 = OffspringModel<f32>;
pub type Fl = FLParams<f64>;
pub type FlF32 = FLParams<f32>;
pub type Fixed = FixedPoint<f64>;
pub type FixedF32 = FixedPoint<f32>;
pub type Fam = Family<f64>;
pub type FamF32 = Family<f32>;
