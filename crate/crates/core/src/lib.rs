//! Holding-period volatility and Euler volatility contributions for portfolios
//! whose asset returns are serially (cross-)correlated.
//!
//! The one-period volatility of a portfolio is scaled to a `d`-period horizon
//! from the lagged covariance matrices of the asset returns instead of the
//! square-root-of-time rule. Closed forms cover MA(q), AR(1), VMA(1) and VAR(1)
//! models; a simulator of time-shifted Brownian closing prices provides
//! synthetic panels with known lag-0/lag-1 covariance.
//!
//! All numerics are generic over [`Real`] (implemented for `f32` and `f64`).
//! The `*64` aliases at the crate root fix the scalar to `f64`.

pub mod closing_time;
pub mod contributions;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod scaling;
pub mod types;
pub mod varma;

use std::fmt::LowerExp;

use nalgebra::RealField;
use num_traits::ToPrimitive;

pub use error::{Error, Result};
pub use types::{
    AcfSequence, ContributionReport, ContributionRow, CovSequence, PanelReturns, ScalingReport,
    ScalingRow, VarmaModel, Weights,
};

/// Scalar type used throughout the crate.
pub trait Real: RealField + Copy + ToPrimitive + LowerExp {
    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(x).expect("finite f64 literal")
    }

    fn count(n: usize) -> Self {
        <Self as num_traits::FromPrimitive>::from_usize(n).expect("usize converts to scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Matrix<T> = nalgebra::DMatrix<T>;
pub type Vector<T> = nalgebra::DVector<T>;

pub type PanelReturns64 = PanelReturns<f64>;
pub type Weights64 = Weights<f64>;
pub type AcfSequence64 = AcfSequence<f64>;
pub type CovSequence64 = CovSequence<f64>;
pub type VarmaModel64 = VarmaModel<f64>;
pub type ScalingReport64 = ScalingReport<f64>;
pub type ContributionReport64 = ContributionReport<f64>;
pub type MarketSpec64 = closing_time::MarketSpec<f64>;
pub type ScalarArma64 = scaling::ScalarArma<f64>;

pub type PanelReturns32 = PanelReturns<f32>;
pub type CovSequence32 = CovSequence<f32>;
pub type Weights32 = Weights<f32>;
