//! Achievable rates of K-user MIMO Gaussian interference channels with
//! finite-constellation inputs when every receiver treats interference as
//! noise.
//!
//! The crate covers
//! - Monte-Carlo and high-power estimates of the per-user rates ([`infotheory`]),
//! - the saturation condition on precoders and the exact high-power limits
//!   ([`ccsc`]),
//! - MMSE matrices and the analytic sum-rate gradient ([`mmse`]),
//! - gradient ascent over precoders with backtracking ([`optimizer`]),
//! - interference-alignment and simple reference precoders ([`baselines`]).

pub mod baselines;
pub mod ccsc;
pub mod error;
pub mod fixtures;
pub mod infotheory;
mod kernel;
pub mod mmse;
pub mod model;
pub mod optimizer;
pub mod sampling;

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type CVector = nalgebra::DVector<C64>;

pub use error::{Error, Result};
pub use infotheory::{RateMethod, RateReport, DEFAULT_SAMPLES, DEFAULT_ZERO_TOL};
pub use model::{
    ChannelSet, Constellation, ConstellationKind, EnumerationCap, JointSymbolTable, PrecoderSet, Scenario,
    ScenarioParts,
};
pub use optimizer::{OptimizeParams, OptimizeTrace, Termination};
