//! Numerical laboratory for the Fisher-KPP equation
//! `u_t = u_xx + u (1 - A log(nu/u)^{1-r})`.
//!
//! * [`model`]: reaction term and derived constants.
//! * [`wave`]: minimal-speed traveling wave and its tail law.
//! * [`profile`]: the first-order profile ODEs and the delay constant `Theta`.
//! * [`pde`]: Cauchy problem, front tracking and delay fits.
//! * [`analysis`]: least squares and the spectrum of `M_A`.
//! * [`io`] and [`cli`]: CSV/JSON outputs and the command-line driver.
//!
//! The solvers are generic over the scalar type; the aliases below fix it to
//! `f64`, which is what the command-line driver uses.

// `!(x > 0)` is used deliberately so that NaN inputs are rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod io;
pub mod model;
pub mod ode;
pub mod pde;
pub mod profile;
pub mod scalar;
pub mod wave;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Params = model::ModelParams<f64>;
pub type Policy = model::ReactionEvalPolicy<f64>;
pub type Wave = wave::WaveProfile<f64>;
pub type Tail = wave::TailFit<f64>;
pub type Curve = profile::ProfileCurve<f64>;
pub type Theta = profile::ThetaResult<f64>;
pub type Field = pde::FieldState<f64>;
pub type Trace = pde::FrontTrace<f64>;
pub type Fit = analysis::FitResult<f64>;
pub type Spectrum = analysis::SpectrumResult<f64>;
