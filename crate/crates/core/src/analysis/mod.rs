//! Regression utilities and the spectral checks on `M_A`.

pub mod fit;
pub mod spectrum;

pub use fit::{linfit, logfit, powfit, FitModel, FitResult};
pub use spectrum::{ma_residual, ma_residual_from, ma_spectrum, SpectrumResult};
