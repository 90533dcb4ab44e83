//! Ordinary least squares on transformed coordinates.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Functional form of a fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitModel {
    /// `slope * x + intercept`
    Linear,
    /// `slope * ln t + intercept`
    Log,
    /// `slope * t^exponent + intercept`
    Power { exponent: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub model: FitModel,
    pub slope: T,
    pub intercept: T,
    /// Inclusive range of the raw abscissa used.
    pub window: (T, T),
    pub points: usize,
    pub rms: T,
    /// Standard error of the slope under i.i.d. residuals.
    pub slope_stderr: T,
}

impl<T: Real> FitResult<T> {
    pub fn predict(&self, x: T) -> T {
        let z = match self.model {
            FitModel::Linear => x,
            FitModel::Log => x.ln(),
            FitModel::Power { exponent } => x.powf(T::lit(exponent)),
        };
        self.slope * z + self.intercept
    }
}

pub const MIN_POINTS: usize = 8;

fn ols<T: Real>(zs: &[T], ys: &[T]) -> Result<(T, T, T, T)> {
    let n = T::from_usize_lossy(zs.len());
    let mz = zs.iter().fold(T::zero(), |a, &z| a + z) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let mut szz = T::zero();
    let mut szy = T::zero();
    for (&z, &y) in zs.iter().zip(ys) {
        szz = szz + (z - mz) * (z - mz);
        szy = szy + (z - mz) * (y - my);
    }
    let spread = zs.iter().fold(T::zero(), |a, &z| a.max((z - mz).abs()));
    if !(szz > T::zero()) || spread <= T::epsilon() * (T::one() + mz.abs()) * T::lit(8.0) {
        return invalid("degenerate abscissas");
    }
    let slope = szy / szz;
    let intercept = my - slope * mz;
    let mut ss = T::zero();
    for (&z, &y) in zs.iter().zip(ys) {
        let r = y - (slope * z + intercept);
        ss = ss + r * r;
    }
    let rms = (ss / n).sqrt();
    let dof = if zs.len() > 2 { T::from_usize_lossy(zs.len() - 2) } else { T::one() };
    let stderr = (ss / dof / szz).sqrt();
    Ok((slope, intercept, rms, stderr))
}

fn select<T: Real>(xs: &[T], ys: &[T], window: (T, T), map: impl Fn(T) -> T) -> Result<(Vec<T>, Vec<T>)> {
    if xs.len() != ys.len() {
        return invalid("abscissa and ordinate lengths differ");
    }
    let (lo, hi) = window;
    if !(lo <= hi) {
        return invalid("empty fit window");
    }
    let (zs, vs): (Vec<T>, Vec<T>) = xs
        .iter()
        .zip(ys)
        .filter(|(&x, _)| x >= lo && x <= hi)
        .map(|(&x, &y)| (map(x), y))
        .unzip();
    if zs.len() < MIN_POINTS {
        return invalid(format!("need at least {MIN_POINTS} points in window, got {}", zs.len()));
    }
    if zs.iter().chain(vs.iter()).any(|v| !v.is_finite()) {
        return invalid("non-finite sample in fit window");
    }
    Ok((zs, vs))
}

fn finish<T: Real>(model: FitModel, window: (T, T), n: usize, fit: (T, T, T, T)) -> FitResult<T> {
    FitResult {
        model,
        slope: fit.0,
        intercept: fit.1,
        window,
        points: n,
        rms: fit.2,
        slope_stderr: fit.3,
    }
}

/// `ys ≈ slope * xs + intercept` over samples with `xs` in `window`.
pub fn linfit<T: Real>(xs: &[T], ys: &[T], window: (T, T)) -> Result<FitResult<T>> {
    let (zs, vs) = select(xs, ys, window, |x| x)?;
    Ok(finish(FitModel::Linear, window, zs.len(), ols(&zs, &vs)?))
}

/// `ds ≈ slope * ln t + intercept`.
pub fn logfit<T: Real>(ts: &[T], ds: &[T], window: (T, T)) -> Result<FitResult<T>> {
    if !(window.0 > T::zero()) {
        return invalid("log fit needs positive abscissas");
    }
    let (zs, vs) = select(ts, ds, window, |t| t.ln())?;
    Ok(finish(FitModel::Log, window, zs.len(), ols(&zs, &vs)?))
}

/// `ds ≈ slope * t^beta + intercept`.
pub fn powfit<T: Real>(ts: &[T], ds: &[T], beta: T, window: (T, T)) -> Result<FitResult<T>> {
    if !(window.0 > T::zero()) {
        return invalid("power fit needs positive abscissas");
    }
    let (zs, vs) = select(ts, ds, window, |t| t.powf(beta))?;
    Ok(finish(
        FitModel::Power { exponent: beta.to_f64_lossy() },
        window,
        zs.len(),
        ols(&zs, &vs)?,
    ))
}
