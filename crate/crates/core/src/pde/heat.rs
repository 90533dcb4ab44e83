//! Gaussian upper and lower envelopes of the solution from the step datum:
//!
//! ```text
//! sqrt(t) / (C (x + sqrt t)) exp(-x²/4t - C x/t) <= u(t, x) <= C sqrt(t) / (x + sqrt t) exp(t - x²/4t)
//! ```
//!
//! for `x >= 0`. Both hold with one constant `C` whenever `0 <= f(u) <= u`.

use serde::Serialize;

use super::field::init_field;
use super::reaction::{LogKpp, Reaction};
use super::scheme::{Scheme, Stepper, EXPLICIT_STABILITY};
use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;

/// Largest constant searched for.
pub const C_MAX: f64 = 1e3;
const C_MIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatSample {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatReport {
    /// Minimal constant for the upper envelope.
    pub c_upper: f64,
    /// Minimal constant for the lower envelope.
    pub c_lower: f64,
    pub samples: usize,
    pub times: Vec<f64>,
}

impl HeatReport {
    /// Smallest single constant serving both envelopes.
    pub fn c_both(&self) -> f64 {
        self.c_upper.max(self.c_lower)
    }
}

fn upper_shape(t: f64, x: f64) -> f64 {
    let st = t.sqrt();
    st / (x + st) * (t - x * x / (4.0 * t)).exp()
}

#[cfg(test)]
fn lower_envelope(cst: f64, t: f64, x: f64) -> f64 {
    log_lower_envelope(cst, t, x).exp()
}

fn log_lower_envelope(cst: f64, t: f64, x: f64) -> f64 {
    let st = t.sqrt();
    st.ln() - cst.ln() - (x + st).ln() - x * x / (4.0 * t) - cst * x / t
}

/// Minimal constants over the given samples (`x >= 0`).
pub fn heat_constants(samples: &[HeatSample]) -> Result<HeatReport> {
    if samples.is_empty() {
        return invalid("no samples");
    }
    let mut c_upper = 0.0f64;
    let mut c_lower = C_MIN;
    for s in samples {
        if !(s.t > 0.0) || s.x < 0.0 || !s.u.is_finite() {
            return invalid(format!("bad sample {s:?}"));
        }
        c_upper = c_upper.max(s.u / upper_shape(s.t, s.x));
        // the lower envelope decreases in C; find the smallest C it fits under
        // u, comparing logarithms so that tiny u are not lost to underflow
        let log_u = s.u.ln();
        if log_lower_envelope(C_MAX, s.t, s.x) > log_u {
            return Err(Error::Numerical(format!(
                "lower envelope fails for every C <= {C_MAX} at t = {}, x = {}, u = {:e}",
                s.t, s.x, s.u
            )));
        }
        if log_lower_envelope(c_lower, s.t, s.x) > log_u {
            let (mut lo, mut hi) = (c_lower.ln(), C_MAX.ln());
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if log_lower_envelope(mid.exp(), s.t, s.x) > log_u {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-13 {
                    break;
                }
            }
            c_lower = hi.exp();
        }
    }
    if c_upper > C_MAX {
        return Err(Error::Numerical(format!("upper envelope needs C = {c_upper:e} > {C_MAX}")));
    }
    let mut times: Vec<f64> = samples.iter().map(|s| s.t).collect();
    times.dedup();
    Ok(HeatReport { c_upper: c_upper.max(C_MIN), c_lower, samples: samples.len(), times })
}

/// Samples `u(t, x)` on `x in [0, 6 sqrt t]` from the step datum, using the
/// explicit scheme at its stability limit.
pub fn sample_solution<R: Reaction<f64>>(reaction: &R, t_samples: &[f64], dx: f64) -> Result<Vec<HeatSample>> {
    if t_samples.is_empty() || t_samples.iter().any(|t| !(1.0..=20.0).contains(t)) {
        return invalid("sample times must lie in [1, 20]");
    }
    if t_samples.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("sample times must increase");
    }
    if !(dx > 0.0) || dx > 0.25 {
        return invalid(format!("dx must be in (0, 0.25], got {dx}"));
    }
    let t_max = *t_samples.last().unwrap();
    // room for the front (speed 2) and heat spreading on both sides
    let reach = 2.0 * t_max + 12.0 * t_max.sqrt() + 20.0;
    let mut field = init_field((-reach, reach), dx)?;
    let raw = EXPLICIT_STABILITY * dx * dx;
    let mut out = Vec::new();
    let mut t_now = 0.0;
    let mut stepper = Stepper::new(Scheme::ExplicitHeun, dx, raw, field.len())?;
    for &ts in t_samples {
        let k = ((ts - t_now) / raw).ceil().max(1.0);
        let dt = (ts - t_now) / k;
        if (dt - stepper.dt).abs() > 0.0 {
            let stats = stepper.stats;
            stepper = Stepper::new(Scheme::ExplicitHeun, dx, dt, field.len())?;
            stepper.stats = stats;
        }
        for _ in 0..k as u64 {
            stepper.step(&mut field, reaction)?;
        }
        t_now = ts;
        field.t = ts;
        let x_hi = 6.0 * ts.sqrt();
        for i in 0..field.len() {
            let x = field.center(i);
            if (0.0..=x_hi).contains(&x) {
                out.push(HeatSample { t: ts, x, u: field.values[i] });
            }
        }
    }
    Ok(out)
}

/// Measures the minimal envelope constants for the log-KPP run.
pub fn heat_bound_check(params: &ModelParams<f64>, t_samples: &[f64], dx: f64) -> Result<HeatReport> {
    let samples = sample_solution(&LogKpp::new(*params), t_samples, dx)?;
    heat_constants(&samples)
}
