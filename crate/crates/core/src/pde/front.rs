//! Level-set tracking of the front in a lab-frame window that is re-centered
//! by whole cells.

use serde::Serialize;

use super::field::{init_field, FieldState};
use super::reaction::{LogKpp, Reaction};
use super::scheme::{linear_speed, Scheme, StepStats, Stepper};
use crate::analysis::fit::{logfit, powfit, FitResult};
use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, Regime};
use crate::scalar::{c, Real};

/// Rightmost `x` with `u(x) = lambda`, linearly interpolated between the
/// centers of the bracketing cells.
pub fn front_position<T: Real>(field: &FieldState<T>, lambda: T) -> Result<T> {
    if !(lambda > T::zero() && lambda < T::one()) {
        return invalid(format!("level {lambda} must lie in (0, 1)"));
    }
    let u = &field.values;
    for i in (0..u.len().saturating_sub(1)).rev() {
        if u[i] >= lambda && u[i + 1] < lambda {
            let s = (u[i] - lambda) / (u[i] - u[i + 1]);
            return Ok(field.center(i) + s * field.dx);
        }
    }
    Err(Error::Numerical(format!("level {lambda} not attained in the window")))
}

/// How the window follows the front.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowPolicy {
    /// Window length.
    pub length: f64,
    /// Re-center once the front passes this fraction of the window.
    pub trigger: f64,
    /// Fraction of the window at which the front sits after re-centering.
    pub target: f64,
    /// Cells dropped on the left must be within this of 1.
    pub drop_tolerance: f64,
}

impl WindowPolicy {
    pub fn with_length(length: f64) -> Self {
        Self { length, trigger: 2.0 / 3.0, target: 1.0 / 3.0, drop_tolerance: 1e-8 }
    }

    /// Default sizing: at least `6 sqrt(t_end) + 40` of room ahead of the
    /// front (capped at 760), the whole of it for `r < 3` where the leading
    /// edge is wider.
    pub fn for_run(regime: Regime, t_end: f64) -> Self {
        let ahead = match regime {
            Regime::Algebraic => 760.0,
            _ => (6.0 * t_end.max(1.0).sqrt() + 40.0).min(760.0),
        };
        Self::with_length(3.0 * ahead)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.length.is_finite()
            && self.length > 0.0
            && 0.0 < self.target
            && self.target < self.trigger
            && self.trigger <= 0.75
            && self.drop_tolerance > 0.0;
        if ok {
            Ok(())
        } else {
            invalid(format!("malformed window policy {self:?}"))
        }
    }
}

/// Front position samples for one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontTrace<T> {
    pub lambda: T,
    pub times: Vec<T>,
    pub positions: Vec<T>,
    /// `speed * t - X(t)`.
    pub delays: Vec<T>,
    /// Reference spreading speed used in the delays: the exact linear speed
    /// of the discrete scheme (2 up to the discretization error).
    pub speed: T,
}

impl<T: Real> FrontTrace<T> {
    /// Delays against the continuum speed 2 instead of `speed`.
    pub fn delays_against_two(&self) -> Vec<T> {
        self.times.iter().zip(&self.positions).map(|(&t, &x)| c::<T>(2.0) * t - x).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontConfig {
    pub t_end: f64,
    pub dx: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub window: WindowPolicy,
    /// First sample time and geometric ratio between samples.
    pub first_sample: f64,
    pub sample_ratio: f64,
}

impl FrontConfig {
    /// Split scheme with `dt = dx`, default window sizing for the regime.
    pub fn new(regime: Regime, t_end: f64, dx: f64) -> Self {
        Self {
            t_end,
            dx,
            dt: dx,
            scheme: Scheme::SplitCrankNicolson,
            window: WindowPolicy::for_run(regime, t_end),
            first_sample: 1.0,
            sample_ratio: 1.05,
        }
    }

    pub fn explicit(mut self) -> Self {
        self.scheme = Scheme::ExplicitHeun;
        self.dt = 0.4 * self.dx * self.dx;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end >= 1.0) || !self.t_end.is_finite() {
            return invalid(format!("t_end must be >= 1, got {}", self.t_end));
        }
        if !(self.dx > 0.0) || !self.dx.is_finite() || !(self.dt > 0.0) || !self.dt.is_finite() {
            return invalid(format!("dx and dt must be positive, got dx = {}, dt = {}", self.dx, self.dt));
        }
        if !(self.sample_ratio > 1.0) || !(self.first_sample > 0.0) {
            return invalid("sampling needs first_sample > 0 and ratio > 1");
        }
        self.window.validate()
    }
}

/// Result of one run: a trace per level plus scheme diagnostics.
#[derive(Debug, Clone)]
pub struct FrontRun<T> {
    pub traces: Vec<FrontTrace<T>>,
    pub stats: StepStats,
    pub shifts: i64,
    pub final_field: FieldState<T>,
}

/// Runs the log-KPP Cauchy problem from the step datum, tracking one level.
pub fn run_front(params: &ModelParams<f64>, t_end: f64, lambda: f64, dx: f64, window: WindowPolicy) -> Result<FrontTrace<f64>> {
    let mut cfg = FrontConfig::new(params.regime(), t_end, dx);
    cfg.window = window;
    let run = run_fronts(&LogKpp::new(*params), &[lambda], &cfg)?;
    Ok(run.traces.into_iter().next().expect("one level"))
}

/// Runs from the step datum and tracks several levels at once. The window is
/// steered by the highest-positioned level.
pub fn run_fronts<R: Reaction<f64>>(reaction: &R, levels: &[f64], cfg: &FrontConfig) -> Result<FrontRun<f64>> {
    cfg.validate()?;
    if levels.is_empty() {
        return invalid("no levels to track");
    }
    for &l in levels {
        if !(l > 0.0 && l < 1.0) {
            return invalid(format!("level {l} must lie in (0, 1)"));
        }
    }
    let w = cfg.window;
    let lo = -w.target * w.length;
    let mut field = init_field((lo, lo + w.length), cfg.dx)?;
    let n = field.len();
    let mut stepper = Stepper::new(cfg.scheme, cfg.dx, cfg.dt, n)?;
    let speed = linear_speed(cfg.scheme, cfg.dx, cfg.dt, reaction.linear_rate());
    let mut traces: Vec<FrontTrace<f64>> = levels
        .iter()
        .map(|&lambda| FrontTrace { lambda, times: vec![], positions: vec![], delays: vec![], speed })
        .collect();

    let steps = (cfg.t_end / cfg.dt).round().max(1.0) as u64;
    let trigger_cell = (w.trigger * n as f64) as usize;
    let target_cell = (w.target * n as f64) as usize;
    let guard = n - n / 4;
    let mut next_sample = cfg.first_sample;
    let lead = levels.iter().cloned().fold(f64::INFINITY, f64::min);

    for k in 1..=steps {
        stepper.step(&mut field, reaction)?;
        // keeps t an exact multiple of dt
        field.t = k as f64 * cfg.dt;

        let x = front_position(&field, lead)?;
        let cell = ((x - field.window_left) / cfg.dx) as usize;
        if cell >= guard {
            return Err(Error::SchemeViolation(format!(
                "front at x = {x} within a quarter window of the right edge at t = {}",
                field.t
            )));
        }
        if cell >= trigger_cell {
            recenter(&mut field, cell - target_cell, w.drop_tolerance)?;
        }

        let last = k == steps;
        if field.t >= next_sample || last {
            for tr in traces.iter_mut() {
                let x = front_position(&field, tr.lambda)?;
                if !x.is_finite() {
                    return Err(Error::Numerical(format!("non-finite front position at t = {}", field.t)));
                }
                tr.times.push(field.t);
                tr.positions.push(x);
                tr.delays.push(speed * field.t - x);
            }
            while next_sample <= field.t {
                next_sample *= cfg.sample_ratio;
            }
        }
    }
    Ok(FrontRun { traces, stats: stepper.stats, shifts: field.shift_count, final_field: field })
}

/// Drops `by` cells on the left (checked to be ~1) and appends zeros.
fn recenter<T: Real>(field: &mut FieldState<T>, by: usize, tol: f64) -> Result<()> {
    if by == 0 {
        return Ok(());
    }
    let tol = T::lit(tol);
    if let Some(v) = field.values[..by].iter().find(|v| (T::one() - **v) > tol) {
        return Err(Error::SchemeViolation(format!(
            "window too short behind the front: dropped cell holds {v}"
        )));
    }
    field.values.drain(..by);
    field.values.resize(field.values.len() + by, T::zero());
    field.window_left = field.window_left + T::from_usize_lossy(by) * field.dx;
    field.shift_count += by as i64;
    Ok(())
}

/// Minimum trace length (in time) for a delay fit.
pub const MIN_FIT_HORIZON: f64 = 500.0;

/// Fits the delay over the last decade `[t_end / 10, t_end]`:
/// `a ln t + b` for `r >= 3`, `Theta t^beta + b` for `r < 3`.
pub fn fit_delay<T: Real>(trace: &FrontTrace<T>, params: &ModelParams<T>) -> Result<FitResult<T>> {
    let t_end = match trace.times.last() {
        Some(&t) => t,
        None => return invalid("empty trace"),
    };
    if t_end.to_f64_lossy() < MIN_FIT_HORIZON {
        return invalid(format!("trace ends at t = {t_end}; a delay fit needs t_end >= {MIN_FIT_HORIZON}"));
    }
    fit_delay_in(trace, params, (t_end / c(10.0), t_end))
}

/// As [`fit_delay`] on an explicit time window.
pub fn fit_delay_in<T: Real>(trace: &FrontTrace<T>, params: &ModelParams<T>, window: (T, T)) -> Result<FitResult<T>> {
    match params.regime() {
        Regime::Algebraic => powfit(&trace.times, &trace.delays, params.beta, window),
        _ => logfit(&trace.times, &trace.delays, window),
    }
}

#[cfg(test)]
mod tests {
    use super::super::field::init_field_with;
    use super::super::reaction::ClassicalKpp;
    use super::*;

    #[test]
    fn front_of_step_and_ramp() {
        let f = init_field_with((-10.0, 20.0), 0.1, |x: f64| if x < 0.0 { 1.0 } else { 0.0 }).unwrap();
        let mut g = f.clone();
        g.values = (0..g.len()).map(|i| if g.center(i) < 5.0 { 1.0 } else { 0.0 }).collect();
        assert!((front_position(&g, 0.5).unwrap() - 5.0).abs() <= 0.05 + 1e-12);
        g.values = (0..g.len()).map(|i| (1.0 - g.center(i) / 10.0).clamp(0.0, 1.0)).collect();
        assert!((front_position(&g, 0.5).unwrap() - 5.0).abs() < 1e-9);
        // second bump to the right wins
        g.values = (0..g.len()).map(|i| {
            let x = g.center(i);
            if x < 2.0 || (8.0..12.0).contains(&x) { 1.0 } else { 0.0 }
        }).collect();
        assert!((front_position(&g, 0.5).unwrap() - 12.0).abs() <= 0.05 + 1e-12);
        assert!(front_position(&f, 0.0).is_err());
        let mut z = f;
        z.values.iter_mut().for_each(|v| *v = 0.0);
        assert!(front_position(&z, 0.5).is_err());
    }

    #[test]
    fn classical_speed_within_one_percent() {
        let cfg = FrontConfig::new(Regime::Classical, 500.0, 0.1);
        let run = run_fronts(&ClassicalKpp, &[0.5], &cfg).unwrap();
        let tr = &run.traces[0];
        // X/t itself still carries the O(ln t / t) delay; the speed over the
        // second half of the run is the clean estimate
        let (t, x) = (*tr.times.last().unwrap(), *tr.positions.last().unwrap());
        let i = tr.times.iter().position(|&s| s >= t / 2.0).unwrap();
        let v = (x - tr.positions[i]) / (t - tr.times[i]);
        assert!((v / 2.0 - 1.0).abs() < 0.01, "speed {v}");
        assert!((x / t / 2.0 - 1.0).abs() < 0.02, "X/t = {}", x / t);
        assert!(run.shifts > 0);
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
        assert!(run.stats.max_overshoot <= 1e-6);
    }

    #[test]
    fn recenter_rejects_front_cells() {
        let mut f = init_field((-1.0, 1.0), 0.1).unwrap();
        assert!(recenter(&mut f, 5, 1e-8).is_ok());
        assert_eq!(f.shift_count, 5);
        assert!((f.window_left + 0.5f64).abs() < 1e-12);
        assert!(recenter(&mut f, 10, 1e-8).is_err());
    }

    #[test]
    fn fit_needs_long_trace() {
        let p = ModelParams::new(5.0, 1.0).unwrap();
        let tr = FrontTrace { lambda: 0.5, times: vec![1.0, 2.0], positions: vec![0.0; 2], delays: vec![0.0; 2], speed: 2.0 };
        assert!(fit_delay(&tr, &p).is_err());
        let times: Vec<f64> = (0..80).map(|k| 50.0 * 1.05f64.powi(k)).collect();
        let delays: Vec<f64> = times.iter().map(|t| 1.5 * t.ln() + 0.3).collect();
        let tr = FrontTrace { lambda: 0.5, positions: vec![0.0; times.len()], times, delays, speed: 2.0 };
        let fit = fit_delay(&tr, &p).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_config() {
        let p = ModelParams::new(5.0, 1.0).unwrap();
        let w = WindowPolicy::with_length(100.0);
        assert!(run_front(&p, 10.0, 0.5, 0.0, w).is_err());
        assert!(run_front(&p, 0.5, 0.5, 0.1, w).is_err());
        assert!(run_front(&p, 10.0, 1.0, 0.1, w).is_err());
    }
}
