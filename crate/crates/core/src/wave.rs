//! Minimal-speed traveling wave `U'' + 2U' + f(U) = 0` and its tail law.
//!
//! The wave leaves `U = 1` along the one-dimensional unstable manifold and is
//! followed in `(U, U')` until `U` drops below a switch threshold. From there
//! the tail is carried in `W = log(e^xi U)`, which satisfies
//! `W'' + (W')² = A L^{1-r}` with `L = log(nu/U) = log_nu + xi - W`. This form
//! never underflows, so the tail can be followed to `xi ~ 1e6`.

use serde::Serialize;

use crate::analysis::fit::{linfit, FitResult};
use crate::error::{invalid, Error, Result};
use crate::model::{ModelParams, Regime};
use crate::ode::{Control, Dopri5, Outcome, Tolerances};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, Copy)]
pub struct WaveOptions<T> {
    pub tol: T,
    /// Initial distance from `U = 1` along the unstable eigendirection.
    pub eps_manifold: T,
    /// Below this value of `U` the integration continues in `W`.
    pub switch_below: T,
    pub xi_end: T,
    /// Step ceiling in the tail is `max(1, tail_step_fraction * xi)`.
    pub tail_step_fraction: T,
}

impl<T: Real> WaveOptions<T> {
    pub fn new(xi_end: T, tol: T) -> Self {
        Self {
            tol,
            eps_manifold: c(1e-8),
            switch_below: c(1e-12),
            xi_end,
            tail_step_fraction: c(0.05),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WaveMeta {
    pub tol: f64,
    pub eps_manifold: f64,
    pub switch_below: f64,
    /// Abscissa where the integration switched to `W`.
    pub switch_xi: f64,
    /// Unstable eigenvalue at `U = 1`.
    pub mu_plus: f64,
    /// `|U(0) - 1/2|` after translation fixing.
    pub matching_residual: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

/// Sampled wave in `U`, `Q = nu e^xi U`, and `W = log(e^xi U)`.
///
/// `u` and `q` are `None` where the value under- or overflows.
#[derive(Debug, Clone)]
pub struct WaveProfile<T> {
    pub xi: Vec<T>,
    pub u: Vec<Option<T>>,
    pub q: Vec<Option<T>>,
    pub w: Vec<T>,
    /// `W'` at each sample.
    pub dw: Vec<T>,
    pub meta: WaveMeta,
}

impl<T: Real> WaveProfile<T> {
    fn with_capacity(n: usize, meta: WaveMeta) -> Self {
        Self {
            xi: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            w: Vec::with_capacity(n),
            dw: Vec::with_capacity(n),
            meta,
        }
    }

    fn push_w(&mut self, params: &ModelParams<T>, xi: T, w: T, dw: T) {
        let log_u = w - xi;
        let u = log_u.exp();
        let q = (params.log_nu + w).exp();
        self.xi.push(xi);
        self.u.push((u > T::zero() && u.is_finite()).then_some(u));
        self.q.push((q > T::zero() && q.is_finite()).then_some(q));
        self.w.push(w);
        self.dw.push(dw);
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    /// Linear interpolation of `W` at `x` (must lie within the samples).
    pub fn w_at(&self, x: T) -> Option<T> {
        let i = self.xi.partition_point(|&v| v <= x);
        if i == 0 || i >= self.xi.len() {
            return (i > 0 && self.xi[i - 1] == x).then(|| self.w[i - 1]);
        }
        // cubic Hermite on (W, W')
        let (x0, x1) = (self.xi[i - 1], self.xi[i]);
        let hh = x1 - x0;
        let s = (x - x0) / hh;
        let (s2, s3) = (s * s, s * s * s);
        let two = c::<T>(2.0);
        let three = c::<T>(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = -two * s3 + three * s2;
        let h11 = s3 - s2;
        Some(h00 * self.w[i - 1] + h10 * hh * self.dw[i - 1] + h01 * self.w[i] + h11 * hh * self.dw[i])
    }

    /// `U` strictly decreasing and `Q` strictly increasing where representable.
    pub fn is_monotone(&self) -> bool {
        let dec = self
            .u
            .windows(2)
            .all(|p| match (p[0], p[1]) {
                (Some(a), Some(b)) => b < a,
                _ => true,
            });
        // Q increasing <=> W increasing, which holds on every sample
        let inc = self.w.windows(2).all(|p| p[1] > p[0]);
        dec && inc
    }
}

fn unstable_eigenvalue<T: Real>(params: &ModelParams<T>) -> T {
    -T::one() + (T::one() - params.reaction_slope_at_one()).sqrt()
}

/// `(U, U')` system in the unshifted frame.
fn u_rhs<T: Real>(params: &ModelParams<T>) -> impl Fn(T, &[T; 2]) -> [T; 2] + '_ {
    move |_x, s| {
        let u = s[0];
        let f = if u > T::zero() { params.reaction_raw(u.min(T::one())) } else { T::zero() };
        [s[1], -c::<T>(2.0) * s[1] - f]
    }
}

/// `(W, W')` system; `offset` converts the integration variable to `xi`.
fn w_rhs<T: Real>(params: &ModelParams<T>) -> impl Fn(T, &[T; 2]) -> [T; 2] + '_ {
    move |xi, s| {
        let l = params.log_nu + xi - s[0];
        let forcing = if l > T::zero() {
            params.a * l.powf(T::one() - params.r)
        } else {
            T::nan()
        };
        [s[1], forcing - s[1] * s[1]]
    }
}

/// Integrates the minimal-speed wave from `U ≈ 1` to `xi_end`, translated so
/// that `U(0) = 1/2`.
pub fn shoot_wave<T: Real>(params: &ModelParams<T>, opts: &WaveOptions<T>) -> Result<WaveProfile<T>> {
    if !(opts.tol > c(1e-14) && opts.tol < c(1e-4)) {
        return invalid(format!("tol must lie in (1e-14, 1e-4), got {}", opts.tol));
    }
    if !(opts.eps_manifold > T::zero() && opts.eps_manifold < c(1e-2)) {
        return invalid("eps_manifold must lie in (0, 1e-2)");
    }
    if !(opts.xi_end > c(1.0)) || !opts.xi_end.is_finite() {
        return invalid("xi_end must be finite and > 1");
    }
    let mu = unstable_eigenvalue(params);
    let eps = opts.eps_manifold;
    let tol = Tolerances { rtol: opts.tol, atol: opts.tol * c(1e-6) };
    let solver = Dopri5::new(tol);

    // Phase 1: (U, U') from the unstable manifold until U < switch_below.
    let mut xs = vec![T::zero()];
    let mut states = vec![[T::one() - eps, -eps * mu]];
    let mut violation: Option<String> = None;
    let x_limit = c::<T>(1e4);
    let sol = solver.integrate(
        u_rhs(params),
        T::zero(),
        states[0],
        x_limit,
        |_| c::<T>(0.5),
        |x, s| {
            if !s[0].is_finite() || !s[1].is_finite() {
                violation = Some(format!("non-finite state at x = {x:e}"));
                return Control::Stop;
            }
            if s[0] <= T::zero() {
                violation = Some(format!("U overshoots below 0 at x = {x:e}"));
                return Control::Stop;
            }
            if s[1] >= T::zero() {
                violation = Some(format!("U not decreasing at x = {x:e}"));
                return Control::Stop;
            }
            xs.push(x);
            states.push(*s);
            if s[0] < opts.switch_below {
                Control::Stop
            } else {
                Control::Continue
            }
        },
    )?;
    if let Some(msg) = violation {
        return Err(Error::Numerical(format!("{msg}; check eps_manifold or tolerance")));
    }
    if sol.outcome == Outcome::Reached {
        return Err(Error::Numerical("wave never entered the tail regime".into()));
    }

    // Translation: locate U = 1/2 by bisection on short re-integrations.
    let half = c::<T>(0.5);
    let k = states
        .iter()
        .position(|s| s[0] < half)
        .ok_or_else(|| Error::Numerical("U never crosses 1/2".into()))?;
    if k == 0 {
        return Err(Error::Numerical("U starts below 1/2".into()));
    }
    let (xa, sa) = (xs[k - 1], states[k - 1]);
    let fine = Dopri5::new(Tolerances { rtol: c(1e-13), atol: c(1e-15) });
    let u_at = |x: T| -> Result<T> {
        Ok(fine
            .integrate(u_rhs(params), xa, sa, x, |_| T::infinity(), |_, _| Control::Continue)?
            .y[0])
    };
    let (mut lo, mut hi) = (xa, xs[k]);
    for _ in 0..200 {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        if u_at(mid)? > half {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x_half = (lo + hi) * half;
    let u_half = u_at(x_half)?;

    let mut profile = WaveProfile::with_capacity(
        xs.len() + 256,
        WaveMeta {
            tol: opts.tol.to_f64_lossy(),
            eps_manifold: eps.to_f64_lossy(),
            switch_below: opts.switch_below.to_f64_lossy(),
            switch_xi: (sol.t - x_half).to_f64_lossy(),
            mu_plus: mu.to_f64_lossy(),
            matching_residual: (u_half - half).abs().to_f64_lossy(),
            accepted_steps: sol.accepted,
            rejected_steps: sol.rejected,
        },
    );
    let mut inserted = false;
    for (x, s) in xs.iter().zip(&states) {
        let xi = *x - x_half;
        if !inserted && xi >= T::zero() {
            if xi > T::zero() {
                // exact sample at xi = 0
                let du = fine
                    .integrate(u_rhs(params), xa, sa, x_half, |_| T::infinity(), |_, _| Control::Continue)?
                    .y[1];
                push_u(&mut profile, params, T::zero(), half, du);
            }
            inserted = true;
        }
        if xi == T::zero() {
            push_u(&mut profile, params, xi, half, s[1]);
        } else {
            push_u(&mut profile, params, xi, s[0], s[1]);
        }
    }

    // Phase 2: (W, W') in the translated frame.
    let (xi_s, u_s, du_s) = {
        let s = sol.y;
        (sol.t - x_half, s[0], s[1])
    };
    if opts.xi_end <= xi_s {
        return Ok(profile);
    }
    let tail = integrate_tail_q_with(params, u_s.ln() + xi_s, T::one() + du_s / u_s, (xi_s, opts.xi_end), opts)?;
    profile.meta.accepted_steps += tail.meta.accepted_steps;
    profile.meta.rejected_steps += tail.meta.rejected_steps;
    for i in 1..tail.len() {
        profile.xi.push(tail.xi[i]);
        profile.u.push(tail.u[i]);
        profile.q.push(tail.q[i]);
        profile.w.push(tail.w[i]);
        profile.dw.push(tail.dw[i]);
    }
    Ok(profile)
}

fn push_u<T: Real>(p: &mut WaveProfile<T>, params: &ModelParams<T>, xi: T, u: T, du: T) {
    let w = xi + u.ln();
    p.xi.push(xi);
    p.u.push(Some(u));
    let q = (params.log_nu + w).exp();
    p.q.push((q.is_finite() && q > T::zero()).then_some(q));
    p.w.push(w);
    p.dw.push(T::one() + du / u);
}

/// Tail-only integration of `W'' + (W')² = A (log_nu + xi - W)^{1-r}` from
/// `(w0, w1)` at `xi_span.0` to `xi_span.1` (either direction).
pub fn integrate_tail_q<T: Real>(
    params: &ModelParams<T>,
    w0: T,
    w1: T,
    xi_span: (T, T),
    tol: T,
) -> Result<WaveProfile<T>> {
    let opts = WaveOptions::new(xi_span.1, tol);
    integrate_tail_q_with(params, w0, w1, xi_span, &opts)
}

fn integrate_tail_q_with<T: Real>(
    params: &ModelParams<T>,
    w0: T,
    w1: T,
    xi_span: (T, T),
    opts: &WaveOptions<T>,
) -> Result<WaveProfile<T>> {
    let (a, b) = xi_span;
    if !(params.log_nu + a - w0 > T::zero()) {
        return invalid("initial W violates log(nu/U) > 0");
    }
    if !w0.is_finite() || !w1.is_finite() {
        return invalid("non-finite tail data");
    }
    let forward = b >= a;
    if forward && w1 < T::zero() {
        return invalid("forward tail integration needs W' >= 0");
    }
    let tol = Tolerances { rtol: opts.tol, atol: opts.tol };
    let frac = opts.tail_step_fraction;
    let mut profile = WaveProfile::with_capacity(
        256,
        WaveMeta {
            tol: opts.tol.to_f64_lossy(),
            eps_manifold: f64::NAN,
            switch_below: f64::NAN,
            switch_xi: a.to_f64_lossy(),
            mu_plus: f64::NAN,
            matching_residual: f64::NAN,
            accepted_steps: 0,
            rejected_steps: 0,
        },
    );
    profile.push_w(params, a, w0, w1);
    let mut failure: Option<Error> = None;
    let sol = Dopri5::new(tol).integrate(
        w_rhs(params),
        a,
        [w0, w1],
        b,
        |x| (frac * x.abs()).max(T::one()),
        |x, s| {
            if !s[0].is_finite() || !s[1].is_finite() {
                failure = Some(Error::Numerical(format!("non-finite tail state at xi = {x:e}")));
                return Control::Stop;
            }
            if params.log_nu + x - s[0] <= T::zero() {
                failure = Some(Error::Invalid(format!("log(nu/U) <= 0 at xi = {x:e}")));
                return Control::Stop;
            }
            profile.push_w(params, x, s[0], s[1]);
            Control::Continue
        },
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let sol = sol?;
    profile.meta.accepted_steps = sol.accepted;
    profile.meta.rejected_steps = sol.rejected;
    if !forward {
        profile.xi.reverse();
        profile.u.reverse();
        profile.q.reverse();
        profile.w.reverse();
        profile.dw.reverse();
    }
    Ok(profile)
}

/// Fitted tail constant with the window it was read from.
#[derive(Debug, Clone, Serialize)]
pub struct TailFit<T> {
    pub regime: Regime,
    /// `kappa` for `r >= 3`; slope of `W` against `xi^{(3-r)/2}` otherwise.
    pub statistic: T,
    /// Intercept of the `W` fit (`r < 3`) or `ln kappa` (`r >= 3`).
    pub intercept: T,
    /// Exponent `p` of the compensating factor (`xi^p e^{-xi}` or `xi^p` in `W`).
    pub exponent: T,
    pub window: (T, T),
    /// Maximum relative variation of the compensated quantity over the window.
    pub flatness: T,
    pub points: usize,
}

/// Largest accepted `max/min - 1` of the compensated ratio (`r >= 3`).
pub const PLATEAU_LIMIT: f64 = 0.02;
/// Largest accepted relative slope drift between window halves (`r < 3`).
pub const SLOPE_DRIFT_LIMIT: f64 = 0.10;

/// Compensated ratio `U / (xi^p e^{-xi}) = e^{W} / xi^p` over `window`.
///
/// Returns `(xi, ratio)` pairs and `max/min - 1`.
pub fn compensated_ratio<T: Real>(profile: &WaveProfile<T>, p: T, window: (T, T)) -> Result<(Vec<(T, T)>, T)> {
    let pts: Vec<(T, T)> = profile
        .xi
        .iter()
        .zip(&profile.w)
        .filter(|(&x, _)| x >= window.0 && x <= window.1 && x > T::zero())
        .map(|(&x, &w)| (x, (w - p * x.ln()).exp()))
        .collect();
    if pts.len() < 2 {
        return invalid("fewer than two samples in the compensated window");
    }
    let (mn, mx) = pts
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(a, b), &(_, v)| (a.min(v), b.max(v)));
    Ok((pts, mx / mn - T::one()))
}

/// Tail law over the top decade `[xi_max / 10, xi_max]` of the profile.
pub fn extract_tail_law<T: Real>(profile: &WaveProfile<T>, params: &ModelParams<T>) -> Result<TailFit<T>> {
    let xi_max = *profile.xi.last().ok_or_else(|| Error::Invalid("empty profile".into()))?;
    extract_tail_law_in(profile, params, (xi_max / c(10.0), xi_max))
}

pub fn extract_tail_law_in<T: Real>(
    profile: &WaveProfile<T>,
    params: &ModelParams<T>,
    window: (T, T),
) -> Result<TailFit<T>> {
    if !(window.0 > T::zero() && window.1 > window.0) {
        return invalid("tail window must be a nonempty subset of (0, inf)");
    }
    let regime = params.regime();
    match regime {
        Regime::Classical | Regime::Critical => {
            let p = if regime == Regime::Classical { T::one() } else { params.alpha };
            let (pts, flatness) = compensated_ratio(profile, p, window)?;
            let mean_log = pts.iter().fold(T::zero(), |s, &(_, v)| s + v.ln()) / T::from_usize_lossy(pts.len());
            if flatness > c(PLATEAU_LIMIT) {
                return Err(Error::RegimeNotReached {
                    flatness: flatness.to_f64_lossy(),
                    limit: PLATEAU_LIMIT,
                });
            }
            Ok(TailFit {
                regime,
                statistic: mean_log.exp(),
                intercept: mean_log,
                exponent: p,
                window,
                flatness,
                points: pts.len(),
            })
        }
        Regime::Algebraic => {
            let p = (c::<T>(3.0) - params.r) / c(2.0);
            let fit = algebraic_fit(profile, p, window)?;
            // local slopes on the two halves (in log xi) of the window
            let mid = (window.0 * window.1).sqrt();
            let lo = algebraic_fit(profile, p, (window.0, mid))?;
            let hi = algebraic_fit(profile, p, (mid, window.1))?;
            let flatness = (lo.slope - hi.slope).abs() / fit.slope.abs();
            if flatness > c(SLOPE_DRIFT_LIMIT) {
                return Err(Error::RegimeNotReached {
                    flatness: flatness.to_f64_lossy(),
                    limit: SLOPE_DRIFT_LIMIT,
                });
            }
            Ok(TailFit {
                regime,
                statistic: fit.slope,
                intercept: fit.intercept,
                exponent: p,
                window,
                flatness,
                points: fit.points,
            })
        }
    }
}

fn algebraic_fit<T: Real>(profile: &WaveProfile<T>, p: T, window: (T, T)) -> Result<FitResult<T>> {
    let zs: Vec<T> = profile.xi.iter().map(|&x| if x > T::zero() { x.powf(p) } else { T::zero() }).collect();
    let (zlo, zhi) = (window.0.powf(p), window.1.powf(p));
    let mut f = linfit(&zs, &profile.w, (zlo, zhi))?;
    f.window = window;
    Ok(f)
}

/// Integrates backward from the fitted asymptote at the right end of the fit
/// window over `overlap` and returns the largest `|ΔW| / max(1, |W|)` against
/// the forward profile.
pub fn backward_matching_error<T: Real>(
    profile: &WaveProfile<T>,
    params: &ModelParams<T>,
    fit: &TailFit<T>,
    overlap: T,
    tol: T,
) -> Result<T> {
    let x1 = fit.window.1;
    let p = fit.exponent;
    let (w, dw) = match fit.regime {
        Regime::Classical | Regime::Critical => (fit.intercept + p * x1.ln(), p / x1),
        Regime::Algebraic => (
            fit.statistic * x1.powf(p) + fit.intercept,
            fit.statistic * p * x1.powf(p - T::one()),
        ),
    };
    let back = integrate_tail_q(params, w, dw, (x1, x1 - overlap), tol)?;
    let mut worst = T::zero();
    for (&x, &wb) in back.xi.iter().zip(&back.w) {
        let wf = profile
            .w_at(x)
            .ok_or_else(|| Error::Invalid("backward window leaves the forward profile".into()))?;
        worst = worst.max((wb - wf).abs() / wf.abs().max(T::one()));
    }
    Ok(worst)
}
