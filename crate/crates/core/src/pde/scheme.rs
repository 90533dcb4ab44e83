//! Time stepping for `u_t = u_xx + f(u)` with Dirichlet data `1` on the left
//! and `0` on the right.
//!
//! Two schemes share the second-order central Laplacian:
//!
//! * [`Scheme::ExplicitHeun`]: two-stage explicit (Heun), `dt <= 0.4 dx²`.
//! * [`Scheme::SplitCrankNicolson`]: Strang splitting, half-step
//!   Crank–Nicolson diffusion around a full reaction step. The first
//!   [`STARTUP_STEPS`] diffusion half-steps are backward Euler to damp the
//!   jump in the step datum.
//!
//! Each scheme has an exact linear spreading speed (minimum over decay rates
//! of the discrete dispersion relation), exposed by [`linear_speed`]; it
//! converges to 2 as the grid is refined.

use serde::Serialize;

use super::field::FieldState;
use super::reaction::Reaction;
use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Real};

pub const EXPLICIT_STABILITY: f64 = 0.4;
pub const STARTUP_STEPS: u64 = 4;
/// States below this are flushed to zero (subnormal guard).
pub const FLUSH_BELOW: f64 = 1e-300;
pub const OVERSHOOT_WARN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ExplicitHeun,
    SplitCrankNicolson,
}

/// Diagnostics accumulated while stepping.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StepStats {
    pub steps: u64,
    /// Largest pre-clamp excursion outside `[0, 1]`.
    pub max_overshoot: f64,
    pub warnings: u64,
}

/// Reusable stepping workspace for one grid size and time step.
pub struct Stepper<T> {
    pub scheme: Scheme,
    pub dt: T,
    dx: T,
    n: usize,
    scratch: Vec<T>,
    scratch2: Vec<T>,
    cn: Thomas<T>,
    be: Thomas<T>,
    pub stats: StepStats,
}

/// Constant-coefficient tridiagonal `(-rho, 1 + 2 rho, -rho)` factorization.
struct Thomas<T> {
    rho: T,
    cp: Vec<T>,
    inv: Vec<T>,
}

impl<T: Real> Thomas<T> {
    fn new(rho: T, n: usize) -> Self {
        let b = T::one() + c::<T>(2.0) * rho;
        let mut cp = vec![T::zero(); n];
        let mut inv = vec![T::zero(); n];
        let mut denom = b;
        for i in 0..n {
            if i > 0 {
                denom = b + rho * cp[i - 1];
            }
            inv[i] = T::one() / denom;
            cp[i] = -rho * inv[i];
        }
        Self { rho, cp, inv }
    }

    /// Solves in place; `d` holds the right-hand side.
    fn solve(&self, d: &mut [T]) {
        let n = d.len();
        d[0] = d[0] * self.inv[0];
        for i in 1..n {
            d[i] = (d[i] + self.rho * d[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            d[i] = d[i] - self.cp[i] * d[i + 1];
        }
    }
}

impl<T: Real> Stepper<T> {
    pub fn new(scheme: Scheme, dx: T, dt: T, n: usize) -> Result<Self> {
        if !(dx > T::zero()) || !(dt > T::zero()) || !dt.is_finite() {
            return invalid(format!("dx and dt must be positive, got dx = {dx}, dt = {dt}"));
        }
        if scheme == Scheme::ExplicitHeun && dt > c::<T>(EXPLICIT_STABILITY) * dx * dx * c(1.0 + 1e-12) {
            return invalid(format!(
                "explicit scheme needs dt <= {EXPLICIT_STABILITY} dx², got dt = {dt}, dx = {dx}"
            ));
        }
        if n < 4 {
            return invalid("grid too small");
        }
        let half = dt / c(2.0);
        let dx2 = dx * dx;
        Ok(Self {
            scheme,
            dt,
            dx,
            n,
            scratch: vec![T::zero(); n],
            scratch2: vec![T::zero(); n],
            cn: Thomas::new(half / (c::<T>(2.0) * dx2), n),
            be: Thomas::new(half / dx2, n),
            stats: StepStats::default(),
        })
    }

    /// Advances `field` by one time step.
    pub fn step<R: Reaction<T>>(&mut self, field: &mut FieldState<T>, reaction: &R) -> Result<()> {
        if field.values.len() != self.n {
            return invalid("field size changed under the stepper");
        }
        if (field.dx - self.dx).abs() > T::epsilon() * self.dx {
            return invalid("field spacing differs from stepper spacing");
        }
        match self.scheme {
            Scheme::ExplicitHeun => self.heun(&mut field.values, reaction),
            Scheme::SplitCrankNicolson => {
                let startup = self.stats.steps < STARTUP_STEPS;
                self.diffuse_half(&mut field.values, startup);
                self.react(&mut field.values, reaction, self.dt);
                self.diffuse_half(&mut field.values, startup);
            }
        }
        self.repair(&mut field.values)?;
        field.t = field.t + self.dt;
        self.stats.steps += 1;
        Ok(())
    }

    fn heun<R: Reaction<T>>(&mut self, u: &mut [T], reaction: &R) {
        let n = self.n;
        let dt = self.dt;
        let inv_dx2 = T::one() / (self.dx * self.dx);
        let two = c::<T>(2.0);
        let rhs = |v: &[T], i: usize| {
            let left = if i == 0 { T::one() } else { v[i - 1] };
            let right = if i + 1 == n { T::zero() } else { v[i + 1] };
            let x = v[i].max(T::zero()).min(T::one());
            (left - two * v[i] + right) * inv_dx2 + reaction.value(x)
        };
        for i in 0..n {
            self.scratch[i] = u[i] + dt * rhs(u, i);
        }
        for i in 0..n {
            self.scratch2[i] = rhs(&self.scratch, i);
        }
        for ((v, &s1), &k2) in u.iter_mut().zip(&self.scratch).zip(&self.scratch2) {
            let k1 = (s1 - *v) / dt;
            *v = *v + dt / two * (k1 + k2);
        }
    }

    fn diffuse_half(&mut self, u: &mut [T], backward_euler: bool) {
        if backward_euler {
            u[0] = u[0] + self.be.rho;
            self.be.solve(u);
            return;
        }
        let n = self.n;
        let rho = self.cn.rho;
        let two = c::<T>(2.0);
        let d = &mut self.scratch;
        for i in 0..n {
            let left = if i == 0 { T::one() } else { u[i - 1] };
            let right = if i + 1 == n { T::zero() } else { u[i + 1] };
            d[i] = u[i] + rho * (left - two * u[i] + right);
        }
        // implicit ghost values: 1 on the left, 0 on the right
        d[0] = d[0] + rho;
        self.cn.solve(d);
        u.copy_from_slice(d);
    }

    /// Exponential midpoint step of `u' = u g(u)`; exact for `g` constant.
    fn react<R: Reaction<T>>(&self, u: &mut [T], reaction: &R, h: T) {
        let half = h / c(2.0);
        for v in u.iter_mut() {
            let x = *v;
            if x <= T::zero() || x >= T::one() {
                continue;
            }
            let mid = (x * (half * reaction.growth(x)).exp()).min(T::one());
            *v = x * (h * reaction.growth(mid)).exp();
        }
    }

    fn repair(&mut self, u: &mut [T]) -> Result<()> {
        let flush = T::from_f64(FLUSH_BELOW).unwrap_or(T::min_positive_value());
        let mut worst = T::zero();
        for v in u.iter_mut() {
            if !v.is_finite() {
                return Err(Error::Numerical("non-finite field value".into()));
            }
            if *v > T::one() {
                worst = worst.max(*v - T::one());
                *v = T::one();
            } else if *v < flush {
                worst = worst.max(-*v);
                *v = T::zero();
            }
        }
        let w = worst.to_f64_lossy();
        if w > self.stats.max_overshoot {
            self.stats.max_overshoot = w;
        }
        if w > OVERSHOOT_WARN {
            self.stats.warnings += 1;
        }
        Ok(())
    }
}

/// One-step amplification of the mode `e^{-lambda x}` for a linear reaction
/// with rate `rate`.
pub fn amplification<T: Real>(scheme: Scheme, dx: T, dt: T, rate: T, lambda: T) -> T {
    let k = c::<T>(2.0) * ((lambda * dx).cosh() - T::one()) / (dx * dx);
    match scheme {
        Scheme::ExplicitHeun => {
            let z = dt * (k + rate);
            T::one() + z + z * z / c(2.0)
        }
        Scheme::SplitCrankNicolson => {
            let q = dt / c(4.0) * k;
            let cn = (T::one() + q) / (T::one() - q);
            (dt * rate).exp() * cn * cn
        }
    }
}

/// Minimal speed `min_lambda ln G(lambda) / (lambda dt)` of the linearized
/// scheme: the spreading speed the discrete front actually selects.
pub fn linear_speed<T: Real>(scheme: Scheme, dx: T, dt: T, rate: T) -> T {
    if rate <= T::zero() {
        return T::zero();
    }
    let speed = |lam: T| amplification(scheme, dx, dt, rate, lam).ln() / (lam * dt);
    // admissible range keeps the CN factor positive
    let mut hi = c::<T>(4.0) * rate.sqrt();
    if scheme == Scheme::SplitCrankNicolson {
        let limit = (T::one() + c::<T>(2.0) * dx * dx / dt).acosh() / dx;
        hi = hi.min(limit * c(0.99));
    }
    let mut lo = rate.sqrt() * c(0.05);
    let g = c::<T>(0.618_033_988_749_894_8);
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (speed(a), speed(b));
    for _ in 0..200 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = speed(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = speed(b);
        }
        if hi - lo < T::epsilon().sqrt() * c(1e-3) {
            break;
        }
    }
    speed((lo + hi) / c(2.0))
}
