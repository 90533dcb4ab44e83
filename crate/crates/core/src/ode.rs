//! Embedded Dormand–Prince 5(4) integrator for small fixed-size systems.
//!
//! Steps are taken in either direction. The caller supplies an optional
//! step ceiling as a function of the independent variable (the wave tail uses
//! a ceiling proportional to `xi`) and an observer that sees every accepted
//! step and may stop the integration.

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Decision returned by an observer after each accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances<T> {
    pub rtol: T,
    pub atol: T,
}

impl<T: Real> Tolerances<T> {
    pub fn uniform(tol: T) -> Self {
        Self { rtol: tol, atol: tol }
    }
}

/// How an integration ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Reached,
    Stopped,
}

#[derive(Debug, Clone)]
pub struct Solution<T, const N: usize> {
    pub t: T,
    pub y: [T; N],
    pub outcome: Outcome,
    pub accepted: usize,
    pub rejected: usize,
}

pub struct Dopri5<T> {
    pub tol: Tolerances<T>,
    pub h_init: Option<T>,
    pub max_steps: usize,
}

// Dormand–Prince coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

#[inline]
fn axpy<T: Real, const N: usize>(y: &[T; N], h: T, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (w, k) in terms {
            acc = acc + c::<T>(*w) * k[i];
        }
        *o = *o + h * acc;
    }
    out
}

impl<T: Real> Dopri5<T> {
    pub fn new(tol: Tolerances<T>) -> Self {
        Self {
            tol,
            h_init: None,
            max_steps: 2_000_000,
        }
    }

    pub fn with_h_init(mut self, h: T) -> Self {
        self.h_init = Some(h);
        self
    }

    /// Integrates `y' = f(t, y)` from `t0` to `t1`.
    ///
    /// `h_max(t)` bounds the step magnitude; `observe(t, y)` runs after every
    /// accepted step (and never at `t0`).
    pub fn integrate<const N: usize, F, H, O>(
        &self,
        mut f: F,
        t0: T,
        y0: [T; N],
        t1: T,
        h_max: H,
        mut observe: O,
    ) -> Result<Solution<T, N>>
    where
        F: FnMut(T, &[T; N]) -> [T; N],
        H: Fn(T) -> T,
        O: FnMut(T, &[T; N]) -> Control,
    {
        let span = t1 - t0;
        let dir = if span >= T::zero() { T::one() } else { -T::one() };
        let mut t = t0;
        let mut y = y0;
        if span == T::zero() {
            return Ok(Solution { t, y, outcome: Outcome::Reached, accepted: 0, rejected: 0 });
        }
        let mut k1 = f(t, &y);
        let mut h = self
            .h_init
            .unwrap_or_else(|| self.initial_step(&k1, &y, span.abs()))
            .abs()
            .min(h_max(t).abs())
            .min(span.abs());
        let safety = c::<T>(0.9);
        let min_fac = c::<T>(0.2);
        let max_fac = c::<T>(5.0);
        let mut accepted = 0;
        let mut rejected = 0;
        let mut last_rejected = false;
        let eps = T::epsilon() * c(16.0);

        loop {
            if accepted + rejected >= self.max_steps {
                return Err(Error::Integration {
                    t: t.to_f64_lossy(),
                    reason: format!("step budget {} exhausted", self.max_steps),
                });
            }
            let remaining = (t1 - t) * dir;
            if remaining <= eps * (T::one() + t.abs()) {
                return Ok(Solution { t: t1, y, outcome: Outcome::Reached, accepted, rejected });
            }
            let mut hh = h.min(h_max(t).abs());
            let last = hh >= remaining;
            if last {
                hh = remaining;
            }
            let hs = hh * dir;
            if hh <= eps * (T::one() + t.abs()) {
                return Err(Error::Integration {
                    t: t.to_f64_lossy(),
                    reason: "step size underflow".into(),
                });
            }

            let k2 = f(t + c::<T>(C2) * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + c::<T>(C3) * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(
                t + c::<T>(C4) * hs,
                &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = f(
                t + c::<T>(C5) * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + hs,
                &axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
            );
            let y_new = axpy(&y, hs, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            let t_new = if last { t1 } else { t + hs };
            let k7 = f(t_new, &y_new);

            let mut err = T::zero();
            let mut finite = true;
            for i in 0..N {
                let e = hs
                    * (c::<T>(E1) * k1[i]
                        + c::<T>(E3) * k3[i]
                        + c::<T>(E4) * k4[i]
                        + c::<T>(E5) * k5[i]
                        + c::<T>(E6) * k6[i]
                        + c::<T>(E7) * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                let q = e / sc;
                err = err + q * q;
                finite &= y_new[i].is_finite();
            }
            err = (err / T::from_usize_lossy(N)).sqrt();
            if !finite || !err.is_finite() {
                rejected += 1;
                last_rejected = true;
                h = hh * c(0.25);
                continue;
            }

            if err <= T::one() {
                t = t_new;
                y = y_new;
                k1 = k7;
                accepted += 1;
                let fac = if err == T::zero() {
                    max_fac
                } else {
                    (safety * err.powf(c(-0.2))).max(min_fac).min(max_fac)
                };
                let fac = if last_rejected { fac.min(T::one()) } else { fac };
                last_rejected = false;
                h = hh * fac;
                if observe(t, &y) == Control::Stop {
                    return Ok(Solution { t, y, outcome: Outcome::Stopped, accepted, rejected });
                }
                if last {
                    return Ok(Solution { t, y, outcome: Outcome::Reached, accepted, rejected });
                }
            } else {
                rejected += 1;
                last_rejected = true;
                h = hh * (safety * err.powf(c(-0.2))).max(min_fac);
            }
        }
    }

    fn initial_step<const N: usize>(&self, k1: &[T; N], y: &[T; N], span: T) -> T {
        let mut d0 = T::zero();
        let mut d1 = T::zero();
        for i in 0..N {
            let sc = self.tol.atol + self.tol.rtol * y[i].abs();
            d0 = d0 + (y[i] / sc).powi(2);
            d1 = d1 + (k1[i] / sc).powi(2);
        }
        let small = c::<T>(1e-5);
        let h = if d0.sqrt() < small || d1.sqrt() < small {
            c::<T>(1e-6)
        } else {
            c::<T>(0.01) * d0.sqrt() / d1.sqrt()
        };
        h.min(span * c(0.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_ceiling(_: f64) -> f64 {
        f64::INFINITY
    }

    #[test]
    fn exponential_decay() {
        let s = Dopri5::new(Tolerances::uniform(1e-12))
            .integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, no_ceiling, |_, _| Control::Continue)
            .unwrap();
        assert_eq!(s.outcome, Outcome::Reached);
        assert!((s.y[0] - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn backward_harmonic_oscillator() {
        let s = Dopri5::new(Tolerances::uniform(1e-12))
            .integrate(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                std::f64::consts::PI,
                [0.0, -1.0],
                0.0,
                no_ceiling,
                |_, _| Control::Continue,
            )
            .unwrap();
        assert!(s.y[0].abs() < 1e-10);
        assert!((s.y[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn observer_stops() {
        let s = Dopri5::new(Tolerances::uniform(1e-8))
            .integrate(
                |_, _y: &[f64; 1]| [1.0],
                0.0,
                [0.0],
                10.0,
                |_| 0.5,
                |_, y| if y[0] > 3.0 { Control::Stop } else { Control::Continue },
            )
            .unwrap();
        assert_eq!(s.outcome, Outcome::Stopped);
        assert!(s.y[0] > 3.0 && s.y[0] <= 3.5 + 1e-12);
    }

    #[test]
    fn fifth_order_convergence() {
        // error ratio under tolerance refinement reflects the local order
        let run = |tol: f64| {
            Dopri5::new(Tolerances::uniform(tol))
                .integrate(|t, y: &[f64; 1]| [y[0] * t.cos()], 0.0, [1.0], 10.0, no_ceiling, |_, _| Control::Continue)
                .unwrap()
                .y[0]
        };
        let exact = 10f64.sin().exp();
        assert!((run(1e-6) - exact).abs() < 1e-4);
        assert!((run(1e-11) - exact).abs() < 1e-9);
    }
}
