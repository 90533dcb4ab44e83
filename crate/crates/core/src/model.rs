//! Reaction term, its normalization, and the constants derived from `(r, A)`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::{c, Real};

/// Validated model parameters with every derived constant precomputed.
///
/// `nu = exp(A^{1/(r-1)})`, which is the choice that makes `u = 1` a steady
/// state for every `A > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams<T> {
    pub r: T,
    pub a: T,
    /// `log(nu) = A^{1/(r-1)}`; kept separately since `nu` itself overflows
    /// for large `A`.
    pub log_nu: T,
    pub nu: T,
    pub gamma: T,
    pub beta: T,
    pub alpha: T,
    pub s_a: T,
    pub y_bar: T,
}

/// Which of the three tail/delay regimes a parameter set falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "r>3")]
    Classical,
    #[serde(rename = "r=3")]
    Critical,
    #[serde(rename = "r in (1,3)")]
    Algebraic,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Classical => "r>3",
            Regime::Critical => "r=3",
            Regime::Algebraic => "r in (1,3)",
        }
    }
}

/// Root `alpha > 1` of `alpha (alpha - 1) = A`.
pub fn alpha_of<T: Real>(a: T) -> Result<T> {
    if !(a > T::zero()) || !a.is_finite() {
        return invalid(format!("A must be positive and finite, got {a}"));
    }
    let two = c::<T>(2.0);
    Ok((T::one() + (T::one() + c::<T>(4.0) * a).sqrt()) / two)
}

impl<T: Real> ModelParams<T> {
    pub fn new(r: T, a: T) -> Result<Self> {
        if !r.is_finite() || !a.is_finite() {
            return invalid("r and A must be finite");
        }
        if !(r > T::one()) {
            return invalid(format!("r must exceed 1, got {r}"));
        }
        if !(a > T::zero()) {
            return invalid(format!("A must be positive, got {a}"));
        }
        let one = T::one();
        let two = c::<T>(2.0);
        let log_nu = a.powf(one / (r - one));
        let gamma = two / (one + r);
        let beta = (c::<T>(3.0) - r) / (one + r);
        let alpha = alpha_of(a)?;
        let s_a = alpha + c(0.5);
        let y_bar = (one + r).powf(gamma) * a.powf(gamma / two);
        Ok(Self {
            r,
            a,
            log_nu,
            nu: log_nu.exp(),
            gamma,
            beta,
            alpha,
            s_a,
            y_bar,
        })
    }

    pub fn regime(&self) -> Regime {
        let three = c::<T>(3.0);
        if self.r > three {
            Regime::Classical
        } else if self.r == three {
            Regime::Critical
        } else {
            Regime::Algebraic
        }
    }

    /// `f'(1) = (1 - r) A^{-1/(r-1)}`.
    pub fn reaction_slope_at_one(&self) -> T {
        (T::one() - self.r) / self.log_nu
    }

    /// `f(u)` for `u` already in `(0, 1]`, no validation.
    ///
    /// Written in terms of `L = log(nu/u) = log_nu - ln u`, which stays finite
    /// down to the smallest subnormal.
    #[inline]
    pub fn reaction_raw(&self, u: T) -> T {
        if u <= T::zero() {
            return T::zero();
        }
        let l = self.log_nu - u.ln();
        u * (T::one() - self.a * l.powf(T::one() - self.r))
    }

    /// Per-unit growth rate `f(u)/u = 1 - A L^{1-r}` for `u > 0`.
    #[inline]
    pub fn growth_rate(&self, u: T) -> T {
        let l = self.log_nu - u.ln();
        T::one() - self.a * l.powf(T::one() - self.r)
    }

    /// Reaction with the floating-point guards of `policy`.
    ///
    /// Values in `(1, nu)` are repaired to 1; negative inputs or inputs at or
    /// above `nu` are scheme violations.
    pub fn reaction(&self, u: T, policy: &ReactionEvalPolicy<T>) -> Result<T> {
        if u.is_nan() || u < -policy.negative_slack {
            return Err(Error::SchemeViolation(format!("state {u:e} below 0")));
        }
        if u.ln() >= self.log_nu {
            return Err(Error::SchemeViolation(format!("state {u:e} at or above nu")));
        }
        let u = u.max(T::zero()).min(policy.clamp_high);
        if u < policy.clamp_low {
            // f(u)/u -> 1 as u -> 0
            return Ok(u);
        }
        Ok(self.reaction_raw(u))
    }

    /// Barrier curve `Gamma(y) = gamma^2 y^2 / (4 beta) + A y^{1-r} / beta`.
    pub fn gamma_curve(&self, y: T) -> Result<T> {
        self.require_subcritical()?;
        if !(y > T::zero()) {
            return invalid(format!("Gamma requires y > 0, got {y}"));
        }
        Ok(self.gamma_curve_raw(y))
    }

    #[inline]
    pub(crate) fn gamma_curve_raw(&self, y: T) -> T {
        let four = c::<T>(4.0);
        self.gamma * self.gamma * y * y / (four * self.beta)
            + self.a * y.powf(T::one() - self.r) / self.beta
    }

    /// `Gamma'(y)`.
    #[inline]
    pub fn gamma_curve_d1(&self, y: T) -> T {
        let two = c::<T>(2.0);
        self.gamma * self.gamma * y / (two * self.beta)
            + self.a * (T::one() - self.r) * y.powf(-self.r) / self.beta
    }

    /// `Gamma''(y)`.
    #[inline]
    pub fn gamma_curve_d2(&self, y: T) -> T {
        let two = c::<T>(2.0);
        self.gamma * self.gamma / (two * self.beta)
            + self.a * self.r * (self.r - T::one()) * y.powf(-self.r - T::one()) / self.beta
    }

    pub(crate) fn require_subcritical(&self) -> Result<()> {
        if self.r >= c(3.0) {
            return invalid(format!(
                "profile curves need 1 < r < 3 (beta > 0), got r = {}",
                self.r
            ));
        }
        Ok(())
    }

    /// Limit constant `2 sqrt(A) / (3 - r)` of the algebraic regime.
    pub fn tail_coefficient(&self) -> T {
        c::<T>(2.0) * self.a.sqrt() / (c::<T>(3.0) - self.r)
    }
}

/// Floating-point guards for evaluating the log-singular reaction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionEvalPolicy<T> {
    /// Below this value `f(u)` is evaluated by its limit form `f(u) = u`.
    pub clamp_low: T,
    /// Ceiling applied before evaluation (maximum-principle repair).
    pub clamp_high: T,
    /// Negative values within this slack are treated as rounding and zeroed.
    pub negative_slack: T,
}

impl<T: Real> Default for ReactionEvalPolicy<T> {
    fn default() -> Self {
        let tiny = T::min_positive_value();
        // 1e-300 for f64; the smallest normal for narrower types.
        let clamp_low = T::from_f64(1e-300).filter(|v| *v >= tiny).unwrap_or(tiny);
        Self {
            clamp_low,
            clamp_high: T::one(),
            negative_slack: c(1e-12),
        }
    }
}

impl<T: Real> ReactionEvalPolicy<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.clamp_low > T::zero() && self.clamp_low < T::one()) {
            return invalid("clamp_low must lie in (0, 1)");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(r: f64, a: f64) -> ModelParams<f64> {
        ModelParams::new(r, a).unwrap()
    }

    #[test]
    fn r2_a1_constants() {
        let m = p(2.0, 1.0);
        assert!((m.gamma - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.beta - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.nu - std::f64::consts::E).abs() < 1e-15);
        assert!((m.y_bar - 3f64.powf(2.0 / 3.0)).abs() < 1e-14);
        assert!((m.y_bar - 2.080084).abs() < 1e-6);
    }

    #[test]
    fn r3_a2_boundary() {
        let m = p(3.0, 2.0);
        assert_eq!(m.beta, 0.0);
        assert!((m.alpha - 2.0).abs() < 1e-15);
        assert!((m.s_a - 2.5).abs() < 1e-15);
        assert_eq!(m.regime(), Regime::Critical);
    }

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_of(2.0).unwrap(), 2.0);
        assert_eq!(alpha_of(6.0).unwrap(), 3.0);
        assert!((alpha_of(1.0f64).unwrap() - 1.618034).abs() < 1e-6);
        assert!(alpha_of(0.0).is_err());
        assert!(alpha_of(-1.0).is_err());
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ModelParams::new(1.0, 1.0).is_err());
        assert!(ModelParams::new(0.5, 1.0).is_err());
        assert!(ModelParams::new(2.0, 0.0).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0).is_err());
        assert!(ModelParams::new(2.0, f64::INFINITY).is_err());
    }

    #[test]
    fn reaction_examples() {
        let pol = ReactionEvalPolicy::default();
        for (r, a) in [(2.0, 1.0), (5.0, 0.5), (1.5, 4.0)] {
            let m = p(r, a);
            assert!(m.reaction(1.0, &pol).unwrap().abs() < 1e-15);
            assert_eq!(m.reaction(0.0, &pol).unwrap(), 0.0);
        }
        let m = p(2.0, 1.0);
        let u = (-1.0f64).exp();
        let expect = 1.0 / (2.0 * std::f64::consts::E);
        assert!((m.reaction(u, &pol).unwrap() - expect).abs() < 1e-15);
        assert!((expect - 0.183940).abs() < 1e-6);
    }

    #[test]
    fn reaction_limit_near_zero() {
        let m = p(2.0, 1.0);
        let pol = ReactionEvalPolicy::default();
        let small = 1e-200;
        let ratio = m.reaction(small, &pol).unwrap() / small;
        assert!(ratio > 0.99 && ratio < 1.0);
        assert_eq!(m.reaction(1e-310, &pol).unwrap(), 1e-310);
    }

    #[test]
    fn reaction_scheme_violations() {
        let m = p(2.0, 1.0);
        let pol = ReactionEvalPolicy::default();
        assert!(m.reaction(-1e-3, &pol).is_err());
        assert!(m.reaction(m.nu, &pol).is_err());
        // overshoot below nu is repaired to the steady state
        assert_eq!(m.reaction(1.0 + 1e-9, &pol).unwrap(), 0.0);
    }

    #[test]
    fn gamma_curve_examples() {
        let m = p(2.0, 1.0);
        let g = m.gamma_curve(m.y_bar).unwrap();
        assert!((g - 2.0 * 3f64.cbrt()).abs() < 1e-13);
        assert!((g - 2.884499).abs() < 1e-6);
        let slope = m.gamma_curve_d1(m.y_bar);
        assert!((slope - 3f64.powf(-1.0 / 3.0)).abs() < 1e-13);
        assert!((slope - m.gamma * m.y_bar / 2.0).abs() < 1e-13);
        assert!(m.gamma_curve(1e-12).unwrap() > 1e11);
        assert!(m.gamma_curve(0.0).is_err());
        assert!(p(3.0, 1.0).gamma_curve(1.0).is_err());
        assert!(p(4.0, 1.0).gamma_curve(1.0).is_err());
    }

    #[test]
    fn generic_over_f32() {
        let m = ModelParams::<f32>::new(2.0, 1.0).unwrap();
        assert!((m.y_bar - 2.080084).abs() < 1e-5);
        let pol = ReactionEvalPolicy::<f32>::default();
        assert!(m.reaction(1.0, &pol).unwrap().abs() < 1e-6);
    }

    #[test]
    fn policy_validation() {
        let mut pol = ReactionEvalPolicy::<f64>::default();
        assert!(pol.validate().is_ok());
        pol.clamp_low = 0.0;
        assert!(pol.validate().is_err());
    }
}
