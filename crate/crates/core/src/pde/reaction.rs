use crate::model::{ModelParams, ReactionEvalPolicy};
use crate::scalar::Real;

/// Local reaction `f(u) = u g(u)` on `[0, 1]`.
pub trait Reaction<T: Real>: Sync {
    /// Per-capita rate `g(u) = f(u)/u` for `u` in `(0, 1]`.
    fn growth(&self, u: T) -> T;

    fn value(&self, u: T) -> T {
        if u <= T::zero() {
            T::zero()
        } else {
            u * self.growth(u)
        }
    }

    /// `f'(0)`, which sets the linear spreading speed `2 sqrt(f'(0))`.
    fn linear_rate(&self) -> T {
        T::one()
    }
}

/// The log-singular reaction of the model.
#[derive(Debug, Clone, Copy)]
pub struct LogKpp<T> {
    pub params: ModelParams<T>,
    pub policy: ReactionEvalPolicy<T>,
}

impl<T: Real> LogKpp<T> {
    pub fn new(params: ModelParams<T>) -> Self {
        Self { params, policy: ReactionEvalPolicy::default() }
    }
}

impl<T: Real> Reaction<T> for LogKpp<T> {
    #[inline]
    fn growth(&self, u: T) -> T {
        if u >= T::one() {
            return T::zero();
        }
        if u < self.policy.clamp_low {
            return T::one();
        }
        self.params.growth_rate(u)
    }
}

/// `f(u) = u (1 - u)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ClassicalKpp;

impl<T: Real> Reaction<T> for ClassicalKpp {
    #[inline]
    fn growth(&self, u: T) -> T {
        T::one() - u.min(T::one())
    }
}

/// Pure diffusion.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoReaction;

impl<T: Real> Reaction<T> for NoReaction {
    #[inline]
    fn growth(&self, _u: T) -> T {
        T::zero()
    }

    fn linear_rate(&self) -> T {
        T::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_kpp_between_zero_and_u() {
        // 0 <= f(u) <= u on a dense sample of [0, 1]
        for (r, a) in [(1.2, 0.5), (2.0, 1.0), (3.0, 2.0), (5.0, 4.0)] {
            let rx = LogKpp::new(ModelParams::new(r, a).unwrap());
            for k in 0..=4000 {
                let u = if k == 0 { 0.0 } else { (k as f64 / 4000.0).powi(3) };
                let f = rx.value(u);
                assert!(f >= -1e-15 && f <= u + 1e-15, "r={r} A={a} u={u} f={f}");
            }
        }
    }
}
