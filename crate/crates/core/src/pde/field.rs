use crate::error::{invalid, Result};
use crate::scalar::{c, Real};

/// Cell-centered grid state of the Cauchy problem in a movable window.
///
/// Cell `i` has center `window_left + (i + 1/2) dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState<T> {
    pub window_left: T,
    pub dx: T,
    pub values: Vec<T>,
    pub t: T,
    /// Cumulative number of cells the window has been shifted right.
    pub shift_count: i64,
}

impl<T: Real> FieldState<T> {
    pub fn center(&self, i: usize) -> T {
        self.window_left + (T::from_usize_lossy(i) + c(0.5)) * self.dx
    }

    pub fn window_right(&self) -> T {
        self.window_left + T::from_usize_lossy(self.values.len()) * self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn cell_count<T: Real>(window: (T, T), dx: T) -> Result<usize> {
    let (lo, hi) = window;
    if !(dx > T::zero()) || !dx.is_finite() {
        return invalid(format!("dx must be positive and finite, got {dx}"));
    }
    if !(lo < T::zero() && hi > T::zero()) || !lo.is_finite() || !hi.is_finite() {
        return invalid(format!("window [{lo}, {hi}] must straddle 0"));
    }
    let n = ((hi - lo) / dx).round().to_usize().unwrap_or(0);
    if n < 4 {
        return invalid("window holds fewer than 4 cells");
    }
    Ok(n)
}

/// Step datum: `u = 1` for `x < 0`, `u = 0` for `x >= 0` (cell centers).
pub fn init_field<T: Real>(window: (T, T), dx: T) -> Result<FieldState<T>> {
    init_field_with(window, dx, |x| if x < T::zero() { T::one() } else { T::zero() })
}

/// Custom datum, checked against `0 <= u0 <= 1` and `u0(x) = 0` for `x >= 0`.
pub fn init_field_with<T: Real>(window: (T, T), dx: T, u0: impl Fn(T) -> T) -> Result<FieldState<T>> {
    let n = cell_count(window, dx)?;
    let mut field = FieldState {
        window_left: window.0,
        dx,
        values: vec![T::zero(); n],
        t: T::zero(),
        shift_count: 0,
    };
    for i in 0..n {
        let x = field.center(i);
        let v = u0(x);
        if !(v >= T::zero() && v <= T::one()) {
            return invalid(format!("initial datum {v} at x = {x} outside [0, 1]"));
        }
        if x >= T::zero() && v > T::zero() {
            return invalid(format!("initial datum positive at x = {x} >= 0"));
        }
        field.values[i] = v;
    }
    Ok(field)
}
