//! Finite-difference spectrum of the radial oscillator
//! `M_A = -d²/dy² + y²/16 + 1/4 + A/y² - (1 + alpha)/2` on `(0, L)` with zero
//! boundary values.
//!
//! The principal eigenfunction is `Q(y) ∝ y^alpha exp(-y²/8)` with eigenvalue
//! 0; higher eigenvalues are the integers (Laguerre ansatz
//! `y^alpha L_n(y²/4) exp(-y²/8)`).

use crate::error::{invalid, Error, Result};
use crate::model::alpha_of;
use crate::scalar::{c, Real};

/// Uniform interior grid `y_i = i h`, `i = 1..n`, with `(n + 1) h = L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialGrid<T> {
    pub h: T,
    pub length: T,
    pub n: usize,
}

impl<T: Real> RadialGrid<T> {
    pub fn new(h: T, length: T) -> Result<Self> {
        if !(h > T::zero()) || !(length > h * c(4.0)) || !h.is_finite() || !length.is_finite() {
            return invalid(format!("degenerate grid h = {h}, L = {length}"));
        }
        let cells = (length / h).round().to_usize().unwrap_or(0);
        if cells < 5 {
            return invalid("grid has fewer than 4 interior nodes");
        }
        Ok(Self { h, length: h * T::from_usize_lossy(cells), n: cells - 1 })
    }

    pub fn node(&self, i: usize) -> T {
        self.h * T::from_usize_lossy(i + 1)
    }
}

/// Symmetric tridiagonal matrix with constant off-diagonal.
#[derive(Debug, Clone)]
pub struct Tridiagonal<T> {
    pub diag: Vec<T>,
    pub off: T,
}

impl<T: Real> Tridiagonal<T> {
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v = v + self.off * x[i - 1];
                }
                if i + 1 < n {
                    v = v + self.off * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm sequence).
    pub fn count_below(&self, lambda: T) -> usize {
        let guard = T::min_positive_value().sqrt();
        let off2 = self.off * self.off;
        let mut count = 0;
        let mut q = T::one();
        for (i, &d) in self.diag.iter().enumerate() {
            q = if i == 0 { d - lambda } else { d - lambda - off2 / q };
            if q.abs() < guard {
                q = -guard;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (T, T) {
        let rad = self.off.abs() * c(2.0);
        let lo = self.diag.iter().fold(T::infinity(), |a, &d| a.min(d)) - rad;
        let hi = self.diag.iter().fold(T::neg_infinity(), |a, &d| a.max(d)) + rad;
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, k: usize, tol: T) -> Result<T> {
        if k >= self.diag.len() {
            return invalid("eigenvalue index out of range");
        }
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..400 {
            let mid = (lo + hi) / c(2.0);
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= tol * (T::one() + mid.abs()) {
                return Ok((lo + hi) / c(2.0));
            }
        }
        Err(Error::Numerical("eigenvalue bisection did not converge".into()))
    }

    /// Unit eigenvector for an eigenvalue estimate by inverse iteration.
    pub fn eigenvector(&self, lambda: T) -> Result<Vec<T>> {
        let n = self.diag.len();
        let shift = lambda + c::<T>(1e-10) * (T::one() + lambda.abs());
        let mut x: Vec<T> = (0..n).map(|i| T::one() + T::lit(((i * 7919) % 13) as f64) * c(1e-3)).collect();
        normalize(&mut x);
        for _ in 0..8 {
            x = self.solve_shifted(shift, &x);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical("inverse iteration diverged".into()));
            }
            normalize(&mut x);
        }
        Ok(x)
    }

    /// Solves `(M - shift I) x = b` by the Thomas algorithm.
    fn solve_shifted(&self, shift: T, b: &[T]) -> Vec<T> {
        let n = self.diag.len();
        let guard = T::min_positive_value().sqrt();
        let mut cp = vec![T::zero(); n];
        let mut dp = vec![T::zero(); n];
        let mut piv = self.diag[0] - shift;
        if piv.abs() < guard {
            piv = guard;
        }
        cp[0] = self.off / piv;
        dp[0] = b[0] / piv;
        for i in 1..n {
            let mut m = self.diag[i] - shift - self.off * cp[i - 1];
            if m.abs() < guard {
                m = guard;
            }
            cp[i] = self.off / m;
            dp[i] = (b[i] - self.off * dp[i - 1]) / m;
        }
        let mut x = vec![T::zero(); n];
        x[n - 1] = dp[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = dp[i] - cp[i] * x[i + 1];
        }
        x
    }
}

fn normalize<T: Real>(x: &mut [T]) {
    let norm = x.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
    for v in x.iter_mut() {
        *v = *v / norm;
    }
}

/// Discretized `M_A` on `grid`.
pub fn ma_operator<T: Real>(a: T, grid: &RadialGrid<T>) -> Result<Tridiagonal<T>> {
    let alpha = alpha_of(a)?;
    let h2 = grid.h * grid.h;
    let shift = c::<T>(0.25) - (T::one() + alpha) / c(2.0);
    let diag = (0..grid.n)
        .map(|i| {
            let y = grid.node(i);
            c::<T>(2.0) / h2 + y * y / c(16.0) + a / (y * y) + shift
        })
        .collect();
    Ok(Tridiagonal { diag, off: -T::one() / h2 })
}

/// Analytic principal eigenfunction sampled on the grid, unit discrete L² norm.
pub fn principal_q<T: Real>(a: T, grid: &RadialGrid<T>) -> Result<Vec<T>> {
    let alpha = alpha_of(a)?;
    let mut q: Vec<T> = (0..grid.n)
        .map(|i| {
            let y = grid.node(i);
            (alpha * y.ln() - y * y / c(8.0)).exp()
        })
        .collect();
    let norm = (grid.h * q.iter().fold(T::zero(), |s, &v| s + v * v)).sqrt();
    for v in &mut q {
        *v = *v / norm;
    }
    Ok(q)
}

/// Discrete L² norm `sqrt(h Σ r_i²)` of `M_A Q` over nodes with `y >= y_from`.
pub fn ma_residual_from<T: Real>(a: T, h: T, length: T, y_from: T) -> Result<T> {
    let grid = RadialGrid::new(h, length)?;
    let op = ma_operator(a, &grid)?;
    let q = principal_q(a, &grid)?;
    let mq = op.apply(&q);
    let ss = mq
        .iter()
        .enumerate()
        .filter(|(i, _)| grid.node(*i) >= y_from)
        .fold(T::zero(), |s, (_, &v)| s + v * v);
    Ok((grid.h * ss).sqrt())
}

/// Discrete L² residual of the analytic `Q` under the three-point `M_A`.
pub fn ma_residual<T: Real>(a: T, h: T, length: T) -> Result<T> {
    ma_residual_from(a, h, length, T::zero())
}

#[derive(Debug, Clone)]
pub struct SpectrumResult<T> {
    pub a: T,
    pub h: T,
    pub length: T,
    /// Lowest eigenvalues, ascending.
    pub eigenvalues: Vec<T>,
    pub q_residual: T,
    /// Discrete L² distance between the computed ground state and `Q`
    /// (both unit-normalized, sign aligned).
    pub ground_state_distance: T,
}

impl<T: Real> SpectrumResult<T> {
    pub fn gap(&self) -> Option<T> {
        (self.eigenvalues.len() >= 2).then(|| self.eigenvalues[1] - self.eigenvalues[0])
    }
}

/// Lowest `k` eigenvalues of the discretized `M_A`.
pub fn ma_spectrum<T: Real>(a: T, h: T, length: T, k: usize) -> Result<SpectrumResult<T>> {
    if k == 0 || k > 10 {
        return invalid(format!("k must be in 1..=10, got {k}"));
    }
    let grid = RadialGrid::new(h, length)?;
    let op = ma_operator(a, &grid)?;
    let tol = T::epsilon() * c(64.0);
    let eigenvalues = (0..k).map(|i| op.eigenvalue(i, tol)).collect::<Result<Vec<_>>>()?;

    let q = principal_q(a, &grid)?;
    let mq = op.apply(&q);
    let q_residual = (grid.h * mq.iter().fold(T::zero(), |s, &v| s + v * v)).sqrt();

    let mut v = op.eigenvector(eigenvalues[0])?;
    // eigenvector has unit Euclidean norm; rescale to unit discrete L²
    let scale = T::one() / grid.h.sqrt();
    let dot = v.iter().zip(&q).fold(T::zero(), |s, (&a, &b)| s + a * b);
    let sign = if dot < T::zero() { -T::one() } else { T::one() };
    for x in &mut v {
        *x = *x * scale * sign;
    }
    let dist = (grid.h * v.iter().zip(&q).fold(T::zero(), |s, (&a, &b)| s + (a - b) * (a - b))).sqrt();

    Ok(SpectrumResult {
        a,
        h: grid.h,
        length: grid.length,
        eigenvalues,
        q_residual,
        ground_state_distance: dist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn a2_closed_form_second_derivative() {
        // Q = y² e^{-y²/8}: Q'' = (2 - 5y²/4 + y⁴/16) e^{-y²/8} and M_A Q = 0
        for &y in &[0.3f64, 1.0, 2.5, 7.0] {
            let e = (-y * y / 8.0).exp();
            let q = y * y * e;
            let qpp = (2.0 - 1.25 * y * y + y.powi(4) / 16.0) * e;
            let pot = y * y / 16.0 + 0.25 + 2.0 / (y * y) - 1.5;
            assert!((-qpp + pot * q).abs() < 1e-14);
            // centered finite difference agrees with the closed form
            let d = 1e-4;
            let f = |z: f64| z * z * (-z * z / 8.0).exp();
            let fd = (f(y + d) - 2.0 * f(y) + f(y - d)) / (d * d);
            assert!((fd - qpp).abs() < 1e-6);
        }
    }

    #[test]
    fn residual_second_order_for_integer_alpha() {
        let r1 = ma_residual(2.0f64, 0.01, 40.0).unwrap();
        let r2 = ma_residual(2.0f64, 0.005, 40.0).unwrap();
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        assert!(r2 < 1e-5);
    }

    #[test]
    fn interior_residual_second_order_for_irrational_alpha() {
        for a in [1.0f64, 4.0] {
            let r1 = ma_residual_from(a, 0.01, 40.0, 1.0).unwrap();
            let r2 = ma_residual_from(a, 0.005, 40.0, 1.0).unwrap();
            let ratio = r1 / r2;
            assert!((3.5..=4.5).contains(&ratio), "A={a} ratio {ratio}");
        }
    }

    #[test]
    fn spectrum_a2() {
        let s = ma_spectrum(2.0f64, 1.0 / 200.0, 40.0, 5).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-3);
        assert!((s.eigenvalues[1] - 1.0).abs() < 1e-2);
        for n in 1..5 {
            let gap = s.eigenvalues[n] - s.eigenvalues[n - 1];
            assert!((gap - 1.0).abs() < 1e-2, "gap {n}: {gap}");
        }
        assert!(s.ground_state_distance < 1e-2);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(ma_spectrum(2.0f64, 0.01, 40.0, 0).is_err());
        assert!(ma_spectrum(2.0f64, 0.01, 40.0, 11).is_err());
        assert!(ma_spectrum(2.0f64, 0.0, 40.0, 3).is_err());
        assert!(ma_residual(-1.0f64, 0.01, 40.0).is_err());
    }

    #[test]
    fn sturm_count_matches_diagonal_case() {
        let t = Tridiagonal { diag: vec![1.0f64, 2.0, 3.0, 4.0], off: 0.0 };
        assert_eq!(t.count_below(2.5), 2);
        assert_eq!(t.count_below(0.0), 0);
        assert!((t.eigenvalue(3, 1e-14).unwrap() - 4.0).abs() < 1e-12);
    }
}
