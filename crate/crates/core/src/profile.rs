//! Profile equations of the algebraic-delay regime `1 < r < 3`.
//!
//! The minus-root branch `phi' = gamma y/2 - sqrt(beta (Gamma - phi))` starts
//! from `phi(0) = theta`. Its critical value `Theta` is the largest `theta`
//! for which `phi` stays below `Gamma`; at `Theta` the curve touches `Gamma`
//! tangentially at `y_bar`. Past `y_bar` the plus-root branch
//! `Phi' = gamma y/2 + sqrt(beta (Gamma - Phi))` continues it as a `C^1` curve.
//!
//! Near `y = 0` the right-hand side behaves like `y^{(1-r)/2}`, so the minus
//! branch is integrated in `s = y^{(3-r)/2}`, where
//! `d phi/ds = (1/e) [gamma y^{(r+1)/2}/2 - sqrt(A + gamma² y^{r+1}/4 - beta phi y^{r-1})]`
//! with `e = (3-r)/2` is continuous up to `s = 0`.

use std::cell::Cell;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::ModelParams;
use crate::ode::{Control, Dopri5, Outcome, Tolerances};
use crate::scalar::{c, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    MinusRoot,
    PlusRoot,
}

#[derive(Debug, Clone)]
pub struct ProfileCurve<T> {
    pub y: Vec<T>,
    pub value: Vec<T>,
    pub derivative: Vec<T>,
    pub second: Vec<T>,
    pub branch: Vec<Branch>,
    /// Value at `y -> 0+`.
    pub theta: T,
}

impl<T: Real> ProfileCurve<T> {
    fn new(theta: T) -> Self {
        Self {
            y: Vec::new(),
            value: Vec::new(),
            derivative: Vec::new(),
            second: Vec::new(),
            branch: Vec::new(),
            theta,
        }
    }

    fn reverse(&mut self) {
        self.y.reverse();
        self.value.reverse();
        self.derivative.reverse();
        self.second.reverse();
        self.branch.reverse();
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `Gamma(y) - value(y)` at every sample.
    pub fn gaps(&self, params: &ModelParams<T>) -> Vec<T> {
        self.y
            .iter()
            .zip(&self.value)
            .map(|(&y, &v)| params.gamma_curve_raw(y) - v)
            .collect()
    }

    /// Largest scaled residual of `|v'|² - gamma y v' - (A y^{1-r} - beta v)`
    /// over samples with `y >= y_from`; each term is scaled by
    /// `1 + A y^{1-r} + |beta v| + gamma² y²`.
    pub fn quadratic_residual(&self, params: &ModelParams<T>, y_from: T) -> T {
        let mut worst = T::zero();
        for i in 0..self.len() {
            let (y, v, d) = (self.y[i], self.value[i], self.derivative[i]);
            if y < y_from {
                continue;
            }
            let forcing = params.a * y.powf(T::one() - params.r);
            let res = d * d - params.gamma * y * d - (forcing - params.beta * v);
            let scale = T::one() + forcing + (params.beta * v).abs() + params.gamma * params.gamma * y * y;
            worst = worst.max(res.abs() / scale);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaMethod {
    Terminal,
    Bisection,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThetaResult<T> {
    pub theta: T,
    /// `Theta / A^gamma`.
    pub theta_r: T,
    pub method: ThetaMethod,
    /// Cross-method disagreement when both methods ran.
    pub residual: Option<T>,
    pub ybar: T,
}

/// Tangency data at `y_bar`: `Gamma - phi ≈ kappa (y - y_bar)²` on both sides.
#[derive(Debug, Clone, Copy)]
pub struct Tangency<T> {
    pub y_bar: T,
    /// `Gamma''(y_bar) - gamma/2`.
    pub curvature_gap: T,
    /// `m = sqrt(kappa)`, positive root of `2m² + sqrt(beta) m - c = 0`.
    pub m: T,
    pub kappa: T,
}

pub fn tangency<T: Real>(params: &ModelParams<T>) -> Result<Tangency<T>> {
    params.require_subcritical()?;
    let yb = params.y_bar;
    let cg = params.gamma_curve_d2(yb) - params.gamma / c(2.0);
    if !(cg > T::zero()) {
        return invalid(format!("Gamma'' - gamma/2 = {cg} at y_bar is not positive"));
    }
    let sb = params.beta.sqrt();
    let m = (-sb + (params.beta + c::<T>(8.0) * cg).sqrt()) / c(4.0);
    Ok(Tangency { y_bar: yb, curvature_gap: cg, m, kappa: m * m })
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions<T> {
    /// Below this abscissa the endpoint series replaces integration.
    pub y_floor: T,
    pub tol: T,
    /// Half-width of the tangency series start, relative to `y_bar`.
    pub tangency_width: T,
}

impl<T: Real> ProfileOptions<T> {
    pub fn new(tol: T) -> Self {
        Self { y_floor: c(1e-12), tol, tangency_width: c(1e-4) }
    }
}

struct Minus<'a, T> {
    p: &'a ModelParams<T>,
    e: T,
}

impl<'a, T: Real> Minus<'a, T> {
    fn new(p: &'a ModelParams<T>) -> Self {
        Self { p, e: (c::<T>(3.0) - p.r) / c(2.0) }
    }

    fn y_of(&self, s: T) -> T {
        s.powf(T::one() / self.e)
    }

    fn s_of(&self, y: T) -> T {
        y.powf(self.e)
    }

    /// Radicand `beta (Gamma - phi) y^{r-1}` in the s-form.
    fn radicand(&self, y: T, phi: T) -> T {
        let p = self.p;
        let yr1 = y.powf(p.r - T::one());
        p.a + p.gamma * p.gamma * y * y * yr1 / c(4.0) - p.beta * phi * yr1
    }

    fn slope_scale(&self, y: T) -> T {
        // snap threshold for the radicand, relative to beta Gamma y^{r-1}
        let p = self.p;
        c::<T>(1e-14) * p.beta * p.gamma_curve_raw(y) * y.powf(p.r - T::one())
    }

    /// `d phi / ds` with the radicand clamped at 0; records the most negative
    /// clamped radicand seen.
    fn rhs_s(&self, s: T, phi: T, worst: &Cell<f64>) -> T {
        let p = self.p;
        let y = self.y_of(s);
        let mut rad = self.radicand(y, phi);
        if rad < T::zero() {
            let rel = (rad / self.slope_scale(y).max(T::min_positive_value())).to_f64_lossy();
            if rel < worst.get() {
                worst.set(rel);
            }
            rad = T::zero();
        }
        (p.gamma * y.powf((p.r + T::one()) / c(2.0)) / c(2.0) - rad.sqrt()) / self.e
    }

    /// `phi'(y)` on the minus branch.
    fn dphi_dy(&self, y: T, phi: T) -> T {
        let p = self.p;
        let z = (p.gamma_curve_raw(y) - phi).max(T::zero());
        p.gamma * y / c(2.0) - (p.beta * z).sqrt()
    }

    /// Series `phi ≈ theta - a s + b s^{p+1}/(p+1)` coefficients.
    fn series(&self, theta: T, s: T) -> T {
        let p = self.p;
        let a = p.a.sqrt() / self.e;
        let pow = c::<T>(2.0) * (p.r - T::one()) / (c::<T>(3.0) - p.r);
        let b = p.beta * theta / (c::<T>(2.0) * self.e * p.a.sqrt());
        theta - a * s + b * s.powf(pow + T::one()) / (pow + T::one())
    }

    fn theta_from(&self, phi: T, s: T) -> T {
        // invert the series with b evaluated at phi
        let p = self.p;
        let a = p.a.sqrt() / self.e;
        let pow = c::<T>(2.0) * (p.r - T::one()) / (c::<T>(3.0) - p.r);
        let b = p.beta * phi / (c::<T>(2.0) * self.e * p.a.sqrt());
        phi + a * s - b * s.powf(pow + T::one()) / (pow + T::one())
    }
}

fn second_derivative<T: Real>(params: &ModelParams<T>, tan: &Tangency<T>, y: T, v: T, d: T, branch: Branch) -> T {
    let z = params.gamma_curve_raw(y) - v;
    let half_gamma = params.gamma / c(2.0);
    let sb = params.beta.sqrt();
    if z <= c::<T>(1e-10) * params.gamma_curve_raw(y) {
        return half_gamma + sb * tan.m;
    }
    let ratio = (params.gamma_curve_d1(y) - d) / z.sqrt();
    match branch {
        Branch::MinusRoot => half_gamma - sb * ratio / c(2.0),
        Branch::PlusRoot => half_gamma + sb * ratio / c(2.0),
    }
}

fn check_tol<T: Real>(tol: T) -> Result<()> {
    if !(tol > T::zero() && tol < c(1e-3)) {
        return invalid(format!("tolerance must lie in (0, 1e-3), got {tol}"));
    }
    Ok(())
}

/// Critical curve on `(0, y_bar]` by backward integration from the tangency
/// point; `Theta` is its value at `y -> 0+`.
pub fn solve_phi_terminal<T: Real>(
    params: &ModelParams<T>,
    opts: &ProfileOptions<T>,
) -> Result<(ProfileCurve<T>, ThetaResult<T>)> {
    check_tol(opts.tol)?;
    let tan = tangency(params)?;
    let yb = tan.y_bar;
    if !(opts.y_floor > T::zero() && opts.y_floor < yb * c(1e-2)) {
        return invalid("y_floor must lie in (0, y_bar/100)");
    }
    let mm = Minus::new(params);
    let delta = opts.tangency_width * yb;
    let y0 = yb - delta;
    let phi0 = params.gamma_curve_raw(y0) - tan.kappa * delta * delta;
    let s0 = mm.s_of(y0);
    let s_floor = mm.s_of(opts.y_floor);

    let worst = Cell::new(0.0f64);
    let mut samples: Vec<(T, T)> = vec![(yb, params.gamma_curve_raw(yb)), (y0, phi0)];
    let tol = Tolerances { rtol: opts.tol, atol: opts.tol * c(1e-2) };
    let sol = Dopri5::new(tol).integrate(
        |s, st: &[T; 1]| [mm.rhs_s(s, st[0], &worst)],
        s0,
        [phi0],
        s_floor,
        |_| (s0 - s_floor) / c(50.0),
        |s, st| {
            samples.push((mm.y_of(s), st[0]));
            Control::Continue
        },
    )?;
    // trial stages may clamp near the tangency where the gap is tiny; the
    // accepted samples are checked against the barrier below
    let theta = mm.theta_from(sol.y[0], s_floor);

    let mut curve = ProfileCurve::new(theta);
    for (i, &(y, v)) in samples.iter().enumerate() {
        let gap = params.gamma_curve_raw(y) - v;
        if i > 0 && gap < -c::<T>(1e-12) * params.gamma_curve_raw(y) {
            return Err(Error::BranchViolation { y: y.to_f64_lossy(), gap: gap.to_f64_lossy() });
        }
        let d = if i == 0 { params.gamma * yb / c(2.0) } else { mm.dphi_dy(y, v) };
        curve.y.push(y);
        curve.value.push(v);
        curve.derivative.push(d);
        curve.second.push(second_derivative(params, &tan, y, v, d, Branch::MinusRoot));
        curve.branch.push(Branch::MinusRoot);
    }
    curve.reverse();

    let result = ThetaResult {
        theta,
        theta_r: theta / params.a.powf(params.gamma),
        method: ThetaMethod::Terminal,
        residual: None,
        ybar: yb,
    };
    Ok((curve, result))
}

/// Result of a forward integration from `phi(0) = theta`.
#[derive(Debug, Clone)]
pub enum IvpOutcome<T> {
    /// `phi < Gamma` on `(0, y_max]`.
    Exists(ProfileCurve<T>),
    /// `phi` met `Gamma` at the tangency abscissa.
    Touched { y: T },
    /// `phi` crossed `Gamma` at `y < y_bar`.
    Crossed { y: T },
}

impl<T> IvpOutcome<T> {
    pub fn exists(&self) -> bool {
        matches!(self, IvpOutcome::Exists(_))
    }
}

/// Forward integration of the minus branch from the endpoint series.
pub fn solve_phi_ivp<T: Real>(theta: T, params: &ModelParams<T>, y_max: T, tol: T) -> Result<IvpOutcome<T>> {
    solve_phi_ivp_with(theta, params, y_max, &ProfileOptions::new(tol), true)
}

fn solve_phi_ivp_with<T: Real>(
    theta: T,
    params: &ModelParams<T>,
    y_max: T,
    opts: &ProfileOptions<T>,
    keep_samples: bool,
) -> Result<IvpOutcome<T>> {
    check_tol(opts.tol)?;
    if !theta.is_finite() {
        return invalid("theta must be finite");
    }
    let tan = tangency(params)?;
    let yb = tan.y_bar;
    if !(y_max >= yb) {
        return invalid(format!("y_max = {y_max} lies below y_bar = {yb}"));
    }
    let mm = Minus::new(params);
    let s_floor = mm.s_of(opts.y_floor);
    let s_end = mm.s_of(y_max);
    let phi0 = mm.series(theta, s_floor);

    let worst = Cell::new(0.0f64);
    let mut curve = ProfileCurve::new(theta);
    let mut hit: Option<T> = None;
    let mut non_finite = false;
    let tol = Tolerances { rtol: opts.tol, atol: opts.tol * c(1e-2) };
    let push = |curve: &mut ProfileCurve<T>, y: T, v: T| {
        let d = mm.dphi_dy(y, v);
        curve.y.push(y);
        curve.value.push(v);
        curve.derivative.push(d);
        curve.second.push(second_derivative(params, &tan, y, v, d, Branch::MinusRoot));
        curve.branch.push(Branch::MinusRoot);
    };
    if keep_samples {
        push(&mut curve, opts.y_floor, phi0);
    }
    let sol = Dopri5::new(tol).integrate(
        |s, st: &[T; 1]| [mm.rhs_s(s, st[0], &worst)],
        s_floor,
        [phi0],
        s_end,
        |_| (s_end - s_floor) / c(50.0),
        |s, st| {
            let y = mm.y_of(s);
            if !st[0].is_finite() {
                non_finite = true;
                return Control::Stop;
            }
            let gap = params.gamma_curve_raw(y) - st[0];
            if gap <= T::zero() || worst.get() < -1.0 {
                hit = Some(y);
                return Control::Stop;
            }
            if keep_samples {
                push(&mut curve, y, st[0]);
            }
            Control::Continue
        },
    )?;
    if non_finite {
        return Err(Error::Numerical("non-finite profile state".into()));
    }
    if let Some(y) = hit {
        // a hit within one tangency width of y_bar is a touch
        let near = (y - yb).abs() <= opts.tangency_width * yb * c(10.0);
        return Ok(if near { IvpOutcome::Touched { y } } else { IvpOutcome::Crossed { y } });
    }
    debug_assert_eq!(sol.outcome, Outcome::Reached);
    Ok(IvpOutcome::Exists(curve))
}

/// `Theta` by bisection on the crossing predicate.
pub fn compute_theta_bisection<T: Real>(params: &ModelParams<T>, tol: T) -> Result<ThetaResult<T>> {
    if !(tol >= c(1e-10)) {
        return invalid(format!("bisection tolerance must be >= 1e-10, got {tol}"));
    }
    let tan = tangency(params)?;
    let yb = tan.y_bar;
    // Past y_bar, Gamma - phi is increasing, so y_max slightly above y_bar decides.
    let y_max = yb * c(1.01);
    let opts = ProfileOptions::new(c::<T>(1e-13));
    let crosses = |theta: T| -> Result<bool> {
        Ok(!solve_phi_ivp_with(theta, params, y_max, &opts, false)?.exists())
    };
    let mut lo = T::zero();
    if crosses(lo)? {
        return Err(Error::Numerical("theta = 0 already crosses Gamma; predicate not monotone".into()));
    }
    let mut hi = T::one();
    let mut grow = 0;
    while !crosses(hi)? {
        lo = hi;
        hi = hi * c(2.0);
        grow += 1;
        if grow > 60 {
            return Err(Error::Numerical("no crossing found while growing theta".into()));
        }
    }
    while hi - lo > tol * (T::one() + lo) {
        let mid = (lo + hi) / c(2.0);
        if crosses(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if crosses(lo)? || !crosses(hi)? {
        return Err(Error::Numerical("crossing predicate not monotone across the bracket".into()));
    }
    let theta = (lo + hi) / c(2.0);
    Ok(ThetaResult {
        theta,
        theta_r: theta / params.a.powf(params.gamma),
        method: ThetaMethod::Bisection,
        residual: None,
        ybar: yb,
    })
}

/// Global curve: the critical minus branch on `(0, y_bar]` followed by the
/// plus branch on `(y_bar, y_max]`.
pub fn extend_phi<T: Real>(
    params: &ModelParams<T>,
    critical: &ProfileCurve<T>,
    y_max: T,
    tol: T,
) -> Result<ProfileCurve<T>> {
    check_tol(tol)?;
    let tan = tangency(params)?;
    let yb = tan.y_bar;
    if !(y_max > yb) {
        return invalid("y_max must exceed y_bar");
    }
    let last = *critical.y.last().ok_or_else(|| Error::Invalid("empty critical curve".into()))?;
    if (last - yb).abs() > c::<T>(1e-12) * yb {
        return invalid("critical curve must end at y_bar");
    }
    let mut out = critical.clone();
    let delta = c::<T>(1e-4) * yb;
    let y0 = yb + delta;
    let phi0 = params.gamma_curve_raw(y0) - tan.kappa * delta * delta;
    let plus = |y: T, v: T| -> (T, T) {
        let z = params.gamma_curve_raw(y) - v;
        (params.gamma * y / c(2.0) + (params.beta * z.max(T::zero())).sqrt(), z)
    };
    let push = |out: &mut ProfileCurve<T>, y: T, v: T| {
        let (d, _) = plus(y, v);
        out.y.push(y);
        out.value.push(v);
        out.derivative.push(d);
        out.second.push(second_derivative(params, &tan, y, v, d, Branch::PlusRoot));
        out.branch.push(Branch::PlusRoot);
    };
    push(&mut out, y0, phi0);
    let mut violation: Option<(T, T)> = None;
    let tol = Tolerances { rtol: tol, atol: tol * c(1e-2) };
    let h_cap = (y_max - y0) / c(200.0);
    Dopri5::new(tol).integrate(
        |y, st: &[T; 1]| [plus(y, st[0]).0],
        y0,
        [phi0],
        y_max,
        |_| h_cap,
        |y, st| {
            let z = params.gamma_curve_raw(y) - st[0];
            if z < -c::<T>(1e-14) * params.gamma_curve_raw(y) {
                violation = Some((y, z));
                return Control::Stop;
            }
            push(&mut out, y, st[0]);
            Control::Continue
        },
    )?;
    if let Some((y, gap)) = violation {
        return Err(Error::BranchViolation { y: y.to_f64_lossy(), gap: gap.to_f64_lossy() });
    }
    Ok(out)
}

/// One row of a `Theta` sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub a: f64,
    pub theta: Option<f64>,
    pub theta_r: Option<f64>,
    pub ybar: Option<f64>,
    pub method_residual: Option<f64>,
    pub error: Option<String>,
}

/// Both methods at one `(r, A)`; the reported `Theta` is the terminal value.
pub fn theta_point(r: f64, a: f64, tol: f64) -> SweepRow {
    let run = || -> Result<ThetaResult<f64>> {
        let params = ModelParams::new(r, a)?;
        let (_, term) = solve_phi_terminal(&params, &ProfileOptions::new(tol.min(1e-11)))?;
        let bis = compute_theta_bisection(&params, tol.max(1e-10))?;
        let diff = (term.theta - bis.theta).abs() / (1.0 + term.theta);
        Ok(ThetaResult { residual: Some(diff), ..term })
    };
    match run() {
        Ok(t) => SweepRow {
            r,
            a,
            theta: Some(t.theta),
            theta_r: Some(t.theta_r),
            ybar: Some(t.ybar),
            method_residual: t.residual,
            error: None,
        },
        Err(e) => SweepRow {
            r,
            a,
            theta: None,
            theta_r: None,
            ybar: None,
            method_residual: None,
            error: Some(e.to_string()),
        },
    }
}

/// Sweep over `r_grid` at fixed `A`; rows sorted by `r`. `jobs > 1` runs points
/// on a thread pool; the output does not depend on `jobs`.
pub fn theta_sweep(r_grid: &[f64], a: f64, tol: f64, jobs: usize) -> Result<Vec<SweepRow>> {
    if r_grid.is_empty() {
        return invalid("empty r grid");
    }
    if let Some(bad) = r_grid.iter().find(|r| !(**r > 1.0 && **r < 3.0)) {
        return invalid(format!("grid point r = {bad} outside (1, 3)"));
    }
    let mut grid = r_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let rows = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Numerical(e.to_string()))?;
        pool.install(|| grid.par_iter().map(|&r| theta_point(r, a, tol)).collect())
    } else {
        grid.iter().map(|&r| theta_point(r, a, tol)).collect()
    };
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(r: f64, a: f64) -> ModelParams<f64> {
        ModelParams::new(r, a).unwrap()
    }

    #[test]
    fn tangency_curvature_positive() {
        for r in [1.1, 1.5, 2.0, 2.5, 2.9] {
            let t = tangency(&params(r, 1.0)).unwrap();
            assert!(t.curvature_gap > 0.0);
            let resid = 2.0 * t.m * t.m + params(r, 1.0).beta.sqrt() * t.m - t.curvature_gap;
            assert!(resid.abs() < 1e-13);
        }
        assert!(tangency(&params(3.0, 1.0)).is_err());
    }

    #[test]
    fn terminal_curve_properties() {
        let p = params(2.0, 1.0);
        let (curve, th) = solve_phi_terminal(&p, &ProfileOptions::new(1e-11)).unwrap();
        assert!(th.theta > 0.0 && th.theta.is_finite());
        assert!(curve.y.windows(2).all(|w| w[1] > w[0]));
        // derivative at the tangency equals gamma y_bar / 2
        let last = curve.len() - 1;
        assert!((curve.derivative[last] - p.gamma * p.y_bar / 2.0).abs() < 1e-12);
        // strictly below Gamma away from y_bar
        let gaps = curve.gaps(&p);
        for (i, g) in gaps.iter().enumerate().take(last - 1) {
            assert!(*g > 0.0, "gap {g} at y = {}", curve.y[i]);
        }
        // Gamma - phi is smallest at the tangency end
        let imin = gaps.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(imin >= last - 1);
        assert!(curve.quadratic_residual(&p, 2e-12) < 1e-8);
    }

    #[test]
    fn endpoint_coefficient() {
        // (Theta - phi(y)) / y^{(3-r)/2} -> 2 sqrt(A)/(3-r)
        let p = params(2.0, 1.0);
        let (curve, th) = solve_phi_terminal(&p, &ProfileOptions::new(1e-11)).unwrap();
        let i = curve.y.iter().position(|&y| y > 1e-6).unwrap();
        let ratio = (th.theta - curve.value[i]) / curve.y[i].sqrt();
        assert!((ratio - 2.0).abs() < 1e-3, "ratio {ratio}");
    }

    #[test]
    fn ivp_theta_zero_exists_and_decreases() {
        let p = params(2.0, 1.0);
        match solve_phi_ivp(0.0, &p, 10.0, 1e-10).unwrap() {
            IvpOutcome::Exists(c) => {
                assert!(c.value.windows(2).take(10).all(|w| w[1] < w[0]));
                assert!(*c.value.last().unwrap() < 0.0 || c.value.iter().any(|v| *v < 0.0));
            }
            other => panic!("theta = 0 should exist globally: {other:?}"),
        }
    }

    #[test]
    fn ivp_crosses_above_theta() {
        let p = params(2.0, 1.0);
        let (_, th) = solve_phi_terminal(&p, &ProfileOptions::new(1e-11)).unwrap();
        let out = solve_phi_ivp(th.theta + 0.1, &p, 10.0, 1e-10).unwrap();
        assert!(matches!(out, IvpOutcome::Crossed { .. }), "{out:?}");
        match solve_phi_ivp(th.theta - 1e-4, &p, 10.0, 1e-10).unwrap() {
            IvpOutcome::Exists(c) => {
                let gaps = c.gaps(&p);
                let g = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(g > 0.0 && g < 0.05, "min gap {g}");
            }
            other => panic!("expected global curve: {other:?}"),
        }
        assert!(solve_phi_ivp(0.0, &p, 1.0, 1e-10).is_err());
    }

    #[test]
    fn bisection_agrees_with_terminal() {
        let p = params(2.0, 1.0);
        let (_, t) = solve_phi_terminal(&p, &ProfileOptions::new(1e-11)).unwrap();
        let b = compute_theta_bisection(&p, 1e-10).unwrap();
        assert!((t.theta - b.theta).abs() <= 1e-6 * (1.0 + t.theta), "{} vs {}", t.theta, b.theta);
    }

    #[test]
    fn phi_extension_is_c1_and_convex() {
        let p = params(2.0, 1.0);
        let (crit, _) = solve_phi_terminal(&p, &ProfileOptions::new(1e-11)).unwrap();
        let glob = extend_phi(&p, &crit, 10.0, 1e-11).unwrap();
        let k = crit.len();
        assert_eq!(glob.branch[k], Branch::PlusRoot);
        assert!((glob.derivative[k] - glob.derivative[k - 1]).abs() < 1e-3);
        assert!(glob.second.iter().all(|v| *v >= -1e-8));
        assert_eq!(*glob.y.last().unwrap(), 10.0);
        let v10 = *glob.value.last().unwrap();
        assert!(v10 >= 25.0 && v10 <= 25.0 + 3f64.cbrt(), "Phi(10) = {v10}");
    }

    #[test]
    fn sweep_single_point_and_validation() {
        let rows = theta_sweep(&[2.0], 1.0, 1e-10, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].theta.is_some());
        assert!(theta_sweep(&[], 1.0, 1e-10, 1).is_err());
        assert!(theta_sweep(&[3.5], 1.0, 1e-10, 1).is_err());
    }
}
