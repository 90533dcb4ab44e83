use logkpp::analysis::{logfit, FitModel};
use logkpp::model::ModelParams;
use logkpp::pde::{
    fit_delay, front_position, init_field, run_fronts, FrontConfig, LogKpp, NoReaction, Reaction, Scheme, Stepper,
    WindowPolicy,
};
use logkpp::profile::{extend_phi, solve_phi_terminal, ProfileOptions};
use logkpp::wave::{shoot_wave, WaveOptions};
use logkpp::Error;

fn params(r: f64, a: f64) -> ModelParams<f64> {
    ModelParams::new(r, a).unwrap()
}

#[test]
fn constants_in_single_precision() {
    let p = ModelParams::<f32>::new(2.0, 1.0).unwrap();
    assert!((p.gamma - 2.0 / 3.0).abs() < 1e-6);
    assert!(p.reaction_raw(1.0).abs() < 1e-6);
    let ts: Vec<f32> = (1..=20).map(|k| k as f32).collect();
    let ds: Vec<f32> = ts.iter().map(|t| 1.5 * t.ln() + 0.3).collect();
    let f = logfit(&ts, &ds, (1.0, 20.0)).unwrap();
    assert_eq!(f.model, FitModel::Log);
    assert!((f.slope - 1.5).abs() < 1e-4);
}

#[test]
fn waves_are_monotone_and_pinned() {
    for (r, a) in [(5.0, 1.0), (3.0, 2.0), (2.0, 1.0), (1.5, 0.5)] {
        let w = shoot_wave(&params(r, a), &WaveOptions::new(200.0, 1e-10)).unwrap();
        assert!(w.is_monotone(), "r = {r}");
        let i = w.xi.iter().position(|&x| x == 0.0).expect("sample at 0");
        assert!((w.u[i].unwrap() - 0.5).abs() < 1e-9);
    }
}

#[test]
fn phi_bounds_far_out() {
    let p = params(2.0, 1.0);
    let (crit, theta) = solve_phi_terminal(&p, &ProfileOptions::new(1e-11)).unwrap();
    assert!(theta.theta > 0.0 && theta.theta.is_finite());
    let g = extend_phi(&p, &crit, 40.0, 1e-11).unwrap();
    let cst = p.a * p.y_bar.powf(1.0 - p.r) / p.beta;
    for i in 0..g.len() {
        let y = g.y[i];
        if y >= p.y_bar {
            assert!(g.value[i] >= y * y / 4.0);
            assert!(g.second[i] >= -1e-8);
        }
        if y >= 3.0 * p.y_bar {
            assert!(g.value[i] <= y * y / 4.0 + cst, "y = {y}");
        }
    }
}

fn run_to<R: Reaction<f64>>(reaction: &R, scheme: Scheme, dx: f64, dt: f64, t: f64) -> Vec<f64> {
    let mut f = init_field((-60.0, 60.0), dx).unwrap();
    let mut st = Stepper::new(scheme, dx, dt, f.len()).unwrap();
    for _ in 0..(t / dt).round() as usize {
        st.step(&mut f, reaction).unwrap();
    }
    assert!(st.stats.max_overshoot <= 1e-6);
    f.values
}

#[test]
fn dominates_heat_flow() {
    let dx = 0.1;
    let rx = LogKpp::new(params(2.0, 1.0));
    for scheme in [Scheme::ExplicitHeun, Scheme::SplitCrankNicolson] {
        let dt = if scheme == Scheme::ExplicitHeun { 0.4 * dx * dx } else { dx };
        let u = run_to(&rx, scheme, dx, dt, 5.0);
        let h = run_to(&NoReaction, scheme, dx, dt, 5.0);
        assert!(u.iter().zip(&h).all(|(a, b)| *a >= b - 2.0 * dx), "{scheme:?}");
        assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

fn final_position(dx: f64, t_end: f64, length: f64) -> f64 {
    let mut cfg = FrontConfig::new(params(5.0, 1.0).regime(), t_end, dx);
    cfg.window = WindowPolicy::with_length(length);
    let run = run_fronts(&LogKpp::new(params(5.0, 1.0)), &[0.5], &cfg).unwrap();
    *run.traces[0].positions.last().unwrap()
}

#[test]
fn grid_convergence_trend() {
    let x: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&dx| final_position(dx, 100.0, 300.0)).collect();
    let (d1, d2) = ((x[1] - x[0]).abs(), (x[2] - x[1]).abs());
    assert!(d2 <= 4.0 * d1, "changes {d1:e}, {d2:e}");
    assert!(d2 < d1);
}

#[test]
fn window_invariance() {
    let a = final_position(0.1, 200.0, 400.0);
    let b = final_position(0.1, 200.0, 800.0);
    assert!((a - b).abs() < 0.1, "{a} vs {b}");
}

#[test]
fn level_choice_shifts_only_intercept() {
    let p = params(5.0, 1.0);
    let cfg = FrontConfig::new(p.regime(), 1000.0, 0.1);
    let run = run_fronts(&LogKpp::new(p), &[0.3, 0.7], &cfg).unwrap();
    let a: Vec<f64> = run.traces.iter().map(|t| fit_delay(t, &p).unwrap().slope).collect();
    assert!((a[0] - a[1]).abs() < 0.05, "{a:?}");
    let tr = &run.traces[0];
    assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    assert!(tr.positions.iter().all(|x| x.is_finite()));
    // the lower level sits ahead of the higher one
    assert!(run.traces[0].positions.last() > run.traces[1].positions.last());
}

#[test]
fn tight_window_is_reported() {
    let mut cfg = FrontConfig::new(params(2.0, 1.0).regime(), 60.0, 0.1);
    cfg.window = WindowPolicy::with_length(30.0);
    let err = run_fronts(&LogKpp::new(params(2.0, 1.0)), &[0.5], &cfg).unwrap_err();
    assert!(matches!(err, Error::SchemeViolation(_)), "{err}");
}

#[test]
fn front_position_readout_on_run() {
    let p = params(3.0, 1.0);
    let cfg = FrontConfig::new(p.regime(), 20.0, 0.1);
    let run = run_fronts(&LogKpp::new(p), &[0.5], &cfg).unwrap();
    let x = front_position(&run.final_field, 0.5).unwrap();
    assert_eq!(x, *run.traces[0].positions.last().unwrap());
    assert!(x > 20.0 && x < 40.0);
}

#[test]
fn theta_golden_value_and_refinement() {
    use logkpp::profile::compute_theta_bisection;
    let p = params(2.0, 1.0);
    // frozen after agreement of the terminal and bisection solvers
    let (_, coarse) = solve_phi_terminal(&p, &ProfileOptions::new(1e-9)).unwrap();
    let (_, fine) = solve_phi_terminal(&p, &ProfileOptions::new(5e-10)).unwrap();
    assert!((coarse.theta - fine.theta).abs() < 1e-7 * fine.theta);
    assert!((fine.theta - 4.053851535).abs() < 1e-8, "{}", fine.theta);
    let b = compute_theta_bisection(&p, 1e-10).unwrap();
    assert!((b.theta - 4.053851535).abs() < 1e-8);
}

#[test]
fn wave_coordinates_consistent() {
    for (r, a) in [(5.0, 1.0), (2.0, 1.0)] {
        let p = params(r, a);
        let w = shoot_wave(&p, &WaveOptions::new(500.0, 1e-10)).unwrap();
        for i in 0..w.len() {
            if let (Some(u), Some(q)) = (w.u[i], w.q[i]) {
                if u > 0.0 && u < 1.0 {
                    let x = w.xi[i];
                    assert!((q - p.nu * x.exp() * u).abs() <= 1e-9 * q);
                    assert!((w.w[i] - (x.exp() * u).ln()).abs() <= 1e-9 * (1.0 + w.w[i].abs()));
                }
            }
        }
        // Q increases wherever it is representable
        let qs: Vec<f64> = w.q.iter().flatten().cloned().collect();
        assert!(qs.windows(2).all(|s| s[1] > s[0]));
    }
}

#[test]
fn tail_statistic_stable_under_refinement() {
    use logkpp::wave::extract_tail_law;
    for (r, a, xi_end) in [(5.0, 1.0, 1e5), (3.0, 2.0, 1e5), (2.0, 1.0, 1e6)] {
        let p = params(r, a);
        let s = |tol: f64| extract_tail_law(&shoot_wave(&p, &WaveOptions::new(xi_end, tol)).unwrap(), &p).unwrap().statistic;
        let (a1, a2) = (s(1e-9), s(5e-10));
        assert!(((a1 - a2) / a2).abs() < 1e-3, "r = {r}: {a1} vs {a2}");
    }
}

#[test]
fn backward_matching_reproduces_tail() {
    use logkpp::wave::{backward_matching_error, extract_tail_law};
    for (r, a, xi_end) in [(5.0, 1.0, 1e5), (2.0, 1.0, 1e6)] {
        let p = params(r, a);
        let w = shoot_wave(&p, &WaveOptions::new(xi_end, 1e-10)).unwrap();
        let fit = extract_tail_law(&w, &p).unwrap();
        let err = backward_matching_error(&w, &p, &fit, 10.0, 1e-10).unwrap();
        assert!(err < 0.01, "r = {r}: {err}");
    }
}
