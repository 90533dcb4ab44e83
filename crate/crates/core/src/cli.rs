//! Command-line driver. Every subcommand writes its outputs into `--out`,
//! then a `manifest.json` listing them.
//!
//! Exit status is 0 on success, 1 on usage or validation errors and 2 on
//! numerical failure; failures print one line `E_CODE: message` on stderr.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::analysis::ma_spectrum;
use crate::error::{Error, Result};
use crate::io::{self, fmt_num, ParamStrings, RunManifest, Table};
use crate::model::{ModelParams, Regime};
use crate::pde::{fit_delay, run_fronts, FrontConfig, LogKpp};
use crate::profile::{theta_point, theta_sweep, SweepRow};
use crate::wave::{extract_tail_law, shoot_wave, WaveOptions};

#[derive(Debug, Parser)]
#[command(name = "logkpp", version, about = "Fronts, waves and delay constants for log-KPP")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Traveling wave and its tail law.
    Wave(WaveArgs),
    /// Delay constant Theta over a grid of r.
    Theta(ThetaArgs),
    /// Cauchy problem from the step datum, front trace and delay fit.
    Front(FrontArgs),
    /// Lowest eigenvalues of M_A and the residual of its ground state.
    Spectrum(SpectrumArgs),
    /// Gaussian envelope constants of the solution for t in [1, 20].
    Heat(HeatArgs),
    /// Batch of runs from a JSON config.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct WaveArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long = "A")]
    pub a: f64,
    /// End of the profile; defaults to 1e5 for r >= 3 and 1e6 otherwise.
    #[arg(long)]
    pub xi_end: Option<f64>,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ThetaArgs {
    /// `lo:hi:step`, a comma list, or a single value.
    #[arg(long)]
    pub r_grid: String,
    #[arg(long = "A")]
    pub a: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Split,
    Explicit,
}

#[derive(Debug, Args)]
pub struct FrontArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long = "A")]
    pub a: f64,
    #[arg(long)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.1)]
    pub dx: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Split)]
    pub scheme: SchemeArg,
    /// Time step; defaults to dx (split) or 0.4 dx² (explicit).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long = "A")]
    pub a: f64,
    #[arg(long, default_value_t = 0.005)]
    pub h: f64,
    #[arg(long = "L", default_value_t = 40.0)]
    pub length: f64,
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HeatArgs {
    #[arg(long)]
    pub r: f64,
    #[arg(long = "A")]
    pub a: f64,
    #[arg(long, default_value_t = 0.05)]
    pub dx: f64,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10")]
    pub times: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (including the program name), runs, and returns the exit
/// status.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("E_USAGE: {first}");
            return 1;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}: {}", e.code(), one_line(&e.to_string()));
            e.exit_code()
        }
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Wave(a) => cmd_wave(&a),
        Command::Theta(a) => cmd_theta(&a),
        Command::Front(a) => cmd_front(&a),
        Command::Spectrum(a) => cmd_spectrum(&a),
        Command::Heat(a) => cmd_heat(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

fn default_xi_end(params: &ModelParams<f64>) -> f64 {
    match params.regime() {
        Regime::Algebraic => 1e6,
        _ => 1e5,
    }
}

fn cmd_wave(args: &WaveArgs) -> Result<()> {
    let params = ModelParams::new(args.r, args.a)?;
    let xi_end = args.xi_end.unwrap_or_else(|| default_xi_end(&params));
    if !(xi_end > 1.0) || !(args.tol > 0.0) {
        return Err(Error::Invalid(format!("need xi_end > 1 and tol > 0, got {xi_end}, {}", args.tol)));
    }
    io::ensure_dir(&args.out)?;
    let mut m = RunManifest::start("wave");
    m.params = Some(ParamStrings::from(&params));
    m.settings = json!({ "xi_end": fmt_num(xi_end) });
    m.tolerances = json!({ "tol": fmt_num(args.tol) });

    let wave = shoot_wave(&params, &WaveOptions::new(xi_end, args.tol))?;
    io::wave_table(&wave).write(&args.out.join("wave.csv"))?;
    m.outputs.push("wave.csv".into());
    m.settings["wave"] = serde_json::to_value(&wave.meta)?;

    match extract_tail_law(&wave, &params) {
        Ok(fit) => {
            io::write_json(&args.out.join("tailfit.json"), &fit)?;
            m.outputs.push("tailfit.json".into());
            m.results = json!({
                "regime": fit.regime.label(),
                "statistic": fmt_num(fit.statistic),
                "flatness": fmt_num(fit.flatness),
            });
            println!("regime {} statistic {} flatness {}", fit.regime.label(), fmt_num(fit.statistic), fmt_num(fit.flatness));
            m.finish(&args.out)?;
            Ok(())
        }
        Err(e) => {
            m.failures.push(e.to_string());
            m.finish(&args.out)?;
            Err(e)
        }
    }
}

/// Parses `lo:hi:step`, `a,b,c` or a single value.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |what: &str| Error::Invalid(format!("malformed grid '{spec}': {what}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(s));
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(bad("empty"));
    }
    let grid = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected lo:hi:step"));
        }
        let (lo, hi, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(bad("need lo <= hi and step > 0"));
        }
        let n = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        // rounding keeps 1.1 + 2 * 0.1 printed as 1.3
        (0..n).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad("no finite points"));
    }
    Ok(grid)
}

fn cmd_theta(args: &ThetaArgs) -> Result<()> {
    let grid = parse_grid(&args.r_grid)?;
    if args.jobs == 0 || !(args.tol > 0.0) {
        return Err(Error::Invalid("jobs must be >= 1 and tol > 0".into()));
    }
    // validates A and the grid range before any output is written
    ModelParams::new(2.0, args.a)?;
    io::ensure_dir(&args.out)?;
    let mut m = RunManifest::start("theta");
    let rows = theta_sweep(&grid, args.a, args.tol, args.jobs)?;
    m.settings = json!({
        "r_grid": grid.iter().map(|r| fmt_num(*r)).collect::<Vec<_>>(),
        "A": fmt_num(args.a),
        "jobs": args.jobs,
    });
    m.tolerances = json!({ "tol": fmt_num(args.tol) });
    finish_theta(rows, m, &args.out)
}

fn finish_theta(rows: Vec<SweepRow>, mut m: RunManifest, out: &Path) -> Result<()> {
    io::theta_table(&rows).write(&out.join("theta.csv"))?;
    m.outputs.push("theta.csv".into());
    let ok = rows.iter().filter(|r| r.error.is_none()).count();
    for r in rows.iter().filter(|r| r.error.is_some()) {
        m.failures.push(format!("r = {}, A = {}: {}", r.r, r.a, r.error.as_deref().unwrap_or("")));
    }
    m.results = json!({ "points": rows.len(), "succeeded": ok });
    let total = rows.len();
    m.finish(out)?;
    if ok == 0 {
        return Err(Error::Numerical(format!("all {total} grid points failed")));
    }
    Ok(())
}

fn front_config(params: &ModelParams<f64>, t_end: f64, dx: f64, scheme: SchemeArg, dt: Option<f64>) -> FrontConfig {
    let mut cfg = FrontConfig::new(params.regime(), t_end, dx);
    if let SchemeArg::Explicit = scheme {
        cfg = cfg.explicit();
    }
    if let Some(dt) = dt {
        cfg.dt = dt;
    }
    cfg
}

fn cmd_front(args: &FrontArgs) -> Result<()> {
    let params = ModelParams::new(args.r, args.a)?;
    if !(args.dx > 0.0) || !(args.t_end >= 1.0) || !(args.lambda > 0.0 && args.lambda < 1.0) {
        return Err(Error::Invalid(format!(
            "need dx > 0, t_end >= 1, lambda in (0, 1); got dx = {}, t_end = {}, lambda = {}",
            args.dx, args.t_end, args.lambda
        )));
    }
    let cfg = front_config(&params, args.t_end, args.dx, args.scheme, args.dt);
    io::ensure_dir(&args.out)?;
    let mut m = RunManifest::start("front");
    m.params = Some(ParamStrings::from(&params));
    m.settings = json!({
        "t_end": fmt_num(cfg.t_end),
        "dx": fmt_num(cfg.dx),
        "dt": fmt_num(cfg.dt),
        "lambda": fmt_num(args.lambda),
        "scheme": cfg.scheme,
        "window": cfg.window,
        "first_sample": fmt_num(cfg.first_sample),
        "sample_ratio": fmt_num(cfg.sample_ratio),
    });
    let run = match run_fronts(&LogKpp::new(params), &[args.lambda], &cfg) {
        Ok(run) => run,
        Err(e) => {
            m.failures.push(e.to_string());
            m.finish(&args.out)?;
            return Err(e);
        }
    };
    let trace = &run.traces[0];
    io::trace_table(trace).write(&args.out.join("trace.csv"))?;
    m.outputs.push("trace.csv".into());
    if run.stats.warnings > 0 {
        m.warnings.push(format!(
            "{} steps overshot [0, 1] by more than 1e-6 (max {:e})",
            run.stats.warnings, run.stats.max_overshoot
        ));
    }
    let fit = fit_delay(trace, &params);
    let fit_json = match &fit {
        Ok(f) => json!({
            "model": f.model,
            "coefficient": fmt_num(f.slope),
            "coefficient_stderr": fmt_num(f.slope_stderr),
            "intercept": fmt_num(f.intercept),
            "window": [fmt_num(f.window.0), fmt_num(f.window.1)],
            "points": f.points,
            "rms": fmt_num(f.rms),
            "reference_speed": fmt_num(trace.speed),
        }),
        Err(e) => {
            m.warnings.push(format!("no delay fit: {e}"));
            json!({ "error": e.to_string(), "reference_speed": fmt_num(trace.speed) })
        }
    };
    io::write_json(&args.out.join("delayfit.json"), &fit_json)?;
    m.outputs.push("delayfit.json".into());
    m.results = json!({
        "delay_fit": fit_json,
        "steps": run.stats.steps,
        "max_overshoot": fmt_num(run.stats.max_overshoot),
        "window_shift_cells": run.shifts,
    });
    if let Ok(f) = fit {
        println!("coefficient {} intercept {} rms {}", fmt_num(f.slope), fmt_num(f.intercept), fmt_num(f.rms));
    }
    m.finish(&args.out)?;
    Ok(())
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<()> {
    let s = ma_spectrum(args.a, args.h, args.length, args.k)?;
    io::ensure_dir(&args.out)?;
    let mut m = RunManifest::start("spectrum");
    m.settings = json!({ "A": fmt_num(args.a), "h": fmt_num(args.h), "L": fmt_num(args.length), "k": args.k });
    io::spectrum_table(&s.eigenvalues).write(&args.out.join("spectrum.csv"))?;
    m.outputs.push("spectrum.csv".into());
    m.results = json!({
        "q_residual": fmt_num(s.q_residual),
        "ground_state_distance": fmt_num(s.ground_state_distance),
        "gap": s.gap().map(fmt_num),
    });
    println!("lambda0 {} gap {} q_residual {}", fmt_num(s.eigenvalues[0]), s.gap().map(fmt_num).unwrap_or_default(), fmt_num(s.q_residual));
    m.finish(&args.out)?;
    Ok(())
}

fn cmd_heat(args: &HeatArgs) -> Result<()> {
    let params = ModelParams::new(args.r, args.a)?;
    let report = crate::pde::heat_bound_check(&params, &args.times, args.dx)?;
    io::ensure_dir(&args.out)?;
    let mut m = RunManifest::start("heat");
    m.params = Some(ParamStrings::from(&params));
    m.settings = json!({ "dx": fmt_num(args.dx), "times": args.times.iter().map(|t| fmt_num(*t)).collect::<Vec<_>>() });
    io::write_json(&args.out.join("heat.json"), &report)?;
    m.outputs.push("heat.json".into());
    m.results = json!({ "c_upper": fmt_num(report.c_upper), "c_lower": fmt_num(report.c_lower) });
    println!("c_upper {} c_lower {}", fmt_num(report.c_upper), fmt_num(report.c_lower));
    m.finish(&args.out)?;
    Ok(())
}

fn default_tol() -> f64 {
    1e-10
}
fn default_h() -> f64 {
    0.005
}
fn default_l() -> f64 {
    40.0
}
fn default_k() -> usize {
    5
}
fn default_dx() -> f64 {
    0.1
}
fn default_lambda() -> f64 {
    0.5
}

/// One entry of a sweep config's `runs` array.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunSpec {
    Theta {
        r: f64,
        #[serde(rename = "A")]
        a: f64,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Spectrum {
        #[serde(rename = "A")]
        a: f64,
        #[serde(default = "default_h")]
        h: f64,
        #[serde(rename = "L", default = "default_l")]
        length: f64,
        #[serde(default = "default_k")]
        k: usize,
    },
    Wave {
        r: f64,
        #[serde(rename = "A")]
        a: f64,
        xi_end: Option<f64>,
        #[serde(default = "default_tol")]
        tol: f64,
    },
    Front {
        r: f64,
        #[serde(rename = "A")]
        a: f64,
        t_end: f64,
        #[serde(default = "default_dx")]
        dx: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub runs: Vec<RunSpec>,
}

/// Reads and validates a sweep config. Errors name the line (syntax) or the
/// offending `runs[i]` entry (schema).
pub fn read_config(path: &Path) -> Result<SweepConfig> {
    let text = std::fs::read_to_string(path)?;
    let bad = |msg: String| Error::Invalid(format!("config {}: {msg}", path.display()));
    let root: serde_json::Value = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    let obj = root.as_object().ok_or_else(|| bad("top level must be an object".into()))?;
    if let Some(k) = obj.keys().find(|k| k.as_str() != "runs") {
        return Err(bad(format!("unknown top-level field `{k}`")));
    }
    let runs = obj
        .get("runs")
        .and_then(|v| v.as_array())
        .ok_or_else(|| bad("missing `runs` array".into()))?;
    if runs.is_empty() {
        return Err(bad("empty `runs` array".into()));
    }
    let runs = runs
        .iter()
        .enumerate()
        .map(|(i, v)| serde_json::from_value(v.clone()).map_err(|e| bad(format!("runs[{i}]: {e}"))))
        .collect::<Result<Vec<RunSpec>>>()?;
    Ok(SweepConfig { runs })
}

/// Result of one sweep entry: the merged-table rows it contributes.
enum Outcome {
    Theta(SweepRow),
    Spectrum { key: [f64; 3], rows: Vec<Vec<String>> },
    Wave { key: [f64; 2], row: Vec<String> },
    Front { key: [f64; 4], row: Vec<String> },
    Failed(String),
}

fn run_spec(spec: &RunSpec) -> Outcome {
    let attempt = || -> Result<Outcome> {
        Ok(match *spec {
            RunSpec::Theta { r, a, tol } => Outcome::Theta(theta_point(r, a, tol)),
            RunSpec::Spectrum { a, h, length, k } => {
                let s = ma_spectrum(a, h, length, k)?;
                let rows = s
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .map(|(n, l)| vec![fmt_num(a), fmt_num(h), fmt_num(length), n.to_string(), fmt_num(*l), fmt_num(s.q_residual)])
                    .collect();
                Outcome::Spectrum { key: [a, h, length], rows }
            }
            RunSpec::Wave { r, a, xi_end, tol } => {
                let p = ModelParams::new(r, a)?;
                let xi_end = xi_end.unwrap_or_else(|| default_xi_end(&p));
                let w = shoot_wave(&p, &WaveOptions::new(xi_end, tol))?;
                let f = extract_tail_law(&w, &p)?;
                Outcome::Wave {
                    key: [r, a],
                    row: vec![
                        fmt_num(r),
                        fmt_num(a),
                        f.regime.label().to_string(),
                        fmt_num(f.statistic),
                        fmt_num(f.exponent),
                        fmt_num(f.flatness),
                        fmt_num(f.window.0),
                        fmt_num(f.window.1),
                    ],
                }
            }
            RunSpec::Front { r, a, t_end, dx, lambda } => {
                let p = ModelParams::new(r, a)?;
                let cfg = FrontConfig::new(p.regime(), t_end, dx);
                let run = run_fronts(&LogKpp::new(p), &[lambda], &cfg)?;
                let f = fit_delay(&run.traces[0], &p)?;
                Outcome::Front {
                    key: [r, a, dx, lambda],
                    row: vec![
                        fmt_num(r),
                        fmt_num(a),
                        fmt_num(dx),
                        fmt_num(lambda),
                        fmt_num(t_end),
                        fmt_num(f.slope),
                        fmt_num(f.intercept),
                        fmt_num(f.rms),
                    ],
                }
            }
        })
    };
    attempt().unwrap_or_else(|e| Outcome::Failed(format!("{}: {}", serde_json::to_string(spec).unwrap_or_default(), e)))
}

fn sort_by_key<const N: usize>(mut v: Vec<([f64; N], Vec<Vec<String>>)>) -> Vec<Vec<String>> {
    v.sort_by(|a, b| {
        a.0.iter()
            .zip(&b.0)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(&b.1))
    });
    v.into_iter().flat_map(|(_, rows)| rows).collect()
}

/// File name, header and sorted rows of one merged sweep table.
type MergedTable = (&'static str, &'static [&'static str], Vec<Vec<String>>);

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    if args.jobs == 0 {
        return Err(Error::Invalid("jobs must be >= 1".into()));
    }
    let cfg = read_config(&args.config)?;
    io::ensure_dir(&args.out)?;
    let mut m = RunManifest::start("sweep");
    m.settings = json!({ "config": args.config.display().to_string(), "jobs": args.jobs, "runs": cfg.runs });

    let outcomes: Vec<Outcome> = if args.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.jobs)
            .build()
            .map_err(|e| Error::Numerical(e.to_string()))?;
        pool.install(|| cfg.runs.par_iter().map(run_spec).collect())
    } else {
        cfg.runs.iter().map(run_spec).collect()
    };

    let mut theta = Vec::new();
    let mut spectra = Vec::new();
    let mut waves = Vec::new();
    let mut fronts = Vec::new();
    let mut ok = 0usize;
    for o in outcomes {
        match o {
            Outcome::Theta(row) => {
                if let Some(e) = &row.error {
                    m.failures.push(format!("theta r = {}, A = {}: {e}", row.r, row.a));
                } else {
                    ok += 1;
                }
                theta.push(row);
            }
            Outcome::Spectrum { key, rows } => {
                ok += 1;
                spectra.push((key, rows));
            }
            Outcome::Wave { key, row } => {
                ok += 1;
                waves.push((key, vec![row]));
            }
            Outcome::Front { key, row } => {
                ok += 1;
                fronts.push((key, vec![row]));
            }
            Outcome::Failed(msg) => m.failures.push(msg),
        }
    }
    m.failures.sort();

    if !theta.is_empty() {
        theta.sort_by(|x, y| x.r.total_cmp(&y.r).then(x.a.total_cmp(&y.a)));
        io::theta_table(&theta).write(&args.out.join("theta.csv"))?;
        m.outputs.push("theta.csv".into());
    }
    let tables: [MergedTable; 3] = [
        ("spectrum.csv", &["A", "h", "L", "n", "lambda", "q_residual"], sort_by_key(spectra)),
        ("tails.csv", &["r", "A", "regime", "statistic", "exponent", "flatness", "xi_lo", "xi_hi"], sort_by_key(waves)),
        ("delays.csv", &["r", "A", "dx", "lambda", "t_end", "coefficient", "intercept", "rms"], sort_by_key(fronts)),
    ];
    for (name, header, rows) in tables {
        if rows.is_empty() {
            continue;
        }
        let mut t = Table::new(header);
        rows.into_iter().for_each(|r| t.push(r));
        t.write(&args.out.join(name))?;
        m.outputs.push(name.into());
    }
    let total = cfg.runs.len();
    m.results = json!({ "runs": total, "succeeded": ok });
    m.finish(&args.out)?;
    if ok == 0 {
        return Err(Error::Numerical(format!("all {total} runs failed")));
    }
    Ok(())
}
