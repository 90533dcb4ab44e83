//! CSV and JSON outputs. Numbers are written with 15 significant digits in
//! exponent form, independent of locale.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::pde::FrontTrace;
use crate::profile::SweepRow;
use crate::wave::WaveProfile;

/// `x` with 15 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.14e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

/// Rows of pre-formatted cells under `header`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

/// `xi,U,Q,W`; `U` and `Q` are empty where they under- or overflow.
pub fn wave_table(wave: &WaveProfile<f64>) -> Table {
    let mut t = Table::new(&["xi", "U", "Q", "W"]);
    for i in 0..wave.len() {
        t.push(vec![fmt_num(wave.xi[i]), fmt_opt(wave.u[i]), fmt_opt(wave.q[i]), fmt_num(wave.w[i])]);
    }
    t
}

/// `r,A,theta,theta_r,ybar,method_residual`; failed points keep empty cells.
pub fn theta_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&["r", "A", "theta", "theta_r", "ybar", "method_residual"]);
    for row in rows {
        t.push(vec![
            fmt_num(row.r),
            fmt_num(row.a),
            fmt_opt(row.theta),
            fmt_opt(row.theta_r),
            fmt_opt(row.ybar),
            fmt_opt(row.method_residual),
        ]);
    }
    t
}

/// `t,X,delay`.
pub fn trace_table(trace: &FrontTrace<f64>) -> Table {
    let mut t = Table::new(&["t", "X", "delay"]);
    for i in 0..trace.times.len() {
        t.push(vec![fmt_num(trace.times[i]), fmt_num(trace.positions[i]), fmt_num(trace.delays[i])]);
    }
    t
}

/// `n,lambda`.
pub fn spectrum_table(eigenvalues: &[f64]) -> Table {
    let mut t = Table::new(&["n", "lambda"]);
    for (n, l) in eigenvalues.iter().enumerate() {
        t.push(vec![n.to_string(), fmt_num(*l)]);
    }
    t
}

/// Model constants as decimal strings.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ParamStrings {
    pub r: String,
    #[serde(rename = "A")]
    pub a: String,
    pub nu: String,
    pub gamma: String,
    pub beta: String,
    pub alpha: String,
    pub s_a: String,
    pub y_bar: String,
}

impl From<&ModelParams<f64>> for ParamStrings {
    fn from(p: &ModelParams<f64>) -> Self {
        Self {
            r: fmt_num(p.r),
            a: fmt_num(p.a),
            nu: fmt_num(p.nu),
            gamma: fmt_num(p.gamma),
            beta: fmt_num(p.beta),
            alpha: fmt_num(p.alpha),
            s_a: fmt_num(p.s_a),
            y_bar: fmt_num(p.y_bar),
        }
    }
}

fn unix_seconds() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Record of one command invocation. Written last, after every listed output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ParamStrings>,
    pub settings: Value,
    pub tolerances: Value,
    pub results: Value,
    /// Unix time in seconds.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn start(subcommand: &str) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            params: None,
            settings: Value::Null,
            tolerances: Value::Null,
            results: Value::Null,
            started: unix_seconds(),
            finished: 0.0,
            outputs: Vec::new(),
            warnings: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Checks every listed output exists, stamps the end time and writes
    /// `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<PathBuf> {
        for name in &self.outputs {
            if !dir.join(name).is_file() {
                return Err(Error::Numerical(format!("listed output {name} was not written")));
            }
        }
        self.finished = unix_seconds();
        let path = dir.join("manifest.json");
        fs::write(&path, serde_json::to_string_pretty(&self)?)?;
        Ok(path)
    }
}

/// Writes `value` as pretty JSON.
pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

/// Creates the output directory if needed.
pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifteen_significant_digits() {
        assert_eq!(fmt_num(1.0), "1.00000000000000e0");
        assert_eq!(fmt_num(-0.1), "-1.00000000000000e-1");
        assert_eq!(fmt_num(f64::NAN), "nan");
        let x = std::f64::consts::PI;
        let back: f64 = fmt_num(x).parse().unwrap();
        assert!((back - x).abs() < 1e-14 * x);
    }

    #[test]
    fn table_render() {
        let mut t = Table::new(&["n", "lambda"]);
        t.push(vec!["0".into(), fmt_num(0.5)]);
        assert_eq!(t.render(), "n,lambda\n0,5.00000000000000e-1\n");
        assert_eq!(spectrum_table(&[0.5]).render(), t.render());
    }

    #[test]
    fn manifest_refuses_missing_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = RunManifest::start("spectrum");
        m.outputs.push("spectrum.csv".into());
        assert!(m.clone().finish(dir.path()).is_err());
        fs::write(dir.path().join("spectrum.csv"), "n,lambda\n").unwrap();
        let p = m.finish(dir.path()).unwrap();
        let v: Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(v["subcommand"], "spectrum");
        assert!(v["finished"].as_f64().unwrap() >= v["started"].as_f64().unwrap());
    }

    #[test]
    fn params_as_strings() {
        let p = ModelParams::new(2.0, 1.0).unwrap();
        let s = ParamStrings::from(&p);
        let v = serde_json::to_value(&s).unwrap();
        for key in ["r", "A", "nu", "gamma", "beta", "alpha", "s_a", "y_bar"] {
            assert!(v[key].is_string(), "{key}");
        }
        assert_eq!(s.beta, fmt_num(1.0 / 3.0));
    }
}
