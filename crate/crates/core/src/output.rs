//! CSV log, excitation trace and key-value summary writers.
//!
//! Floats are written with the shortest representation that parses back
//! to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::config::SimConfig;
use crate::simulator::{LogRecord, RunSummary};

pub const SCHEMA: &str = "tdsync-log/1";

/// Column units, in header order for the fixed part of the log.
const UNITS: &str = "t s; theta rad; theta_dot rad/s; p,p_h,p_ht,e_p,e_pt,constraint_margin m; \
                     eta,eta_t rad/s; tau N*m; p_dot,p_dot_est,p_h_dot m/s; p_h_ddot m/s^2";

fn pair(name: &str) -> [String; 2] {
    [format!("{name}_1"), format!("{name}_2")]
}

/// Column names, lower-case, in record order.
pub fn header(diagnostics: bool) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for name in ["theta", "theta_dot", "p", "p_h", "p_ht", "e_p", "e_pt", "eta", "eta_t", "tau", "zeta_j_hat"] {
        h.extend(pair(name));
    }
    h.extend((1..=7).map(|i| format!("zeta_y_hat_{i}")));
    h.extend(["norm_e_p", "norm_e_pt", "v1", "lambda_min"].map(String::from));
    h.extend(pair("constraint_margin"));
    h.push("window_count".into());
    for name in ["p_dot", "p_dot_est", "p_h_dot", "p_h_ddot"] {
        h.extend(pair(name));
    }
    if diagnostics {
        h.extend(["p1_lk", "p2_lk", "p3_lk", "skew_residual"].map(String::from));
    }
    h
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

fn row(r: &LogRecord, diagnostics: bool) -> String {
    let mut v: Vec<f64> = vec![r.t];
    for x in [r.theta, r.theta_dot, r.p, r.p_h, r.p_ht, r.e_p, r.e_pt, r.eta, r.eta_t, r.tau, r.zeta_j_hat] {
        v.extend(x.iter());
    }
    v.extend(r.zeta_y_hat.iter());
    v.extend([r.norm_e_p, r.norm_e_pt, r.v1, r.lambda_min]);
    v.extend(r.constraint_margin.iter());
    let mut s = String::with_capacity(64 * 24);
    for (i, x) in v.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&fmt_f64(*x));
    }
    let _ = write!(s, ",{}", r.window_count);
    for x in [r.p_dot, r.p_dot_est, r.p_h_dot, r.p_h_ddot] {
        for c in x.iter() {
            let _ = write!(s, ",{}", fmt_f64(*c));
        }
    }
    if diagnostics {
        let (p, sk) = match r.diag {
            Some(d) => (d.p_lk, d.skew_residual),
            None => ([f64::NAN; 3], f64::NAN),
        };
        for x in p.iter().chain([sk].iter()) {
            let _ = write!(s, ",{}", fmt_f64(*x));
        }
    }
    s
}

/// Writes the log: one schema comment line, the header, then one row per
/// record.
pub fn write_csv<W: Write>(mut w: W, log: &[LogRecord], diagnostics: bool) -> io::Result<()> {
    writeln!(w, "# schema={SCHEMA}; units: {UNITS}")?;
    writeln!(w, "{}", header(diagnostics).join(","))?;
    for r in log {
        writeln!(w, "{}", row(r, diagnostics))?;
    }
    w.flush()
}

/// `t, lambda_min, window_count` per step.
pub fn write_excitation<W: Write>(mut w: W, log: &[LogRecord]) -> io::Result<()> {
    writeln!(w, "t,lambda_min,window_count")?;
    for r in log {
        writeln!(w, "{},{},{}", fmt_f64(r.t), fmt_f64(r.lambda_min), r.window_count)?;
    }
    w.flush()
}

/// Flat `key = value` lines.
pub fn summary_text(s: &RunSummary) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    kv("status", s.status.as_str().into());
    kv("steps", s.steps.to_string());
    kv("t_end", fmt_f64(s.t_end));
    kv("final_norm_e_p", fmt_f64(s.final_norm_e_p));
    kv("final_norm_e_pt", fmt_f64(s.final_norm_e_pt));
    kv("peak_norm_e_p", fmt_f64(s.peak_norm_e_p));
    kv("peak_norm_e_pt", fmt_f64(s.peak_norm_e_pt));
    for i in 0..2 {
        kv(&format!("max_abs_e_p_{}", i + 1), fmt_f64(s.max_abs_e_p[i]));
        kv(&format!("min_margin_{}", i + 1), fmt_f64(s.min_margin[i]));
    }
    for i in 0..2 {
        kv(&format!("zeta_j_hat_{}", i + 1), fmt_f64(s.zeta_j_hat[i]));
    }
    for i in 0..7 {
        kv(&format!("zeta_y_hat_{}", i + 1), fmt_f64(s.zeta_y_hat[i]));
    }
    kv(
        "first_excited",
        s.first_excited.map_or_else(|| "none".into(), fmt_f64),
    );
    kv("damped_steps", s.damped_steps.to_string());
    if let Some(v) = s.violation {
        kv("violation_t", fmt_f64(v.t));
        kv("violation_axis", (v.axis + 1).to_string());
        kv("violation_error", fmt_f64(v.error));
        kv("violation_bound", fmt_f64(v.bound));
        kv("violation_signal", if v.delayed { "e_pt" } else { "e_p" }.into());
    }
    kv("wall_clock_s", fmt_f64(s.wall_clock));
    out
}

/// Writes `log.csv`, `excitation.csv`, `summary.txt` and the resolved
/// `config.toml` into `dir`, creating it if needed.
pub fn write_outputs(
    dir: &Path,
    log: &[LogRecord],
    summary: &RunSummary,
    cfg: &SimConfig,
    diagnostics: bool,
) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_csv(BufWriter::new(fs::File::create(dir.join("log.csv"))?), log, diagnostics)?;
    write_excitation(BufWriter::new(fs::File::create(dir.join("excitation.csv"))?), log)?;
    fs::write(dir.join("summary.txt"), summary_text(summary))?;
    fs::write(dir.join("config.toml"), cfg.to_toml_string())?;
    Ok(())
}

/// Parsed CSV log: column names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvLog {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvLog {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

/// Reads a log written by [`write_csv`], skipping comment lines.
pub fn read_csv(text: &str) -> Result<CsvLog, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or("missing header")?
        .split(',')
        .map(String::from)
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let r: Vec<f64> = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|e| format!("row {}: {e}", n + 1)))
            .collect::<Result<_, _>>()?;
        if r.len() != header.len() {
            return Err(format!("row {}: {} fields, expected {}", n + 1, r.len(), header.len()));
        }
        rows.push(r);
    }
    Ok(CsvLog { header, rows })
}
