//! Command-line front end: parse, run, write artifacts, map the outcome to
//! an exit code.

use std::path::{Path, PathBuf};

use clap::Parser;

use crate::config::{parse_config, SimConfig};
use crate::output::{summary_text, write_outputs};
use crate::simulator::{run, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_BARRIER: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, Parser)]
#[command(name = "tdsync", version, about = "Delayed human-robot synchronization simulator")]
pub struct CliArgs {
    /// TOML configuration; omitted sections take the reference values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for log.csv, excitation.csv, summary.txt, config.toml.
    #[arg(long, env = "SYNC_SIM_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Override a field, e.g. `--set gains.k_r=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VAL")]
    pub overrides: Vec<String>,
    /// Remove the human measurement delay.
    #[arg(long)]
    pub no_delay: bool,
    /// Append the Lyapunov-Krasovskii and skew-symmetry columns.
    #[arg(long)]
    pub diagnostics: bool,
    #[arg(long, short)]
    pub quiet: bool,
    /// Run one simulation per value, e.g. `--sweep gains.k_r=0.1,0.5`; each
    /// run writes to its own subdirectory.
    #[arg(long, value_name = "KEY=V1,V2,..")]
    pub sweep: Option<String>,
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Completed => EXIT_OK,
        Status::BarrierViolation => EXIT_BARRIER,
        Status::NumericFailure => EXIT_NUMERIC,
    }
}

fn load(args: &CliArgs, extra: Option<String>) -> Result<SimConfig, String> {
    let mut overrides = args.overrides.clone();
    if args.no_delay {
        overrides.push("gains.delay=0.0".into());
    }
    overrides.extend(extra);
    parse_config(args.config.as_deref(), &overrides).map_err(|e| e.to_string())
}

/// Runs one configuration and writes its artifacts. Returns the exit code.
pub fn execute(cfg: &SimConfig, out: &Path, diagnostics: bool, quiet: bool) -> i32 {
    let (log, summary) = match run(cfg, diagnostics) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    if let Err(e) = write_outputs(out, &log, &summary, cfg, diagnostics) {
        eprintln!("error: cannot write outputs to {}: {e}", out.display());
        return EXIT_IO;
    }
    if !quiet {
        print!("{}", summary_text(&summary));
    }
    if let Some(v) = summary.violation {
        eprintln!(
            "barrier violated at t = {} on axis {}: |e| = {} >= {}",
            v.t,
            v.axis + 1,
            v.error.abs(),
            v.bound
        );
    }
    exit_code(summary.status)
}

fn sweep_values(spec: &str) -> Result<(String, Vec<String>), String> {
    let (key, values) = spec
        .split_once('=')
        .ok_or_else(|| format!("invalid sweep `{spec}`: expected KEY=V1,V2,.."))?;
    // keep bracketed arrays intact: split on commas at depth zero only
    let mut out = Vec::new();
    let (mut depth, mut cur) = (0i32, String::new());
    for ch in values.chars() {
        match ch {
            '[' => depth += 1,
            ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    out.push(cur);
    let out: Vec<String> = out.into_iter().map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
    if out.is_empty() {
        return Err(format!("sweep `{spec}` has no values"));
    }
    Ok((key.trim().to_string(), out))
}

/// Entry point shared by the binary and the tests.
pub fn main_with(args: CliArgs) -> i32 {
    let Some(spec) = args.sweep.as_deref() else {
        return match load(&args, None) {
            Ok(cfg) => execute(&cfg, &args.out, args.diagnostics, args.quiet),
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_IO
            }
        };
    };
    let (key, values) = match sweep_values(spec) {
        Ok(kv) => kv,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    let mut jobs = Vec::new();
    for v in &values {
        match load(&args, Some(format!("{key}={v}"))) {
            Ok(cfg) => {
                let name: String = format!("{key}={v}")
                    .chars()
                    .map(|c| if c.is_ascii_alphanumeric() || "._=-".contains(c) { c } else { '_' })
                    .collect();
                jobs.push((cfg, args.out.join(name)));
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_IO;
            }
        }
    }
    // independent runs; the worst exit code wins
    let codes: Vec<i32> = std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(cfg, dir)| s.spawn(move || execute(cfg, dir, args.diagnostics, true)))
            .collect();
        handles.into_iter().map(|h| h.join().unwrap_or(EXIT_IO)).collect()
    });
    if !args.quiet {
        for ((_, dir), code) in jobs.iter().zip(&codes) {
            println!("{} exit={code}", dir.display());
        }
    }
    codes.into_iter().max().unwrap_or(EXIT_OK)
}
