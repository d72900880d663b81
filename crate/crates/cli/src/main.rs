use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dualwave::scenario::{parse_config_with, parse_value, run_scenario};
use dualwave::Error;
use toml::Value;

const WORKERS_VAR: &str = "DUALWAVE_WORKERS";

/// Runs a named scenario through the exact, semiclassical, pilot-wave and
/// soliton engines and writes CSV/JSON artifacts.
///
/// Exit status: 0 on success, 1 on a configuration error, 2 if any engine
/// failed. The worker count comes from DUALWAVE_WORKERS.
#[derive(Debug, Parser)]
#[command(name = "dualwave", version, allow_negative_numbers = true)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Scenario name, overriding the file.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    #[arg(long, value_name = "X")]
    hbar: Option<f64>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Comma-separated subset of exact,semiclassical,bohm,soliton.
    #[arg(long, value_name = "LIST")]
    engines: Option<String>,
    /// Sweep a dotted key over values, e.g. model.hbar=0.1,0.05. Repeatable;
    /// several sweeps expand as a product.
    #[arg(long, value_name = "KEY=v1,v2,...")]
    sweep: Vec<String>,
}

fn config_error(message: impl Into<String>) -> Error {
    Error::Config { location: None, message: message.into() }
}

type Overrides = Vec<(String, Value)>;
type Sweeps = Vec<(String, Vec<Value>)>;

fn overrides(args: &Args) -> Result<(Overrides, Sweeps), Error> {
    let mut list = Vec::new();
    if let Some(s) = &args.scenario {
        list.push(("scenario".to_string(), Value::String(s.clone())));
    }
    if let Some(h) = args.hbar {
        list.push(("model.hbar".to_string(), Value::Float(h)));
    }
    if let Some(seed) = args.seed {
        let seed = i64::try_from(seed).map_err(|_| config_error(format!("--seed {seed} exceeds the TOML integer range")))?;
        list.push(("ensemble.seed".to_string(), Value::Integer(seed)));
    }
    if let Some(out) = &args.out {
        list.push(("output".to_string(), Value::String(out.to_string_lossy().into_owned())));
    }
    if let Some(e) = &args.engines {
        let names = e.split(',').map(|s| Value::String(s.trim().to_string())).collect();
        list.push(("engines".to_string(), Value::Array(names)));
    }
    let mut sweeps = Vec::new();
    for s in &args.sweep {
        let (key, values) = s.split_once('=').ok_or_else(|| config_error(format!("--sweep `{s}`: expected KEY=v1,v2,...")))?;
        sweeps.push((key.trim().to_string(), values.split(',').map(parse_value).collect()));
    }
    Ok((list, sweeps))
}

fn set_workers() -> Result<(), Error> {
    let Ok(text) = std::env::var(WORKERS_VAR) else { return Ok(()) };
    let n: usize = text.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| config_error(format!("{WORKERS_VAR}={text}: expected a positive integer")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| config_error(e.to_string()))
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            // Usage mistakes are configuration errors; help and version are not.
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let configs = set_workers().and_then(|_| {
        let text = match &args.config {
            Some(p) => std::fs::read_to_string(p).map_err(|e| config_error(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        let (list, sweeps) = overrides(&args)?;
        parse_config_with(&text, &list, &sweeps)
    });
    let configs = match configs {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let mut failed = false;
    for cfg in &configs {
        match run_scenario(cfg) {
            Ok(report) => {
                let status = if report.failed() { "FAILED" } else { "ok" };
                println!("{} {} {status}", cfg.scenario.as_str(), cfg.output.join("report.json").display());
                failed |= report.failed();
            }
            Err(e) => {
                eprintln!("error: {}: {e}", cfg.output.display());
                failed = true;
            }
        }
    }
    if failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
