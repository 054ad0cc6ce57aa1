use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::Value;

use weakamp::config::{self, Mode};
use weakamp::run;
use weakamp::Execution;

/// Weak-value amplification curves for a Sagnac interferometer.
#[derive(Parser, Debug)]
#[command(name = "weakamp", version)]
struct Cli {
    /// point, sweep-sigma, sweep-phi, figure2, figure4 or invert
    mode: Mode,
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Output CSV (defaults to the config's `output`, else stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace a config field, e.g. `geometry.sigma=750um` (repeatable)
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Compute rows on the current thread only
    #[arg(long)]
    sequential: bool,
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn load(cli: &Cli) -> Result<config::RunConfig, String> {
    let text = fs::read_to_string(&cli.config)
        .map_err(|e| format!("cannot read {}: {e}", cli.config.display()))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", cli.config.display()))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| "config must be a JSON object".to_string())?;
    match obj.get("mode").and_then(Value::as_str) {
        Some(m) if m != cli.mode.name() => {
            return Err(format!("mode: config says `{m}` but `{}` was requested", cli.mode.name()))
        }
        _ => {
            obj.insert("mode".into(), Value::String(cli.mode.name().into()));
        }
    }
    for o in &cli.overrides {
        config::apply_override(&mut value, o).map_err(|e| e.to_string())?;
    }
    config::from_value(value).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let table = run::run(&config, exec);
    let csv = table.to_csv();
    match cli.out.as_ref().or(config.output.as_ref()) {
        Some(path) => {
            if let Err(e) = fs::write(path, csv) {
                eprintln!("cannot write {}: {e}", path.display());
                return ExitCode::from(EXIT_CONFIG);
            }
            eprintln!("{}", run::summary(&config, &table));
        }
        None => print!("{csv}"),
    }
    if table.failed_rows > 0 && matches!(config.mode, Mode::Point | Mode::Invert) {
        return ExitCode::from(EXIT_NUMERICAL);
    }
    ExitCode::SUCCESS
}
