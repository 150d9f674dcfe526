//! Command-line front end: `warpcurv <command> --config <path> [--out <dir>] [--seed <n>]`.
//!
//! Every run writes `report.json` and its CSV tables into the output
//! directory. Exit status: 0 pass, 2 fail, 1 error.

pub mod commands;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use commands::Outcome;
use config::*;

/// Environment variable that overrides the default output directory.
pub const OUT_ENV: &str = "WARPCURV_OUT";
pub const DEFAULT_OUT: &str = "warpcurv-out";
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CurvatureSweep,
    PinchFind,
    FamilyCheck,
    Heatflow,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CurvatureSweep => "curvature-sweep",
            Command::PinchFind => "pinch-find",
            Command::FamilyCheck => "family-check",
            Command::Heatflow => "heatflow",
            Command::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "warpcurv", version, about = "Warped product curvature, pinched families and curve heat flow")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,
    /// JSON configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (default: $WARPCURV_OUT, else ./warpcurv-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the seed in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct Report<'a> {
    command: &'a str,
    config_echo: Value,
    version: &'a str,
    seed: u64,
    results: Value,
    verdict: &'a str,
    timestamp: u64,
}

/// Failure of a run, with the message shown to the user.
#[derive(Debug)]
pub struct RunError(pub String);

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<crate::Error> for RunError {
    fn from(e: crate::Error) -> Self {
        RunError(e.to_string())
    }
}

fn parse<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T, RunError> {
    serde_json::from_str(text).map_err(|e| RunError(format!("invalid config {}: {e}", path.display())))
}

fn echo<T: Serialize>(cfg: &T) -> Value {
    serde_json::to_value(cfg).expect("configs serialise")
}

/// Parses the config for `command`, applies the seed override and runs it.
pub fn execute(command: Command, text: &str, path: &Path, seed: Option<u64>) -> Result<(Value, u64, Outcome), RunError> {
    macro_rules! simple {
        ($ty:ty, $run:path) => {{
            let mut cfg: $ty = parse(text, path)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = $run(&cfg)?;
            (echo(&cfg), cfg.seed, out)
        }};
    }
    Ok(match command {
        Command::CurvatureSweep => simple!(CurvatureSweepConfig, commands::curvature_sweep),
        Command::FamilyCheck => simple!(FamilyCheckConfig, commands::family_check),
        Command::Heatflow => simple!(HeatflowConfig, commands::heatflow),
        Command::OracleCheck => simple!(OracleCheckConfig, commands::oracle),
        Command::PinchFind => {
            let mut cfg: PinchFindConfig = parse(text, path)?;
            if let Some(s) = seed {
                *cfg.seed_mut() = s;
            }
            let out = commands::pinch_find(&cfg)?;
            (echo(&cfg), cfg.seed(), out)
        }
    })
}

fn write_outputs(dir: &Path, command: Command, echo: Value, seed: u64, out: &Outcome) -> Result<(), RunError> {
    let io = |e: std::io::Error, p: &Path| RunError(format!("cannot write {}: {e}", p.display()));
    fs::create_dir_all(dir).map_err(|e| io(e, dir))?;
    let report = Report {
        command: command.name(),
        config_echo: echo,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        results: out.results.clone(),
        verdict: if out.pass { "pass" } else { "fail" },
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    };
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    fs::write(&path, text).map_err(|e| io(e, &path))?;
    for t in &out.tables {
        let path = dir.join(t.name);
        let mut text = format!(
            "# warpcurv {} {} schema v{CSV_SCHEMA_VERSION}\n{}\n",
            command.name(),
            t.name,
            t.header
        );
        for r in &t.rows {
            text.push_str(r);
            text.push('\n');
        }
        fs::write(&path, text).map_err(|e| io(e, &path))?;
    }
    Ok(())
}

/// Output directory: `--out`, else `$WARPCURV_OUT`, else the default.
pub fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Runs one command end to end and returns the exit status.
pub fn run(cli: Cli) -> i32 {
    let result = (|| {
        let text = fs::read_to_string(&cli.config)
            .map_err(|e| RunError(format!("cannot read config {}: {e}", cli.config.display())))?;
        let (echo, seed, out) = execute(cli.command, &text, &cli.config, cli.seed)?;
        let dir = out_dir(cli.out.clone());
        write_outputs(&dir, cli.command, echo, seed, &out)?;
        Ok::<_, RunError>((out.pass, dir))
    })();
    match result {
        Ok((pass, dir)) => {
            println!(
                "{}: {} (report in {})",
                cli.command.name(),
                if pass { "pass" } else { "fail" },
                dir.join("report.json").display()
            );
            if pass {
                EXIT_PASS
            } else {
                EXIT_FAIL
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
