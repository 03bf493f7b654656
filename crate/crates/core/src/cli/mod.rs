//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration problem, 3 solver failure.

pub mod benchmarks;
pub mod config;
pub mod table;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::analysis::{run, AnalysisResult, Regime, RunConfig};
use crate::Error;
use config::{load_config, ConfigDocument};
use table::{write_atomic, Cell, ResultTable};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "fgm-iga", version, about = "Isogeometric analysis of functionally graded plates")]
pub struct Cli {
    /// Directory for result files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Significant digits of numeric output.
    #[arg(long, global = true, default_value_t = 6)]
    pub digits: usize,
    /// Record the wall-clock time in the CSV metadata (output is then no
    /// longer byte-identical between runs).
    #[arg(long, global = true)]
    pub timestamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one analysis described by a TOML file.
    Run { config: PathBuf },
    /// Reproduce a named reference grid.
    Table { id: String },
    /// Vary one parameter of a configuration.
    Sweep {
        config: PathBuf,
        /// One of: n, a/h, skew, pressure, T_ceramic.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<f64>,
    },
    /// List the shipped benchmark ids.
    ListBenchmarks,
}

/// Failure of a CLI command, carrying its exit code.
#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(Error),
    #[error("solver: {0}")]
    Solver(Error),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::Solver(_) => EXIT_SOLVER,
            _ => EXIT_USAGE,
        }
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        match e {
            Error::Configuration(_) | Error::Domain(_) | Error::Geometry(_) => CommandError::Config(e),
            other => CommandError::Solver(other),
        }
    }
}

/// Sweepable parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    GradientIndex,
    AOverH,
    Skew,
    Pressure,
    CeramicTemperature,
}

impl FromStr for SweepParam {
    type Err = CommandError;

    fn from_str(s: &str) -> Result<Self, CommandError> {
        match s.to_ascii_lowercase().as_str() {
            "n" => Ok(Self::GradientIndex),
            "a/h" | "a-over-h" | "a_over_h" => Ok(Self::AOverH),
            "skew" | "skew_deg" => Ok(Self::Skew),
            "pressure" | "pressure_pa" => Ok(Self::Pressure),
            "t_ceramic" | "t-ceramic" | "ceramic_c" => Ok(Self::CeramicTemperature),
            _ => Err(CommandError::Usage(format!(
                "unsupported sweep parameter '{s}'; use one of n, a/h, skew, pressure, T_ceramic"
            ))),
        }
    }
}

impl SweepParam {
    pub fn label(self) -> &'static str {
        match self {
            Self::GradientIndex => "n",
            Self::AOverH => "a/h",
            Self::Skew => "skew_deg",
            Self::Pressure => "pressure_pa",
            Self::CeramicTemperature => "t_ceramic_c",
        }
    }

    pub fn apply(self, base: &RunConfig, value: f64) -> Result<RunConfig, CommandError> {
        let mut c = base.clone();
        match self {
            Self::GradientIndex => c.material.gradient_index = value,
            Self::AOverH => c.thickness = c.geometry.a / value,
            Self::Skew => c.geometry.skew_deg = value,
            Self::Pressure => match &mut c.regime {
                Regime::Static { pressure, .. } => *pressure = value,
                _ => return Err(CommandError::Usage("pressure sweeps need a static analysis".into())),
            },
            Self::CeramicTemperature => match &mut c.regime {
                Regime::Static { temperature: Some(t), .. } => t.t_ceramic = value,
                _ => {
                    return Err(CommandError::Usage(
                        "T_ceramic sweeps need a static analysis with a [temperature] section".into(),
                    ))
                }
            },
        }
        c.validate().map_err(CommandError::Config)?;
        Ok(c)
    }
}

struct Context {
    out: PathBuf,
    digits: usize,
    timestamp: bool,
}

impl Context {
    fn stamp(&self, t: &mut ResultTable) {
        t.meta("tool_version", env!("CARGO_PKG_VERSION"));
        if self.timestamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
            t.meta("timestamp_unix_s", secs.to_string());
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CommandError> {
        let path = self.out.join(name);
        write_atomic(&path, contents).map_err(|source| CommandError::Io { path: path.clone(), source })?;
        Ok(path)
    }
}

fn read_config(path: &Path) -> Result<(ConfigDocument, RunConfig), CommandError> {
    let text = fs::read_to_string(path).map_err(|source| CommandError::Io { path: path.to_path_buf(), source })?;
    load_config(&text).map_err(|e| CommandError::Config(e))
}

fn output_name(doc: &ConfigDocument, path: &Path) -> String {
    doc.name.clone().unwrap_or_else(|| path.file_stem().and_then(|s| s.to_str()).unwrap_or("run").to_string())
}

/// Single-row table of every raw and scaled quantity.
pub fn result_table(result: &AnalysisResult) -> ResultTable {
    let mut headers = vec!["regime".to_string(), "status".to_string()];
    let mut row: Vec<Cell> = vec![result.regime.into(), result.status.clone().unwrap_or_default().into()];
    for q in result.scaled.iter().chain(&result.raw_quantities) {
        headers.push(if q.unit == "-" {
            q.name.clone()
        } else {
            format!("{}_{}", q.name, q.unit.replace('/', "_per_").replace('^', ""))
        });
        row.push(q.value.into());
    }
    let mut t = ResultTable::new(headers);
    t.meta("config_hash", result.config_hash.clone());
    t.meta(
        "mesh",
        format!(
            "{} control points, {} elements, {} dofs, {} free",
            result.mesh.control_points, result.mesh.elements, result.mesh.dofs, result.mesh.free_dofs
        ),
    );
    t.push(row);
    t
}

fn summary(result: &AnalysisResult, digits: usize) -> String {
    let mut s = format!("regime: {}\n", result.regime);
    if let Some(status) = &result.status {
        s.push_str(&format!("status: {status}\n"));
    }
    for q in &result.scaled {
        s.push_str(&format!("{} = {}\n", q.name, table::format_significant(q.value, digits)));
    }
    for q in &result.raw_quantities {
        s.push_str(&format!("{} = {} {}\n", q.name, table::format_significant(q.value, digits), q.unit));
    }
    s.push_str(&format!(
        "mesh: {} control points, {} elements, {} free dofs\nconfig hash: {}\n",
        result.mesh.control_points, result.mesh.elements, result.mesh.free_dofs, result.config_hash
    ));
    s
}

fn cmd_run(ctx: &Context, path: &Path) -> Result<String, CommandError> {
    let (doc, config) = read_config(path)?;
    let result = run(&config)?;
    let name = output_name(&doc, path);
    let mut t = result_table(&result);
    ctx.stamp(&mut t);
    let text = summary(&result, ctx.digits);
    let csv = ctx.write(&format!("{name}.result.csv"), &t.to_csv(ctx.digits))?;
    ctx.write(&format!("{name}.summary.txt"), &text)?;
    Ok(format!("{text}wrote {}\n", csv.display()))
}

fn cmd_table(ctx: &Context, id: &str) -> Result<String, CommandError> {
    let bench = benchmarks::find(id).map_err(|e| match e {
        Error::Configuration(m) => CommandError::Usage(m),
        other => CommandError::from(other),
    })?;
    let mut t = bench.table()?;
    ctx.stamp(&mut t);
    let path = ctx.write(&format!("{id}.table.csv"), &t.to_csv(ctx.digits))?;
    Ok(format!("{}\n{}wrote {}\n", bench.title, t.to_text(ctx.digits), path.display()))
}

/// Runs `base` once per value; rows come back in input order.
pub fn sweep(base: &RunConfig, param: SweepParam, values: &[f64]) -> Result<ResultTable, CommandError> {
    if values.is_empty() {
        return Err(CommandError::Usage("sweep needs at least one value".into()));
    }
    let configs: Vec<RunConfig> = values.iter().map(|&v| param.apply(base, v)).collect::<Result<_, _>>()?;
    let results: Vec<AnalysisResult> = configs.par_iter().map(run).collect::<crate::Result<_>>()?;
    let names: Vec<String> = results[0].scaled.iter().map(|q| q.name.clone()).collect();
    let mut headers = vec![param.label().to_string()];
    headers.extend(names.iter().cloned());
    headers.push("status".into());
    let mut t = ResultTable::new(headers);
    t.meta("config_hash", base.hash());
    t.meta("parameter", param.label());
    for (v, r) in values.iter().zip(&results) {
        let mut row: Vec<Cell> = vec![(*v).into()];
        row.extend(names.iter().map(|n| Cell::from(r.scaled_value(n))));
        row.push(r.status.clone().unwrap_or_default().into());
        t.push(row);
    }
    Ok(t)
}

fn cmd_sweep(ctx: &Context, path: &Path, param: &str, values: &[f64]) -> Result<String, CommandError> {
    let param: SweepParam = param.parse()?;
    if values.is_empty() {
        return Err(CommandError::Usage("sweep needs at least one value".into()));
    }
    let (doc, base) = read_config(path)?;
    let mut t = sweep(&base, param, values)?;
    ctx.stamp(&mut t);
    let name = output_name(&doc, path);
    let file =
        ctx.write(&format!("{name}.sweep-{}.csv", param.label().replace('/', "-over-")), &t.to_csv(ctx.digits))?;
    Ok(format!("{}wrote {}\n", t.to_text(ctx.digits), file.display()))
}

/// Executes a parsed command line, returning the text for stdout.
pub fn execute(cli: &Cli) -> Result<String, CommandError> {
    if let Some(k) = cli.threads {
        if k == 0 {
            return Err(CommandError::Usage("--threads must be at least 1".into()));
        }
        // A pool built earlier in this process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    if cli.digits == 0 || cli.digits > 17 {
        return Err(CommandError::Usage("--digits must lie in 1..=17".into()));
    }
    let ctx = Context { out: cli.out.clone(), digits: cli.digits, timestamp: cli.timestamp };
    match &cli.command {
        Command::Run { config } => cmd_run(&ctx, config),
        Command::Table { id } => cmd_table(&ctx, id),
        Command::Sweep { config, param, values } => cmd_sweep(&ctx, config, param, values),
        Command::ListBenchmarks => Ok(benchmarks::list()?.to_text(ctx.digits)),
    }
}

/// Entry point of the binary.
pub fn main_entry() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
