// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hypobridge_cli::commands::{self, BridgeOptions, Source, DEFAULT_EPS_LIST};
use hypobridge_cli::error::{EXIT_OK, EXIT_USAGE};
use hypobridge_cli::grid::{parse_grid, parse_list, DEFAULT_GRID};
use hypobridge_cli::modelfile::{Format, ModelFile};
use hypobridge_cli::CliError;
use serde::Serialize;

/// Bridges and small-time fluctuation limits of linear hypoelliptic
/// diffusions dx = εAx dt + √ε B dW.
#[derive(Parser)]
#[command(name = "hypobridge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filtration, adapted basis, u-blocks, V and V⁻¹ as JSON.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        /// Also write analysis.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact bridge law on a grid, plus sampled paths, as CSV.
    Bridge {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 1.0)]
        eps: f64,
        /// Start point, comma separated (default 0).
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// End point, comma separated (default 0).
        #[arg(long, allow_hyphen_values = true)]
        y: Option<String>,
        /// `uniform:N` or a comma separated list of times in [0, 1].
        #[arg(long, default_value = DEFAULT_GRID)]
        grid: String,
        #[arg(long, default_value_t = 1000)]
        paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Diagonal jitter added before the Cholesky factorisation.
        #[arg(long, default_value_t = 0.0)]
        jitter: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convergence of the rescaled bridge covariance to its limit.
    Converge {
        #[command(flatten)]
        model: ModelArgs,
        /// Strictly decreasing, at least three values (default 0.1,0.05,0.025,0.0125).
        #[arg(long)]
        eps_list: Option<String>,
        #[arg(long, default_value = DEFAULT_GRID)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Writes the model as a model file.
    Export {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value_t = FileFormat::Json)]
        format: FileFormat,
        /// Output file (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Relative tolerance of the controllability rank test.
    #[arg(long)]
    rank_tol: Option<f64>,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// JSON or TOML model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// kolmogorov, ou_area, sec43 or iterated_kolmogorov:D.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FileFormat {
    Json,
    Toml,
}

impl ModelArgs {
    fn resolve(&self) -> Result<Source, CliError> {
        if let Some(tol) = self.rank_tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(CliError::Usage(format!("--rank-tol must lie in (0, 1), got {tol}")));
            }
        }
        match (&self.source.model, &self.source.preset) {
            (Some(path), _) => Source::from_file(path, self.rank_tol),
            (None, Some(name)) => Source::from_preset(name, self.rank_tol),
            (None, None) => unreachable!("clap requires one source"),
        }
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn print_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("outputs always serialize");
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze { model, out } => {
            let analysis = commands::analyze(&model.resolve()?)?;
            if let Some(dir) = out {
                commands::ensure_dir(&dir)?;
                let path = dir.join("analysis.json");
                let text = serde_json::to_string_pretty(&analysis).expect("outputs always serialize") + "\n";
                fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
            }
            print_json(&analysis)
        }
        Command::Bridge { model, eps, x, y, grid, paths, seed, jitter, out } => {
            let src = model.resolve()?;
            let opts = BridgeOptions {
                eps,
                x: x.map(|s| parse_list("--x", &s)).transpose().map_err(usage)?,
                y: y.map(|s| parse_list("--y", &s)).transpose().map_err(usage)?,
                grid: parse_grid(&grid).map_err(usage)?,
                paths,
                seed,
                jitter,
            };
            print_json(&commands::bridge(&src, &opts, &out)?)
        }
        Command::Converge { model, eps_list, grid, out } => {
            let src = model.resolve()?;
            let eps = match eps_list {
                Some(s) => parse_list("--eps-list", &s).map_err(usage)?,
                None => DEFAULT_EPS_LIST.to_vec(),
            };
            let grid = parse_grid(&grid).map_err(usage)?;
            let report = commands::converge(&src, &eps, &grid, &out)?;
            print_json(&serde_json::json!({
                "rows": report.rows,
                "cov_slope": report.cov_slope,
                "alpha_slope": report.alpha_slope,
            }))
        }
        Command::Export { model, format, out } => {
            let src = model.resolve()?;
            let file = ModelFile::from_spec(&src.spec, Some(src.labels));
            let format = match format {
                FileFormat::Json => Format::Json,
                FileFormat::Toml => Format::Toml,
            };
            let text = file.render(format);
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| CliError::io(&path, e)),
                None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError::io("<stdout>", e)),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::from(EXIT_OK),
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK),
        Err(e) => {
            eprintln!("hypobridge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
