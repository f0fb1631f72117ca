use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mvcert::cli::{self, OutputFormat, SweepAxis};
use mvcert::config::{Method, RunConfig};
use mvcert::train;
use mvcert::Result;

/// Learn stochastic majority votes by minimizing PAC-Bayes certificates.
#[derive(Parser)]
#[command(name = "mvcert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one run and write its artifacts.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Run directory (defaults to `output` in the config, then runs/<method>-<seed>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the certificate of a finished run.
    Certify { run: PathBuf },
    /// Mean and std of test error and certificate per method and dataset.
    Compare {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a grid over one axis, for several seeds and methods.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// n, M, depth, sigma2 or beta.
        #[arg(long)]
        axis: String,
        /// Comma-separated grid values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Comma-separated seeds (default: the config seed).
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        /// Comma-separated methods (default: the config method).
        #[arg(long, value_delimiter = ',')]
        methods: Vec<String>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML run config; defaults apply to anything left out.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Override a config field, e.g. `--set optimizer.learning_rate=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }
    }
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut overrides = self.overrides.clone();
        if let Some(m) = &self.method {
            overrides.push(format!("method=\"{m}\""));
        }
        if let Some(s) = self.seed {
            overrides.push(format!("seed={s}"));
        }
        if let Some(d) = self.delta {
            overrides.push(format!("delta={d}"));
        }
        RunConfig::load_with_overrides(self.config.as_deref(), &overrides)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn cmd_train(cfg: RunConfig, out: Option<PathBuf>) -> Result<()> {
    let dir = out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| Path::new("runs").join(format!("{}-{}", cfg.method.name(), cfg.seed)));
    let run = train::run(&cfg)?;
    train::write_artifacts(&dir, &cfg, &run)?;
    eprintln!("wrote {}", dir.display());
    print_json(&run.report)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { config, out } => cmd_train(config.load()?, out),
        Command::Certify { run } => print_json(&train::certify_dir(&run)?),
        Command::Compare { runs, format, out } => {
            let rows = cli::compare_dirs(&runs)?;
            cli::write_rows_to(&rows, format.into(), out.as_deref())
        }
        Command::Sweep {
            config,
            axis,
            grid,
            seeds,
            methods,
            format,
            out,
        } => {
            let base = config.load()?;
            let axis: SweepAxis = axis.parse()?;
            let seeds = if seeds.is_empty() { vec![base.seed] } else { seeds };
            let methods = if methods.is_empty() {
                vec![base.method]
            } else {
                methods.iter().map(|m| m.parse::<Method>()).collect::<Result<Vec<_>>>()?
            };
            let rows = cli::sweep(&base, axis, &grid, &seeds, &methods)?;
            cli::write_rows_to(&rows, format.into(), out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
