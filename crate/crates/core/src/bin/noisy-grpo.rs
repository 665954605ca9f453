//! Command-line front end: one subcommand per experiment kind.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use noisy_grpo::experiment::{
    parse_table, run_experiment, ConfigError, ExperimentError, ExperimentKind, MANIFEST_TABLE,
};
use toml::{Table, Value};

#[derive(Parser)]
#[command(
    name = "noisy-grpo",
    version,
    about = "Reward-noise experiments for group-relative policy optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure flip statistics of noise modes on random ground truth.
    NoiseStats(RunArgs),
    /// Gaussian-policy gradient descent on the noisy Ackley function.
    Ackley(RunArgs),
    /// Noise-rate sweep of the synthetic softmax trainer.
    SyntheticSweep(RunArgs),
    /// Per-batch verifier confusion metrics for one noise setting.
    MetricsDemo(RunArgs),
    /// Run whatever kind the config (or a previous manifest) declares.
    Run(RunArgs),
    /// Print the fully resolved config without running anything.
    Resolve {
        #[command(flatten)]
        args: RunArgs,
        /// Kind to resolve when the config does not name one.
        #[arg(long)]
        kind: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Master seed; every random draw of the run derives from it.
    #[arg(long)]
    seed: u64,
    /// Config file (TOML). A previous run's manifest.toml works too.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overrides `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one parameter of the kind's section, e.g. `--set steps=100`
    /// or `--set 'noise_levels=[0, 2]'`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load(args: &RunArgs, kind: Option<ExperimentKind>) -> Result<Table, ConfigError> {
    let mut table = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
            text.parse::<Table>()
                .map_err(|e| ConfigError::Parse(format!("{}: {e}", path.display())))?
        }
        None => Table::new(),
    };
    table.remove(MANIFEST_TABLE);

    if let Some(kind) = kind {
        match table.get("kind").and_then(Value::as_str) {
            Some(declared) if declared != kind.as_str() => {
                return Err(ConfigError::Invalid(format!(
                    "config declares kind `{declared}` but subcommand is `{kind}`"
                )))
            }
            _ => {
                table.insert("kind".into(), Value::String(kind.as_str().into()));
            }
        }
    }
    let kind_name = table
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| ConfigError::Invalid("config does not declare `kind`".into()))?
        .to_string();

    let seed = i64::try_from(args.seed)
        .map_err(|_| ConfigError::Invalid(format!("--seed {} must fit in a signed 64-bit integer", args.seed)))?;
    table.insert("seed".into(), Value::Integer(seed));
    if let Some(out) = &args.out {
        table.insert("output_dir".into(), Value::String(out.display().to_string()));
    }

    if !args.overrides.is_empty() {
        let section = ExperimentKind::ALL
            .iter()
            .find(|k| k.as_str() == kind_name)
            .map(|k| k.section())
            .ok_or_else(|| ConfigError::Invalid(format!("unknown kind `{kind_name}`")))?;
        let entry = table
            .entry(section.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        let Value::Table(section_table) = entry else {
            return Err(ConfigError::Invalid(format!("`{section}` must be a table")));
        };
        for item in &args.overrides {
            let parsed: Table = item
                .parse()
                .map_err(|e| ConfigError::Parse(format!("--set {item}: {e}")))?;
            section_table.extend(parsed);
        }
    }
    Ok(table)
}

fn execute(command: Command) -> Result<(), ExperimentError> {
    let (args, kind) = match &command {
        Command::NoiseStats(a) => (a, Some(ExperimentKind::NoiseStats)),
        Command::Ackley(a) => (a, Some(ExperimentKind::Ackley)),
        Command::SyntheticSweep(a) => (a, Some(ExperimentKind::SyntheticSweep)),
        Command::MetricsDemo(a) => (a, Some(ExperimentKind::MetricsDemo)),
        Command::Run(a) => (a, None),
        Command::Resolve { args, kind } => {
            let kind = kind
                .as_deref()
                .map(|k| {
                    ExperimentKind::ALL
                        .into_iter()
                        .find(|e| e.as_str() == k)
                        .ok_or_else(|| ConfigError::Invalid(format!("unknown kind `{k}`")))
                })
                .transpose()?;
            let config = parse_table(load(args, kind)?)?;
            print!("{}", config.to_toml());
            return Ok(());
        }
    };
    let config = parse_table(load(args, kind)?)?;
    let artifacts = run_experiment(&config)?;
    println!("{}", artifacts.summary.display());
    for path in &artifacts.extra {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
