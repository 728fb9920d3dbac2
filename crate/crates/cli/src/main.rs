use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bottleneck_cli::commands::{self, Outcome};
use bottleneck_cli::config::{parse_config, CommandKind, ExperimentConfig, Format, Overrides, Settings};
use bottleneck_cli::CliError;

#[derive(Parser, Debug)]
#[command(name = "bottleneck", version, about = "Quantum Fisher information through a bottleneck channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config file, or `-` for stdin
    #[arg(long, global = true)]
    config: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Points of the α grid over [0, 2π]
    #[arg(long = "alpha-points", global = true)]
    alpha_points: Option<usize>,
    /// Hurwitz grid resolution `<n_theta>x<n_phi>`
    #[arg(long, global = true)]
    grid: Option<String>,
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// J_B over an α grid for one generator and probe
    Qfi,
    /// Gap Δ(t₊, α) for the case-iii probe family
    Contour,
    /// Best sampled probe at fixed α
    Optimize,
    /// Two-copy J for a four-qubit probe
    TwoCopy,
    /// Randomized checks of the continuity bounds
    Continuity,
    /// Random generators with vanishing I⊗σⱼ terms against the full-access maximum
    Conjecture,
    /// Listed inputs of the σ₁⊗σ₁ + t₂₂σ₂⊗σ₂ + t₃₃σ₃⊗σ₃ family
    AppendixB,
}

impl From<Command> for CommandKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Qfi => CommandKind::Qfi,
            Command::Contour => CommandKind::Contour,
            Command::Optimize => CommandKind::Optimize,
            Command::TwoCopy => CommandKind::TwoCopy,
            Command::Continuity => CommandKind::Continuity,
            Command::Conjecture => CommandKind::Conjecture,
            Command::AppendixB => CommandKind::AppendixB,
        }
    }
}

fn load_config(source: Option<&str>) -> Result<ExperimentConfig, CliError> {
    let text = match source {
        None => return Ok(ExperimentConfig::default()),
        Some("-") => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            s
        }
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config: cannot read {path}: {e}")))?,
    };
    parse_config(&text)
}

fn execute(cli: Cli) -> Result<(Outcome, Settings), CliError> {
    let config = load_config(cli.config.as_deref())?;
    let settings = Settings::resolve(
        config,
        Overrides {
            seed: cli.seed,
            format: cli.format,
            alpha_points: cli.alpha_points,
            grid: cli.grid,
            trials: cli.trials,
            output: cli.out,
        },
    )?;
    let outcome = commands::run(cli.command.into(), &settings)?;
    let text = outcome.table.render(settings.format);
    match &settings.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok((outcome, settings))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok((outcome, _)) => {
            for line in &outcome.summary {
                eprintln!("{line}");
            }
            if outcome.violations > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
