use std::path::PathBuf;
use std::process::ExitCode;

use boke_cli::config::{load_experiment, load_fill};
use boke_cli::fill::{report_fill, write_fill};
use boke_cli::matrix::{run_matrix, summarize_dir};
use boke_cli::CliError;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "boke", version, about = "Run kernel-regression Bayesian optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (problem, algorithm, seed) combination of a config.
    Run {
        config: PathBuf,
        /// Overrides the config's `output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Measure fill distance of space-filling designs.
    Fill {
        config: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rebuild summary.json from the trace files in a directory.
    Summarize { dir: PathBuf },
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, output } => {
            let cfg = load_experiment(&config)?;
            let out = output.unwrap_or_else(|| cfg.output.clone());
            let result = run_matrix(&cfg, &out)?;
            println!("wrote {} traces and summary.json to {}", result.trace_files.len(), out.display());
            if result.incomplete_runs > 0 {
                eprintln!("{} run(s) stopped early; see `incomplete` in summary.json", result.incomplete_runs);
            }
        }
        Command::Fill { config, output } => {
            let cfg = load_fill(&config)?;
            let out = output.unwrap_or_else(|| cfg.output.clone());
            let report = report_fill(&cfg)?;
            write_fill(&report, &out)?;
            for s in &report.slopes {
                println!("{:<20} d={} slope={:.3}", s.method, s.d, s.slope);
            }
        }
        Command::Summarize { dir } => {
            let summary = summarize_dir(&dir)?;
            let runs: usize = summary.values().flat_map(|m| m.values()).map(|s| s.runs).sum();
            println!("summarized {runs} runs into {}", dir.join("summary.json").display());
        }
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
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
