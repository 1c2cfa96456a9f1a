//! `pidtwin`: builds simulation-ready process models from P&ID descriptions.
//!
//! Exit codes: 0 success, 1 usage, I/O, parse or operation error, 2 validation
//! errors found, 3 solver error.

mod ops;
mod pipeline;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ops::{ExportFormat, Result};

#[derive(Parser)]
#[command(name = "pidtwin", version, about = "Build simulation-ready process models from P&ID descriptions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a PIDL or GraphJSON file and write canonical GraphJSON.
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the consistency checks; exits 2 when any error is found.
    Validate {
        input: PathBuf,
        /// `steady`, `dynamic` or a profile JSON file.
        #[arg(long, default_value = "steady")]
        profile: String,
    },
    /// Reduce the graph to what a fidelity profile retains.
    Filter {
        input: PathBuf,
        /// `steady`, `dynamic` or a profile JSON file.
        #[arg(long)]
        profile: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Apply a simulator rule set.
    Rewrite {
        input: PathBuf,
        #[arg(long)]
        rules: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Where to write the rewrite log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Merge two models of the same plant.
    Merge {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        policy: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Where to write the conflict list.
        #[arg(long)]
        conflicts: Option<PathBuf>,
    },
    /// Solve the steady-state flow balance.
    Solve {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write DOT, GraphML or a simulation model spec.
    Export {
        input: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the steps listed in a pipeline config.
    Pipeline { config: PathBuf },
}

fn cwd() -> &'static Path {
    Path::new(".")
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { input, output } => {
            let g = ops::load_graph(&input)?;
            ops::write_text(&output, &ops::graph_text(&g))
        }
        Command::Validate { input, profile } => {
            let g = ops::load_graph(&input)?;
            ops::check(&g, &ops::load_profile(&profile, cwd())?)
        }
        Command::Filter { input, profile, output } => {
            let g = ops::load_graph(&input)?;
            let out = ops::filter(&g, &ops::load_profile(&profile, cwd())?)?;
            ops::write_text(&output, &ops::graph_text(&out))
        }
        Command::Rewrite {
            input,
            rules,
            output,
            log,
        } => {
            let g = ops::load_graph(&input)?;
            let (out, entries) = ops::rewrite(&g, &ops::load_rules(&rules)?)?;
            if let Some(path) = log {
                ops::write_text(&path, &entries.to_json())?;
            }
            ops::write_text(&output, &ops::graph_text(&out))
        }
        Command::Merge {
            a,
            b,
            policy,
            output,
            conflicts,
        } => {
            let (ga, gb) = (ops::load_graph(&a)?, ops::load_graph(&b)?);
            let (out, found) = ops::merge_graphs(&ga, &gb, &ops::load_policy(policy.as_deref())?)?;
            if let Some(path) = conflicts {
                ops::write_text(&path, &ops::conflicts_text(&found))?;
            }
            ops::write_text(&output, &ops::graph_text(&out))
        }
        Command::Solve { input, output } => {
            let solution = ops::solve(&ops::load_graph(&input)?)?;
            ops::write_text(&output, &solution.to_json())
        }
        Command::Export { input, format, output } => {
            let text = ops::export(&ops::load_graph(&input)?, format)?;
            ops::write_text(&output, &text)
        }
        Command::Pipeline { config } => {
            let parsed = pipeline::PipelineConfig::from_json(&ops::read_text(&config)?)?;
            let base = config.parent().unwrap_or(cwd());
            pipeline::run(&parsed, base)
        }
    }
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
