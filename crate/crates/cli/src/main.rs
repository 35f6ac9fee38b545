use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amalfree_cli::config::ExperimentConfig;
use amalfree_cli::error::CliError;
use amalfree_cli::presets::{self, PRESETS};
use amalfree_cli::runner::{self, RunOptions};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "amalfree", version, about = "Numerical checks on truncated amalgamated free products and free groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Path to a JSON experiment config.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Use a built-in preset instead of a file.
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write CSV tables plus summary.json.
    Run {
        #[command(flatten)]
        source: Source,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory (default: the config's `output`, else `out`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Refuse Fock spaces larger than this.
        #[arg(long)]
        max_dim: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the built-in presets.
    ListPresets,
    /// Parse and check a config without running it.
    Validate {
        #[command(flatten)]
        source: Source,
    },
}

fn load(source: &Source) -> Result<ExperimentConfig, CliError> {
    if let Some(name) = &source.preset {
        let preset = presets::find(name).ok_or_else(|| CliError::UnknownPreset(name.clone()))?;
        return ExperimentConfig::from_value((preset.config)());
    }
    let path = source.config.as_deref().expect("clap enforces a source");
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::parse(&text)
}

fn run(source: &Source, jobs: Option<usize>, out: Option<&Path>, opts: RunOptions) -> Result<bool, CliError> {
    let cfg = load(source)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().expect("thread pool");
    let report = pool.install(|| runner::run(&cfg, opts))?;
    let dir = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from(cfg.output.as_deref().unwrap_or("out")));
    let written = report.write(&dir, &cfg.raw)?;
    for check in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("FAIL {}", check.name);
    }
    println!(
        "{}: {} checks, {} failed, {:.2}s",
        cfg.kind,
        report.checks.len(),
        report.failures(),
        report.seconds
    );
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::ListPresets => {
            for p in PRESETS {
                println!("{:<18} {}", p.name, p.description);
                println!("{:<18} checks: {}", "", p.statement);
            }
            Ok(true)
        }
        Command::Validate { source } => load(source).and_then(|cfg| {
            runner::validate(&cfg)?;
            println!("{}: ok", cfg.kind);
            Ok(true)
        }),
        Command::Run {
            source,
            jobs,
            out,
            max_dim,
            seed,
        } => run(
            source,
            *jobs,
            out.as_deref(),
            RunOptions {
                seed: *seed,
                max_dim: *max_dim,
            },
        ),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            if let Some(p) = e.pointer() {
                eprintln!("pointer: {p}");
            }
            ExitCode::from(2)
        }
    }
}
