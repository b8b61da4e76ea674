use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use paramfp::experiment::{self, ExperimentConfig, ExperimentKind};
use paramfp::Error;

#[derive(Parser)]
#[command(name = "paramfp", version, about = "Parametric Fokker-Planck experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run { config: PathBuf },
    /// Run two configs and compare their snapshots.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        /// Directory for the comparison report (default: <a.output_dir>/compare).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the default double-well config.
    PrintDefaultConfig,
}

fn load(path: &PathBuf) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(dir) = std::env::var_os("OUTPUT_DIR") {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

fn main_inner(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config } => {
            let cfg = load(&config)?;
            if cfg.experiment == ExperimentKind::Compare {
                let r = experiment::compare_from_config(&cfg)?;
                println!("max_w1={} terminal_w1={}", r.max_w1, r.terminal_w1);
            } else {
                let out = experiment::run(&cfg)?;
                println!("{}", out.config.output_dir.display());
            }
        }
        Command::Compare { config_a, config_b, output } => {
            let a = load(&config_a)?;
            let b = load(&config_b)?;
            let dir = output.unwrap_or_else(|| experiment::default_compare_dir(&a));
            let r = experiment::compare(&a, &b, &dir)?;
            println!("max_w1={} terminal_w1={}", r.max_w1, r.terminal_w1);
        }
        Command::PrintDefaultConfig => {
            print!("{}", ExperimentConfig::default_double_well().resolved().to_toml_string()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match main_inner(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let text = e.to_string();
            let msg = text.split_whitespace().collect::<Vec<_>>().join(" ").replace('"', "'");
            eprintln!("error kind={} message=\"{msg}\"", e.kind());
            ExitCode::FAILURE
        }
    }
}
