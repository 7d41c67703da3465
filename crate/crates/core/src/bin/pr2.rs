use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pr2_core::harness::{self, ExperimentConfig, LearnerId, Summary};

#[derive(Parser)]
#[command(name = "pr2", about = "Run and summarize recursive-reasoning multi-agent experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute every seed of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds, replacing the config's list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List learner ids and the game each plays.
    ListLearners,
    /// Recompute and print the summary of an output directory.
    Summarize {
        #[arg(long)]
        out: PathBuf,
    },
    Version,
}

fn print_summary(s: &Summary) {
    println!("{} ({} runs)", s.name, s.runs.len());
    for c in &s.criteria {
        println!(
            "  {:<12} {:>2}/{:<2} {} [{}]",
            c.name,
            c.successes,
            c.runs,
            if c.passed { "PASS" } else { "FAIL" },
            c.description
        );
    }
    if let Some(m) = s.final_mean_reward {
        println!("  final mean reward {m:.4}");
    }
    for r in s.runs.iter().filter(|r| r.aborted.is_some()) {
        println!("  seed {} aborted: {}", r.seed, r.aborted.as_deref().unwrap_or(""));
    }
    for w in &s.warnings {
        println!("  warning: {w}");
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, seeds, out } => {
            let mut config = match ExperimentConfig::from_file(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(seeds) = seeds {
                config.seeds = seeds;
            }
            match harness::run_experiment(&config, &out) {
                Ok(summary) => {
                    print_summary(&summary);
                    if harness::all_runs_failed(&summary) {
                        return ExitCode::from(2);
                    }
                    ExitCode::SUCCESS
                }
                Err(e @ pr2_core::Error::Config(_)) => {
                    eprintln!("config error: {e}");
                    ExitCode::from(1)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::ListLearners => {
            for l in LearnerId::ALL {
                println!(
                    "{:<10} {:<13} {}",
                    l.as_str(),
                    harness::game_name(l.game()),
                    l.description()
                );
            }
            ExitCode::SUCCESS
        }
        Command::Summarize { out } => match harness::summarize_dir(&out) {
            Ok(s) => {
                print_summary(&s);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::Version => {
            println!("pr2 {}", env!("CARGO_PKG_VERSION"));
            ExitCode::SUCCESS
        }
    }
}
