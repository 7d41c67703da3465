//! Experiment orchestration: configuration, seeded runs on a bounded worker
//! pool, per-run CSV files and a JSON summary.

mod config;
mod output;
mod runner;
mod summary;

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

pub use config::{game_name, ExperimentConfig, GameId, LearnerId, Thresholds};
pub use output::{read_csv, run_file, summary_file, to_csv, write_atomic, CSV_HEADER};
pub use runner::{distance_to, play, run_seed, RunOutcome, RunRecord};
pub use summary::{build_summary, summarize_run, ContourPoint, CriterionResult, RunSummary, Summary};

use crate::{Error, Result};

/// Runs every seed of `config`, at most `config.workers` at a time. Results come
/// back in seed-list order whatever the scheduling.
pub fn run_all(config: &ExperimentConfig) -> Result<Vec<RunOutcome>> {
    config.validate()?;
    keep_large_allocations();
    let seeds = &config.seeds;
    let workers = match config.workers {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(seeds.len())
    .max(1);
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<Result<RunOutcome>>>> =
        seeds.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= seeds.len() {
                    break;
                }
                let out = run_seed(config, seeds[i]);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every seed ran"))
        .collect()
}

/// Network passes allocate multi-megabyte temporaries every step. glibc serves
/// those with mmap/munmap by default, which costs more than the arithmetic.
fn keep_large_allocations() {
    #[cfg(all(target_os = "linux", target_env = "gnu"))]
    {
        static ONCE: std::sync::Once = std::sync::Once::new();
        ONCE.call_once(|| unsafe {
            libc::mallopt(libc::M_MMAP_THRESHOLD, 256 << 20);
            libc::mallopt(libc::M_TRIM_THRESHOLD, 256 << 20);
        });
    }
}

/// Runs the experiment and writes `run_<seed>.csv` files plus `summary.json`
/// into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<Summary> {
    let started = Instant::now();
    let mut warnings = Vec::new();
    if config.seeds.is_empty() {
        warnings.push("no seeds configured; nothing was run".to_string());
        log::warn!("{}: no seeds configured", config.name);
    }
    let runs = run_all(config)?;
    std::fs::create_dir_all(out_dir)?;
    for run in &runs {
        if let Some(reason) = &run.abort {
            log::warn!("seed {} aborted: {reason}", run.seed);
        }
        write_atomic(&run_file(out_dir, run.seed), &to_csv(&run.records)?)?;
    }
    let summary = build_summary(config, &runs, warnings, started.elapsed().as_millis() as u64);
    write_summary(out_dir, &summary)?;
    Ok(summary)
}

pub fn write_summary(out_dir: &Path, summary: &Summary) -> Result<()> {
    let mut json = serde_json::to_vec_pretty(summary)?;
    json.push(b'\n');
    write_atomic(&summary_file(out_dir), &json)
}

/// Rebuilds the summary of an output directory from its CSV files, using the
/// configuration and abort reasons recorded in the existing summary.
pub fn summarize_dir(out_dir: &Path) -> Result<Summary> {
    let path = summary_file(out_dir);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let previous: Summary = serde_json::from_str(&text)?;
    let runs = previous
        .runs
        .iter()
        .map(|r| {
            Ok(RunOutcome {
                seed: r.seed,
                records: read_csv(&run_file(out_dir, r.seed))?,
                abort: r.aborted.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(build_summary(&previous.config, &runs, previous.warnings, previous.elapsed_ms))
}

/// True when at least one seed ran and every run aborted.
pub fn all_runs_failed(summary: &Summary) -> bool {
    !summary.runs.is_empty() && summary.runs.iter().all(|r| r.aborted.is_some())
}
