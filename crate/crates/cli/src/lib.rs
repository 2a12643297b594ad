//! Configuration parsing, experiment dispatch and result files for the `orbital-rmt` binary.

pub mod config;
pub mod defaults;
pub mod describe;
pub mod output;
pub mod run;
pub mod selftest;

pub use config::{parse_config, ConfigErrors, Experiment, ExperimentConfig};
pub use output::{render_csv, render_jsonl, write_results};
pub use run::{run, RunOutput};

/// Environment variable holding the worker count; all cores when unset.
pub const WORKERS_ENV: &str = "ORBITAL_RMT_WORKERS";

/// Worker count from an explicit value, else the environment, else the core count.
pub fn resolve_workers(explicit: Option<usize>) -> Result<usize, String> {
    if let Some(w) = explicit {
        return if w == 0 { Err("worker count must be at least 1".into()) } else { Ok(w) };
    }
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w > 0 => Ok(w),
            _ => Err(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")),
        },
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}
