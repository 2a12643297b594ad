use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use orbital_rmt_cli::{config::Experiment, describe, output, parse_config, resolve_workers, run, selftest, with_workers};

#[derive(Parser)]
#[command(name = "orbital-rmt", version, about = "Monte Carlo experiments on random block operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output path prefix; overrides `output` in the config.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Worker threads; overrides ORBITAL_RMT_WORKERS.
        #[arg(short, long)]
        workers: Option<usize>,
    },
    /// Parse and validate a config, then print it with every default filled in.
    Validate { config: PathBuf },
    /// Print the parameter schema and the statement an experiment tests.
    Describe { experiment: Option<String> },
    /// Run the fast oracle checks.
    Selftest,
}

fn load(path: &PathBuf) -> Result<orbital_rmt_cli::ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_config(&text).map_err(|e| format!("{}:\n{e}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                print!("{}", cfg.to_toml());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{e}");
                ExitCode::from(2)
            }
        },
        Command::Describe { experiment } => match experiment {
            None => {
                print!("{}", describe::list());
                ExitCode::SUCCESS
            }
            Some(name) => match name.parse::<Experiment>() {
                Ok(e) => {
                    print!("{}", describe::describe(e));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            },
        },
        Command::Selftest => {
            let start = Instant::now();
            let results = selftest::run_selftest();
            let failed = results.iter().filter(|(_, r)| r.is_err()).count();
            for (name, r) in &results {
                match r {
                    Ok(()) => println!("PASS  {name}"),
                    Err(msg) => println!("FAIL  {name}: {msg}"),
                }
            }
            println!("{} checks, {failed} failed, {:.2}s", results.len(), start.elapsed().as_secs_f64());
            if failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Run { config, output: out, workers } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{e}");
                    return ExitCode::from(2);
                }
            };
            let Some(prefix) = out.or_else(|| cfg.output.as_ref().map(PathBuf::from)) else {
                eprintln!("error: no output prefix (set `output` in the config or pass --output)");
                return ExitCode::from(2);
            };
            let workers = match resolve_workers(workers) {
                Ok(w) => w,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let start = Instant::now();
            let result = match with_workers(workers, || run(&cfg)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {} failed: {e}", cfg.experiment);
                    return ExitCode::FAILURE;
                }
            };
            let secs = start.elapsed().as_secs_f64();
            let written = output::write_results(&cfg, &result, &prefix)
                .and_then(|(j, c)| output::write_timing(&prefix, secs, workers).map(|t| (j, c, t)));
            match written {
                Ok((j, c, t)) => {
                    println!("{}", serde_json::to_string_pretty(&result.summary).unwrap_or_default());
                    eprintln!("wrote {}, {} ({:.2}s on {workers} workers, see {})", j.display(), c.display(), secs, t.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: writing results: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
