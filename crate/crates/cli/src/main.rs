use clap::{Parser, Subcommand};
use horolab_cli::config::{ConfigError, ExperimentConfig, DEFAULT_CONFIG};
use horolab_cli::runner::{run, RunOptions};
use horolab_cli::suites;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "horolab", version, about = "Numerical experiments on manifolds without focal points")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat any failure, including documented expected ones, as a nonzero exit.
    #[arg(long, global = true)]
    strict: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment of a configuration file.
    Run { config: String },
    /// Check a configuration file and print diagnostics.
    Validate { config: String },
    /// List registered models and their flags.
    Models,
    /// Run a named acceptance suite (`acceptance` runs all of them).
    Suite { name: String },
    /// Print a configuration exercising every experiment kind.
    DefaultConfig,
}

fn load(path: &str) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        match &e {
            ConfigError::Invalid(diags) => {
                for d in diags {
                    eprintln!("error: {d}");
                }
            }
            other => eprintln!("error: {other}"),
        }
        ExitCode::from(2)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            let opts = RunOptions { threads: cli.threads, seed: cli.seed, out: cli.out };
            match run(&cfg, &opts) {
                Ok((manifest, _)) => {
                    for e in &manifest.experiments {
                        let verdict = serde_json::to_value(e.verdict).unwrap();
                        let msg = e.message.as_deref().map(|m| format!(": {m}")).unwrap_or_default();
                        println!("{:<24} {:<18} {}{msg}", e.name, e.kind, verdict.as_str().unwrap_or("?"));
                    }
                    println!("wall time {:.2} s, config {}", manifest.wall_time_seconds, &manifest.config_hash[..12]);
                    if manifest.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("ok: {} experiment(s), config {}", cfg.experiments.len(), &cfg.hash()[..12]);
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Models => {
            let mut out = std::io::stdout().lock();
            for m in horolab_cli::runner::model_registry() {
                if writeln!(out, "{m}").is_err() {
                    break;
                }
            }
            ExitCode::SUCCESS
        }
        Command::DefaultConfig => {
            print!("{DEFAULT_CONFIG}");
            ExitCode::SUCCESS
        }
        Command::Suite { name } => {
            let ids = match suites::select(&name) {
                Ok(ids) => ids,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let opts = suites::SuiteOptions { threads: cli.threads, seed: cli.seed.unwrap_or(1), out: cli.out };
            let reports = suites::run_suites(&ids, &opts);
            let mut failed = false;
            for r in &reports {
                println!("{}", r.summary_line());
                for c in r.checks.iter().filter(|c| !c.passed) {
                    println!("    {c}");
                }
                for e in &r.errors {
                    println!("    error: {e}");
                }
                if let (false, Some(why)) = (r.passed, &r.expected_failure) {
                    println!("    expected: {why}");
                }
                failed |= !r.passed && (cli.strict || r.expected_failure.is_none());
            }
            if let Some(dir) = &opts.out {
                if let Err(e) = suites::write_reports(dir, &reports) {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            if failed {
                ExitCode::FAILURE
            } else {
                ExitCode::SUCCESS
            }
        }
    }
}
