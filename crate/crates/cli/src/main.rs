use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lingam_order::{NoiseFamily, SortMode};
use lingam_order_cli::commands::{self, FitArgs, NeighborhoodArg, SortArgs};
use lingam_order_cli::{CliError, Result};

#[derive(Parser)]
#[command(name = "lingam-order", version, about = "Topological ordering estimation for linear non-Gaussian SEMs")]
struct Cli {
    /// Log progress to stderr (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only log errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a weighted DAG and data from a TOML config.
    Generate {
        config: PathBuf,
        #[arg(long, default_value = "data.csv")]
        data: PathBuf,
        #[arg(long, default_value = "truth.json")]
        truth: PathBuf,
    },
    /// Estimate a topological ordering from a data CSV.
    Sort {
        data: PathBuf,
        /// laplace, logistic or scaled-t:<df>
        #[arg(long, default_value = "laplace", value_parser = parse_family)]
        family: NoiseFamily,
        #[arg(long, default_value = "fast", value_parser = parse_mode)]
        mode: SortMode,
        /// full, <file.json>, corr:<m>:<frac>:<seed> or mb:<truth.json>
        #[arg(long, default_value = "full", value_parser = NeighborhoodArg::parse)]
        neighborhoods: NeighborhoodArg,
        /// Record candidate scores at every step.
        #[arg(long)]
        trace: bool,
        /// Only regress on sorted columns inside the target's own neighborhood.
        #[arg(long)]
        restrict_updates: bool,
        /// Report wall time (makes the output run-dependent).
        #[arg(long)]
        timings: bool,
        /// Output file; stdout when omitted.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Compare an ordering with the truth file.
    Eval { truth: PathBuf, ordering: PathBuf },
    /// Run a replicate grid from a TOML config and write JSON lines.
    Benchmark {
        config: PathBuf,
        #[arg(short, long, default_value = "results.jsonl")]
        out: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Record wall time per replicate.
        #[arg(long)]
        timings: bool,
    },
    /// Fit SEM coefficients along an ordering on training data.
    Fit {
        data: PathBuf,
        ordering: PathBuf,
        #[arg(long, default_value = "laplace", value_parser = parse_family)]
        family: NoiseFamily,
        #[arg(long, default_value = "full", value_parser = NeighborhoodArg::parse)]
        neighborhoods: NeighborhoodArg,
        #[arg(short, long, default_value = "model.json")]
        out: PathBuf,
    },
    /// Mean held-out log-likelihood of a fitted model on test data.
    Loglik { model: PathBuf, test: PathBuf },
}

fn parse_family(s: &str) -> std::result::Result<NoiseFamily, String> {
    NoiseFamily::parse(s).map_err(|e| e.to_string())
}

fn parse_mode(s: &str) -> std::result::Result<SortMode, String> {
    SortMode::parse(s).map_err(|e| e.to_string())
}

struct StderrLogger;

static LOGGER: StderrLogger = StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, m: &log::Metadata) -> bool {
        m.level() <= log::max_level()
    }

    fn log(&self, r: &log::Record) {
        if self.enabled(r.metadata()) {
            let _ = writeln!(std::io::stderr(), "{}: {}", r.level().as_str().to_lowercase(), r.args());
        }
    }

    fn flush(&self) {}
}

fn run(command: Command) -> Result<Option<String>> {
    match command {
        Command::Generate { config, data, truth } => commands::generate(&config, &data, &truth).map(|_| None),
        Command::Sort { data, family, mode, neighborhoods, trace, restrict_updates, timings, out } => {
            let args = SortArgs { data, out, family, mode, neighborhoods, trace, restrict_updates, timings };
            commands::sort_cmd(&args).map(Some)
        }
        Command::Eval { truth, ordering } => commands::eval(&truth, &ordering).map(Some),
        Command::Benchmark { config, out, threads, timings } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads.unwrap_or(0))
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            pool.install(|| commands::benchmark(&config, &out, timings)).map(|_| None)
        }
        Command::Fit { data, ordering, family, neighborhoods, out } => {
            commands::fit(&FitArgs { data, ordering, family, neighborhoods, out }).map(|_| None)
        }
        Command::Loglik { model, test } => commands::loglik(&model, &test).map(Some),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    log::set_logger(&LOGGER).expect("logger set once");
    log::set_max_level(level);

    match run(cli.command) {
        Ok(out) => {
            if let Some(s) = out.filter(|s| !s.is_empty()) {
                print!("{s}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
