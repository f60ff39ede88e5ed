//! `mindetect`: batch verification commands with JSON reports and CSV data.

mod commands;
mod error;
mod prefix;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{DetectArgs, GapStatsArgs};
use error::CliResult;
use prefix::SeqChoice;
use report::RunReport;

const LEMMA2_DEFAULT_LENGTH: u64 = 3 * (1 << 14) + 3;

#[derive(Debug, Parser)]
#[command(name = "mindetect", version, about = "Minimality checks on finite prefixes")]
struct Cli {
    /// Largest prefix any command may materialize or scan.
    #[arg(long, global = true, env = "TOEPLITZ_MAX_PREFIX", default_value_t = 1 << 24)]
    max_prefix: u64,

    /// Add `wall_time_ms` to the report.
    #[arg(long, global = true)]
    timing: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a prefix of x, b or toy:<c> as CSV with exact fractions.
    GenPrefix {
        #[arg(long, default_value = "x")]
        seq: SeqChoice,
        #[arg(long)]
        length: u64,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Minimum distance of every later 3-block of x from its first block.
    CheckLemma2 {
        #[arg(long, default_value_t = LEMMA2_DEFAULT_LENGTH)]
        length: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Window recurrence of every short block of the V-seeded Toeplitz sequence.
    CheckLemma1 {
        #[arg(long, default_value_t = 1 << 16)]
        length: u64,
        #[arg(long, default_value_t = 32)]
        block_len: usize,
        #[arg(long, default_value_t = 10)]
        max_level: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recurrence of the image of x under a continuous function.
    ImageTest {
        /// JSON spec file, or `bundled:<name>`.
        #[arg(long)]
        spec: String,
        #[arg(long)]
        epsilon: f64,
        /// Largest edge-enumeration index tried for the surrogate point.
        #[arg(long, default_value_t = 1 << 16)]
        budget: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Return of the rational toy model (c, a_1, a_2, ...) close to itself.
    Toy {
        /// Head value as a fraction or decimal in [0,1].
        #[arg(long, allow_hyphen_values = true)]
        c: String,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, default_value_t = 1 << 18)]
        search_len: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the (f, g) detector from a witness block of a CSV prefix and
    /// check that the image avoids the image of the witness.
    Detect {
        /// CSV with columns index,x,y.
        #[arg(long)]
        prefix: PathBuf,
        #[arg(long, default_value_t = 1)]
        witness_start: u64,
        #[arg(long, default_value_t = 3)]
        witness_len: usize,
        #[arg(long, default_value_t = 0.125)]
        epsilon: f64,
        /// Random pairs for the Lipschitz sample test.
        #[arg(long, default_value_t = 10_000)]
        pairs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-block hit positions and boundary-inclusive max gaps as CSV.
    GapStats {
        #[arg(long, default_value = "b")]
        seq: SeqChoice,
        #[arg(long)]
        block_len: u64,
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long)]
        prefix_len: u64,
        /// Number of target blocks, starting at positions 1, 2, ...
        #[arg(long, default_value_t = 1)]
        targets: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Outcome {
    Report(RunReport, Option<PathBuf>),
    Done(bool),
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    let max = cli.max_prefix;
    let report = |r: RunReport, out: &Option<PathBuf>| Outcome::Report(r, out.clone());
    Ok(match &cli.command {
        Command::GenPrefix { seq, length, out } => {
            commands::gen_prefix(*seq, *length, out.as_deref(), max)?;
            Outcome::Done(true)
        }
        Command::CheckLemma2 { length, out } => report(commands::check_lemma2(*length, max)?, out),
        Command::CheckLemma1 {
            length,
            block_len,
            max_level,
            out,
        } => report(commands::check_lemma1(*length, *block_len, *max_level, max)?, out),
        Command::ImageTest {
            spec,
            epsilon,
            budget,
            out,
        } => report(commands::image_test(spec, *epsilon, *budget, max)?, out),
        Command::Toy {
            c,
            epsilon,
            search_len,
            out,
        } => report(commands::toy(c, *epsilon, *search_len)?, out),
        Command::Detect {
            prefix,
            witness_start,
            witness_len,
            epsilon,
            pairs,
            seed,
            out,
        } => {
            let args = DetectArgs {
                prefix,
                witness_start: *witness_start,
                witness_len: *witness_len,
                epsilon: *epsilon,
                pairs: *pairs,
                seed: *seed,
            };
            report(commands::detect(&args, max)?, out)
        }
        Command::GapStats {
            seq,
            block_len,
            epsilon,
            prefix_len,
            targets,
            out,
        } => {
            let args = GapStatsArgs {
                seq: *seq,
                block_len: *block_len,
                epsilon: *epsilon,
                prefix_len: *prefix_len,
                targets: *targets,
                out: out.as_deref(),
            };
            Outcome::Done(commands::gap_stats(&args, max)?)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let outcome = run(&cli).and_then(|outcome| match outcome {
        Outcome::Report(mut r, out) => {
            if cli.timing {
                r.wall_time_ms = Some(started.elapsed().as_millis());
            }
            r.emit(out.as_deref())?;
            Ok(r.pass)
        }
        Outcome::Done(ok) => Ok(ok),
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("mindetect: check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("mindetect: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
