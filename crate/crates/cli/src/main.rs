mod commands;
mod report;

use std::net::IpAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Upload an image dataset to media platforms, download what they give back,
/// and record provenance for every produced picture.
#[derive(Debug, Parser)]
#[command(name = "bpipe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Platform definitions to add to the built-in simulators (JSON).
    #[arg(long, value_name = "FILE")]
    platforms: Option<PathBuf>,
    /// Never prompt. Policy A and exhausted F retries terminate the job.
    /// Also implied when stdin is not a terminal.
    #[arg(long)]
    non_interactive: bool,
    /// Run tasks with ready inputs concurrently.
    #[arg(long)]
    parallel_branches: bool,
    /// Log every platform request.
    #[arg(long)]
    debug: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Start a new job from a config file.
    ///
    /// When a critical issue needs an answer, the prompt accepts S (skip the
    /// task and its pipeline successors), F (try to fix once more) or T
    /// (terminate; the job can be resumed later).
    Run {
        config: PathBuf,
        /// Directory receiving the job root.
        #[arg(long, default_value = ".")]
        base_dir: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Continue an interrupted or terminated job.
    Resume {
        job_root: PathBuf,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Check a config without running it.
    Validate {
        config: PathBuf,
        #[arg(long, value_name = "FILE")]
        platforms: Option<PathBuf>,
    },
    /// Show a job's map entries.
    Inspect {
        job_root: PathBuf,
        /// Only this task, e.g. MASTD@0.
        #[arg(long)]
        task: Option<String>,
        /// Print raw entries as a JSON array.
        #[arg(long)]
        json: bool,
    },
    /// Minutes of manual waiting the same job would cost by hand.
    Estimate {
        #[arg(allow_negative_numbers = true)]
        n_images: i64,
        #[arg(allow_negative_numbers = true)]
        n_platforms: i64,
        #[arg(long, default_value_t = 10, allow_negative_numbers = true)]
        chunk_size: i64,
        #[arg(long, default_value_t = 7, allow_negative_numbers = true)]
        latency_points: i64,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        minutes_per_point: i64,
    },
    /// Serve a simulated platform over HTTP until interrupted.
    Simserve {
        /// Profile file (JSON) or the code of a built-in simulator.
        profile: String,
        #[arg(long, default_value_t = 0)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Require this login (with --pass) instead of accepting any.
        #[arg(long, requires = "pass")]
        user: Option<String>,
        #[arg(long, requires = "user")]
        pass: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_USAGE } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Run { config, base_dir, flags } => commands::run(&config, &base_dir, &flags),
        Command::Resume { job_root, flags } => commands::resume(&job_root, &flags),
        Command::Validate { config, platforms } => commands::validate(&config, platforms.as_deref()),
        Command::Inspect { job_root, task, json } => commands::inspect(&job_root, task.as_deref(), json),
        Command::Estimate {
            n_images,
            n_platforms,
            chunk_size,
            latency_points,
            minutes_per_point,
        } => commands::estimate(n_images, n_platforms, chunk_size, latency_points, minutes_per_point),
        Command::Simserve {
            profile,
            port,
            bind,
            user,
            pass,
        } => commands::simserve(&profile, bind, port, user.zip(pass)),
    };
    ExitCode::from(code)
}
