use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use dowave_cli::verify::Scale;
use dowave_cli::Failure;

#[derive(Parser)]
#[command(name = "dowave", version, about = "ADI solver for the 2D distributed-order time-fractional wave equation")]
struct Cli {
    /// Worker threads for the sweeps and history accumulation (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one configuration; writes field.csv and summary.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a refinement study; writes report.json and report.csv.
    Study {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the solver against its dense and high-precision oracles.
    Verify {
        #[arg(long, value_enum, default_value_t = Scale::Small)]
        scale: Scale,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let result = match cli.command {
        Command::Solve { config, out } => dowave_cli::solve(&config, &out).map(|s| match s.err_inf {
            Some(e) => println!(
                "{}: err_inf = {e:.6e}, err_l2 = {:.6e}, {:.2} s",
                s.case,
                s.err_l2.unwrap_or(f64::NAN),
                s.wall_seconds
            ),
            None => println!("{}: done in {:.2} s", s.case, s.wall_seconds),
        }),
        Command::Study { config, out } => dowave_cli::study(&config, &out),
        Command::Verify { scale } => dowave_cli::verify(scale),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("config error: {m}"),
                Failure::Runtime(m) => eprintln!("error: {m}"),
                Failure::Verify => eprintln!("verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
