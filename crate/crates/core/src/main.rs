use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use lfd_core::domain::Dataset;
use lfd_core::learners::Policy;
use lfd_core::runner::{heldout_surrogate_loss, render_plot, run_experiment, theorem_csv, ExperimentConfig};
use lfd_core::Error;

#[derive(Parser)]
#[command(name = "lfd", version, about = "HC vs RC demonstration sampling benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run { config: PathBuf },
    /// Print the stuck-probability table as CSV.
    Theorem {
        /// Inclusive range of initial demonstration counts, e.g. `1..12`.
        #[arg(long, value_parser = parse_range)]
        m_range: (usize, usize),
        #[arg(long, default_value_t = 0.25)]
        mu: f64,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a results CSV as an SVG chart.
    Plot { csv: PathBuf, svg: PathBuf },
    /// Held-out surrogate loss of a saved policy on a saved dataset.
    Analyze {
        #[arg(long)]
        heldout: PathBuf,
        #[arg(long)]
        policy: PathBuf,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected a..b, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("{a:?}: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("{b:?}: {e}"))?;
    if a == 0 || a > b {
        return Err(format!("need 1 <= a <= b, got {a}..{b}"));
    }
    Ok((a, b))
}

/// 1 for bad input, 2 for failures while running.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Json(_) | Error::Csv { .. } => 1,
        _ => 2,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn run(cmd: Command) -> Result<u8, Error> {
    match cmd {
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let summary = run_experiment(&cfg)?;
            for p in &summary.outputs {
                eprintln!("wrote {}", p.display());
            }
            if summary.errors > 0 {
                eprintln!("{} rows failed; see the error column", summary.errors);
                return Ok(2);
            }
            Ok(0)
        }
        Command::Theorem { m_range, mu, trials, seed, output } => {
            let ms: Vec<usize> = (m_range.0..=m_range.1).collect();
            match output {
                Some(path) => theorem_csv(std::fs::File::create(path)?, &ms, mu, trials, seed)?,
                None => theorem_csv(std::io::stdout().lock(), &ms, mu, trials, seed)?,
            }
            Ok(0)
        }
        Command::Plot { csv, svg } => {
            render_plot(&csv, &svg)?;
            Ok(0)
        }
        Command::Analyze { heldout, policy } => {
            let data: Dataset = read_json(&heldout)?;
            let policy: Policy = read_json(&policy)?;
            let loss = heldout_surrogate_loss(&policy, &data)?;
            let out = serde_json::json!({ "samples": data.len(), "loss_per_dim": loss });
            writeln!(std::io::stdout(), "{out}")?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
