use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bdh_lab::commands::{empty_report, run, Command};
use bdh_lab::config::{parse_entries, parse_override, ExperimentConfig};
use bdh_lab::driver::with_threads;
use bdh_lab::{LabError, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "bdh", version, about = "Variance experiments for primes in arithmetic progressions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Direct and character-form variances over an X grid
    Variance(Shared),
    /// Piatetski-Shapiro prime counts against X^γ / log X
    PsCount(Shared),
    /// Prime exponential sums against the oscillatory integral
    Lemma3(Shared),
    /// Seeded trials of the large sieve ratio
    LargeSieve(Shared),
    /// Vaaler's approximation of the sawtooth
    Vaaler(Shared),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Shared {
    /// key = value config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 uses all cores
    #[arg(long)]
    threads: Option<usize>,
    /// Run Q or t outside the admissible ranges, with a warning in the report
    #[arg(long)]
    allow_out_of_range: bool,
    /// Override a config key, e.g. --set x_grid=1e4,1e5
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Fill the wall_ms column
    #[arg(long)]
    timing: bool,
}

fn resolve(shared: &Shared) -> Result<ExperimentConfig> {
    let mut entries = match &shared.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
            parse_entries(&text)?
        }
        None => Vec::new(),
    };
    for o in &shared.overrides {
        entries.push(parse_override(o)?);
    }
    let mut flag = |k: &str, v: String| entries.push((k.to_string(), v));
    if let Some(p) = &shared.out {
        flag("output_path", p.display().to_string());
    }
    if let Some(f) = shared.format {
        flag(
            "output_format",
            match f {
                Format::Csv => "csv".into(),
                Format::Json => "json".into(),
            },
        );
    }
    if let Some(s) = shared.seed {
        flag("seed", s.to_string());
    }
    if let Some(t) = shared.threads {
        flag("threads", t.to_string());
    }
    if shared.allow_out_of_range {
        flag("allow_out_of_range", "true".into());
    }
    if shared.timing {
        flag("timing", "true".into());
    }
    ExperimentConfig::from_entries(&entries)
}

fn write_report(report: &bdh_lab::report::Report, cfg: &ExperimentConfig) -> Result<()> {
    match &cfg.output_path {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            report.write(cfg.output_format, &mut out)?;
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            report.write(cfg.output_format, &mut out)?;
            out.flush()?;
        }
    }
    Ok(())
}

fn execute(command: Command, shared: &Shared) -> Result<()> {
    let cfg = resolve(shared)?;
    let mut report = empty_report(command, &cfg);
    let outcome = with_threads(cfg.threads, || run(command, &cfg, &mut report))?;
    match outcome {
        Err(LabError::Config(m)) => Err(LabError::Config(m)),
        Err(e) => {
            if let LabError::Resource(m) = &e {
                report.incomplete = Some(m.clone());
            }
            write_report(&report, &cfg)?;
            Err(e)
        }
        Ok(()) => write_report(&report, &cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, shared) = match &cli.command {
        Cmd::Variance(s) => (Command::Variance, s),
        Cmd::PsCount(s) => (Command::PsCount, s),
        Cmd::Lemma3(s) => (Command::Lemma3, s),
        Cmd::LargeSieve(s) => (Command::LargeSieve, s),
        Cmd::Vaaler(s) => (Command::Vaaler, s),
    };
    match execute(command, shared) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bdh {}: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
