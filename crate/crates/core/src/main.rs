use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dyntunnel::cli;
use dyntunnel::config::{ConfigLayer, RunConfig};
use dyntunnel::Result;

const WORKERS_ENV: &str = "DYNTUNNEL_WORKERS";

#[derive(Parser)]
#[command(
    name = "dyntunnel",
    version,
    about = "Floquet analysis of dynamical tunneling in modulated optical lattices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate the initial wavepacket; write series.csv and peaks.csv
    Evolve(RunArgs),
    /// Floquet modes and dominant lines; write modes.csv and lines.csv
    Floquet(RunArgs),
    /// Dominant lines over a drive-strength grid; write sweep.csv
    Sweep(RunArgs),
    /// Husimi distribution of a Floquet mode or the initial state; write husimi.txt
    Husimi(RunArgs),
    /// Classical strobe section; write section.csv
    Strobe(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Key-value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: ConfigLayer,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut layer = match &self.config {
            Some(path) => ConfigLayer::load(path)?,
            None => ConfigLayer::default(),
        };
        layer.overlay(&self.overrides);
        RunConfig::resolve(&layer)
    }
}

fn configure_workers() -> std::result::Result<(), String> {
    let Ok(value) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = value
        .parse()
        .ok()
        .filter(|&w| w > 0)
        .ok_or_else(|| format!("{WORKERS_ENV} must be a positive integer, got `{value}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Evolve(args) => {
            let cfg = args.resolve()?;
            let out = cli::cmd_evolve(&cfg)?;
            for p in &out.peaks {
                println!("peak {:>10.1} Hz  power {:.4}", p.freq_hz, p.power);
            }
        }
        Command::Floquet(args) => {
            let cfg = args.resolve()?;
            let out = cli::cmd_floquet(&cfg)?;
            for l in &out.lines {
                println!(
                    "line {:>10.1} Hz  weight {:.4}  modes ({}, {})",
                    l.delta_f_hz, l.weight, l.i, l.j
                );
            }
            println!(
                "modes supported on |n| <= {}: {}",
                cli::SUPPORT_WINDOW,
                out.support_count
            );
        }
        Command::Sweep(args) => {
            let cfg = args.resolve()?;
            let entries = cli::cmd_sweep(&cfg)?;
            println!(
                "{} drive values, {} lines",
                entries.len(),
                entries.iter().map(|e| e.lines.len()).sum::<usize>()
            );
        }
        Command::Husimi(args) => {
            let cfg = args.resolve()?;
            let grid = cli::cmd_husimi(&cfg)?;
            let (a, b) = grid.argmax();
            println!("maximum at phi = {:.3}, n = {:.3}", grid.phi_axis[a], grid.n_axis[b]);
        }
        Command::Strobe(args) => {
            let cfg = args.resolve()?;
            let orbits = cli::cmd_strobe(&cfg)?;
            println!(
                "{} seeds, {} points",
                orbits.len(),
                orbits.iter().map(Vec::len).sum::<usize>()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_workers() {
        eprintln!("error: {msg}");
        return ExitCode::FAILURE;
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
