use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use gradmode::cli::{self, RunConfig, RunReport, SusySection};
use gradmode::Error;

#[derive(Parser)]
#[command(
    name = "gradmode",
    version,
    about = "TE/TM modes of planar gradient waveguides"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured modes and write report.json, spectrum.csv and mode files
    Run {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Solve over the configured k0 sweep and write dispersion.csv as well
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Like run, with the supersymmetry check forced on
    Susy {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
}

fn print_summary(report: &RunReport) {
    for s in &report.spectra {
        let betas: Vec<String> = s
            .modes
            .iter()
            .map(|m| format!("{:.8}", m.beta_sq))
            .collect();
        println!(
            "k0 = {} {}: {} guided [{}]",
            s.k0,
            s.polarization,
            s.modes.len(),
            betas.join(", ")
        );
    }
    for section in &report.susy {
        match section {
            SusySection::Verified { k0, report } => println!(
                "k0 = {k0} SUSY: {:?}, {} pairs, max gap {:.3e}",
                report.classification,
                report.pairing.len(),
                report.pairing.iter().map(|p| p.gap).fold(0.0, f64::max)
            ),
            SusySection::NotConstantIndex { max_deviation, x } => {
                println!("SUSY: eps*mu not constant (deviation {max_deviation:.3e} at x = {x})")
            }
        }
    }
}

fn execute(config_path: &Path, out: Option<&Path>, quiet: bool, mode: &str) -> Result<(), Error> {
    let started = Instant::now();
    let mut config = RunConfig::load(config_path)?;
    let report = match mode {
        "sweep" => cli::sweep(&config, out)?,
        "susy" => {
            config.susy_check = true;
            cli::run(&config, out)?
        }
        _ => cli::run(&config, out)?,
    };
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    if !quiet {
        print_summary(&report);
        println!("elapsed {:.3} s", started.elapsed().as_secs_f64());
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match &args.command {
        Command::Run { config, out, quiet } => execute(config, out.as_deref(), *quiet, "run"),
        Command::Sweep { config, out, quiet } => execute(config, out.as_deref(), *quiet, "sweep"),
        Command::Susy { config, out, quiet } => execute(config, out.as_deref(), *quiet, "susy"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
