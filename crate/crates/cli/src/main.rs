use std::error::Error as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tls_imp::experiment::{default_out_dir, emit_plot_data, run, ExperimentKind, LoadedConfig};
use tls_imp::io::write_bytes;
use tls_imp::{Error, ErrorClass};

/// Two-tone intermodulation simulation, reconstruction and resonator fits.
///
/// Exit codes: 0 success, 2 invalid config or arguments, 3 numerical
/// failure, 4 file I/O or format error.
#[derive(Parser, Debug)]
#[command(name = "tls-imp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment config (TOML), or a run-manifest.json to repeat a run.
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides the config's rng_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: out/<kind>].
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Runs whatever experiment kind the config names.
    Run(RunArgs),
    /// Checks a config without running it.
    Validate {
        #[arg(long, short)]
        config: PathBuf,
    },
    /// Reshapes JSON result files into one long-format CSV.
    PlotData {
        /// Result files written by earlier runs.
        #[arg(required = true)]
        results: Vec<PathBuf>,
        /// Destination file [default: standard output].
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Single two-tone simulation.
    Simulate(RunArgs),
    /// IMP power against photon number, with slope fits.
    SweepPower(RunArgs),
    /// IMP spectra against comb-centre frequency.
    SweepFrequency(RunArgs),
    /// Third-order slope above n_c for several saturation exponents.
    BetaScan(RunArgs),
    /// Harmonic-balance reconstruction of a measured spectrum.
    Reconstruct(RunArgs),
    /// Circle fit of S21 traces.
    CircleFit(RunArgs),
    /// Tunnelling-model fit of Q_i against photon number.
    FitTls(RunArgs),
    /// Power-law fit of two-column data.
    FitPowerlaw(RunArgs),
    /// Simulate, reconstruct and compare with the generating model.
    Roundtrip(RunArgs),
    /// Synthetic S21 trace.
    GenerateS21(RunArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 2,
        ErrorClass::Numerical => 3,
        ErrorClass::Io => 4,
    }
}

fn run_experiment(args: &RunArgs, expected: Option<ExperimentKind>) -> Result<(), Error> {
    let loaded = LoadedConfig::load(&args.config)?.with_seed(args.seed);
    let kind = loaded.config.kind;
    if let Some(want) = expected.filter(|&k| k != kind) {
        return Err(Error::Config {
            path: "kind".into(),
            reason: format!("config is `{}` but the `{}` subcommand was used", kind.name(), want.name()),
        });
    }
    let out = args.out.clone().unwrap_or_else(|| default_out_dir(kind));
    let manifest = run(&loaded, &out)?;
    println!(
        "{}: wrote {} files to {} in {:.2} s",
        kind.name(),
        manifest.outputs.len() + 1,
        out.display(),
        manifest.wall_time_s
    );
    for o in &manifest.outputs {
        println!("  {}", o.file);
    }
    Ok(())
}

fn dispatch(cmd: Command) -> Result<(), Error> {
    use ExperimentKind as K;
    let (args, kind) = match cmd {
        Command::Run(a) => (a, None),
        Command::Validate { config } => {
            let loaded = LoadedConfig::load(&config)?;
            loaded.config.validate()?;
            println!("{}: ok ({})", config.display(), loaded.config.kind.name());
            return Ok(());
        }
        Command::PlotData { results, output } => {
            let paths: Vec<&Path> = results.iter().map(PathBuf::as_path).collect();
            let text = emit_plot_data(&paths)?;
            match output {
                Some(p) => write_bytes(&p, text.as_bytes())?,
                None => print!("{text}"),
            }
            return Ok(());
        }
        Command::Simulate(a) => (a, Some(K::Simulate)),
        Command::SweepPower(a) => (a, Some(K::SweepPower)),
        Command::SweepFrequency(a) => (a, Some(K::SweepFrequency)),
        Command::BetaScan(a) => (a, Some(K::BetaScan)),
        Command::Reconstruct(a) => (a, Some(K::Reconstruct)),
        Command::CircleFit(a) => (a, Some(K::CircleFit)),
        Command::FitTls(a) => (a, Some(K::FitTls)),
        Command::FitPowerlaw(a) => (a, Some(K::FitPowerlaw)),
        Command::Roundtrip(a) => (a, Some(K::Roundtrip)),
        Command::GenerateS21(a) => (a, Some(K::GenerateS21)),
    };
    run_experiment(&args, kind)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = e.source();
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(exit_code(&e))
        }
    }
}
