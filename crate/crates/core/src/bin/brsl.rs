use std::path::PathBuf;
use std::process::ExitCode;

use brsl::experiment::{self, ExperimentConfig, Pipeline};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brsl", version, about = "Spectral experiments for Bessel-Riesz commutators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment configuration; the built-in default experiment when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Size of the rayon pool.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid doublings for the spectrum pipeline.
    #[arg(long, global = true)]
    refine: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the F and G functions.
    Auxfn,
    /// Compare kernel representations at sampled pairs.
    Kernel,
    /// Commutator spectrum, Weyl fit and ratio experiment.
    Spectrum,
    /// Sobolev and directional seminorms of the symbol.
    Sobolev,
    /// Run the acceptance suite.
    Verify,
    /// Run whichever pipeline the configuration names.
    Run,
    /// Print the default configuration.
    DefaultConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> brsl::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| brsl::Error::InvalidParams(format!("--threads: {e}")))?;
    }
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default_experiment(),
    };
    let pipeline = match cli.command {
        Command::DefaultConfig => {
            println!("{}", config.to_json());
            return Ok(true);
        }
        Command::Run => config.pipeline,
        Command::Auxfn => Pipeline::Auxfn,
        Command::Kernel => Pipeline::Kernel,
        Command::Spectrum => Pipeline::Spectrum,
        Command::Sobolev => Pipeline::Sobolev,
        Command::Verify => Pipeline::Verify,
    };
    config.pipeline = pipeline;
    if let Some(out) = cli.out {
        config.output_dir = out;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(refine) = cli.refine {
        config.refine = refine;
    }
    let report = experiment::run(&config)?;
    for t in &report.timings {
        eprintln!("{:>8.2} s  {}", t.seconds, t.stage);
    }
    for a in &report.assertions {
        println!(
            "[{}] {}: measured {:.4e}, tolerance {:.4e} ({})",
            if a.pass { "PASS" } else { "FAIL" },
            a.name,
            a.measured,
            a.tolerance,
            a.detail
        );
    }
    println!("report: {}", config.output_dir.join("report.json").display());
    Ok(report.pass)
}
