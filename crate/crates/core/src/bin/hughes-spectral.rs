use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use hughes_spectral::config::{load_config, RunConfig};
use hughes_spectral::run::{failed_manifest, run, RunOptions, Subcommand};
use hughes_spectral::Error;

#[derive(Parser)]
#[command(name = "hughes-spectral", version, about = "Spectral solver and stability toolkit for the generalized Hughes model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    global: GlobalArgs,
}

#[derive(Args)]
struct GlobalArgs {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides output.dir from the configuration
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true, env = "GH_SPECTRAL_THREADS")]
    threads: Option<usize>,
    /// Write binary field dumps at t = 0 and t = T
    #[arg(long, global = true)]
    dump_fields: bool,
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Validate parameters and report derived constants
    ParamsCheck,
    /// Spectral gap and regime over a density grid
    StabilityMap,
    /// Exact linear solve and norm series
    Linear,
    /// Nonlinear Picard solve
    Nonlinear,
    /// Planar-wave frequencies
    Dispersion(DispersionArgs),
    /// Sup-in-time differences as the viscosity goes to zero
    ViscositySweep,
    /// Fit decay exponents of the norm series
    DecayFit,
}

#[derive(Args)]
struct DispersionArgs {
    /// Background density (enough on its own, no config needed)
    #[arg(long)]
    rho_bar: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// 2 (default) or 0
    #[arg(long)]
    beta: Option<u8>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    env_logger::Builder::new()
        .filter_level(if g.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .parse_default_env()
        .init();
    if let Some(n) = g.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size thread pool: {e}");
        }
    }

    let (cmd, disp) = match &cli.command {
        Command::ParamsCheck => (Subcommand::ParamsCheck, None),
        Command::StabilityMap => (Subcommand::StabilityMap, None),
        Command::Linear => (Subcommand::Linear, None),
        Command::Nonlinear => (Subcommand::Nonlinear, None),
        Command::Dispersion(d) => (Subcommand::Dispersion, Some(d)),
        Command::ViscositySweep => (Subcommand::ViscositySweep, None),
        Command::DecayFit => (Subcommand::DecayFit, None),
    };

    let loaded = match (&g.config, disp.and_then(|d| d.rho_bar)) {
        (Some(path), _) => load_config(path),
        (None, Some(rb)) => Ok(RunConfig::with_rho_bar(rb)),
        (None, None) => Err(Error::Config("--config is required".into())),
    };
    let mut config = match loaded {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            let dir = g.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
            return ExitCode::from(failed_manifest(cmd, &dir, &e).exit_code as u8);
        }
    };
    if let Some(d) = disp {
        if let Some(rb) = d.rho_bar {
            config.model.rho_bar = rb;
        }
        if let Some(a) = d.a {
            config.experiment.a = a;
        }
        if let Some(b) = d.b {
            config.experiment.b = b;
        }
        if let Some(beta) = d.beta {
            config.experiment.beta = beta;
        }
    }

    let opts = RunOptions {
        output_dir: g.output_dir.clone(),
        dump_fields: g.dump_fields,
    };
    let outcome = run(cmd, &config, &opts);
    if let Some(err) = &outcome.manifest.error {
        eprintln!("error ({}): {}", err.kind, err.message);
    } else {
        println!("{} finished; outputs in {}", cmd.name(), outcome.output_dir.display());
    }
    ExitCode::from(outcome.exit_code as u8)
}
