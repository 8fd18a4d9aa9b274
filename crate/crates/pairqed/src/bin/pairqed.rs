use clap::{Parser, Subcommand};
use std::path::PathBuf;

use pairqed::cli::{self, CliError, FitOptions, OutputFormat};

/// Simulator and analysis toolkit for a pair of waveguide-coupled quantum
/// emitters: intensity correlations, collective-driving dynamics,
/// polarization control maps, and measurement-model fits.
#[derive(Parser)]
#[command(name = "pairqed", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Output directory for CSV/SVG files and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for parameter sweeps (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Reserved for future stochastic extensions; accepted and recorded.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output formats: csv, svg, or both.
    #[arg(long, global = true, default_value = "both")]
    format: String,
}

#[derive(Subcommand)]
enum Command {
    /// Two-photon intensity correlations g2(tau), optionally swept.
    G2 {
        /// Config file path or bundled config name.
        #[arg(long)]
        config: String,
    },
    /// Time-resolved emission after pulsed excitation.
    Lifetime {
        #[arg(long)]
        config: String,
    },
    /// Steady-state emission over (emitter detuning, laser detuning).
    #[command(name = "steadystate-map")]
    SteadystateMap {
        #[arg(long)]
        config: String,
    },
    /// Drive amplitude/phase maps over waveplate angles plus the
    /// equal-amplitude contour.
    #[command(name = "waveplate-map")]
    WaveplateMap {
        #[arg(long)]
        config: String,
    },
    /// Rabi oscillations vs excitation power with pi-pulse extraction.
    Rabi {
        #[arg(long)]
        config: String,
    },
    /// Fit a measurement model to CSV data.
    Fit {
        /// CSV with columns x, value[, error].
        #[arg(long)]
        data: PathBuf,
        /// Model: broadened-dip, two-sided-exp, rabi, or dip-antidip.
        #[arg(long)]
        model: String,
        /// Detector jitter FWHM (ns) applied to the model.
        #[arg(long, default_value_t = 0.0)]
        jitter_fwhm_ns: f64,
        /// Window split |tau| threshold for dip-antidip (ns).
        #[arg(long, default_value_t = 0.4)]
        window_ns: f64,
        /// Known drive Rabi frequency for the dip model (GHz).
        #[arg(long, default_value_t = 0.25)]
        omega_ghz: f64,
        /// Let the dip model fit omega instead of fixing it.
        #[arg(long, default_value_t = false)]
        free_omega: bool,
    },
}

fn main() {
    let args = Args::parse();
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("warning: could not size the worker pool: {e}");
        }
    }
    let format: OutputFormat = match args.format.parse() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    if let Some(seed) = args.seed {
        eprintln!("note: --seed {seed} accepted (reserved; current pipelines are deterministic)");
    }

    let result: Result<std::path::PathBuf, CliError> = (|| match &args.command {
        Command::G2 { config } => cli::run("g2", &cli::load_config(config)?, &args.out, format),
        Command::Lifetime { config } => {
            cli::run("lifetime", &cli::load_config(config)?, &args.out, format)
        }
        Command::SteadystateMap { config } => {
            cli::run("steadystate-map", &cli::load_config(config)?, &args.out, format)
        }
        Command::WaveplateMap { config } => {
            cli::run("waveplate-map", &cli::load_config(config)?, &args.out, format)
        }
        Command::Rabi { config } => cli::run("rabi", &cli::load_config(config)?, &args.out, format),
        Command::Fit {
            data,
            model,
            jitter_fwhm_ns,
            window_ns,
            omega_ghz,
            free_omega,
        } => {
            let opts = FitOptions {
                model: model.clone(),
                jitter_fwhm_ns: *jitter_fwhm_ns,
                window_ns: *window_ns,
                omega_ghz: *omega_ghz,
                free_omega: *free_omega,
            };
            let manifest = cli::cmd_fit(data, &opts, &args.out, format)?;
            manifest.finish()
        }
    })();

    match result {
        Ok(path) => {
            println!("manifest: {}", path.display());
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
