//! Command-line application layer: declarative experiment configs, figure
//! subcommands, CSV/SVG emission, and deterministic run manifests. The
//! `pairqed` binary is a thin argument parser over [`run`].

pub mod commands;
pub mod config;
pub mod csvout;
pub mod manifest;
pub mod svg;

use std::path::{Path, PathBuf};

pub use commands::{cmd_fit, cmd_g2, cmd_lifetime, cmd_rabi, cmd_steadystate_map, cmd_waveplate_map, FitOptions};
pub use config::ExperimentConfig;
pub use manifest::RunManifest;

/// Exit codes: 0 success, 2 config error, 3 numerical failure.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(msg: String) -> Self {
        CliError::Config(msg)
    }

    pub fn numerical<E: std::fmt::Display>(e: E) -> Self {
        CliError::Numerical(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Svg,
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "svg" => Ok(OutputFormat::Svg),
            "both" => Ok(OutputFormat::Both),
            other => Err(format!("unknown format `{other}` (use csv, svg, or both)")),
        }
    }
}

/// Bundled experiment configs, addressable by name from `--config`.
pub const BUILTIN_CONFIGS: &[(&str, &str)] = &[
    ("fig1e_resonant", include_str!("../../configs/fig1e_resonant.ini")),
    ("fig1e_detuned", include_str!("../../configs/fig1e_detuned.ini")),
    ("fig1g_inphase", include_str!("../../configs/fig1g_inphase.ini")),
    ("fig1g_outofphase", include_str!("../../configs/fig1g_outofphase.ini")),
    ("fig2a_detuning_sweep", include_str!("../../configs/fig2a_detuning_sweep.ini")),
    ("fig2c_beta_sweep", include_str!("../../configs/fig2c_beta_sweep.ini")),
    ("fig2d_phase_sweep", include_str!("../../configs/fig2d_phase_sweep.ini")),
    ("fig3_lifetime_inphase", include_str!("../../configs/fig3_lifetime_inphase.ini")),
    ("fig3_lifetime_outofphase", include_str!("../../configs/fig3_lifetime_outofphase.ini")),
    ("appa_rf_map", include_str!("../../configs/appa_rf_map.ini")),
    ("appb_g2_map", include_str!("../../configs/appb_g2_map.ini")),
    ("appd_waveplate_map", include_str!("../../configs/appd_waveplate_map.ini")),
    ("appe_rabi", include_str!("../../configs/appe_rabi.ini")),
];

pub fn builtin_config(name: &str) -> Option<&'static str> {
    BUILTIN_CONFIGS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

/// Load a config from a path, or fall back to a bundled config name.
pub fn load_config(spec: &str) -> Result<ExperimentConfig, CliError> {
    let path = Path::new(spec);
    if path.exists() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        return ExperimentConfig::parse(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    if let Some(text) = builtin_config(spec) {
        return ExperimentConfig::parse(text)
            .map_err(|e| CliError::Config(format!("builtin {spec}: {e}")));
    }
    Err(CliError::Config(format!(
        "config `{spec}` is neither a file nor a bundled name; bundled configs: {}",
        BUILTIN_CONFIGS
            .iter()
            .map(|(n, _)| *n)
            .collect::<Vec<_>>()
            .join(", ")
    )))
}

/// Dispatch a figure subcommand by name and finalize the run manifest.
pub fn run(
    command: &str,
    cfg: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<PathBuf, CliError> {
    let manifest = match command {
        "g2" => cmd_g2(cfg, out_dir, format)?,
        "lifetime" => cmd_lifetime(cfg, out_dir, format)?,
        "steadystate-map" => cmd_steadystate_map(cfg, out_dir, format)?,
        "waveplate-map" => cmd_waveplate_map(cfg, out_dir, format)?,
        "rabi" => cmd_rabi(cfg, out_dir, format)?,
        other => return Err(CliError::Config(format!("unknown command `{other}`"))),
    };
    for w in &manifest.warnings {
        eprintln!("warning: {w}");
    }
    manifest.finish()
}
