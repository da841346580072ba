//! Argument parsing, config resolution, and exit-code policy.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 acceptance
//! failure (ensemble mean strays from the exact reduced state), 3 numerical
//! failure (non-finite amplitudes or hard truncation-leakage breach).

use crate::commands::{self, ProbeKind};
use crate::config::{ConfigError, Preset, RunConfig};
use clap::{Parser, Subcommand, ValueEnum};
use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Acceptance(String),
    Numerical(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 1,
            CliError::Acceptance(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Acceptance(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PresetArg {
    #[value(name = "single-mode")]
    SingleMode,
    #[value(name = "three-mode-spectral")]
    ThreeModeSpectral,
    #[value(name = "three-mode-temporal")]
    ThreeModeTemporal,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::SingleMode => Preset::SingleMode,
            PresetArg::ThreeModeSpectral => Preset::ThreeModeSpectral,
            PresetArg::ThreeModeTemporal => Preset::ThreeModeTemporal,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ProbeArg {
    #[value(name = "ctau")]
    Ctau,
    #[value(name = "rates-at")]
    RatesAt,
    #[value(name = "born-at")]
    BornAt,
}

impl From<ProbeArg> for ProbeKind {
    fn from(p: ProbeArg) -> ProbeKind {
        match p {
            ProbeArg::Ctau => ProbeKind::Ctau,
            ProbeArg::RatesAt => ProbeKind::RatesAt,
            ProbeArg::BornAt => ProbeKind::BornAt,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "unravel",
    version,
    about = "Jump-like unravelings of a driven two-level atom in a small bosonic bath"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Parser)]
pub struct CommonArgs {
    /// Configuration file (see `unravel template`)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Scenario preset; conflicts with an explicit model in the config
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
    /// Master seed override
    #[arg(long)]
    pub seed: Option<u64>,
    /// Thread-count override (0 = all cores)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory override (also: UNRAVEL_OUT environment variable)
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one hidden-variable trajectory and write trajectory.csv + jumps.csv
    Trajectory {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run an ensemble and compare its mean against the exact reduced state
    Ensemble {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Emit diagnostic series: temporal couplings, rate tables, Born weights
    Probe {
        #[arg(value_enum)]
        what: ProbeArg,
        /// Probe time for rates-at and born-at
        #[arg(long)]
        at: Option<f64>,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print a fully-commented default configuration
    Template {
        /// Preset whose defaults the template shows
        #[arg(long, value_enum, default_value = "single-mode")]
        preset: PresetArg,
        /// Write template.ini into this directory instead of stdout
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
}

/// Resolve the configuration: file, then preset flag, then overrides.
pub fn resolve_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match (&common.config, common.preset) {
        (Some(path), preset_flag) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            let origin = path.display().to_string();
            let cfg = RunConfig::parse_str(&text, &origin)?;
            if let Some(p) = preset_flag {
                let p: Preset = p.into();
                match cfg.preset {
                    Some(existing) if existing == p => {}
                    Some(existing) => {
                        return Err(CliError::Config(format!(
                            "--preset {} conflicts with preset {} in {}",
                            p.name(),
                            existing.name(),
                            origin
                        )))
                    }
                    None => {
                        return Err(CliError::Config(format!(
                            "--preset {} conflicts with the explicit model in {}",
                            p.name(),
                            origin
                        )))
                    }
                }
            }
            cfg
        }
        (None, Some(p)) => RunConfig::from_preset(p.into()),
        (None, None) => {
            return Err(CliError::Config(
                "no configuration: pass --config PATH or --preset NAME \
                 (try `unravel template`)"
                    .to_string(),
            ))
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = common.threads {
        cfg.threads = threads;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    } else if let Ok(env_out) = std::env::var("UNRAVEL_OUT") {
        if !env_out.is_empty() {
            cfg.out_dir = PathBuf::from(env_out);
        }
    }
    Ok(cfg)
}

/// Bound the global worker pool; integration and sampling both draw from it.
fn apply_thread_limit(threads: usize) {
    if threads > 0 {
        // fails only if a pool already exists, e.g. when embedding; the
        // explicit per-run bound inside the ensemble runner still applies
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Trajectory { common } => {
            let cfg = resolve_config(&common)?;
            apply_thread_limit(cfg.threads);
            commands::cmd_trajectory(&cfg)
        }
        Command::Ensemble { common } => {
            let cfg = resolve_config(&common)?;
            apply_thread_limit(cfg.threads);
            commands::cmd_ensemble(&cfg)
        }
        Command::Probe { what, at, common } => {
            let cfg = resolve_config(&common)?;
            apply_thread_limit(cfg.threads);
            commands::cmd_probe(&cfg, what.into(), at)
        }
        Command::Template { preset, out } => {
            commands::cmd_template(preset.into(), out.as_deref())
        }
    }
}
