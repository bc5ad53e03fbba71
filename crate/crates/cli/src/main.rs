mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use wqed::models::Gauge;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "wqed", version, about = "Light-matter models of an emitter in a cavity-array waveguide")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    json: bool,
    /// Output file (standard output when omitted).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest levels of the full and two-level models versus g.
    Spectrum(Overrides),
    /// Renormalized emitter gap Δ′(g) of the shifted dipole.
    Gap(Overrides),
    /// Elastic transmission spectrum.
    Transmission {
        #[command(flatten)]
        over: Overrides,
        #[arg(long, value_enum)]
        method: Option<TransmissionMethod>,
    },
    /// Polaron gap Δ_r(g) and resonance positions.
    Polaron(Overrides),
    /// RWA self-energy of the dipole-gauge emitter.
    SelfEnergy(Overrides),
    /// Dipole- and Coulomb-gauge spectral densities.
    SpectralDensity(Overrides),
    /// Inelastic transmittance and reflectance beyond the RWA.
    Inelastic(Overrides),
    /// Map lumped circuit parameters to the cavity-array model or back.
    CircuitMap(CircuitArgs),
    /// Run the `[sweep]` table of the configuration as written.
    Sweep,
    /// Load and check a configuration.
    Validate {
        /// Print the completed configuration.
        #[arg(long)]
        dump: bool,
    },
}

#[derive(Args, Clone, Default)]
pub struct Overrides {
    /// Comma-separated coupling values replacing the configured g grid.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    g: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    gauge: Option<GaugeArg>,
    /// Rotating-wave approximation on.
    #[arg(long, conflicts_with = "no_rwa")]
    rwa: bool,
    /// Keep counter-rotating terms.
    #[arg(long)]
    no_rwa: bool,
    /// Fixed emitter gap instead of the derived Δ′(g).
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
pub struct CircuitArgs {
    /// Number of modes of the forward map.
    #[arg(long, default_value_t = 11)]
    n_modes: usize,
    /// Solve for circuit elements from model parameters instead.
    #[arg(long, requires_all = ["omega_r", "xi_r", "g_center"])]
    inverse: bool,
    #[arg(long)]
    omega_r: Option<f64>,
    #[arg(long)]
    xi_r: Option<f64>,
    #[arg(long)]
    g_center: Option<f64>,
    /// Resonator capacitance of the inverse map; the configured value by default.
    #[arg(long)]
    c_r: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum GaugeArg {
    Dipole,
    Coulomb,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum TransmissionMethod {
    ClosedForm,
    Matching,
    Evolve,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(g) = &self.g {
            cfg.sweep.g_grid = wqed::sweeps::Grid::Values(g.clone());
        }
        if let Some(g) = self.gauge {
            cfg.sweep.gauge = match g {
                GaugeArg::Dipole => Gauge::Dipole,
                GaugeArg::Coulomb => Gauge::Coulomb,
            };
        }
        if self.rwa {
            cfg.sweep.rwa = true;
        }
        if self.no_rwa {
            cfg.sweep.rwa = false;
        }
        if self.delta.is_some() {
            cfg.sweep.delta = self.delta;
        }
    }
}

#[derive(Debug)]
pub enum CliError {
    Config { field: Option<String>, message: String },
    Core(wqed::Error),
    Interrupted,
}

impl CliError {
    pub fn config(field: Option<&str>, message: impl Into<String>) -> Self {
        CliError::Config {
            field: field.map(str::to_string),
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Config { .. } | CliError::Core(_) => 2,
            CliError::Interrupted => 130,
        }
    }

    fn diagnostic(&self) -> serde_json::Value {
        let (code, field) = match self {
            CliError::Config { field, .. } => ("config", field.clone()),
            CliError::Core(wqed::Error::InvalidParameter { field, .. }) => ("invalid_parameter", Some(field.to_string())),
            CliError::Core(e) => (e.code(), None),
            CliError::Interrupted => ("interrupted", None),
        };
        serde_json::json!({
            "level": "error",
            "code": code,
            "field": field,
            "message": self.to_string(),
            "exit": self.exit_code(),
        })
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config { field: Some(k), message } => write!(f, "config field `{k}`: {message}"),
            CliError::Config { field: None, message } => write!(f, "config: {message}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Interrupted => f.write_str("interrupted; partial results written"),
        }
    }
}

impl From<wqed::Error> for CliError {
    fn from(e: wqed::Error) -> Self {
        CliError::Core(e)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let out = commands::Output {
        json: cli.json,
        path: cli.out,
    };
    match cli.command {
        Command::Validate { dump } => {
            if dump {
                out.write_text(&cfg.dump())?;
            }
            eprintln!("{}", serde_json::json!({"level": "info", "message": "configuration is valid"}));
            Ok(())
        }
        Command::Spectrum(o) => with(&mut cfg, &o, |c| commands::spectrum(c, &out)),
        Command::Gap(o) => with(&mut cfg, &o, |c| commands::gap(c, &out)),
        Command::Transmission { over, method } => with(&mut cfg, &over, |c| commands::transmission(c, method, &out)),
        Command::Polaron(o) => with(&mut cfg, &o, |c| commands::polaron(c, &out)),
        Command::SelfEnergy(o) => with(&mut cfg, &o, |c| commands::self_energy(c, &out)),
        Command::SpectralDensity(o) => with(&mut cfg, &o, |c| commands::spectral_density(c, &out)),
        Command::Inelastic(o) => with(&mut cfg, &o, |c| commands::inelastic(c, &out)),
        Command::CircuitMap(a) => commands::circuit_map(&cfg, &a, &out),
        Command::Sweep => commands::sweep(&cfg, cfg.sweep.method, &out),
    }
}

fn with(
    cfg: &mut RunConfig,
    over: &Overrides,
    f: impl FnOnce(&RunConfig) -> Result<(), CliError>,
) -> Result<(), CliError> {
    over.apply(cfg);
    f(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    commands::install_interrupt_handler();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            ExitCode::from(e.exit_code())
        }
    }
}
