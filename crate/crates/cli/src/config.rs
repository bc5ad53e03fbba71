//! TOML run configuration shared by all subcommands.

use std::path::Path;

use serde::{Deserialize, Serialize};
use wqed::circuit::CircuitSpec;
use wqed::matter::DipoleSpec;
use wqed::models::{Gauge, WaveguideSpec};
use wqed::sweeps::{Grid, Method, SweepPlan};

use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: String,
    #[serde(default)]
    pub dipole: DipoleSpec,
    #[serde(default)]
    pub waveguide: WaveguideSpec,
    #[serde(default)]
    pub circuit: CircuitSpec,
    #[serde(default)]
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            dipole: DipoleSpec::default(),
            waveguide: WaveguideSpec::default(),
            circuit: CircuitSpec::default(),
            sweep: SweepSection::default(),
        }
    }
}

/// Grids and solver knobs. The lattice and the matter model come from the
/// `[waveguide]` and `[dipole]` tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub method: Method,
    pub gauge: Gauge,
    pub rwa: bool,
    pub g_grid: Grid,
    pub omega_grid: Grid,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    pub region_size: usize,
    pub excitation_cutoff: usize,
    pub n_modes: usize,
    pub n_levels: usize,
    pub n_eigs: usize,
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        let p = SweepPlan::default();
        Self {
            method: p.method,
            gauge: p.gauge,
            rwa: p.rwa,
            g_grid: p.g_grid,
            omega_grid: Grid::Linspace {
                start: 0.4,
                stop: 1.6,
                points: 121,
            },
            delta: p.delta,
            region_size: p.region_size,
            excitation_cutoff: p.excitation_cutoff,
            n_modes: p.n_modes,
            n_levels: p.n_levels,
            n_eigs: p.n_eigs,
            theta: p.theta,
            columns: None,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(None, format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(None, e.message().to_string()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(
                Some("schema_version"),
                format!("unsupported version `{}` (expected {SCHEMA_VERSION})", cfg.schema_version),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn dump(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dipole.validate()?;
        self.waveguide.validate()?;
        self.circuit.validate()?;
        self.plan(self.sweep.method).validate()?;
        Ok(())
    }

    /// Sweep plan for `method`; the ω grid is dropped for methods without one.
    pub fn plan(&self, method: Method) -> SweepPlan {
        let s = &self.sweep;
        let w = &self.waveguide;
        let needs_omega = matches!(method, Method::ClosedForm | Method::Matching | Method::Evolve);
        SweepPlan {
            method,
            gauge: s.gauge,
            rwa: s.rwa,
            g_grid: s.g_grid.clone(),
            omega_grid: needs_omega.then(|| s.omega_grid.clone()),
            delta: s.delta,
            omega_c: w.omega_c,
            xi: w.xi,
            region_size: s.region_size,
            excitation_cutoff: s.excitation_cutoff,
            n_modes: s.n_modes,
            n_cavities: w.n_cavities,
            photon_cutoff: w.photon_cutoff,
            n_levels: s.n_levels,
            n_eigs: s.n_eigs,
            theta: s.theta,
            columns: s.columns.clone().filter(|_| method == s.method),
            dipole: self.dipole,
        }
    }
}
