//! Lumped-element map between a chain of LC resonators coupled through
//! inductors L_c, with a transmon on the central node, and the cavity-array
//! parameters (ω_r, ξ_r, g_k).
//!
//! Circuit quantities are in any consistent unit system with ħ = 1 and the
//! reduced flux quantum set to one. [`CircuitModel::normalized`] rescales
//! frequencies by ω_r.

use serde::{Deserialize, Serialize};

use crate::matter::{DipoleSpec, Potential};
use crate::models::Mode;
use crate::{Error, Lattice, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircuitSpec {
    pub c_r: f64,
    pub l_r: f64,
    pub l_c: f64,
    pub c_j: f64,
    pub e_j: f64,
    pub phi_ext: f64,
}

impl Default for CircuitSpec {
    fn default() -> Self {
        Self {
            c_r: 1.0,
            l_r: 1.0,
            l_c: 10.0,
            c_j: 0.1,
            e_j: 20.0,
            phi_ext: 0.0,
        }
    }
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [("c_r", self.c_r), ("l_r", self.l_r), ("l_c", self.l_c), ("c_j", self.c_j)] {
            if !(v > 0.0) {
                return Err(Error::invalid(field, "must be positive"));
            }
        }
        if !(self.e_j >= 0.0) {
            return Err(Error::invalid("e_j", "must be non-negative"));
        }
        if !self.phi_ext.is_finite() {
            return Err(Error::invalid("phi_ext", "must be finite"));
        }
        Ok(())
    }

    /// L_Σ from 1/(2L_Σ) = 1/(2L_r) + 1/L_c.
    pub fn l_sigma(&self) -> f64 {
        1.0 / (1.0 / self.l_r + 2.0 / self.l_c)
    }

    /// Transmon as a one-dimensional matter problem in the phase coordinate:
    /// kinetic scale 1/C_J and −E_J cos(z − φ_ext), both in units of ω_r.
    pub fn transmon_spec(&self, omega_r: f64) -> DipoleSpec {
        DipoleSpec {
            e_d: 1.0 / (self.c_j * omega_r),
            potential: Potential::Cosine {
                e_j: self.e_j / omega_r,
                phi_ext: self.phi_ext,
            },
            ..DipoleSpec::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CircuitModel {
    pub omega_r: f64,
    pub xi_r: f64,
    pub l_sigma: f64,
    pub modes: Vec<Mode>,
    /// Coefficient of φ_q² generated by the resonator inductors,
    /// (1/N) Σ_k α_k = 1/(2L_Σ).
    pub flux_shift: f64,
}

impl CircuitModel {
    pub fn lattice(&self) -> Lattice {
        Lattice {
            omega_c: self.omega_r,
            xi: self.xi_r,
        }
    }

    /// Frequencies and couplings divided by ω_r.
    pub fn normalized(&self) -> CircuitModel {
        let s = 1.0 / self.omega_r;
        CircuitModel {
            omega_r: 1.0,
            xi_r: self.xi_r * s,
            l_sigma: self.l_sigma,
            modes: self
                .modes
                .iter()
                .map(|m| Mode {
                    k: m.k,
                    omega: m.omega * s,
                    g: m.g * s,
                })
                .collect(),
            flux_shift: self.flux_shift * s,
        }
    }
}

/// ω_r = (L_Σ C_r)^{−1/2}, ξ_r = ω_r L_Σ/L_c, g_k = ω_k/√(2 L_Σ ω_r N).
pub fn circuit_to_model(c: &CircuitSpec, n_modes: usize) -> Result<CircuitModel> {
    c.validate()?;
    if n_modes == 0 || n_modes % 2 == 0 {
        return Err(Error::invalid("n_modes", "must be odd"));
    }
    let l_sigma = c.l_sigma();
    let omega_r = 1.0 / (l_sigma * c.c_r).sqrt();
    let xi_r = omega_r * l_sigma / c.l_c;
    let norm = 1.0 / (2.0 * l_sigma * omega_r * n_modes as f64).sqrt();
    let modes = Lattice::mode_grid(n_modes)
        .into_iter()
        .map(|k| {
            let omega = omega_r + 2.0 * xi_r * k.cos();
            Mode { k, omega, g: omega * norm }
        })
        .collect();
    Ok(CircuitModel {
        omega_r,
        xi_r,
        l_sigma,
        modes,
        flux_shift: 0.5 / l_sigma,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CircuitDesign {
    pub c_r: f64,
    pub l_r: f64,
    pub l_c: f64,
    pub l_sigma: f64,
    /// Mode count at which the band-centre coupling equals the target.
    pub n_eff: f64,
}

impl CircuitDesign {
    /// Complete with junction parameters.
    pub fn with_junction(&self, c_j: f64, e_j: f64, phi_ext: f64) -> CircuitSpec {
        CircuitSpec {
            c_r: self.c_r,
            l_r: self.l_r,
            l_c: self.l_c,
            c_j,
            e_j,
            phi_ext,
        }
    }
}

/// Inverse map at fixed C_r. Requires 0 < ξ_r < ω_r/2 so that L_r > 0.
pub fn model_to_circuit(omega_r: f64, xi_r: f64, g_center: f64, c_r: f64) -> Result<CircuitDesign> {
    if !(omega_r > 0.0) {
        return Err(Error::invalid("omega_r", "must be positive"));
    }
    if !(c_r > 0.0) {
        return Err(Error::invalid("c_r", "must be positive"));
    }
    if !(g_center > 0.0) {
        return Err(Error::invalid("g_center", "must be positive"));
    }
    if !(xi_r > 0.0) {
        return Err(Error::invalid("xi_r", "must be positive"));
    }
    let l_sigma = 1.0 / (omega_r * omega_r * c_r);
    let l_c = omega_r * l_sigma / xi_r;
    let inv = 1.0 / (2.0 * l_sigma) - 1.0 / l_c;
    if !(inv > 0.0) {
        return Err(Error::invalid(
            "xi_r",
            format!("xi_r = {xi_r} needs L_c > 2 L_sigma, i.e. xi_r < omega_r/2"),
        ));
    }
    Ok(CircuitDesign {
        c_r,
        l_r: 0.5 / inv,
        l_c,
        l_sigma,
        n_eff: omega_r.powi(3) * c_r / (2.0 * g_center * g_center),
    })
}
