//! Spectral densities, lattice Green's-function integrals and the RWA
//! self-energy of the two-level emitter.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::lattice::Branch;
use crate::models::SpinBosonModel;
use crate::{Error, Lattice, Result};

fn require_in_band(omega: f64, lat: &Lattice) -> Result<()> {
    if lat.in_band(omega) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "omega = {omega} outside the open band ({}, {})",
            lat.lower_edge(),
            lat.upper_edge()
        )))
    }
}

/// J_D(ω) = 2g²ω²/(ω_c² √(4ξ² − (ω − ω_c)²))
pub fn spectral_density_dipole(omega: f64, g: f64, lat: &Lattice) -> Result<f64> {
    require_in_band(omega, lat)?;
    Ok(2.0 * g * g * omega * omega / (lat.omega_c * lat.omega_c * lat.velocity_at(omega)))
}

/// J_C(ω) = 2g_C²/√(4ξ² − (ω − ω_c)²)
pub fn spectral_density_coulomb(omega: f64, g_c: f64, lat: &Lattice) -> Result<f64> {
    require_in_band(omega, lat)?;
    Ok(2.0 * g_c * g_c / lat.velocity_at(omega))
}

/// Coulomb-gauge coupling equivalent to a dipole-gauge g at weak coupling,
/// from |⟨0|p|1⟩| = Δ|⟨0|x|1⟩| in the dimensionless convention.
pub fn coulomb_coupling_weak(g: f64, delta: f64, omega_c: f64) -> f64 {
    g * delta / omega_c
}

/// I(E, n) = ∫_{−π}^{π} e^{ink} dk / (E − ω_k) on the chosen branch.
pub fn lattice_integral(energy: f64, n: i32, lat: &Lattice, branch: Branch) -> Result<Complex64> {
    let z = lat.root(energy, branch)?;
    Ok(-2.0 * PI * z.powi(n.abs()) / (lat.xi * (z - 1.0 / z)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelfEnergyValue {
    pub energy: f64,
    /// Lamb shift Re Σ.
    pub real_part: f64,
    /// Half linewidth; non-negative in band, zero outside.
    pub imag_part: f64,
    pub branch: Branch,
}

impl SelfEnergyValue {
    /// Σ(E ± i0⁺) as a complex number: Re Σ ∓ i·imag_part.
    pub fn complex(&self) -> Complex64 {
        match self.branch {
            Branch::Retarded => Complex64::new(self.real_part, -self.imag_part),
            Branch::Advanced => Complex64::new(self.real_part, self.imag_part),
        }
    }
}

/// Closed-form RWA self-energy of the dipole-gauge emitter inside the band:
/// Re Σ = −(g²/ω_c²)(ω_c + E), Im = g²E²/(ω_c² √(4ξ² − (E − ω_c)²)).
pub fn self_energy_rwa(energy: f64, g: f64, lat: &Lattice) -> Result<SelfEnergyValue> {
    require_in_band(energy, lat)?;
    let oc2 = lat.omega_c * lat.omega_c;
    Ok(SelfEnergyValue {
        energy,
        real_part: -g * g * (lat.omega_c + energy) / oc2,
        imag_part: g * g * energy * energy / (oc2 * lat.velocity_at(energy)),
        branch: Branch::Retarded,
    })
}

/// Self-energy assembled from the three lattice integrals,
/// Σ = g²/(2πω_c²) [(ω_c² + 2ξ²) I₀ + 4ξω_c I₁ + 2ξ² I₂], valid on either
/// branch and outside the band.
pub fn self_energy_assembled(energy: f64, g: f64, lat: &Lattice, branch: Branch) -> Result<Complex64> {
    let (oc, xi) = (lat.omega_c, lat.xi);
    let i0 = lattice_integral(energy, 0, lat, branch)?;
    let i1 = lattice_integral(energy, 1, lat, branch)?;
    let i2 = lattice_integral(energy, 2, lat, branch)?;
    let pref = g * g / (2.0 * PI * oc * oc);
    Ok(pref * ((oc * oc + 2.0 * xi * xi) * i0 + 4.0 * xi * oc * i1 + 2.0 * xi * xi * i2))
}

/// Σ_k |g_k|²/(E + iη − ω_k) over the model's mode table.
pub fn self_energy_rwa_sum(energy: f64, model: &SpinBosonModel, eta: f64) -> Result<Complex64> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    let z = Complex64::new(energy, eta);
    Ok(model.modes.iter().map(|m| m.g * m.g / (z - m.omega)).sum())
}

/// Discrete sum extrapolated to η → 0 by Richardson's rule on (η, 2η).
pub fn self_energy_rwa_extrapolated(energy: f64, model: &SpinBosonModel, eta: f64) -> Result<Complex64> {
    let a = self_energy_rwa_sum(energy, model, eta)?;
    let b = self_energy_rwa_sum(energy, model, 2.0 * eta)?;
    Ok(2.0 * a - b)
}
