//! Closed-form single-photon transmission through a two-level emitter in the
//! rotating-wave approximation, for both truncated gauges.
//!
//! On the open lattice the exact single-excitation solution is
//! t = A/(A + iΓ) with A = ω − Δ − Re Σ(ω) and Γ = Im Σ(ω) = J(ω)/2, and
//! r = t − 1 from continuity at the emitter site.

use num_complex::Complex64;
use serde::Serialize;

use crate::spectral::{self_energy_rwa, spectral_density_coulomb};
use crate::{Error, Lattice, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransmissionPoint {
    pub omega_k: f64,
    pub t: Complex64,
    pub r: Complex64,
    #[serde(rename = "T")]
    pub big_t: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

impl TransmissionPoint {
    fn from_t(omega_k: f64, t: Complex64) -> Self {
        let r = t - 1.0;
        Self {
            omega_k,
            t,
            r,
            big_t: t.norm_sqr(),
            big_r: r.norm_sqr(),
        }
    }
}

fn check(delta: f64, g: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be positive"));
    }
    if !(g >= 0.0) {
        return Err(Error::invalid("g", "must be non-negative"));
    }
    Ok(())
}

/// Dipole gauge, g_k ∝ ω_k.
pub fn transmission_dipole_rwa(omega_k: f64, delta: f64, g: f64, lat: &Lattice) -> Result<TransmissionPoint> {
    check(delta, g)?;
    let sigma = self_energy_rwa(omega_k, g, lat)?;
    let a = omega_k - delta - sigma.real_part;
    Ok(TransmissionPoint::from_t(omega_k, amplitude(a, sigma.imag_part)))
}

/// a/(a + iΓ), with a decoupled emitter (Γ = 0) fully transparent.
fn amplitude(a: f64, gamma: f64) -> Complex64 {
    if gamma == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    Complex64::new(a, 0.0) / Complex64::new(a, gamma)
}

/// Coulomb gauge, k-independent coupling g_C: no Lamb shift, so the zero of
/// t stays at ω = Δ.
pub fn transmission_coulomb_rwa(omega_k: f64, delta: f64, g_c: f64, lat: &Lattice) -> Result<TransmissionPoint> {
    check(delta, g_c)?;
    let gamma = 0.5 * spectral_density_coulomb(omega_k, g_c, lat)?;
    let a = omega_k - delta;
    Ok(TransmissionPoint::from_t(omega_k, amplitude(a, gamma)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resonance {
    pub omega: f64,
    pub in_band: bool,
}

/// Zero of the dipole-gauge amplitude: ω_c(Δω_c − g²)/(ω_c² + g²).
pub fn resonance_rwa(delta: f64, g: f64, lat: &Lattice) -> Resonance {
    let oc = lat.omega_c;
    let omega = oc * (delta * oc - g * g) / (oc * oc + g * g);
    Resonance {
        omega,
        in_band: lat.in_band(omega),
    }
}
