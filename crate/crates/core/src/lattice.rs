//! Tight-binding cavity array: dispersion, band edges and lattice roots.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Which side of the real axis an energy is approached from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// E + i0⁺
    #[default]
    Retarded,
    /// E − i0⁺
    Advanced,
}

/// Array of identical cavities at frequency `omega_c` with nearest-neighbour
/// hopping `xi` (signed). Dispersion ω_k = ω_c + 2ξ cos k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub omega_c: f64,
    pub xi: f64,
}

impl Default for Lattice {
    fn default() -> Self {
        Self {
            omega_c: 1.0,
            xi: -1.0 / std::f64::consts::PI,
        }
    }
}

impl Lattice {
    pub fn new(omega_c: f64, xi: f64) -> Result<Self> {
        if !(omega_c > 0.0) {
            return Err(Error::invalid("omega_c", "must be positive"));
        }
        if !(xi.abs() > 0.0) || !xi.is_finite() {
            return Err(Error::invalid("xi", "hopping must be non-zero and finite"));
        }
        Ok(Self { omega_c, xi })
    }

    pub fn half_width(&self) -> f64 {
        2.0 * self.xi.abs()
    }

    pub fn lower_edge(&self) -> f64 {
        self.omega_c - self.half_width()
    }

    pub fn upper_edge(&self) -> f64 {
        self.omega_c + self.half_width()
    }

    pub fn in_band(&self, omega: f64) -> bool {
        omega > self.lower_edge() && omega < self.upper_edge()
    }

    pub fn dispersion(&self, k: f64) -> f64 {
        self.omega_c + 2.0 * self.xi * k.cos()
    }

    /// |dω/dk|
    pub fn group_velocity(&self, k: f64) -> f64 {
        (2.0 * self.xi * k.sin()).abs()
    }

    /// √(4ξ² − (ω − ω_c)²), the group velocity at frequency ω.
    pub fn velocity_at(&self, omega: f64) -> f64 {
        let d = omega - self.omega_c;
        (4.0 * self.xi * self.xi - d * d).max(0.0).sqrt()
    }

    /// Reduced energy a = (E − ω_c)/(2ξ).
    pub fn reduced(&self, energy: f64) -> f64 {
        (energy - self.omega_c) / (2.0 * self.xi)
    }

    /// Root of z² − 2az + 1 = 0 selected by E → E ± i0⁺: inside the band it
    /// is the unimodular root e^{ik} of a wave with positive group velocity
    /// along +n (retarded), outside it is the root with |z| < 1.
    pub fn root(&self, energy: f64, branch: Branch) -> Result<Complex64> {
        let a = self.reduced(energy);
        if (a.abs() - 1.0).abs() < 1e-14 {
            return Err(Error::Domain(format!("energy {energy} sits on a band edge")));
        }
        if a.abs() < 1.0 {
            let s = match branch {
                Branch::Retarded => -self.xi.signum(),
                Branch::Advanced => self.xi.signum(),
            };
            Ok(Complex64::new(a, s * (1.0 - a * a).sqrt()))
        } else {
            Ok(Complex64::new(a - a.signum() * (a * a - 1.0).sqrt(), 0.0))
        }
    }

    /// Wavenumber in (0, π) of the right-moving wave at an in-band frequency.
    pub fn wavenumber(&self, omega: f64) -> Result<f64> {
        if !self.in_band(omega) {
            return Err(Error::Domain(format!("omega {omega} outside the band")));
        }
        Ok(self.root(omega, Branch::Retarded)?.arg())
    }

    /// Periodic mode grid k = 2πm/N, m = −(N−1)/2 … (N−1)/2 for odd N.
    pub fn mode_grid(n: usize) -> Vec<f64> {
        let half = (n as i64 - 1) / 2;
        (-half..=half)
            .map(|m| 2.0 * std::f64::consts::PI * m as f64 / n as f64)
            .collect()
    }
}
