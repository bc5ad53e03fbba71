//! Variational polaron (Silbey–Harris) treatment of the dipole-gauge
//! spin-boson model and the resulting beyond-RWA resonance.
//!
//! In the polaron frame the spin sees a renormalized gap
//! Δ_r = Δ′ exp(−2Σ_k f_k²) with displacements f_k = g_k/(Δ_r + ω_k). The
//! remaining one-excitation problem couples the spin to the modes through
//! 2Δ_r f_k, and the displacement of the spin-down manifold adds a rank-one
//! photon potential. Eliminating both gives the resummed self-energy
//! Σ_P = 4Δ_r²F/(1 − 2Δ_r F), F(E) = Σ_k f_k²/(E − ω_k).

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::lattice::Branch;
use crate::models::SpinBosonModel;
use crate::spectral::lattice_integral;
use crate::{Error, Lattice, Result};

pub const DAMPING: f64 = 0.5;
pub const MAX_STEPS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolaronSolution {
    pub delta_r: f64,
    pub f_k: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    /// Variational ground-state energy after each damped step.
    pub energy_trace: Vec<f64>,
}

fn displacements(model: &SpinBosonModel, delta_r: f64) -> Vec<f64> {
    model.modes.iter().map(|m| m.g / (delta_r + m.omega)).collect()
}

fn variational_energy(model: &SpinBosonModel, f: &[f64]) -> f64 {
    let s2: f64 = f.iter().map(|x| x * x).sum();
    let bath: f64 = model
        .modes
        .iter()
        .zip(f)
        .map(|(m, &fk)| m.omega * fk * fk - 2.0 * m.g * fk)
        .sum();
    -0.5 * model.delta * (-2.0 * s2).exp() + bath
}

/// Damped fixed point of Δ_r = Δ′ exp(−2Σ f_k²), f_k = g_k/(Δ_r + ω_k).
pub fn solve_polaron(model: &SpinBosonModel) -> Result<PolaronSolution> {
    let dp = model.delta;
    let mut delta_r = dp;
    let mut trace = Vec::new();
    let mut tail = Vec::new();
    for it in 1..=MAX_STEPS {
        let f = displacements(model, delta_r);
        trace.push(variational_energy(model, &f));
        let s2: f64 = f.iter().map(|x| x * x).sum();
        let target = dp * (-2.0 * s2).exp();
        let change = (target - delta_r).abs();
        if change < 1e-13 * dp.max(1.0) {
            let f = displacements(model, target);
            let s2: f64 = f.iter().map(|x| x * x).sum();
            let fixed = (dp * (-2.0 * s2).exp() - target).abs();
            let df = model
                .modes
                .iter()
                .zip(&f)
                .map(|(m, &fk)| (fk - m.g / (target + m.omega)).abs())
                .fold(0.0, f64::max);
            trace.push(variational_energy(model, &f));
            return Ok(PolaronSolution {
                delta_r: target,
                f_k: f,
                iterations: it,
                residual: fixed.max(df),
                energy_trace: trace,
            });
        }
        tail.push(delta_r);
        if tail.len() > 8 {
            tail.remove(0);
        }
        delta_r = (1.0 - DAMPING) * delta_r + DAMPING * target;
        if !(delta_r > 0.0) {
            break;
        }
    }
    Err(Error::NoConvergence {
        context: format!("polaron fixed point, last iterates {tail:?}"),
        iterations: MAX_STEPS,
        residual: tail.windows(2).last().map_or(f64::NAN, |w| (w[1] - w[0]).abs()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PolaronKernel {
    /// Σ_k 4Δ_r² f_k²/(E − ω_k − 2Δ_r(Σ_l f_l)²).
    Unresummed,
    /// 4Δ_r² F/(1 − 2Δ_r F).
    #[default]
    Resummed,
}

/// Mode sum F(E) = Σ_k f_k²/(E + iη − ω_k).
pub fn displacement_sum(energy: f64, sol: &PolaronSolution, model: &SpinBosonModel, eta: f64) -> Complex64 {
    let z = Complex64::new(energy, eta);
    model.modes.iter().zip(&sol.f_k).map(|(m, f)| f * f / (z - m.omega)).sum()
}

/// Σ_P(E + iη) on the discrete mode table.
pub fn polaron_self_energy(
    energy: f64,
    sol: &PolaronSolution,
    model: &SpinBosonModel,
    eta: f64,
    kernel: PolaronKernel,
) -> Complex64 {
    let dr = sol.delta_r;
    match kernel {
        PolaronKernel::Unresummed => {
            let s: f64 = sol.f_k.iter().sum();
            let z = Complex64::new(energy - 2.0 * dr * s * s, eta);
            model
                .modes
                .iter()
                .zip(&sol.f_k)
                .map(|(m, f)| 4.0 * dr * dr * f * f / (z - m.omega))
                .sum()
        }
        PolaronKernel::Resummed => {
            let f = displacement_sum(energy, sol, model, eta);
            4.0 * dr * dr * f / (1.0 - 2.0 * dr * f)
        }
    }
}

/// Continuum limit of F(E) for dipole-gauge couplings g_k² = g²ω_k²/(Nω_c²)
/// and f_k = g_k/(D + ω_k), by partial fractions of ω²/((D + ω)²(E − ω)).
pub fn displacement_sum_continuum(energy: f64, delta_r: f64, g: f64, lat: &Lattice) -> Result<Complex64> {
    let d = delta_r;
    let e = energy;
    let ed = e + d;
    let a = e * e / (ed * ed);
    let b = -(2.0 * d * e + d * d) / (ed * ed);
    let c = d * d / ed;
    let i_pole = lattice_integral(e, 0, lat, Branch::Retarded)?;
    // ∫dk/(D + ω_k) = −I(−D, 0); ∫dk/(D + ω_k)² = 2π|u|/(u² − 4ξ²)^{3/2}, u = −D − ω_c
    let i_first = -lattice_integral(-d, 0, lat, Branch::Retarded)?;
    let u = -d - lat.omega_c;
    let i_second = 2.0 * PI * u.abs() / (u * u - 4.0 * lat.xi * lat.xi).powf(1.5);
    let pref = g * g / (2.0 * PI * lat.omega_c * lat.omega_c);
    Ok(pref * (a * i_pole + b * i_first + c * i_second))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolaronResonance {
    pub omega: f64,
    pub in_band: bool,
}

/// Resonance of the polaron picture by bracketed bisection over the band.
///
/// With the resummed kernel the condition is the real zero of
/// (ω − Δ_r − Σ_P)(1 − 2Δ_r F) = ω − Δ_r − 2Δ_r(ω + Δ_r)F, evaluated with
/// the continuum F; with the unresummed kernel it is ω − Δ_r − Re Σ_P = 0.
pub fn polaron_resonance(sol: &PolaronSolution, model: &SpinBosonModel, g: f64, kernel: PolaronKernel) -> Result<PolaronResonance> {
    let lat = model.lattice;
    let dr = sol.delta_r;
    let s: f64 = sol.f_k.iter().sum();
    let shift = 2.0 * dr * s * s;
    let f = |w: f64| -> Result<f64> {
        match kernel {
            PolaronKernel::Resummed => {
                let fc = displacement_sum_continuum(w, dr, g, &lat)?;
                Ok(w - dr - 2.0 * dr * (w + dr) * fc.re)
            }
            PolaronKernel::Unresummed => {
                let fc = displacement_sum_continuum(w - shift, dr, g, &lat)?;
                Ok(w - dr - 4.0 * dr * dr * fc.re)
            }
        }
    };
    let n = 400;
    let lo = lat.lower_edge();
    let hw = lat.upper_edge() - lo;
    let pts: Vec<f64> = (1..n).map(|j| lo + hw * j as f64 / n as f64).collect();
    let mut vals = Vec::with_capacity(pts.len());
    for &w in &pts {
        vals.push(f(w).ok());
    }
    let mut best: Option<(f64, f64)> = None;
    for j in 0..pts.len() - 1 {
        if let (Some(a), Some(b)) = (vals[j], vals[j + 1]) {
            if a == 0.0 {
                best = Some((pts[j], pts[j]));
                break;
            }
            if a * b < 0.0 {
                let cand = (pts[j], pts[j + 1]);
                let closer = best.map_or(true, |(x, _)| (cand.0 - dr).abs() < (x - dr).abs());
                if closer {
                    best = Some(cand);
                }
            }
        }
    }
    let Some((mut a, mut b)) = best else {
        return Ok(PolaronResonance {
            omega: f64::NAN,
            in_band: false,
        });
    };
    let mut fa = f(a)?;
    for _ in 0..200 {
        if b - a < 1e-15 {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fa * fm <= 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    Ok(PolaronResonance {
        omega: 0.5 * (a + b),
        in_band: true,
    })
}
