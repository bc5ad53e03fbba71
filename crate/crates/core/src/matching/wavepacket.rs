//! Time-domain cross-check of the matching solver: a Gaussian photon packet
//! is launched at the dressed ground state on a finite chain and propagated
//! with a Krylov integrator.
//!
//! The Hilbert space is region II (at most K excitations) plus one photon on
//! any outer cavity times a region state. Two outer photons are dropped,
//! which is exact for the incoming packet and its elastic and inelastic
//! single-photon products.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{diagonalize_region, region_operators, ScattererSpec};
use crate::krylov::{lowest_eigenpairs, Csr, EigenOptions, LinearOperator, Propagator};
use crate::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WavepacketSpec {
    /// Carrier wavenumber in (0, π).
    pub k_in: f64,
    /// Spatial width: |φ(n)|² has standard deviation θ.
    pub theta: f64,
    /// Initial centre relative to the emitter cavity; defaults to
    /// −(m + 1 + 10θ).
    pub x_in: Option<f64>,
    /// Propagation time; defaults to the time for the transmitted packet to
    /// clear region II by 10θ.
    pub t_out: Option<f64>,
    /// Per-step error bound of the propagator.
    pub tol: f64,
}

impl Default for WavepacketSpec {
    fn default() -> Self {
        Self {
            k_in: std::f64::consts::FRAC_PI_2,
            theta: 10.0,
            x_in: None,
            t_out: None,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WavepacketResult {
    pub omega_in: f64,
    pub k_in: f64,
    pub t_out: f64,
    /// Elastic momentum-resolved |S(k_in)|² on the far side.
    pub transmission_at_k: f64,
    pub reflection_at_k: f64,
    /// Elastic packet weights (region back in its ground state).
    pub transmitted_weight: f64,
    pub reflected_weight: f64,
    /// Photon weight on each side regardless of the region state.
    pub transmitted_total: f64,
    pub reflected_total: f64,
    /// Weight left without an outer photon.
    pub region_weight: f64,
    pub norm_drift: f64,
    /// Overlap of a_φ†|GS⟩ with φ ⊗ |GS_region⟩.
    pub vacuum_overlap: f64,
    pub outer_sites_per_side: usize,
    pub dim: usize,
    pub steps: usize,
}

/// Region block plus 2L outer blocks of one photon each, ordered left to
/// right: positions −m−L … −m−1 then m+1 … m+L.
struct ChainSector {
    region: Csr,
    /// a_s† on the left (0) and right (1) edge cavities.
    creators: [Csr; 2],
    annihilators: [Csr; 2],
    d: usize,
    l: usize,
    omega_c: f64,
    xi: f64,
}

impl ChainSector {
    fn blocks(&self) -> usize {
        1 + 2 * self.l
    }

    /// Block holding the outer photon at position p (|p| > m), 1-based after
    /// the region block.
    fn outer(&self, b: usize) -> std::ops::Range<usize> {
        let s = self.d * (1 + b);
        s..s + self.d
    }
}

fn csr_apply_add(a: &Csr, x: &[Complex64], y: &mut [Complex64], scale: f64) {
    for r in 0..a.dim {
        let mut acc = ZERO;
        for idx in a.row_ptr[r]..a.row_ptr[r + 1] {
            acc += a.vals[idx] * x[a.cols[idx]];
        }
        y[r] += acc * scale;
    }
}

impl LinearOperator for ChainSector {
    fn dim(&self) -> usize {
        self.d * self.blocks()
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let d = self.d;
        let l = self.l;
        y.par_chunks_mut(d).enumerate().for_each(|(blk, yb)| {
            yb.iter_mut().for_each(|v| *v = ZERO);
            let xb = &x[blk * d..(blk + 1) * d];
            csr_apply_add(&self.region, xb, yb, 1.0);
            if blk == 0 {
                // outer blocks adjacent to the region: b = l−1 (left), b = l (right)
                csr_apply_add(&self.creators[0], &x[self.outer(l - 1)], yb, self.xi);
                csr_apply_add(&self.creators[1], &x[self.outer(l)], yb, self.xi);
                return;
            }
            let b = blk - 1;
            for (v, xv) in yb.iter_mut().zip(xb) {
                *v += xv * self.omega_c;
            }
            let neighbours = [b.checked_sub(1), Some(b + 1).filter(|&n| n < 2 * l)];
            for nb in neighbours.into_iter().flatten() {
                // left and right halves are not adjacent to each other
                if (b < l) != (nb < l) {
                    continue;
                }
                for (v, xv) in yb.iter_mut().zip(&x[self.outer(nb)]) {
                    *v += xv * self.xi;
                }
            }
            if b == l - 1 {
                csr_apply_add(&self.annihilators[0], &x[0..d], yb, self.xi);
            } else if b == l {
                csr_apply_add(&self.annihilators[1], &x[0..d], yb, self.xi);
            }
        });
    }
}

fn to_csr(dim: usize, trip: &[(usize, usize, f64)], transpose: bool) -> Csr {
    let t: Vec<(usize, usize, Complex64)> = trip
        .iter()
        .map(|&(r, c, v)| {
            let (r, c) = if transpose { (c, r) } else { (r, c) };
            (r, c, Complex64::new(v, 0.0))
        })
        .collect();
    Csr::from_triplets(dim, &t)
}

/// Propagate a single-photon packet through region II and return the
/// scattered weights and the momentum-resolved elastic S-matrix at k_in.
pub fn evolve_wavepacket(spec: &ScattererSpec, wp: &WavepacketSpec) -> Result<WavepacketResult> {
    spec.validate()?;
    if !(wp.k_in > 0.0 && wp.k_in < std::f64::consts::PI) {
        return Err(Error::invalid("k_in", "must lie in (0, pi)"));
    }
    if !(wp.theta >= 4.0) {
        return Err(Error::invalid("theta", "must be at least 4 sites"));
    }
    if !(wp.tol > 0.0) {
        return Err(Error::invalid("tol", "must be positive"));
    }
    let lat = spec.lattice();
    let m = spec.half() as f64;
    let theta = wp.theta;
    // The amplitude φ has standard deviation √2 θ, and the momentum
    // projection is linear in it, so 10θ keeps truncation below 1e-11.
    let clearance = 10.0 * theta;
    let x_in = wp.x_in.unwrap_or(-(m + 1.0 + clearance));
    if x_in > -(m + 1.0 + 6.0 * theta) {
        return Err(Error::invalid("x_in", "packet must start at least 6 theta outside region II"));
    }
    let omega_in = lat.dispersion(wp.k_in);
    let v = lat.group_velocity(wp.k_in);
    let t_out = wp.t_out.unwrap_or((x_in.abs() + m + clearance) / v);
    let curvature = 2.0 * lat.xi.abs();
    let spread = curvature * t_out / (2.0 * theta);
    let reach = (x_in.abs() + clearance).max(v * t_out - x_in.abs() + clearance);
    let l = (reach + 6.0 * spread + 10.0).ceil() as usize;

    let ops = region_operators(spec);
    let d = ops.basis.dim();
    let region_trip: Vec<(usize, usize, f64)> = (0..d)
        .flat_map(|r| (0..d).map(move |c| (r, c)))
        .filter_map(|(r, c)| {
            let v = ops.hamiltonian[(r, c)];
            (v != 0.0).then_some((r, c, v))
        })
        .collect();
    let sector = ChainSector {
        region: to_csr(d, &region_trip, false),
        creators: [to_csr(d, &ops.creators[0], false), to_csr(d, &ops.creators[1], false)],
        annihilators: [to_csr(d, &ops.creators[0], true), to_csr(d, &ops.creators[1], true)],
        d,
        l,
        omega_c: lat.omega_c,
        xi: lat.xi,
    };
    let dim = sector.dim();

    let mut opts = EigenOptions::lowest(1);
    opts.tol = 1e-11;
    let gs = lowest_eigenpairs(&sector, opts)?;
    let ground = &gs.vectors[0];

    let region_sys = diagonalize_region(spec)?;
    let gs_region: Vec<f64> = region_sys.states.column(0).iter().copied().collect();

    // position of outer block b
    let mi = spec.half() as i64;
    let li = l as i64;
    let position = |b: usize| -> i64 {
        let b = b as i64;
        if b < li {
            -mi - li + b
        } else {
            mi + 1 + (b - li)
        }
    };
    let phi: Vec<Complex64> = (0..2 * l)
        .map(|b| {
            let p = position(b);
            if p > 0 {
                return ZERO;
            }
            let x = p as f64 - x_in;
            Complex64::from_polar((-x * x / (4.0 * theta * theta)).exp(), wp.k_in * p as f64)
        })
        .collect();

    let mut psi = vec![ZERO; dim];
    for (b, &f) in phi.iter().enumerate() {
        if f == ZERO {
            continue;
        }
        let range = sector.outer(b);
        for (dst, src) in psi[range].iter_mut().zip(&ground[0..d]) {
            *dst = f * src;
        }
    }
    let norm0 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|c| *c /= norm0);

    let phi_norm = phi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut overlap = ZERO;
    for (b, &f) in phi.iter().enumerate() {
        let blk = &psi[sector.outer(b)];
        for (c, &gv) in blk.iter().zip(&gs_region) {
            overlap += c.conj() * f * gv;
        }
    }
    let vacuum_overlap = overlap.norm() / phi_norm;

    let mut prop = Propagator::new(&sector, wp.tol);
    let steps = prop.evolve(&mut psi, t_out)?;
    let norm_t = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();

    let block_weight = |b: usize| psi[sector.outer(b)].iter().map(|c| c.norm_sqr()).sum::<f64>();
    let wall: f64 = (0..3.min(l)).map(|i| block_weight(i) + block_weight(2 * l - 1 - i)).sum();
    if wall > 1e-6 {
        return Err(Error::WallCollision { population: wall });
    }

    let elastic = |b: usize| -> Complex64 {
        psi[sector.outer(b)]
            .iter()
            .zip(&gs_region)
            .map(|(c, &gv)| c * gv)
            .sum()
    };
    let (mut t_el, mut r_el, mut t_tot, mut r_tot) = (0.0, 0.0, 0.0, 0.0);
    let (mut out_t, mut out_r, mut inc) = (ZERO, ZERO, ZERO);
    for b in 0..2 * l {
        let p = position(b) as f64;
        let amp = elastic(b);
        let w = block_weight(b);
        inc += phi[b] / norm0 * Complex64::from_polar(1.0, -wp.k_in * p);
        if b >= l {
            t_el += amp.norm_sqr();
            t_tot += w;
            out_t += amp * Complex64::from_polar(1.0, -wp.k_in * p);
        } else {
            r_el += amp.norm_sqr();
            r_tot += w;
            out_r += amp * Complex64::from_polar(1.0, wp.k_in * p);
        }
    }
    let region_weight = psi[0..d].iter().map(|c| c.norm_sqr()).sum::<f64>();
    Ok(WavepacketResult {
        omega_in,
        k_in: wp.k_in,
        t_out,
        transmission_at_k: out_t.norm_sqr() / inc.norm_sqr(),
        reflection_at_k: out_r.norm_sqr() / inc.norm_sqr(),
        transmitted_weight: t_el,
        reflected_weight: r_el,
        transmitted_total: t_tot,
        reflected_total: r_tot,
        region_weight,
        norm_drift: (norm_t - 1.0).abs(),
        vacuum_overlap,
        outer_sites_per_side: l,
        dim,
        steps,
    })
}
