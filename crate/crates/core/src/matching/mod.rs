//! Single-photon scattering off a dressed emitter by boundary matching.
//!
//! The emitter and its `M` nearest cavities (region II) are diagonalized
//! exactly in a sector of at most `K` excitations. Outside, the photon lives
//! on a free tight-binding chain and each channel α (region left in its
//! eigenstate |α⟩) carries the plane-wave or evanescent solution z_α^n with
//! z_α the retarded root at energy E − E_α. Continuity on the two edge
//! cavities, expressed through the region Green's function, fixes the
//! channel amplitudes.

mod wavepacket;

pub use wavepacket::{evolve_wavepacket, WavepacketResult, WavepacketSpec};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::krylov::symmetric_eigen;
use crate::lattice::Branch;
use crate::models::{spin_ops, Builder, FockBasis, Gauge};
use crate::{Error, Lattice, Result};

/// Ground-state photon number allowed on either edge cavity.
pub const EDGE_POPULATION_TOL: f64 = 1e-6;
/// Largest region tried by [`build_scatterer_auto`].
pub const MAX_REGION_SIZE: usize = 11;
/// Closed channels kept beyond the open ones.
pub const DEFAULT_EVANESCENT: usize = 8;

const POLE_GUARD: f64 = 1e-6;
const DECOUPLED: f64 = 1e-12;
const CACHED_COLUMNS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScattererSpec {
    pub omega_c: f64,
    pub xi: f64,
    pub delta: f64,
    pub g: f64,
    pub gauge: Gauge,
    pub rwa: bool,
    /// Number of cavities in region II (odd).
    pub region_size: usize,
    /// Bound on spin excitation plus photons inside region II.
    pub excitation_cutoff: usize,
}

impl Default for ScattererSpec {
    fn default() -> Self {
        Self {
            omega_c: 1.0,
            xi: -1.0 / std::f64::consts::PI,
            delta: 1.0,
            g: 0.1,
            gauge: Gauge::Dipole,
            rwa: false,
            region_size: 5,
            excitation_cutoff: 4,
        }
    }
}

impl ScattererSpec {
    pub fn validate(&self) -> Result<()> {
        Lattice::new(self.omega_c, self.xi)?;
        if !(self.delta > 0.0) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        if !(self.g >= 0.0) {
            return Err(Error::invalid("g", "must be non-negative"));
        }
        if self.region_size < 3 || self.region_size % 2 == 0 {
            return Err(Error::invalid("region_size", "must be odd and at least 3"));
        }
        if self.excitation_cutoff < 1 {
            return Err(Error::invalid("excitation_cutoff", "must be at least 1"));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Lattice {
        Lattice {
            omega_c: self.omega_c,
            xi: self.xi,
        }
    }

    pub fn half(&self) -> usize {
        self.region_size / 2
    }
}

/// Region II Hamiltonian with its basis and the edge creation operators.
pub(crate) struct RegionOperators {
    pub basis: FockBasis,
    pub hamiltonian: DMatrix<f64>,
    /// Triplets (row, col, value) of a†_s on the left (0) and right (1) edge.
    pub creators: [Vec<(usize, usize, f64)>; 2],
}

pub(crate) fn region_operators(spec: &ScattererSpec) -> RegionOperators {
    let m_cav = spec.region_size;
    let k = spec.excitation_cutoff;
    let tag = format!(
        "region:spin2(slowest,0=ground)x{m_cav}cavities_left_to_right_total{k}{}",
        if spec.rwa { "_rwa" } else { "" }
    );
    let basis = FockBasis::new(2, m_cav, k, Some(k), tag);
    let mut b = Builder::new(&basis);
    let (oc, delta) = (spec.omega_c, spec.delta);
    b.diagonal(|s| {
        let spin = if s[0] == 1 { 0.5 } else { -0.5 };
        delta * spin + oc * s[1..].iter().map(|&n| n as f64).sum::<f64>()
    });
    for j in 0..m_cav - 1 {
        b.hopping(j + 1, j, spec.xi);
    }
    let c = spec.half();
    let weights: Vec<(usize, f64)> = match spec.gauge {
        Gauge::Dipole => vec![
            (c, spec.g),
            (c - 1, spec.xi * spec.g / spec.omega_c),
            (c + 1, spec.xi * spec.g / spec.omega_c),
        ],
        Gauge::Coulomb => vec![(c, spec.g)],
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let (sx, _, _) = spin_ops();
    let mut sp = DMatrix::<Complex64>::zeros(2, 2);
    sp[(1, 0)] = one;
    let sm = sp.adjoint();
    for (cav, wt) in weights {
        if wt == 0.0 {
            continue;
        }
        if spec.rwa {
            b.matter_boson(&sp.map(|v| v * wt), cav, one, zero);
            b.matter_boson(&sm.map(|v| v * wt), cav, zero, one);
        } else {
            b.matter_boson(&sx.map(|v| v * wt), cav, one, one);
        }
    }
    let op = b.finish();
    let dim = basis.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for &(r, col, v) in &op.entries {
        h[(r, col)] += v.re;
    }
    let creator = |cav: usize| {
        let p = cav + 1;
        let mut out = Vec::new();
        for (i, s) in basis.states.iter().enumerate() {
            let mut t = s.clone();
            t[p] += 1;
            if let Some(j) = basis.find(&t) {
                out.push((j, i, (t[p] as f64).sqrt()));
            }
        }
        out
    };
    let creators = [creator(0), creator(m_cav - 1)];
    RegionOperators {
        basis,
        hamiltonian: h,
        creators,
    }
}

fn parity_of(state: &[u8]) -> i8 {
    if state.iter().map(|&n| n as usize).sum::<usize>() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Diagonalized region II.
#[derive(Debug, Clone)]
pub struct ScattererEigensystem {
    pub spec: ScattererSpec,
    /// Ascending eigenvalues.
    pub energies: Vec<f64>,
    /// Columns are eigenvectors in the Fock basis.
    pub states: DMatrix<f64>,
    /// Excitation parity (−1)^{s + Σn} of each eigenstate.
    pub parity: Vec<i8>,
    /// Ground-state ⟨n⟩ on the left and right edge cavities.
    pub edge_population: [f64; 2],
    creators: [Vec<(usize, usize, f64)>; 2],
    /// ⟨γ|a_s†|α⟩ for the first cached columns α.
    boundary: [DMatrix<f64>; 2],
}

impl ScattererEigensystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn max_edge_population(&self) -> f64 {
        self.edge_population[0].max(self.edge_population[1])
    }

    fn boundary_columns(&self, side: usize, n: usize) -> DMatrix<f64> {
        if n <= self.boundary[side].ncols() {
            return self.boundary[side].columns(0, n).into_owned();
        }
        boundary_block(&self.creators[side], &self.states, n)
    }
}

/// Vᵀ a† V restricted to the first `n` columns.
fn boundary_block(creator: &[(usize, usize, f64)], v: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let dim = v.nrows();
    let mut cv = DMatrix::<f64>::zeros(dim, n);
    for &(r, c, val) in creator {
        for a in 0..n {
            cv[(r, a)] += val * v[(c, a)];
        }
    }
    v.tr_mul(&cv)
}

/// Diagonalize region II sector by sector and check that the ground state
/// does not touch the edge cavities.
pub fn build_scatterer(spec: &ScattererSpec) -> Result<ScattererEigensystem> {
    let sys = diagonalize_region(spec)?;
    let pop = sys.max_edge_population();
    if pop > EDGE_POPULATION_TOL {
        return Err(Error::RegionTooSmall {
            region_size: spec.region_size,
            population: pop,
        });
    }
    Ok(sys)
}

/// [`build_scatterer`] with region II grown by two cavities at a time until
/// the edge check passes or [`MAX_REGION_SIZE`] is exceeded.
pub fn build_scatterer_auto(spec: &ScattererSpec) -> Result<ScattererEigensystem> {
    let mut s = *spec;
    loop {
        match build_scatterer(&s) {
            Err(Error::RegionTooSmall { .. }) if s.region_size + 2 <= MAX_REGION_SIZE => s.region_size += 2,
            other => return other,
        }
    }
}

/// Region eigensystem without the edge-population check.
pub fn diagonalize_region(spec: &ScattererSpec) -> Result<ScattererEigensystem> {
    spec.validate()?;
    let ops = region_operators(spec);
    let dim = ops.basis.dim();
    let parities: Vec<i8> = ops.basis.states.iter().map(|s| parity_of(s)).collect();
    let mut pairs: Vec<(f64, i8, DVector<f64>)> = Vec::with_capacity(dim);
    for p in [1i8, -1] {
        let idx: Vec<usize> = (0..dim).filter(|&i| parities[i] == p).collect();
        if idx.is_empty() {
            continue;
        }
        let block = DMatrix::from_fn(idx.len(), idx.len(), |r, c| ops.hamiltonian[(idx[r], idx[c])]);
        let (evals, evecs) = symmetric_eigen(&block);
        for (j, &e) in evals.iter().enumerate() {
            let mut v = DVector::<f64>::zeros(dim);
            for (r, &i) in idx.iter().enumerate() {
                v[i] = evecs[(r, j)];
            }
            pairs.push((e, p, v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let energies: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let parity: Vec<i8> = pairs.iter().map(|p| p.1).collect();
    let states = DMatrix::from_columns(&pairs.iter().map(|p| p.2.clone()).collect::<Vec<_>>());
    let last = spec.region_size;
    let edge_population = [1, last].map(|p| {
        (0..dim)
            .map(|i| states[(i, 0)].powi(2) * ops.basis.states[i][p] as f64)
            .sum::<f64>()
    });
    let cached = CACHED_COLUMNS.min(dim);
    let boundary = [
        boundary_block(&ops.creators[0], &states, cached),
        boundary_block(&ops.creators[1], &states, cached),
    ];
    Ok(ScattererEigensystem {
        spec: *spec,
        energies,
        states,
        parity,
        edge_population,
        creators: ops.creators,
        boundary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Incidence {
    #[default]
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchingMethod {
    Green,
    Bordered,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Channel {
    pub index: usize,
    /// E_α − E₀.
    pub excitation: f64,
    pub parity: i8,
    /// Photon energy in this channel.
    pub omega_out: f64,
    pub open: bool,
    /// Group velocity; zero for closed channels.
    pub velocity: f64,
    /// Amplitude on the far side (transmission for α = 0).
    pub t: Complex64,
    /// Amplitude on the incident side.
    pub r: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringResult {
    pub omega_in: f64,
    pub k_in: f64,
    pub incidence: Incidence,
    pub t: Complex64,
    pub r: Complex64,
    #[serde(rename = "T")]
    pub big_t: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub inelastic_transmittance: f64,
    pub inelastic_reflectance: f64,
    /// (1 − T − R)/2
    pub inelastic_proxy: f64,
    /// |Σ_open (v_α/v₀)(|r_α|² + |t_α|²) − 1|
    pub flux_error: f64,
    pub method: MatchingMethod,
    /// Ratio of largest to smallest pivot of the matching LU.
    pub pivot_ratio: f64,
    pub channels: Vec<Channel>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchingOptions {
    pub evanescent: usize,
    pub incidence: Incidence,
}

impl Default for MatchingOptions {
    fn default() -> Self {
        Self {
            evanescent: DEFAULT_EVANESCENT,
            incidence: Incidence::Left,
        }
    }
}

/// Scatter a photon of energy `omega_in` (measured from the ground state)
/// incident from the left.
pub fn scatter_single_photon(scat: &ScattererEigensystem, omega_in: f64) -> Result<ScatteringResult> {
    scatter_with(scat, omega_in, MatchingOptions::default())
}

pub fn scatter_with(scat: &ScattererEigensystem, omega_in: f64, opts: MatchingOptions) -> Result<ScatteringResult> {
    let lat = scat.spec.lattice();
    if !lat.in_band(omega_in) {
        return Err(Error::Domain(format!("incident frequency {omega_in} outside the band")));
    }
    match scatter_at(scat, omega_in, opts) {
        Err(Error::SingularMatching { .. }) | Err(Error::Domain(_)) => {
            let mut res = scatter_at(scat, omega_in + 1e-9, opts)?;
            res.omega_in = omega_in;
            Ok(res)
        }
        other => other,
    }
}

fn scatter_at(scat: &ScattererEigensystem, omega_in: f64, opts: MatchingOptions) -> Result<ScatteringResult> {
    let lat = scat.spec.lattice();
    let xi = lat.xi;
    let m = scat.spec.half() as i32;
    let e0 = scat.ground_energy();
    let e_tot = e0 + omega_in;
    let dim = scat.dim();
    let n_open = scat
        .energies
        .iter()
        .take_while(|&&e| e_tot - e > lat.lower_edge())
        .count();
    let n = (n_open + opts.evanescent).min(dim);
    let z: Vec<Complex64> = (0..n)
        .map(|a| lat.root(e_tot - scat.energies[a], Branch::Retarded))
        .collect::<Result<_>>()?;
    let (inc_side, far_side) = match opts.incidence {
        Incidence::Left => (0, 1),
        Incidence::Right => (1, 0),
    };
    let a_in = scat.boundary_columns(inc_side, n);
    let a_far = scat.boundary_columns(far_side, n);
    let zm: Vec<Complex64> = z.iter().map(|w| w.powi(m)).collect();
    let zm1: Vec<Complex64> = z.iter().map(|w| w.powi(m + 1)).collect();
    let inc_ext = z[0].powi(-m);
    let inc_lead = z[0].powi(-m - 1);

    let coupling: Vec<f64> = (0..dim)
        .map(|g| {
            (0..n)
                .map(|a| a_in[(g, a)].abs().max(a_far[(g, a)].abs()))
                .fold(0.0, f64::max)
        })
        .collect();
    let near_pole = (0..dim).any(|g| coupling[g] > DECOUPLED && (e_tot - scat.energies[g]).abs() < POLE_GUARD);

    let (sol, method, pivot_ratio) = if near_pole {
        let s = solve_bordered(scat, &a_in, &a_far, &zm, &zm1, inc_ext, inc_lead, e_tot, xi, omega_in)?;
        (s.0, MatchingMethod::Bordered, s.1)
    } else {
        let green: Vec<f64> = (0..dim)
            .map(|g| {
                if coupling[g] > DECOUPLED {
                    1.0 / (e_tot - scat.energies[g])
                } else {
                    0.0
                }
            })
            .collect();
        let kern = |a: &DMatrix<f64>, b: &DMatrix<f64>| -> DMatrix<f64> {
            let mut ga = a.clone();
            for (g, &gv) in green.iter().enumerate() {
                ga.row_mut(g).scale_mut(gv);
            }
            ga.tr_mul(b)
        };
        let k_ii = kern(&a_in, &a_in);
        let k_if = kern(&a_in, &a_far);
        let k_fi = kern(&a_far, &a_in);
        let k_ff = kern(&a_far, &a_far);
        let c = |v: f64| Complex64::new(v, 0.0);
        let mut mat = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        let mut rhs = DVector::<Complex64>::zeros(2 * n);
        for a in 0..n {
            for b in 0..n {
                mat[(a, b)] = -c(xi * k_ii[(a, b)]) * zm1[b];
                mat[(a, n + b)] = -c(xi * k_if[(a, b)]) * zm1[b];
                mat[(n + a, b)] = -c(xi * k_fi[(a, b)]) * zm1[b];
                mat[(n + a, n + b)] = -c(xi * k_ff[(a, b)]) * zm1[b];
            }
            mat[(a, a)] += zm[a];
            mat[(n + a, n + a)] += zm[a];
            rhs[a] = c(xi * k_ii[(a, 0)]) * inc_lead;
            rhs[n + a] = c(xi * k_fi[(a, 0)]) * inc_lead;
        }
        rhs[0] -= inc_ext;
        let (x, ratio) = lu_solve(mat, rhs, omega_in)?;
        (x, MatchingMethod::Green, ratio)
    };
    let off = sol.len() - 2 * n;
    let r: Vec<Complex64> = (0..n).map(|a| sol[off + a]).collect();
    let t: Vec<Complex64> = (0..n).map(|a| sol[off + n + a]).collect();

    let v0 = lat.velocity_at(omega_in);
    let mut channels = Vec::with_capacity(n);
    let (mut flux, mut t_inel, mut r_inel) = (0.0, 0.0, 0.0);
    for a in 0..n {
        let omega_out = e_tot - scat.energies[a];
        let open = a < n_open;
        let velocity = if open { lat.velocity_at(omega_out) } else { 0.0 };
        if open {
            let w = velocity / v0;
            flux += w * (r[a].norm_sqr() + t[a].norm_sqr());
            if a > 0 {
                t_inel += w * t[a].norm_sqr();
                r_inel += w * r[a].norm_sqr();
            }
        }
        channels.push(Channel {
            index: a,
            excitation: scat.energies[a] - e0,
            parity: scat.parity[a],
            omega_out,
            open,
            velocity,
            t: t[a],
            r: r[a],
        });
    }
    let big_t = t[0].norm_sqr();
    let big_r = r[0].norm_sqr();
    Ok(ScatteringResult {
        omega_in,
        k_in: z[0].arg(),
        incidence: opts.incidence,
        t: t[0],
        r: r[0],
        big_t,
        big_r,
        inelastic_transmittance: t_inel,
        inelastic_reflectance: r_inel,
        inelastic_proxy: 0.5 * (1.0 - big_t - big_r),
        flux_error: (flux - 1.0).abs(),
        method,
        pivot_ratio,
        channels,
    })
}

/// Unknowns (f_γ, r, t) with the region amplitudes kept explicit, so that an
/// eigenvalue of region II at the scattering energy causes no division.
#[allow(clippy::too_many_arguments)]
fn solve_bordered(
    scat: &ScattererEigensystem,
    a_in: &DMatrix<f64>,
    a_far: &DMatrix<f64>,
    zm: &[Complex64],
    zm1: &[Complex64],
    inc_ext: Complex64,
    inc_lead: Complex64,
    e_tot: f64,
    xi: f64,
    omega_in: f64,
) -> Result<(DVector<Complex64>, f64)> {
    let dim = scat.dim();
    let n = zm.len();
    let size = dim + 2 * n;
    let c = |v: f64| Complex64::new(v, 0.0);
    let mut mat = DMatrix::<Complex64>::zeros(size, size);
    let mut rhs = DVector::<Complex64>::zeros(size);
    for g in 0..dim {
        mat[(g, g)] = c(e_tot - scat.energies[g]);
        for b in 0..n {
            mat[(g, dim + b)] = -c(xi * a_in[(g, b)]) * zm1[b];
            mat[(g, dim + n + b)] = -c(xi * a_far[(g, b)]) * zm1[b];
        }
        rhs[g] = c(xi * a_in[(g, 0)]) * inc_lead;
    }
    for a in 0..n {
        for g in 0..dim {
            mat[(dim + a, g)] = c(a_in[(g, a)]);
            mat[(dim + n + a, g)] = c(a_far[(g, a)]);
        }
        mat[(dim + a, dim + a)] = -zm[a];
        mat[(dim + n + a, dim + n + a)] = -zm[a];
    }
    rhs[dim] = inc_ext;
    lu_solve(mat, rhs, omega_in)
}

fn lu_solve(mat: DMatrix<Complex64>, rhs: DVector<Complex64>, omega: f64) -> Result<(DVector<Complex64>, f64)> {
    let lu = mat.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].norm()).collect();
    let max = diag.iter().copied().fold(0.0, f64::max);
    let min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 1e-14 * max) {
        return Err(Error::SingularMatching { omega });
    }
    let x = lu.solve(&rhs).ok_or(Error::SingularMatching { omega })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularMatching { omega });
    }
    Ok((x, max / min))
}

/// Lowest incident frequency at which an inelastic channel opens: the lowest
/// excited eigenstate sharing the ground state's excitation parity, plus
/// the band bottom. With g = 0 the bare excited spin sets it. `None` when
/// this lies above the band.
pub fn inelastic_threshold(scat: &ScattererEigensystem) -> Option<f64> {
    let lat = scat.spec.lattice();
    let excitation = if scat.spec.g == 0.0 {
        scat.spec.delta
    } else {
        let p0 = scat.parity[0];
        let e0 = scat.ground_energy();
        (1..scat.dim()).find(|&a| scat.parity[a] == p0).map(|a| scat.energies[a] - e0)?
    };
    let threshold = excitation + lat.lower_edge();
    (threshold < lat.upper_edge()).then_some(threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rwa_scattering::transmission_dipole_rwa;

    fn spec(g: f64, rwa: bool, m: usize, k: usize) -> ScattererSpec {
        ScattererSpec {
            g,
            rwa,
            region_size: m,
            excitation_cutoff: k,
            ..ScattererSpec::default()
        }
    }

    #[test]
    fn rwa_single_excitation_matches_closed_form() {
        let lat = Lattice::default();
        let scat = build_scatterer(&spec(0.3, true, 3, 1)).unwrap();
        for &w in &[0.5, 0.8, 0.95, 1.0, 1.3] {
            let res = scatter_single_photon(&scat, w).unwrap();
            let exact = transmission_dipole_rwa(w, 1.0, 0.3, &lat).unwrap();
            assert!((res.t - exact.t).norm() < 1e-10, "w={w}: {} vs {}", res.t, exact.t);
            assert!(res.flux_error < 1e-10);
        }
    }

    #[test]
    fn decoupled_emitter_is_transparent() {
        let scat = build_scatterer(&spec(0.0, false, 3, 2)).unwrap();
        for &w in &[0.5, 0.9, 1.2] {
            let res = scatter_single_photon(&scat, w).unwrap();
            assert!((res.big_t - 1.0).abs() < 1e-10, "{}", res.big_t);
            assert!(res.big_r < 1e-10);
        }
    }

    #[test]
    fn flux_is_conserved_above_threshold() {
        let scat = build_scatterer(&spec(0.4, false, 9, 3)).unwrap();
        let th = inelastic_threshold(&scat).unwrap();
        let res = scatter_single_photon(&scat, th + 0.1).unwrap();
        assert!(res.flux_error < 1e-9, "{}", res.flux_error);
        assert!(res.inelastic_transmittance + res.inelastic_reflectance > 0.0);
    }

    #[test]
    fn elastic_unitarity_below_threshold() {
        let scat = build_scatterer(&spec(0.3, false, 7, 3)).unwrap();
        let th = inelastic_threshold(&scat).unwrap();
        let res = scatter_single_photon(&scat, th - 0.2).unwrap();
        assert!((res.big_t + res.big_r - 1.0).abs() < 1e-9);
        assert!(res.inelastic_transmittance < 1e-20);
    }

    #[test]
    fn reciprocity() {
        let scat = build_scatterer(&spec(0.3, false, 7, 3)).unwrap();
        let l = scatter_single_photon(&scat, 0.9).unwrap();
        let r = scatter_with(
            &scat,
            0.9,
            MatchingOptions {
                incidence: Incidence::Right,
                ..MatchingOptions::default()
            },
        )
        .unwrap();
        assert!((l.t - r.t).norm() < 1e-10);
    }

    #[test]
    fn threshold_at_zero_coupling() {
        let scat = build_scatterer(&spec(0.0, false, 3, 2)).unwrap();
        let lat = Lattice::default();
        let th = inelastic_threshold(&scat).unwrap();
        assert!((th - (1.0 + lat.lower_edge())).abs() < 1e-15);
        let far = ScattererSpec { delta: 2.0, ..spec(0.0, false, 3, 2) };
        assert!(inelastic_threshold(&build_scatterer(&far).unwrap()).is_none());
    }

    #[test]
    fn region_pole_uses_bordered_system() {
        // The antisymmetric photon mode of the outer cavities sits exactly at ω_c.
        let scat = build_scatterer(&spec(0.3, true, 3, 1)).unwrap();
        let e0 = scat.ground_energy();
        let w = scat
            .energies
            .iter()
            .map(|e| e - e0)
            .find(|x| (x - 1.0).abs() < 1e-12)
            .expect("mode at omega_c");
        let res = scatter_single_photon(&scat, w).unwrap();
        assert_eq!(res.method, MatchingMethod::Bordered);
        let exact = transmission_dipole_rwa(w, 1.0, 0.3, &Lattice::default()).unwrap();
        assert!((res.t - exact.t).norm() < 1e-9);
    }

    #[test]
    fn small_region_is_refused() {
        let err = build_scatterer(&spec(0.4, false, 3, 4)).unwrap_err();
        assert!(matches!(err, Error::RegionTooSmall { region_size: 3, .. }));
        let auto = build_scatterer_auto(&spec(0.4, false, 3, 4)).unwrap();
        assert!(auto.spec.region_size > 3);
        assert!(auto.max_edge_population() < EDGE_POPULATION_TOL);
    }

    #[test]
    fn region_eigenpairs_are_accurate() {
        let sp = spec(0.4, false, 9, 4);
        let ops = region_operators(&sp);
        let scat = diagonalize_region(&sp).unwrap();
        let hv = &ops.hamiltonian * &scat.states;
        let mut worst: f64 = 0.0;
        for (j, &e) in scat.energies.iter().enumerate() {
            worst = worst.max((hv.column(j) - scat.states.column(j) * e).norm());
        }
        assert!(worst < 1e-11, "{worst}");
    }

    #[test]
    fn parity_labels_are_exact() {
        let scat = build_scatterer(&spec(0.2, false, 7, 3)).unwrap();
        assert_eq!(scat.parity[0], 1);
        assert!(scat.parity.iter().any(|&p| p == -1));
    }
}
