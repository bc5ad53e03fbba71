//! Hamiltonian factory: full and level-truncated dipole–cavity-array models
//! in the Coulomb and dipole gauges, the spin-boson form, and the
//! Power–Zienau–Woolley image of the truncated dipole model.
//!
//! Full builds use an open chain of N cavities with the dipole attached to
//! the central one. Spin-boson and PZW builds live on the periodic ring that
//! defines the k-mode table.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::krylov::{lowest_eigenpairs, symmetric_eigen, Csr, EigenOptions, EigenResult, LinearOperator};
use crate::matter::{solve_dipole, DipoleSpec};
use crate::{Error, Lattice, Result};

/// Dimension cap for full-space builds.
pub const DEFAULT_DIM_CAP: usize = 2_000_000;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gauge {
    Dipole,
    Coulomb,
}

impl std::fmt::Display for Gauge {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Gauge::Dipole => "dipole",
            Gauge::Coulomb => "coulomb",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveguideSpec {
    pub omega_c: f64,
    pub xi: f64,
    pub n_cavities: usize,
    pub photon_cutoff: usize,
}

impl Default for WaveguideSpec {
    fn default() -> Self {
        Self {
            omega_c: 1.0,
            xi: -1.0 / std::f64::consts::PI,
            n_cavities: 3,
            photon_cutoff: 6,
        }
    }
}

impl WaveguideSpec {
    pub fn validate(&self) -> Result<()> {
        Lattice::new(self.omega_c, self.xi)?;
        if self.n_cavities < 3 || self.n_cavities % 2 == 0 {
            return Err(Error::invalid("n_cavities", "must be odd and at least 3"));
        }
        if self.photon_cutoff < 1 {
            return Err(Error::invalid("photon_cutoff", "must be at least 1"));
        }
        Ok(())
    }

    pub fn lattice(&self) -> Lattice {
        Lattice {
            omega_c: self.omega_c,
            xi: self.xi,
        }
    }

    pub fn center(&self) -> usize {
        self.n_cavities / 2
    }
}

/// Hermitian operator as coordinate triplets.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub dim: usize,
    pub entries: Vec<(usize, usize, Complex64)>,
    pub basis_tag: String,
}

impl SparseOperator {
    pub fn csr(&self) -> Csr {
        Csr::from_triplets(self.dim, &self.entries)
    }

    /// max |H_ij − conj(H_ji)| over stored entries.
    pub fn hermiticity_error(&self) -> f64 {
        let mut map: HashMap<(usize, usize), Complex64> = HashMap::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            *map.entry((r, c)).or_insert(ZERO) += v;
        }
        map.iter()
            .map(|(&(r, c), &v)| (v - map.get(&(c, r)).copied().unwrap_or(ZERO).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Header "dim basis_tag" then "row col re im" lines.
    pub fn dump<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.dim, self.basis_tag)?;
        let csr = self.csr();
        for r in 0..csr.dim {
            for idx in csr.row_ptr[r]..csr.row_ptr[r + 1] {
                let v = csr.vals[idx];
                writeln!(out, "{} {} {:.17e} {:.17e}", r, csr.cols[idx], v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// n_eigs lowest eigenvalues, ascending.
pub fn lowest_spectrum(op: &SparseOperator, n_eigs: usize) -> Result<Vec<f64>> {
    Ok(lowest_states(op, n_eigs)?.values)
}

pub fn lowest_states(op: &SparseOperator, n_eigs: usize) -> Result<EigenResult> {
    let csr = op.csr();
    let res = lowest_eigenpairs(&csr, EigenOptions::lowest(n_eigs))?;
    let worst = res
        .residuals
        .iter()
        .zip(&res.values)
        .map(|(r, v)| r / v.abs().max(1.0))
        .fold(0.0, f64::max);
    if worst > 1e-8 {
        return Err(Error::NoConvergence {
            context: "lowest_spectrum residual check".into(),
            iterations: res.restarts,
            residual: worst,
        });
    }
    Ok(res)
}

/// Expectation ⟨ψ|A|ψ⟩ for a normalized ψ.
pub fn expectation(op: &SparseOperator, psi: &[Complex64]) -> f64 {
    let csr = op.csr();
    let mut y = vec![ZERO; psi.len()];
    csr.apply(psi, &mut y);
    psi.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub k: f64,
    pub omega: f64,
    pub g: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinBosonModel {
    pub delta: f64,
    pub modes: Vec<Mode>,
    pub gauge: Gauge,
    pub lattice: Lattice,
}

impl SpinBosonModel {
    /// Mode table on the k = 2πm/N grid. Dipole gauge: g_k = (g/√N) ω_k/ω_c;
    /// Coulomb gauge: g_k = g/√N.
    pub fn new(lattice: Lattice, n_modes: usize, delta: f64, g: f64, gauge: Gauge) -> Result<Self> {
        if n_modes == 0 || n_modes % 2 == 0 {
            return Err(Error::invalid("n_modes", "must be odd"));
        }
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        if !(g >= 0.0) {
            return Err(Error::invalid("g", "must be non-negative"));
        }
        let norm = 1.0 / (n_modes as f64).sqrt();
        let modes = Lattice::mode_grid(n_modes)
            .into_iter()
            .map(|k| {
                let omega = lattice.dispersion(k);
                let gk = match gauge {
                    Gauge::Dipole => g * norm * omega / lattice.omega_c,
                    Gauge::Coulomb => g * norm,
                };
                Mode { k, omega, g: gk }
            })
            .collect();
        Ok(Self {
            delta,
            modes,
            gauge,
            lattice,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }
}

/// Occupation-number basis: entry 0 is the matter level (or spin, 0 = ground),
/// the rest are boson occupations, ordered lexicographically with the matter
/// index slowest.
#[derive(Debug, Clone)]
pub struct FockBasis {
    pub states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    pub tag: String,
}

impl FockBasis {
    /// `total` bounds matter index (as excitation) plus all occupations.
    pub fn new(levels: usize, n_modes: usize, per_mode: usize, total: Option<usize>, tag: String) -> Self {
        let mut states = Vec::new();
        let mut occ = vec![0u8; n_modes + 1];
        fn rec(
            pos: usize,
            used: usize,
            occ: &mut Vec<u8>,
            per_mode: usize,
            total: Option<usize>,
            out: &mut Vec<Vec<u8>>,
        ) {
            if pos == occ.len() {
                out.push(occ.clone());
                return;
            }
            let room = total.map_or(per_mode, |t| per_mode.min(t - used));
            for n in 0..=room {
                occ[pos] = n as u8;
                rec(pos + 1, used + n, occ, per_mode, total, out);
            }
            occ[pos] = 0;
        }
        for l in 0..levels {
            if total.is_some_and(|t| l > t) {
                break;
            }
            occ[0] = l as u8;
            rec(1, l, &mut occ, per_mode, total, &mut states);
        }
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { states, index, tag }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn find(&self, s: &[u8]) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn photons(&self, i: usize) -> usize {
        self.states[i][1..].iter().map(|&n| n as usize).sum()
    }
}

/// Accumulates Hamiltonian terms over a [`FockBasis`].
pub(crate) struct Builder<'a> {
    basis: &'a FockBasis,
    entries: Vec<(usize, usize, Complex64)>,
}

impl<'a> Builder<'a> {
    pub(crate) fn new(basis: &'a FockBasis) -> Self {
        Self {
            basis,
            entries: Vec::new(),
        }
    }

    pub(crate) fn diagonal(&mut self, f: impl Fn(&[u8]) -> f64) {
        for (i, s) in self.basis.states.iter().enumerate() {
            let v = f(s);
            if v != 0.0 {
                self.entries.push((i, i, Complex64::new(v, 0.0)));
            }
        }
    }

    /// amp · b_to† b_from + h.c. (mode indices count from 0).
    pub(crate) fn hopping(&mut self, to: usize, from: usize, amp: f64) {
        let (pt, pf) = (to + 1, from + 1);
        for (i, s) in self.basis.states.iter().enumerate() {
            if s[pf] == 0 {
                continue;
            }
            let mut t = s.clone();
            let f = (s[pf] as f64).sqrt();
            t[pf] -= 1;
            t[pt] += 1;
            let f = f * (t[pt] as f64).sqrt();
            if let Some(j) = self.basis.find(&t) {
                let v = Complex64::new(amp * f, 0.0);
                self.entries.push((j, i, v));
                self.entries.push((i, j, v.conj()));
            }
        }
    }

    /// Σ_{l,l'} m[l][l'] |l⟩⟨l'| ⊗ (u b + w b†) on `mode`, Hermitian part
    /// supplied by the caller through `m` and (u, w).
    pub(crate) fn matter_boson(&mut self, m: &DMatrix<Complex64>, mode: usize, u: Complex64, w: Complex64) {
        let p = mode + 1;
        let levels = m.nrows();
        for (i, s) in self.basis.states.iter().enumerate() {
            let l0 = s[0] as usize;
            for l in 0..levels {
                let ml = m[(l, l0)];
                if ml == ZERO {
                    continue;
                }
                let mut t = s.clone();
                t[0] = l as u8;
                if s[p] > 0 && u != ZERO {
                    let mut a = t.clone();
                    a[p] -= 1;
                    if let Some(j) = self.basis.find(&a) {
                        self.entries.push((j, i, ml * u * (s[p] as f64).sqrt()));
                    }
                }
                if w != ZERO {
                    let mut c = t;
                    c[p] += 1;
                    if let Some(j) = self.basis.find(&c) {
                        self.entries.push((j, i, ml * w * (c[p] as f64).sqrt()));
                    }
                }
            }
        }
    }

    /// Dense single-mode operator `m` (on occupations 0..m.nrows()) times a
    /// matter operator `s`.
    pub(crate) fn matter_times_local(&mut self, s: &DMatrix<Complex64>, mode: usize, m: &DMatrix<Complex64>) {
        let p = mode + 1;
        for (i, st) in self.basis.states.iter().enumerate() {
            let (l0, n0) = (st[0] as usize, st[p] as usize);
            for l in 0..s.nrows() {
                let sv = s[(l, l0)];
                if sv == ZERO {
                    continue;
                }
                for n in 0..m.nrows() {
                    let mv = m[(n, n0)];
                    if mv == ZERO {
                        continue;
                    }
                    let mut t = st.clone();
                    t[0] = l as u8;
                    t[p] = n as u8;
                    if let Some(j) = self.basis.find(&t) {
                        self.entries.push((j, i, sv * mv));
                    }
                }
            }
        }
    }

    pub(crate) fn finish(self) -> SparseOperator {
        SparseOperator {
            dim: self.basis.dim(),
            entries: self.entries,
            basis_tag: self.basis.tag.clone(),
        }
    }
}

fn check_dim(levels: usize, w: &WaveguideSpec, cap: usize) -> Result<()> {
    let dim = (w.photon_cutoff as f64 + 1.0).powi(w.n_cavities as i32) * levels as f64;
    if dim > cap as f64 {
        return Err(Error::DimensionCap {
            dim: dim.min(usize::MAX as f64) as usize,
            cap,
        });
    }
    Ok(())
}

fn full_basis(w: &WaveguideSpec, levels: usize, label: &str) -> FockBasis {
    let tag = format!(
        "{label}:matter{levels}(slowest)x{}cavities_left_to_right_fock{}",
        w.n_cavities, w.photon_cutoff
    );
    FockBasis::new(levels, w.n_cavities, w.photon_cutoff, None, tag)
}

fn add_open_chain(b: &mut Builder, w: &WaveguideSpec) {
    let oc = w.omega_c;
    b.diagonal(|s| oc * s[1..].iter().map(|&n| n as f64).sum::<f64>());
    for j in 0..w.n_cavities - 1 {
        b.hopping(j + 1, j, w.xi);
    }
}

/// Minimal-coupling Hamiltonian projected on the lowest `n_levels` bare
/// dipole levels, A² term included.
pub fn build_full_coulomb(w: &WaveguideSpec, d: &DipoleSpec, n_levels: usize) -> Result<SparseOperator> {
    build_full_coulomb_capped(w, d, n_levels, DEFAULT_DIM_CAP)
}

pub fn build_full_coulomb_capped(
    w: &WaveguideSpec,
    d: &DipoleSpec,
    n_levels: usize,
    cap: usize,
) -> Result<SparseOperator> {
    w.validate()?;
    if n_levels < 2 {
        return Err(Error::invalid("n_dipole_levels", "need at least 2 levels"));
    }
    check_dim(n_levels, w, cap)?;
    let sys = solve_dipole(&d.with_levels(n_levels), false)?;
    let basis = full_basis(w, n_levels, "coulomb");
    let mut b = Builder::new(&basis);
    let lam = d.lambda_c;
    let c = w.center();
    let energies = sys.energies.clone();
    b.diagonal(|s| energies[s[0] as usize]);
    add_open_chain(&mut b, w);
    if lam != 0.0 {
        let pm = sys.p_elems.map(|v| v * (-lam * d.e_d));
        let one = Complex64::new(1.0, 0.0);
        b.matter_boson(&pm, c, one, one);
        let dia = 0.5 * lam * lam * d.e_d;
        let nmax = w.photon_cutoff;
        let x2 = DMatrix::from_fn(nmax + 1, nmax + 1, |r, col| {
            let (r, col) = (r as f64, col as f64);
            let v = if r == col {
                2.0 * col + 1.0
            } else if r == col + 2.0 {
                ((col + 1.0) * (col + 2.0)).sqrt()
            } else if col == r + 2.0 {
                ((r + 1.0) * (r + 2.0)).sqrt()
            } else {
                0.0
            };
            Complex64::new(dia * v, 0.0)
        });
        let ident = DMatrix::<Complex64>::identity(n_levels, n_levels);
        b.matter_times_local(&ident, c, &x2);
    }
    Ok(b.finish())
}

/// Dipole-gauge Hamiltonian on the lowest `n_levels` shifted-dipole levels:
/// H′_m − iλz[ω_c(a₀† − a₀) + ξ(a₋₁† − a₋₁ + a₁† − a₁)].
pub fn build_full_dipole(w: &WaveguideSpec, d: &DipoleSpec, n_levels: usize) -> Result<SparseOperator> {
    build_full_dipole_capped(w, d, n_levels, DEFAULT_DIM_CAP)
}

pub fn build_full_dipole_capped(
    w: &WaveguideSpec,
    d: &DipoleSpec,
    n_levels: usize,
    cap: usize,
) -> Result<SparseOperator> {
    w.validate()?;
    if n_levels < 2 {
        return Err(Error::invalid("n_dipole_levels", "need at least 2 levels"));
    }
    check_dim(n_levels, w, cap)?;
    let sys = solve_dipole(&d.with_levels(n_levels), true)?;
    let basis = full_basis(w, n_levels, "dipole");
    let mut b = Builder::new(&basis);
    let lam = d.lambda_c;
    let c = w.center();
    let energies = sys.energies.clone();
    b.diagonal(|s| energies[s[0] as usize]);
    add_open_chain(&mut b, w);
    if lam != 0.0 {
        let z = sys.x_elems.map(|v| Complex64::new(v, 0.0));
        for (cav, weight) in [(c, w.omega_c), (c - 1, w.xi), (c + 1, w.xi)] {
            let amp = lam * weight;
            // −i amp z (a† − a)
            b.matter_boson(&z, cav, Complex64::new(0.0, amp), Complex64::new(0.0, -amp));
        }
    }
    Ok(b.finish())
}

pub(crate) fn spin_ops() -> (DMatrix<Complex64>, DMatrix<Complex64>, DMatrix<Complex64>) {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let sx = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
    // basis (ground, excited) with σ_z = diag(−1, 1)
    let sy = DMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 1.), c(0., -1.), c(0., 0.)]);
    let sz = DMatrix::from_row_slice(2, 2, &[c(-1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
    (sx, sy, sz)
}

/// Two-level spin-boson model in the k-mode basis:
/// Δσ_z/2 + Σ ω_k b†b + Σ g_k σ_x (b + b†), or its RWA
/// Σ g_k (σ⁺b_k + σ⁻b_k†) restricted to at most `photon_cutoff` total
/// excitations. Without RWA `photon_cutoff` bounds each mode.
pub fn build_spin_boson(w: &WaveguideSpec, delta: f64, g: f64, gauge: Gauge, rwa: bool) -> Result<SparseOperator> {
    w.validate()?;
    let model = SpinBosonModel::new(w.lattice(), w.n_cavities, delta, g, gauge)?;
    let n = model.n_modes();
    let total = if rwa { Some(w.photon_cutoff) } else { None };
    if !rwa {
        check_dim(2, w, DEFAULT_DIM_CAP)?;
    }
    let tag = format!(
        "spin_boson_{gauge}{}:spin2(slowest,0=ground)x{n}k_modes_{}{}",
        if rwa { "_rwa" } else { "" },
        if rwa { "total_excitations" } else { "fock" },
        w.photon_cutoff
    );
    let basis = FockBasis::new(2, n, w.photon_cutoff, total, tag);
    Ok(spin_boson_on(&basis, &model, rwa))
}

fn spin_boson_on(basis: &FockBasis, model: &SpinBosonModel, rwa: bool) -> SparseOperator {
    let mut b = Builder::new(basis);
    let omegas: Vec<f64> = model.modes.iter().map(|m| m.omega).collect();
    let delta = model.delta;
    b.diagonal(|s| {
        let spin = if s[0] == 1 { 0.5 } else { -0.5 };
        delta * spin + s[1..].iter().zip(&omegas).map(|(&n, w)| n as f64 * w).sum::<f64>()
    });
    let one = Complex64::new(1.0, 0.0);
    let (sx, _, _) = spin_ops();
    let mut sp = DMatrix::<Complex64>::zeros(2, 2);
    sp[(1, 0)] = one;
    let sm = sp.adjoint();
    for (k, m) in model.modes.iter().enumerate() {
        if m.g == 0.0 {
            continue;
        }
        if rwa {
            b.matter_boson(&sp.map(|v| v * m.g), k, one, ZERO);
            b.matter_boson(&sm.map(|v| v * m.g), k, ZERO, one);
        } else {
            b.matter_boson(&sx.map(|v| v * m.g), k, one, one);
        }
    }
    b.finish()
}

/// Single-excitation RWA block in the basis (|e, vac⟩, |g, 1_k⟩ …), with the
/// ground energy −Δ/2 subtracted.
pub fn rwa_single_excitation_block(model: &SpinBosonModel) -> DMatrix<f64> {
    let n = model.n_modes();
    let mut h = DMatrix::zeros(n + 1, n + 1);
    h[(0, 0)] = model.delta;
    for (k, m) in model.modes.iter().enumerate() {
        h[(k + 1, k + 1)] = m.omega;
        h[(0, k + 1)] = m.g;
        h[(k + 1, 0)] = m.g;
    }
    h
}

/// Total excitation number (spin + bosons) as a diagonal operator.
pub fn excitation_number(op: &SparseOperator, basis: &FockBasis) -> SparseOperator {
    let entries = basis
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (i, i, Complex64::new(s.iter().map(|&n| n as f64).sum(), 0.0)))
        .collect();
    SparseOperator {
        dim: op.dim,
        entries,
        basis_tag: op.basis_tag.clone(),
    }
}

/// Basis used by [`build_spin_boson`], exposed for diagnostics.
pub fn spin_boson_basis(w: &WaveguideSpec, rwa: bool) -> FockBasis {
    let total = if rwa { Some(w.photon_cutoff) } else { None };
    FockBasis::new(2, w.n_cavities, w.photon_cutoff, total, String::new())
}

#[derive(Debug, Clone)]
pub struct PzwOperator {
    pub op: SparseOperator,
    /// ‖(1 − P_c) e^{iθX} P_c‖ estimated with an enlarged single-mode space.
    pub leakage: f64,
    pub cutoff_warning: bool,
}

/// cos(θX) and sin(θX) for the quadrature X = a + a† truncated at `cutoff`.
fn quadrature_functions(cutoff: usize, theta: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = cutoff + 1;
    let x = DMatrix::from_fn(d, d, |r, c| {
        if r == c + 1 {
            (r as f64).sqrt()
        } else if c == r + 1 {
            (c as f64).sqrt()
        } else {
            0.0
        }
    });
    let (vals, vecs) = symmetric_eigen(&x);
    let f = |g: fn(f64) -> f64| {
        let diag = DMatrix::from_diagonal(&DVector::from_iterator(d, vals.iter().map(|&v| g(theta * v))));
        &vecs * diag * vecs.transpose()
    };
    (f(f64::cos), f(f64::sin))
}

/// Truncated Coulomb-gauge model obtained from the two-level dipole model by
/// U = exp(i(g/ω_c)(a₀ + a₀†)σ_x) on the periodic ring:
/// photons + hopping + (Δ′/2)[σ_z cos(2gX₀/ω_c) + σ_y sin(2gX₀/ω_c)] − g²/ω_c.
pub fn build_truncated_coulomb_pzw(w: &WaveguideSpec, delta_prime: f64, g: f64) -> Result<PzwOperator> {
    w.validate()?;
    if !(g >= 0.0) {
        return Err(Error::invalid("g", "must be non-negative"));
    }
    check_dim(2, w, DEFAULT_DIM_CAP)?;
    let n = w.n_cavities;
    let c = w.center();
    let tag = format!(
        "pzw_coulomb:spin2(slowest,0=ground)x{n}ring_cavities_fock{}",
        w.photon_cutoff
    );
    let basis = FockBasis::new(2, n, w.photon_cutoff, None, tag);
    let mut b = Builder::new(&basis);
    let oc = w.omega_c;
    let shift = -g * g / oc;
    b.diagonal(|s| oc * s[1..].iter().map(|&k| k as f64).sum::<f64>() + shift);
    for j in 0..n {
        b.hopping((j + 1) % n, j, w.xi);
    }
    let theta = 2.0 * g / oc;
    let (cosx, sinx) = quadrature_functions(w.photon_cutoff, theta);
    let (_, sy, sz) = spin_ops();
    let half = 0.5 * delta_prime;
    b.matter_times_local(&sz.map(|v| v * half), c, &cosx.map(|v| Complex64::new(v, 0.0)));
    b.matter_times_local(&sy.map(|v| v * half), c, &sinx.map(|v| Complex64::new(v, 0.0)));

    let big = w.photon_cutoff + 12;
    let (cb, sb) = quadrature_functions(big, theta);
    let keep = w.photon_cutoff + 1;
    let mut leak: f64 = 0.0;
    for col in 0..keep {
        let mut s = 0.0;
        for row in keep..=big {
            s += cb[(row, col)].powi(2) + sb[(row, col)].powi(2);
        }
        leak = leak.max(s.sqrt());
    }
    Ok(PzwOperator {
        op: b.finish(),
        leakage: leak,
        cutoff_warning: leak > 1e-6,
    })
}

/// σ_z on the spin (slowest) index of a two-level build.
pub fn sigma_z(op: &SparseOperator, basis: &FockBasis) -> SparseOperator {
    let entries = basis
        .states
        .iter()
        .enumerate()
        .map(|(i, s)| (i, i, Complex64::new(if s[0] == 1 { 1.0 } else { -1.0 }, 0.0)))
        .collect();
    SparseOperator {
        dim: op.dim,
        entries,
        basis_tag: op.basis_tag.clone(),
    }
}

/// Basis of [`build_truncated_coulomb_pzw`] and non-RWA spin-boson builds.
pub fn two_level_fock_basis(w: &WaveguideSpec) -> FockBasis {
    FockBasis::new(2, w.n_cavities, w.photon_cutoff, None, String::new())
}

/// Human-readable summary of an operator.
pub fn describe(op: &SparseOperator) -> String {
    let mut s = String::new();
    let _ = write!(s, "dim={} nnz={} basis={}", op.dim, op.entries.len(), op.basis_tag);
    s
}
