//! One-dimensional dipole on a uniform position grid.
//!
//! The double well is H_m = E_d [p²/2 − βz²/2 + z⁴/4] in dimensionless
//! position z. The dipole-gauge Hamiltonian H′_m adds ω_c λ² z², with
//! λ = qA₀x₀ the bare coupling knob. Kinetic energy uses the three-point
//! Laplacian and momentum the central first difference, so the commutator
//! [H, z] = −i E_d p holds exactly on the grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// −βz²/2 + z⁴/4, scaled by E_d.
    DoubleWell,
    /// Transmon-like −E_J cos(z − φ_ext), in units of ω_c (not scaled by E_d).
    Cosine { e_j: f64, phi_ext: f64 },
}

impl Default for Potential {
    fn default() -> Self {
        Potential::DoubleWell
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DipoleSpec {
    pub beta: f64,
    pub e_d: f64,
    pub lambda_c: f64,
    pub grid_half_width: f64,
    pub grid_points: usize,
    pub n_levels: usize,
    pub potential: Potential,
}

impl Default for DipoleSpec {
    fn default() -> Self {
        Self {
            beta: 3.8,
            e_d: 63.812,
            lambda_c: 0.0,
            grid_half_width: 6.0,
            grid_points: 4096,
            n_levels: 18,
            potential: Potential::DoubleWell,
        }
    }
}

impl DipoleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::invalid("beta", "must be positive"));
        }
        if !(self.e_d > 0.0) {
            return Err(Error::invalid("e_d", "must be positive"));
        }
        if !self.lambda_c.is_finite() {
            return Err(Error::invalid("lambda_c", "must be finite"));
        }
        if !(self.grid_half_width > 0.0) {
            return Err(Error::invalid("grid_half_width", "must be positive"));
        }
        if self.grid_points < 64 {
            return Err(Error::invalid("grid_points", "need at least 64 samples"));
        }
        if self.n_levels < 2 || self.n_levels > self.grid_points {
            return Err(Error::invalid("n_levels", "need 2 ≤ n_levels ≤ grid_points"));
        }
        if let Potential::Cosine { e_j, phi_ext } = self.potential {
            if !(e_j > 0.0) || !phi_ext.is_finite() {
                return Err(Error::invalid("potential", "cosine needs e_j > 0 and finite phi_ext"));
            }
        }
        Ok(())
    }

    pub fn with_lambda(mut self, lambda_c: f64) -> Self {
        self.lambda_c = lambda_c;
        self
    }

    pub fn with_levels(mut self, n_levels: usize) -> Self {
        self.n_levels = n_levels;
        self
    }

    pub fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        let h = self.spacing();
        (0..n).map(|i| -self.grid_half_width + i as f64 * h).collect()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.grid_half_width / (self.grid_points - 1) as f64
    }

    fn potential_at(&self, z: f64) -> f64 {
        match self.potential {
            Potential::DoubleWell => self.e_d * (-0.5 * self.beta * z * z + 0.25 * z.powi(4)),
            Potential::Cosine { e_j, phi_ext } => -e_j * (z - phi_ext).cos(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatterEigensystem {
    pub energies: Vec<f64>,
    /// Column j is level j sampled on the grid, normalized so Σ|ψ|²h = 1.
    pub wavefunctions: DMatrix<f64>,
    pub grid: Vec<f64>,
    pub x_elems: DMatrix<f64>,
    pub p_elems: DMatrix<Complex64>,
    pub shifted: bool,
    pub lambda_c: f64,
    pub e_d: f64,
}

impl MatterEigensystem {
    pub fn n_levels(&self) -> usize {
        self.energies.len()
    }

    pub fn gap(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }

    /// |⟨1|z|0⟩|
    pub fn x01(&self) -> f64 {
        self.x_elems[(1, 0)].abs()
    }

    pub fn p01(&self) -> Complex64 {
        self.p_elems[(0, 1)]
    }

    /// Grid spacing.
    pub fn spacing(&self) -> f64 {
        self.grid[1] - self.grid[0]
    }

    /// Gram matrix Σ ψ_m ψ_n h.
    pub fn gram(&self) -> DMatrix<f64> {
        self.wavefunctions.transpose() * &self.wavefunctions * self.spacing()
    }
}

/// Lowest `spec.n_levels` eigenpairs of H_m (or H′_m when `include_shift`).
pub fn solve_dipole(spec: &DipoleSpec, include_shift: bool) -> Result<MatterEigensystem> {
    spec.validate()?;
    let n = spec.grid_points;
    let h = spec.spacing();
    let grid = spec.grid();
    let kin = spec.e_d / (h * h);
    let shift = if include_shift { spec.lambda_c * spec.lambda_c } else { 0.0 };
    let diag: Vec<f64> = grid
        .iter()
        .map(|&z| kin + spec.potential_at(z) + shift * z * z)
        .collect();
    let off = vec![-0.5 * kin; n - 1];

    let tri = Tridiagonal::new(diag, off);
    let levels = spec.n_levels;
    let energies = tri.lowest_eigenvalues(levels);
    let mut psi = DMatrix::<f64>::zeros(n, levels);
    let scale = tri.norm_inf();
    for (j, &e) in energies.iter().enumerate() {
        let mut v = tri.inverse_iteration(e, j);
        for _ in 0..2 {
            for i in 0..j {
                let c: f64 = psi.column(i).iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() * h;
                for (vk, pk) in v.iter_mut().zip(psi.column(i).iter()) {
                    *vk -= c * pk;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let res = tri.residual(&v, e);
        if res > 1e3 * f64::EPSILON * scale {
            return Err(Error::NoConvergence {
                context: format!("matter eigenpair {j}"),
                iterations: 3,
                residual: res,
            });
        }
        let s = 1.0 / h.sqrt();
        if v.iter().sum::<f64>() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        psi.set_column(j, &nalgebra::DVector::from_iterator(n, v.iter().map(|x| x * s)));
    }

    for j in 0..2 {
        let edge = psi[(1, j)].abs().max(psi[(n - 2, j)].abs());
        if edge > 1e-10 {
            return Err(Error::GridTooSmall(format!(
                "level {j} has amplitude {edge:.3e} at the grid boundary; increase grid_half_width"
            )));
        }
    }

    let zpsi = DMatrix::from_fn(n, levels, |i, j| grid[i] * psi[(i, j)]);
    let x_elems = psi.transpose() * &zpsi * h;
    let dpsi = DMatrix::from_fn(n, levels, |i, j| {
        let up = if i + 1 < n { psi[(i + 1, j)] } else { 0.0 };
        let dn = if i > 0 { psi[(i - 1, j)] } else { 0.0 };
        (up - dn) / (2.0 * h)
    });
    let d = psi.transpose() * &dpsi * h;
    let p_elems = d.map(|v| Complex64::new(0.0, -v));

    Ok(MatterEigensystem {
        energies,
        wavefunctions: psi,
        grid,
        x_elems,
        p_elems,
        shifted: include_shift,
        lambda_c: spec.lambda_c,
        e_d: spec.e_d,
    })
}

/// Coupling g = ω_c λ |⟨1′|z|0′⟩| of the shifted dipole.
pub fn coupling_of_lambda(spec: &DipoleSpec, lambda_c: f64, omega_c: f64) -> Result<f64> {
    let sys = solve_dipole(&spec.with_lambda(lambda_c).with_levels(2), true)?;
    Ok(omega_c * lambda_c * sys.x01())
}

/// Self-consistent λ with g = ω_c λ |⟨1′|z|0′⟩(λ)|.
pub fn lambda_for_coupling(spec: &DipoleSpec, g: f64, omega_c: f64) -> Result<(f64, usize)> {
    if !(g >= 0.0) {
        return Err(Error::invalid("g", "coupling must be non-negative"));
    }
    if g == 0.0 {
        return Ok((0.0, 0));
    }
    let base = spec.with_levels(2);
    let mut lambda = 0.0;
    let mut delta = f64::INFINITY;
    for it in 1..=500 {
        let sys = solve_dipole(&base.with_lambda(lambda), true)?;
        let target = g / (omega_c * sys.x01());
        delta = (target - lambda).abs();
        if delta < 1e-10 {
            return Ok((target, it));
        }
        lambda = 0.5 * lambda + 0.5 * target;
    }
    Err(Error::NoConvergence {
        context: format!("coupling inversion at g = {g}"),
        iterations: 500,
        residual: delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapPoint {
    pub g: f64,
    pub lambda_c: f64,
    pub delta_prime: f64,
    pub iterations: usize,
}

/// Δ′(g) of the shifted dipole at the self-consistent λ for each coupling.
pub fn renormalized_gap(spec: &DipoleSpec, g_grid: &[f64], omega_c: f64) -> Result<Vec<GapPoint>> {
    g_grid
        .iter()
        .map(|&g| {
            let (lambda_c, iterations) = lambda_for_coupling(spec, g, omega_c)?;
            let sys = solve_dipole(&spec.with_lambda(lambda_c).with_levels(2), true)?;
            Ok(GapPoint {
                g,
                lambda_c,
                delta_prime: sys.gap(),
                iterations,
            })
        })
        .collect()
}

/// Symmetric tridiagonal matrix with Sturm-sequence bisection and inverse
/// iteration.
struct Tridiagonal {
    d: Vec<f64>,
    e: Vec<f64>,
}

impl Tridiagonal {
    fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        Self { d, e }
    }

    fn norm_inf(&self) -> f64 {
        let n = self.d.len();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.e[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { self.e[i].abs() } else { 0.0 };
                self.d[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    /// Number of eigenvalues strictly below x.
    fn count_below(&self, x: f64) -> usize {
        let tiny = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.d.len() {
            if q.abs() < tiny {
                q = -tiny;
            }
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn lowest_eigenvalues(&self, count: usize) -> Vec<f64> {
        let n = self.d.len();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let l = if i > 0 { self.e[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { self.e[i].abs() } else { 0.0 };
            lo = lo.min(self.d[i] - l - r);
            hi = hi.max(self.d[i] + l + r);
        }
        let mut out = Vec::with_capacity(count);
        let mut left = lo;
        for idx in 0..count {
            let (mut a, mut b) = (left, hi);
            while b - a > 2.0 * f64::EPSILON * (a.abs().max(b.abs())) + f64::MIN_POSITIVE {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if self.count_below(mid) > idx {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let lam = 0.5 * (a + b);
            out.push(lam);
            left = a;
        }
        out
    }

    fn inverse_iteration(&self, lambda: f64, seed: usize) -> Vec<f64> {
        let n = self.d.len();
        let shift = lambda + 4.0 * f64::EPSILON * lambda.abs().max(1.0);
        let mut x: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.1 * (((i * 7919 + seed * 104_729) % 1000) as f64 / 1000.0))
            .collect();
        for _ in 0..3 {
            x = self.solve_shifted(shift, &x);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
        }
        x
    }

    /// Solves (T − σ) y = b by Gaussian elimination with partial pivoting.
    fn solve_shifted(&self, sigma: f64, b: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut dl: Vec<f64> = self.e.clone();
        let mut dd: Vec<f64> = self.d.iter().map(|v| v - sigma).collect();
        let mut du: Vec<f64> = self.e.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut y = b.to_vec();
        for i in 0..n - 1 {
            if dd[i].abs() >= dl[i].abs() {
                if dd[i] == 0.0 {
                    dd[i] = f64::EPSILON * self.norm_inf();
                }
                let f = dl[i] / dd[i];
                dd[i + 1] -= f * du[i];
                y[i + 1] -= f * y[i];
                dl[i] = 0.0;
            } else {
                let f = dd[i] / dl[i];
                dd[i] = dl[i];
                let tmp = dd[i + 1];
                dd[i + 1] = du[i] - f * tmp;
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du2[i];
                }
                du[i] = tmp;
                y.swap(i, i + 1);
                y[i + 1] -= f * y[i];
            }
        }
        if dd[n - 1] == 0.0 {
            dd[n - 1] = f64::EPSILON * self.norm_inf();
        }
        y[n - 1] /= dd[n - 1];
        if n > 1 {
            y[n - 2] = (y[n - 2] - du[n - 2] * y[n - 1]) / dd[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            y[i] = (y[i] - du[i] * y[i + 1] - du2[i] * y[i + 2]) / dd[i];
        }
        y
    }

    fn residual(&self, v: &[f64], lambda: f64) -> f64 {
        let n = v.len();
        (0..n)
            .map(|i| {
                let mut r = (self.d[i] - lambda) * v[i];
                if i > 0 {
                    r += self.e[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    r += self.e[i] * v[i + 1];
                }
                r * r
            })
            .sum::<f64>()
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> DipoleSpec {
        DipoleSpec {
            grid_points: 1024,
            n_levels: 6,
            ..DipoleSpec::default()
        }
    }

    #[test]
    fn tridiagonal_matches_dense() {
        let n = 40;
        let d: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let e: Vec<f64> = (0..n - 1).map(|i| 1.0 + 0.1 * (i as f64).cos()).collect();
        let tri = Tridiagonal::new(d.clone(), e.clone());
        let dense = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                d[i]
            } else if i + 1 == j {
                e[i]
            } else if j + 1 == i {
                e[j]
            } else {
                0.0
            }
        });
        let mut reference: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        let ours = tri.lowest_eigenvalues(5);
        for (a, b) in ours.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let v = tri.inverse_iteration(ours[2], 2);
        assert!(tri.residual(&v, ours[2]) < 1e-12);
    }

    #[test]
    fn parity_selection() {
        let sys = solve_dipole(&small(), false).unwrap();
        assert!(sys.x_elems[(0, 0)].abs() < 1e-8);
        assert!(sys.x_elems[(0, 2)].abs() < 1e-8);
        assert!(sys.x_elems[(1, 3)].abs() < 1e-8);
        assert!(sys.x01() > 0.5);
    }

    #[test]
    fn matrix_element_symmetries() {
        let sys = solve_dipole(&small(), false).unwrap();
        let n = sys.n_levels();
        for i in 0..n {
            for j in 0..n {
                assert!((sys.x_elems[(i, j)] - sys.x_elems[(j, i)]).abs() < 1e-12);
                assert!(sys.p_elems[(i, j)].re.abs() < 1e-15);
                assert!((sys.p_elems[(i, j)] + sys.p_elems[(j, i)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn orthonormal_levels() {
        let sys = solve_dipole(&small(), true).unwrap();
        let g = sys.gram();
        let err = (g - DMatrix::identity(6, 6)).abs().max();
        assert!(err < 1e-10, "gram error {err}");
    }

    #[test]
    fn commutator_identity_holds_on_grid() {
        let spec = small().with_lambda(0.2);
        let sys = solve_dipole(&spec, true).unwrap();
        for n in 0..4 {
            for l in 0..4 {
                let z = sys.x_elems[(n, l)];
                if z.abs() < 1e-6 {
                    continue;
                }
                let expected = Complex64::new(0.0, (sys.energies[n] - sys.energies[l]) / spec.e_d * z);
                let rel = (sys.p_elems[(n, l)] - expected).norm() / expected.norm();
                assert!(rel < 1e-6, "({n},{l}) rel {rel}");
            }
        }
    }

    #[test]
    fn narrow_grid_is_refused() {
        let spec = DipoleSpec {
            grid_half_width: 2.2,
            grid_points: 256,
            ..small()
        };
        assert!(matches!(solve_dipole(&spec, false), Err(Error::GridTooSmall(_))));
    }

    #[test]
    fn invalid_beta_names_field() {
        let spec = DipoleSpec { beta: -1.0, ..small() };
        match solve_dipole(&spec, false) {
            Err(Error::InvalidParameter { field, .. }) => assert_eq!(field, "beta"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_coupling_inversion_is_trivial() {
        let (lam, it) = lambda_for_coupling(&small(), 0.0, 1.0).unwrap();
        assert_eq!((lam, it), (0.0, 0));
    }

    #[test]
    fn cosine_potential_is_harmonic_at_large_ej() {
        let spec = DipoleSpec {
            e_d: 0.05,
            grid_half_width: 3.0,
            grid_points: 2048,
            n_levels: 3,
            potential: Potential::Cosine { e_j: 20.0, phi_ext: 0.0 },
            ..DipoleSpec::default()
        };
        let sys = solve_dipole(&spec, false).unwrap();
        let plasma = (spec.e_d * 20.0f64).sqrt();
        let gap = sys.gap();
        assert!(gap < plasma && gap > 0.9 * plasma, "gap {gap} plasma {plasma}");
        let anharm = sys.energies[2] - 2.0 * sys.energies[1] + sys.energies[0];
        assert!(anharm < 0.0);
    }
}
