//! Krylov-subspace kernels for Hermitian operators: a thick-restart
//! (Krylov–Schur) Lanczos eigensolver for the lowest eigenpairs and a
//! Lanczos propagator for exp(−iHt)ψ.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// y ← A x
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]);
}

/// Compressed sparse rows.
#[derive(Debug, Clone)]
pub struct Csr {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<Complex64>,
}

impl Csr {
    /// Duplicated coordinates are summed; exact zeros are dropped.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, Complex64)]) -> Self {
        let mut sorted = triplets.to_vec();
        sorted.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(sorted.len());
        for (r, c, v) in sorted {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let keep: Vec<bool> = vals.iter().map(|v| *v != Complex64::new(0.0, 0.0)).collect();
        let mut k = 0;
        let (mut c2, mut v2) = (Vec::new(), Vec::new());
        for i in 0..vals.len() {
            if keep[i] {
                row_ptr[rows[i] + 1] += 1;
                c2.push(cols[i]);
                v2.push(vals[i]);
                k += 1;
            }
        }
        debug_assert_eq!(k, c2.len());
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            cols: c2,
            vals: v2,
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[idx])] += self.vals[idx];
            }
        }
        m
    }
}

impl LinearOperator for Csr {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        let body = |(r, out): (usize, &mut Complex64)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for idx in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[idx] * x[self.cols[idx]];
            }
            *out = acc;
        };
        if self.dim > 4096 {
            y.par_iter_mut().enumerate().for_each(body);
        } else {
            y.iter_mut().enumerate().for_each(body);
        }
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Two passes of classical Gram–Schmidt; returns the accumulated projections.
fn orthogonalize(basis: &[Vec<Complex64>], w: &mut [Complex64]) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); basis.len()];
    for _ in 0..2 {
        let c: Vec<Complex64> = basis.par_iter().map(|v| dot(v, w)).collect();
        for (i, v) in basis.iter().enumerate() {
            axpy(-c[i], v, w);
            h[i] += c[i];
        }
    }
    h
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let n = norm(&v);
    v.iter_mut().for_each(|x| *x /= n);
    v
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    pub n_eigs: usize,
    pub krylov_dim: Option<usize>,
    /// Residual tolerance relative to max(1, |θ|).
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
    /// Operators at or below this dimension are diagonalized densely.
    pub dense_below: usize,
}

impl EigenOptions {
    pub fn lowest(n_eigs: usize) -> Self {
        Self {
            n_eigs,
            krylov_dim: None,
            tol: 1e-10,
            max_restarts: 2000,
            seed: 0x5eed,
            dense_below: 400,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<Complex64>>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
}

/// Lowest eigenpairs of a Hermitian operator.
pub fn lowest_eigenpairs<A: LinearOperator>(a: &A, opts: EigenOptions) -> Result<EigenResult> {
    let n = a.dim();
    let nev = opts.n_eigs.min(n);
    if nev == 0 {
        return Ok(EigenResult {
            values: vec![],
            vectors: vec![],
            residuals: vec![],
            restarts: 0,
        });
    }
    if n <= opts.dense_below.max(2 * nev + 2) {
        return dense_lowest(a, nev);
    }
    let m = opts.krylov_dim.unwrap_or((2 * nev + 20).max(40)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<Complex64>> = vec![random_unit(n, &mut rng)];
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut start = 0;
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut last_res = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        let mut beta_m = 0.0;
        for j in start..m {
            a.apply(&basis[j], &mut w);
            let h = orthogonalize(&basis, &mut w);
            for (i, hi) in h.iter().enumerate() {
                t[(i, j)] = hi.re;
                t[(j, i)] = hi.re;
            }
            let beta = norm(&w);
            if j + 1 < m {
                let scale = t[(j, j)].abs().max(1.0);
                if beta <= 1e-13 * scale {
                    let mut r = random_unit(n, &mut rng);
                    orthogonalize(&basis, &mut r);
                    let rn = norm(&r);
                    r.iter_mut().for_each(|x| *x /= rn);
                    basis.push(r);
                } else {
                    basis.push(w.iter().map(|x| x / beta).collect());
                }
            } else {
                beta_m = beta;
            }
        }

        let (theta, s) = jacobi_eigen(&t);
        let res: Vec<f64> = (0..m).map(|i| beta_m * s[(m - 1, i)].abs()).collect();
        let converged = (0..nev).all(|i| res[i] <= opts.tol * theta[i].abs().max(1.0));
        last_res = (0..nev).map(|i| res[i]).fold(0.0, f64::max);

        if converged {
            let vectors = ritz_vectors(&basis, &s, nev);
            let mut residuals = Vec::with_capacity(nev);
            let mut y = vec![Complex64::new(0.0, 0.0); n];
            for (i, x) in vectors.iter().enumerate() {
                a.apply(x, &mut y);
                axpy(Complex64::new(-theta[i], 0.0), x, &mut y);
                residuals.push(norm(&y));
            }
            return Ok(EigenResult {
                values: theta[..nev].to_vec(),
                vectors,
                residuals,
                restarts: restart,
            });
        }

        let keep = (nev + (m - nev) / 2).min(m - 2).max(nev);
        let mut new_basis = ritz_vectors(&basis, &s, keep);
        let f: Vec<Complex64> = if beta_m > 0.0 {
            w.iter().map(|x| x / beta_m).collect()
        } else {
            let mut r = random_unit(n, &mut rng);
            orthogonalize(&new_basis, &mut r);
            let rn = norm(&r);
            r.iter().map(|x| x / rn).collect()
        };
        new_basis.push(f);
        basis = new_basis;
        t.fill(0.0);
        for i in 0..keep {
            t[(i, i)] = theta[i];
            t[(i, keep)] = beta_m * s[(m - 1, i)];
            t[(keep, i)] = t[(i, keep)];
        }
        start = keep;
    }
    Err(Error::NoConvergence {
        context: format!("Krylov–Schur for {nev} eigenpairs of a {n}-dimensional operator"),
        iterations: opts.max_restarts,
        residual: last_res,
    })
}

/// Dense real symmetric eigendecomposition, eigenvalues ascending.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let eig = m.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.read(i).total_cmp(&s.read(j)));
    let values = order.iter().map(|&i| s.read(i)).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| u.read(r, order[c]));
    (values, vectors)
}

/// Dense Hermitian eigendecomposition, eigenvalues ascending.
pub fn hermitian_eigen(a: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    use faer::complex_native::c64;
    let n = a.nrows();
    let m = faer::Mat::<c64>::from_fn(n, n, |i, j| {
        let v = 0.5 * (a[(i, j)] + a[(j, i)].conj());
        c64::new(v.re, v.im)
    });
    let eig = m.selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.read(i).re.total_cmp(&s.read(j).re));
    let values = order.iter().map(|&i| s.read(i).re).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| {
        let z = u.read(r, order[c]);
        Complex64::new(z.re, z.im)
    });
    (values, vectors)
}

/// Cyclic Jacobi diagonalization of a small real symmetric matrix, with
/// eigenvalues ascending and eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let diag: f64 = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag.max(f64::MIN_POSITIVE) * 1e-4 || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let vals = order.iter().map(|&i| a[(i, i)]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}

fn ritz_vectors(basis: &[Vec<Complex64>], s: &DMatrix<f64>, count: usize) -> Vec<Vec<Complex64>> {
    let n = basis[0].len();
    let m = s.nrows();
    (0..count)
        .into_par_iter()
        .map(|c| {
            let mut x = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..m {
                axpy(Complex64::new(s[(j, c)], 0.0), &basis[j], &mut x);
            }
            x
        })
        .collect()
}

fn dense_lowest<A: LinearOperator>(a: &A, nev: usize) -> Result<EigenResult> {
    let n = a.dim();
    let mut dense = DMatrix::<Complex64>::zeros(n, n);
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        e[j] = Complex64::new(1.0, 0.0);
        a.apply(&e, &mut col);
        dense.set_column(j, &DVector::from_column_slice(&col));
        e[j] = Complex64::new(0.0, 0.0);
    }
    let (evals, evecs) = hermitian_eigen(&dense);
    let values: Vec<f64> = evals[..nev].to_vec();
    let vectors: Vec<Vec<Complex64>> = (0..nev).map(|i| evecs.column(i).iter().copied().collect()).collect();
    let residuals = vectors
        .iter()
        .zip(&values)
        .map(|(x, &th)| {
            let mut y = vec![Complex64::new(0.0, 0.0); n];
            a.apply(x, &mut y);
            axpy(Complex64::new(-th, 0.0), x, &mut y);
            norm(&y)
        })
        .collect();
    Ok(EigenResult {
        values,
        vectors,
        residuals,
        restarts: 0,
    })
}

/// Lanczos propagation of ψ under exp(−iHt) with adaptive substeps whose
/// a-posteriori error estimate stays below `tol`.
pub struct Propagator<'a, A: LinearOperator> {
    op: &'a A,
    pub krylov_dim: usize,
    pub tol: f64,
    dt: f64,
}

impl<'a, A: LinearOperator> Propagator<'a, A> {
    pub fn new(op: &'a A, tol: f64) -> Self {
        Self {
            op,
            krylov_dim: 30,
            tol,
            dt: 1.0,
        }
    }

    pub fn evolve(&mut self, psi: &mut Vec<Complex64>, duration: f64) -> Result<usize> {
        let mut elapsed = 0.0;
        let mut steps = 0;
        while elapsed < duration {
            let remaining = duration - elapsed;
            let taken = self.step(psi, remaining)?;
            elapsed += taken;
            steps += 1;
        }
        Ok(steps)
    }

    fn step(&mut self, psi: &mut Vec<Complex64>, max_dt: f64) -> Result<f64> {
        let n = psi.len();
        let beta0 = norm(psi);
        let mut basis: Vec<Vec<Complex64>> = vec![psi.iter().map(|x| x / beta0).collect()];
        let m = self.krylov_dim.min(n);
        let mut t = DMatrix::<f64>::zeros(m, m);
        let mut w = vec![Complex64::new(0.0, 0.0); n];
        let mut beta_m = 0.0;
        let mut size = m;
        for j in 0..m {
            self.op.apply(&basis[j], &mut w);
            let h = orthogonalize(&basis, &mut w);
            t[(j, j)] = h[j].re;
            let beta = norm(&w);
            if j + 1 < m {
                if beta < 1e-14 {
                    size = j + 1;
                    break;
                }
                t[(j, j + 1)] = beta;
                t[(j + 1, j)] = beta;
                basis.push(w.iter().map(|x| x / beta).collect());
            } else {
                beta_m = beta;
            }
        }
        let t = t.view((0, 0), (size, size)).into_owned();
        let (evals, evecs) = jacobi_eigen(&t);
        let coeffs = |dt: f64| -> Vec<Complex64> {
            (0..size)
                .map(|r| {
                    (0..size)
                        .map(|c| {
                            let q = evecs[(r, c)] * evecs[(0, c)];
                            Complex64::from_polar(q, -evals[c] * dt)
                        })
                        .sum()
                })
                .collect()
        };
        let mut dt = (self.dt * 1.5).min(max_dt);
        let mut c = coeffs(dt);
        let mut tries = 0;
        while beta_m * c[size - 1].norm() > self.tol {
            dt *= 0.5;
            c = coeffs(dt);
            tries += 1;
            if tries > 60 {
                return Err(Error::NoConvergence {
                    context: "Krylov propagator step size".into(),
                    iterations: tries,
                    residual: beta_m * c[size - 1].norm(),
                });
            }
        }
        self.dt = dt;
        psi.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for (j, cj) in c.iter().enumerate() {
            axpy(cj * beta0, &basis[j], psi);
        }
        Ok(dt)
    }
}
