//! Eigenvalue engines: dense Hermitian diagonalization, Lanczos with full
//! reorthogonalization and deflation, ground-state summaries with spin
//! content, one-particle level sums and canonical partition functions.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::model::ModelSpec;
use crate::operators::{build_one_particle, SparseHermitian};

/// Largest dimension handled by the dense solver.
pub const DENSE_LIMIT: usize = 2000;

/// Above this dimension energy-only queries switch to Lanczos.
pub const ENERGY_DENSE_LIMIT: usize = 160;

/// Seed of the deterministic Lanczos start vector.
pub const LANCZOS_SEED: u64 = 0x5EED;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectraError {
    #[error("Lanczos did not converge: residual {residual:.3e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },
    #[error("dimension {0} exceeds the dense limit of {DENSE_LIMIT}")]
    TooLargeForDense(usize),
    #[error("cannot sum {count} levels of a {sites}-site ring")]
    TooManyLevels { count: usize, sites: usize },
    #[error("S^2 eigenvalue {0} is not of the form S(S+1)")]
    SpinNotQuantized(f64),
    #[error("empty operator")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Dense up to [`DENSE_LIMIT`], Lanczos above.
    #[default]
    Auto,
    Dense,
    Lanczos,
}

/// Eigenvalues within this distance of the minimum count as ground states.
pub fn degeneracy_threshold(energy: f64) -> f64 {
    1e-9 * energy.abs().max(1.0)
}

/// Dense eigen-decomposition, eigenvalues ascending.
pub fn dense_eigen(h: &SparseHermitian) -> Result<(Vec<f64>, DMatrix<Complex64>), SpectraError> {
    let dim = h.dim();
    if dim == 0 {
        return Err(SpectraError::Empty);
    }
    if dim > DENSE_LIMIT {
        return Err(SpectraError::TooLargeForDense(dim));
    }
    let eig = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |i, k| eig.eigenvectors[(i, order[k])]);
    Ok((values, vectors))
}

/// All eigenvalues, ascending.
pub fn full_spectrum(h: &SparseHermitian) -> Result<Vec<f64>, SpectraError> {
    let dim = h.dim();
    if dim == 0 {
        return Err(SpectraError::Empty);
    }
    if dim > DENSE_LIMIT {
        return Err(SpectraError::TooLargeForDense(dim));
    }
    let mut values: Vec<f64> = h.to_dense().symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Tunables of the Lanczos iteration.
#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov dimension before a restart from the current Ritz vector.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Target for the residual estimate, relative to `max(1, |E|)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 200,
            max_restarts: 20,
            tol: 1e-12,
            seed: LANCZOS_SEED,
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
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn project_out(w: &mut [Complex64], against: &[&[Vec<Complex64>]]) {
    for v in against.iter().flat_map(|set| set.iter()) {
        let c = dot(v, w);
        axpy(-c, v, w);
    }
}

/// Classical Gram-Schmidt, repeated once when the first pass cancelled most
/// of `w`.
fn orthogonalize(w: &mut [Complex64], against: &[&[Vec<Complex64>]]) {
    let before = norm(w);
    project_out(w, against);
    if norm(w) < 0.7 * before {
        project_out(w, against);
    }
}

/// Number of eigenvalues of the tridiagonal matrix below `x` (Sturm count
/// from the pivots of `T - x`).
fn count_below(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..alpha.len() {
        q = alpha[i] - x - if i > 0 { beta[i - 1] * beta[i - 1] / q } else { 0.0 };
        if q == 0.0 {
            q = -f64::EPSILON * (beta.get(i).copied().unwrap_or(1.0).abs() + f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Lowest eigenpair of the symmetric tridiagonal matrix with diagonal
/// `alpha` and off-diagonal `beta`: bisection for the value, inverse
/// iteration for the vector.
fn lowest_of_tridiagonal(alpha: &[f64], beta: &[f64]) -> (f64, DVector<f64>) {
    let k = alpha.len();
    let off = |i: usize| {
        (if i > 0 { beta[i - 1].abs() } else { 0.0 }) + beta.get(i).map_or(0.0, |b| b.abs())
    };
    let mut lo = (0..k).map(|i| alpha[i] - off(i)).fold(f64::INFINITY, f64::min);
    let mut hi = (0..k).map(|i| alpha[i] + off(i)).fold(f64::NEG_INFINITY, f64::max);
    let scale = lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE);
    while hi - lo > 2.0 * f64::EPSILON * scale {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(alpha, beta, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let theta = 0.5 * (lo + hi);
    if k == 1 {
        return (theta, DVector::from_element(1, 1.0));
    }

    // T - sigma is positive definite, so LDL^T needs no pivoting
    let sigma = lo - 4.0 * f64::EPSILON * scale;
    let mut d = vec![0.0; k];
    d[0] = alpha[0] - sigma;
    for i in 1..k {
        d[i] = alpha[i] - sigma - beta[i - 1] * beta[i - 1] / d[i - 1];
    }
    let mut y = DVector::from_fn(k, |i, _| 1.0 + (i as f64 * 0.618).fract());
    for _ in 0..3 {
        for i in 1..k {
            y[i] -= beta[i - 1] / d[i - 1] * y[i - 1];
        }
        y[k - 1] /= d[k - 1];
        for i in (0..k - 1).rev() {
            y[i] = (y[i] - beta[i] * y[i + 1]) / d[i];
        }
        let n = y.norm();
        y /= n;
    }
    (theta, y)
}

/// Lowest eigenpair of `h` on the orthogonal complement of `deflate`
/// (orthonormal vectors spanning an invariant subspace).
pub fn lanczos_lowest(
    h: &SparseHermitian,
    deflate: &[Vec<Complex64>],
    opts: &LanczosOptions,
) -> Result<(f64, Vec<Complex64>), SpectraError> {
    let dim = h.dim();
    let free_dim = dim.saturating_sub(deflate.len());
    if free_dim == 0 {
        return Err(SpectraError::Empty);
    }
    // a fresh start per deflation level: reusing the start vector would make its
    // projection on a degenerate eigenspace parallel to the vector just found
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(deflate.len() as u64));
    let mut start: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    orthogonalize(&mut start, &[deflate]);
    let n0 = norm(&start);
    start.iter_mut().for_each(|x| *x /= n0);

    let krylov_dim = opts.krylov_dim.min(free_dim).max(1);
    let mut last_residual = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![Complex64::new(0.0, 0.0); dim];
        loop {
            let k = basis.len() - 1;
            h.apply_into(&basis[k], &mut w);
            iterations += 1;
            let a = dot(&basis[k], &w).re;
            alpha.push(a);
            axpy(Complex64::new(-a, 0.0), &basis[k], &mut w);
            if k > 0 {
                axpy(Complex64::new(-beta[k - 1], 0.0), &basis[k - 1], &mut w);
            }
            orthogonalize(&mut w, &[&basis, deflate]);
            let b = norm(&w);
            let exhausted = basis.len() >= krylov_dim;
            let invariant = b <= 1e-14 * a.abs().max(1.0);
            let check = exhausted || invariant || basis.len() % 4 == 0;
            if check {
                let (theta, y) = lowest_of_tridiagonal(&alpha, &beta);
                let estimate = b * y[y.len() - 1].abs();
                let target = opts.tol * theta.abs().max(1.0);
                if estimate <= target || invariant || exhausted {
                    let mut x = vec![Complex64::new(0.0, 0.0); dim];
                    for (coef, v) in y.iter().zip(&basis) {
                        axpy(Complex64::new(*coef, 0.0), v, &mut x);
                    }
                    orthogonalize(&mut x, &[deflate]);
                    let nx = norm(&x);
                    x.iter_mut().for_each(|z| *z /= nx);
                    let hx = h.apply(&x);
                    let energy = dot(&x, &hx).re;
                    let residual = hx
                        .iter()
                        .zip(&x)
                        .map(|(p, q)| (p - q * energy).norm_sqr())
                        .sum::<f64>()
                        .sqrt();
                    last_residual = residual;
                    if residual <= 1e-10 * energy.abs().max(1.0) || (invariant && !exhausted) {
                        return Ok((energy, x));
                    }
                    if exhausted || invariant {
                        start = x;
                        break;
                    }
                }
            }
            let next: Vec<Complex64> = w.iter().map(|z| z / b).collect();
            beta.push(b);
            basis.push(next);
        }
    }
    Err(SpectraError::NoConvergence {
        residual: last_residual,
        iterations,
    })
}

/// What [`ground`] should compute.
#[derive(Debug, Clone, Copy)]
pub struct GroundOptions {
    pub want_vectors: bool,
    /// Stop the Lanczos deflation after this many ground vectors.
    pub max_degeneracy: usize,
    pub solver: Solver,
}

impl Default for GroundOptions {
    fn default() -> Self {
        Self {
            want_vectors: true,
            max_degeneracy: 64,
            solver: Solver::Auto,
        }
    }
}

/// Lowest eigenvalue with its degeneracy and eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundInfo {
    pub energy: f64,
    pub degeneracy: usize,
    /// Distance to the first level above the ground manifold, when known.
    pub gap: Option<f64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<Complex64>>,
    /// Total spin of each ground vector after diagonalizing `S^2` inside
    /// the ground manifold; empty until [`GroundInfo::resolve_spin`].
    pub spin_content: Vec<f64>,
}

impl GroundInfo {
    /// Diagonalizes `s2` restricted to the ground eigenspace and records
    /// the total spins found there, ascending.
    pub fn resolve_spin(&mut self, s2: &SparseHermitian) -> Result<(), SpectraError> {
        self.spin_content = spin_content(&self.vectors, s2)?;
        Ok(())
    }

    /// Distinct spin values present in the ground manifold.
    pub fn distinct_spins(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &s in &self.spin_content {
            if out.last().is_none_or(|&last| (s - last).abs() > 1e-6) {
                out.push(s);
            }
        }
        out
    }

    pub fn has_spin(&self, s: f64) -> bool {
        self.spin_content.iter().any(|&x| (x - s).abs() < 1e-6)
    }
}

/// Converts an `S^2` eigenvalue to `S`, insisting on a half-integer.
pub fn spin_from_s2(lambda: f64) -> Result<f64, SpectraError> {
    let s = 0.5 * ((1.0 + 4.0 * lambda.max(0.0)).sqrt() - 1.0);
    let rounded = (2.0 * s).round() / 2.0;
    if (rounded * (rounded + 1.0) - lambda).abs() > 1e-8 {
        return Err(SpectraError::SpinNotQuantized(lambda));
    }
    Ok(rounded)
}

/// Total-spin values of an orthonormal set spanning an `S^2`-invariant space.
pub fn spin_content(vectors: &[Vec<Complex64>], s2: &SparseHermitian) -> Result<Vec<f64>, SpectraError> {
    let d = vectors.len();
    let images: Vec<Vec<Complex64>> = vectors.iter().map(|v| s2.apply(v)).collect();
    let projected = DMatrix::from_fn(d, d, |a, b| dot(&vectors[a], &images[b]));
    let mut spins = projected
        .symmetric_eigenvalues()
        .iter()
        .map(|&l| spin_from_s2(l))
        .collect::<Result<Vec<_>, _>>()?;
    spins.sort_by(f64::total_cmp);
    Ok(spins)
}

fn orthonormal_columns(m: &DMatrix<Complex64>, count: usize) -> Vec<Vec<Complex64>> {
    (0..count)
        .map(|k| m.column(k).iter().copied().collect())
        .collect()
}

/// Ground energy, degeneracy and (optionally) the ground eigenspace.
pub fn ground(h: &SparseHermitian, opts: &GroundOptions) -> Result<GroundInfo, SpectraError> {
    let dim = h.dim();
    if dim == 0 {
        return Err(SpectraError::Empty);
    }
    let dense = match opts.solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => dim <= DENSE_LIMIT,
    };
    if dense {
        let (values, vectors) = dense_eigen(h)?;
        let energy = values[0];
        let thr = degeneracy_threshold(energy);
        let degeneracy = values.iter().take_while(|&&e| e - energy <= thr).count();
        let gap = values.get(degeneracy).map(|e| e - energy);
        let vectors = if opts.want_vectors {
            orthonormal_columns(&vectors, degeneracy)
        } else {
            Vec::new()
        };
        return Ok(GroundInfo {
            energy,
            degeneracy,
            gap,
            vectors,
            spin_content: Vec::new(),
        });
    }

    let lopts = LanczosOptions::default();
    let (energy, v0) = lanczos_lowest(h, &[], &lopts)?;
    let thr = degeneracy_threshold(energy);
    let mut found = vec![v0];
    let mut gap = None;
    while found.len() < opts.max_degeneracy.max(1) && found.len() < dim {
        let (e, v) = lanczos_lowest(h, &found, &lopts)?;
        if e - energy > thr {
            gap = Some(e - energy);
            break;
        }
        found.push(v);
    }
    let degeneracy = found.len();
    Ok(GroundInfo {
        energy,
        degeneracy,
        gap,
        vectors: if opts.want_vectors { found } else { Vec::new() },
        spin_content: Vec::new(),
    })
}

/// Lowest eigenvalue only; cheapest available route.
pub fn ground_energy(h: &SparseHermitian, solver: Solver) -> Result<f64, SpectraError> {
    let dim = h.dim();
    if dim == 0 {
        return Err(SpectraError::Empty);
    }
    let dense = match solver {
        Solver::Dense => true,
        Solver::Lanczos => false,
        Solver::Auto => dim <= ENERGY_DENSE_LIMIT,
    };
    if dense {
        Ok(full_spectrum(h)?[0])
    } else {
        Ok(lanczos_lowest(h, &[], &LanczosOptions::default())?.0)
    }
}

/// One-particle levels `e_1 <= ... <= e_L` of `spec`.
pub fn one_particle_levels(spec: &ModelSpec) -> Vec<f64> {
    let mut values: Vec<f64> = build_one_particle(spec)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    values.sort_by(f64::total_cmp);
    values
}

/// `F_K(phi)`: sum of the `K` lowest one-particle levels of `spec` with its
/// flux set to `phi`.
pub fn lowest_sum(spec: &ModelSpec, count: usize, phi: f64) -> Result<f64, SpectraError> {
    if count > spec.sites() {
        return Err(SpectraError::TooManyLevels {
            count,
            sites: spec.sites(),
        });
    }
    Ok(one_particle_levels(&spec.with_flux(phi))[..count].iter().sum())
}

/// Canonical partition function stored as `log P = -beta E_min + log_sum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogPartition {
    pub beta: f64,
    pub e_min: f64,
    /// `log sum_k exp(-beta (E_k - E_min))`.
    pub log_sum: f64,
}

impl LogPartition {
    pub fn from_spectrum(energies: &[f64], beta: f64) -> Self {
        let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let sum: f64 = energies.iter().map(|e| (-beta * (e - e_min)).exp()).sum();
        Self {
            beta,
            e_min,
            log_sum: sum.ln(),
        }
    }

    pub fn log_value(&self) -> f64 {
        -self.beta * self.e_min + self.log_sum
    }

    pub fn value(&self) -> f64 {
        self.log_value().exp()
    }
}

/// `P = Tr exp(-beta H)` from the dense spectrum.
pub fn canonical_partition(h: &SparseHermitian, beta: f64) -> Result<LogPartition, SpectraError> {
    Ok(LogPartition::from_spectrum(&full_spectrum(h)?, beta))
}

/// A scalar sampled on a uniform flux grid over `[0, 2pi)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
}

impl FluxCurve {
    /// Uniform grid `2 pi k / n`, `k = 0..n`.
    pub fn uniform_grid(n: usize) -> Vec<f64> {
        (0..n).map(|k| TAU * k as f64 / n as f64).collect()
    }

    pub fn sample(label: impl Into<String>, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let grid = Self::uniform_grid(n);
        let values = grid.iter().map(|&phi| f(phi)).collect();
        Self {
            grid,
            values,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `phi,value` rows with a header, 12 significant digits, LF endings.
    pub fn to_csv(&self, header: &str) -> String {
        let mut out = String::with_capacity(32 * self.len());
        out.push_str(header);
        out.push('\n');
        for (phi, v) in self.grid.iter().zip(&self.values) {
            out.push_str(&format_significant(*phi, 12));
            out.push(',');
            out.push_str(&format_significant(*v, 12));
            out.push('\n');
        }
        out
    }
}

/// `printf("%.{digits}g")`-style formatting.
pub fn format_significant(value: f64, digits: usize) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, value);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, value)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
