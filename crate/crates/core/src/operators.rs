//! Sparse Hermitian operators on sector bases: the ring Hamiltonian, total
//! spin, the negative envelope used in Perron–Frobenius arguments, and
//! diagonal gauge transformations between operators with equal moduli.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::basis::{is_occupied, mode, BasisError, SectorBasis, Spin};
use crate::model::ModelSpec;

/// Relative tolerance for comparing matrix elements of two operators.
pub const GAUGE_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("basis (L = {basis_sites}, N = {basis_particles}, hard-core = {basis_hardcore}) does not match the model (L = {sites}, N = {particles}, hard-core = {hardcore})")]
    BasisMismatch {
        sites: usize,
        particles: usize,
        hardcore: bool,
        basis_sites: usize,
        basis_particles: usize,
        basis_hardcore: bool,
    },
    #[error(transparent)]
    Basis(#[from] BasisError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaugeError {
    #[error("operators have dimensions {0} and {1}")]
    DimensionMismatch(usize, usize),
    #[error("entry ({row}, {col}) differs in modulus or presence")]
    PatternMismatch { row: usize, col: usize },
    #[error("no diagonal gauge maps one operator to the other: entry ({row}, {col}) misses by {residual:.3e}")]
    FluxObstruction {
        row: usize,
        col: usize,
        residual: f64,
    },
}

/// Hermitian matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseHermitian {
    /// Assembles from `(row, col, value)` triplets, summing duplicates and
    /// dropping entries that cancel to exactly zero.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Self {
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            *rows[r].entry(c).or_default() += v;
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != Complex64::new(0.0, 0.0) {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        let triplets = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, m[(i, j)]));
        Self::from_triplets(m.nrows(), triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// `y = H x`.
    pub fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.apply_into(x, &mut y);
        y
    }

    /// `<x, H x>` for a vector `x`.
    pub fn expectation(&self, x: &[Complex64]) -> Complex64 {
        let hx = self.apply(x);
        x.iter().zip(&hx).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.entries() {
            m[(i, j)] = v;
        }
        m
    }

    /// `max |H_ij - conj(H_ji)|` over all stored entries.
    pub fn hermiticity_defect(&self) -> f64 {
        self.entries()
            .map(|(i, j, v)| (v - self.get(j, i).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Principal submatrix on the given basis positions, in that order.
    pub fn restrict(&self, indices: &[usize]) -> SparseHermitian {
        let mut position = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            position[i] = k;
        }
        let triplets = indices.iter().enumerate().flat_map(|(k, &i)| {
            let position = &position;
            self.row(i).filter_map(move |(j, v)| {
                let pj = position[j];
                (pj != usize::MAX).then_some((k, pj, v))
            })
        });
        SparseHermitian::from_triplets(indices.len(), triplets.collect::<Vec<_>>())
    }

    pub fn map_values(&self, mut f: impl FnMut(usize, usize, Complex64) -> Complex64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] = f(i, self.cols[k], self.vals[k]);
            }
        }
        out
    }

    /// Coordinate-format text: one `row col re im` line per stored entry,
    /// 1-indexed, row-major.
    pub fn to_coordinate_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "% dim {} nnz {}", self.dim, self.nnz()).unwrap();
        for (i, j, v) in self.entries() {
            writeln!(out, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im).unwrap();
        }
        out
    }
}

/// Visits every nearest-neighbour hop `c†_{dst} c_{src}` acting on basis
/// state `col`: `f(col, row, bond, forward, sign)`. `forward` is true for the
/// `x -> x + 1` direction carrying `t_x`; the reverse carries `conj(t_x)`.
fn for_each_hop(basis: &SectorBasis, mut f: impl FnMut(usize, usize, usize, bool, f64)) {
    let sites = basis.sites();
    for (col, &config) in basis.states().iter().enumerate() {
        for x in 0..sites {
            let y = (x + 1) % sites;
            for spin in Spin::BOTH {
                for (from, to, forward) in [(x, y, true), (y, x, false)] {
                    let src = mode(from, spin);
                    let dst = mode(to, spin);
                    if !is_occupied(config, src) || is_occupied(config, dst) {
                        continue;
                    }
                    let moved = config & !(1u64 << src) | 1u64 << dst;
                    let Some(row) = basis.index_of(moved) else {
                        // hard-core basis: target site already holds the other spin
                        continue;
                    };
                    let (lo, hi) = (src.min(dst), src.max(dst));
                    let between = if hi - lo > 1 {
                        ((1u64 << hi) - 1) & !((1u64 << (lo + 1)) - 1)
                    } else {
                        0
                    };
                    let sign = if (config & between).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    f(col, row, x, forward, sign);
                }
            }
        }
    }
}

fn diagonal_energy(spec: &ModelSpec, config: u64) -> f64 {
    (0..spec.sites())
        .map(|x| {
            let up = is_occupied(config, mode(x, Spin::Up));
            let down = is_occupied(config, mode(x, Spin::Down));
            let n = up as u8 + down as u8;
            let mut e = spec.potential()[x] * n as f64;
            if up && down {
                e += spec.interaction_at(x);
            }
            e
        })
        .sum()
}

fn check_basis(spec: &ModelSpec, basis: &SectorBasis) -> Result<(), OperatorError> {
    if basis.sites() != spec.sites()
        || basis.particles() != spec.particles()
        || basis.hardcore() != spec.is_hardcore()
    {
        return Err(OperatorError::BasisMismatch {
            sites: spec.sites(),
            particles: spec.particles(),
            hardcore: spec.is_hardcore(),
            basis_sites: basis.sites(),
            basis_particles: basis.particles(),
            basis_hardcore: basis.hardcore(),
        });
    }
    Ok(())
}

/// Many-body Hamiltonian of `spec` on a sector basis.
///
/// Hard-core models are represented by the basis restriction alone, which
/// realizes the projected operator `P H P`.
pub fn build_hamiltonian(
    spec: &ModelSpec,
    basis: &SectorBasis,
) -> Result<SparseHermitian, OperatorError> {
    check_basis(spec, basis)?;
    let amplitudes: Vec<Complex64> = (0..spec.sites()).map(|x| spec.hopping(x)).collect();
    let mut triplets = Vec::new();
    for_each_hop(basis, |col, row, bond, forward, sign| {
        let t = if forward {
            amplitudes[bond]
        } else {
            amplitudes[bond].conj()
        };
        triplets.push((row, col, t * sign));
    });
    for (i, &config) in basis.states().iter().enumerate() {
        triplets.push((i, i, Complex64::new(diagonal_energy(spec, config), 0.0)));
    }
    Ok(SparseHermitian::from_triplets(basis.dim(), triplets))
}

/// `H(phi)` for every flux at once: the sparsity pattern is fixed and only
/// the entries from hops across the last bond pick up `e^{+-i phi}`.
#[derive(Debug, Clone)]
pub struct FluxFamily {
    base: SparseHermitian,
    winding: Vec<i8>,
}

impl FluxFamily {
    pub fn new(spec: &ModelSpec, basis: &SectorBasis) -> Result<Self, OperatorError> {
        check_basis(spec, basis)?;
        let last = spec.sites() - 1;
        let mut triplets = Vec::new();
        let mut windings = BTreeMap::new();
        for_each_hop(basis, |col, row, bond, forward, sign| {
            let w: i8 = match (bond == last, forward) {
                (false, _) => 0,
                (true, true) => 1,
                (true, false) => -1,
            };
            windings.insert((row, col), w);
            let t = spec.bonds()[bond].magnitude;
            triplets.push((row, col, Complex64::new(t * sign, 0.0)));
        });
        for (i, &config) in basis.states().iter().enumerate() {
            triplets.push((i, i, Complex64::new(diagonal_energy(spec, config), 0.0)));
        }
        let base = SparseHermitian::from_triplets(basis.dim(), triplets);
        let winding = base
            .entries()
            .map(|(i, j, _)| windings.get(&(i, j)).copied().unwrap_or(0))
            .collect();
        Ok(Self { base, winding })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Hamiltonian at flux `phi`, in the gauge with all phase on the last
    /// bond.
    pub fn at(&self, phi: f64) -> SparseHermitian {
        let mut k = 0;
        self.base.map_values(|_, _, v| {
            let w = self.winding[k];
            k += 1;
            if w == 0 {
                v
            } else {
                v * Complex64::from_polar(1.0, w as f64 * phi)
            }
        })
    }

    /// `dH/dphi` at flux `phi` in the same gauge.
    pub fn derivative_at(&self, phi: f64) -> SparseHermitian {
        let mut k = 0;
        self.base.map_values(|_, _, v| {
            let w = self.winding[k] as f64;
            k += 1;
            v * Complex64::new(0.0, w) * Complex64::from_polar(1.0, w * phi)
        })
    }
}

/// One-particle matrix `h`: `h[x+1][x] = t_x`, `h[x][x+1] = conj(t_x)`,
/// diagonal `V`.
pub fn build_one_particle(spec: &ModelSpec) -> DMatrix<Complex64> {
    let l = spec.sites();
    let mut h = DMatrix::zeros(l, l);
    for x in 0..l {
        let y = (x + 1) % l;
        let t = spec.hopping(x);
        h[(y, x)] += t;
        h[(x, y)] += t.conj();
        h[(x, x)] += Complex64::new(spec.potential()[x], 0.0);
    }
    h
}

/// Total spin `S^2 = S_z^2 + S_z + S_- S_+` on a sector.
pub fn build_total_spin(basis: &SectorBasis) -> SparseHermitian {
    let sz = basis.sector().two_sz() as f64 / 2.0;
    let sites = basis.sites();
    let mut triplets = Vec::new();
    for (j, &config) in basis.states().iter().enumerate() {
        triplets.push((j, j, Complex64::new(sz * sz + sz, 0.0)));
        // c†_{x,up} c_{x,down} touches adjacent modes, so every flip has sign +1
        for x in 0..sites {
            let (xu, xd) = (mode(x, Spin::Up), mode(x, Spin::Down));
            if !is_occupied(config, xd) || is_occupied(config, xu) {
                continue;
            }
            let raised = config & !(1u64 << xd) | 1u64 << xu;
            for y in 0..sites {
                let (yu, yd) = (mode(y, Spin::Up), mode(y, Spin::Down));
                if !is_occupied(raised, yu) || is_occupied(raised, yd) {
                    continue;
                }
                let lowered = raised & !(1u64 << yu) | 1u64 << yd;
                let i = basis
                    .index_of(lowered)
                    .expect("spin flips stay inside the sector");
                triplets.push((i, j, Complex64::new(1.0, 0.0)));
            }
        }
    }
    SparseHermitian::from_triplets(basis.dim(), triplets)
}

/// Replaces every off-diagonal entry by `-|s_xy|`; the diagonal is kept.
pub fn negative_envelope(h: &SparseHermitian) -> SparseHermitian {
    h.map_values(|i, j, v| {
        if i == j {
            v
        } else {
            Complex64::new(-v.norm(), 0.0)
        }
    })
}

/// Diagonal unitary `g` acting on basis states by phases.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGauge {
    phases: Vec<Complex64>,
}

impl DiagonalGauge {
    pub fn new(phases: Vec<Complex64>) -> Self {
        Self { phases }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            phases: vec![Complex64::new(1.0, 0.0); dim],
        }
    }

    pub fn phases(&self) -> &[Complex64] {
        &self.phases
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `g psi`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        psi.iter().zip(&self.phases).map(|(a, g)| a * g).collect()
    }

    /// `g H g^{-1}`.
    pub fn conjugate(&self, h: &SparseHermitian) -> SparseHermitian {
        h.map_values(|i, j, v| self.phases[i] * v * self.phases[j].conj())
    }

    pub fn restrict(&self, indices: &[usize]) -> Self {
        Self {
            phases: indices.iter().map(|&i| self.phases[i]).collect(),
        }
    }

    /// True when every phase is `+1` or `-1` to within `tol`.
    pub fn is_real_sign(&self, tol: f64) -> bool {
        self.phases
            .iter()
            .all(|g| g.im.abs() <= tol && (g.re.abs() - 1.0).abs() <= tol)
    }
}

/// Finds a diagonal unitary `g` with `g H g^{-1} = target`.
///
/// Phases are fixed along a breadth-first spanning tree of the connectivity
/// graph of `h`, with the root of every component set to 1, and then checked
/// on every remaining edge. An inconsistent cycle means the two operators
/// carry different fluxes and are not gauge equivalent.
pub fn solve_sign_gauge(
    h: &SparseHermitian,
    target: &SparseHermitian,
) -> Result<DiagonalGauge, GaugeError> {
    if h.dim() != target.dim() {
        return Err(GaugeError::DimensionMismatch(h.dim(), target.dim()));
    }
    if h.nnz() != target.nnz() {
        let (row, col, _) = h
            .entries()
            .zip(target.entries())
            .find(|((i, j, _), (k, l, _))| (i, j) != (k, l))
            .map(|(a, _)| a)
            .unwrap_or((0, 0, Complex64::default()));
        return Err(GaugeError::PatternMismatch { row, col });
    }
    for (i, j, v) in h.entries() {
        let w = target.get(i, j);
        let scale = v.norm().max(1.0);
        let mismatch = if i == j {
            (v - w).norm() > GAUGE_TOL * scale
        } else {
            (v.norm() - w.norm()).abs() > GAUGE_TOL * scale
        };
        if mismatch || w.norm() == 0.0 {
            return Err(GaugeError::PatternMismatch { row: i, col: j });
        }
    }

    let dim = h.dim();
    let unset = Complex64::new(0.0, 0.0);
    let mut phases = vec![unset; dim];
    let mut queue = VecDeque::new();
    for root in 0..dim {
        if phases[root] != unset {
            continue;
        }
        phases[root] = Complex64::new(1.0, 0.0);
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            for (j, v) in h.row(i) {
                if j == i || phases[j] != unset {
                    continue;
                }
                // g_i v conj(g_j) = target_ij
                let gj = (target.get(i, j) / (phases[i] * v)).conj();
                phases[j] = gj / gj.norm();
                queue.push_back(j);
            }
        }
    }

    let gauge = DiagonalGauge::new(phases);
    for (i, j, v) in h.entries() {
        let w = target.get(i, j);
        let mapped = gauge.phases[i] * v * gauge.phases[j].conj();
        let residual = (mapped - w).norm();
        if residual > GAUGE_TOL * w.norm().max(1.0) {
            return Err(GaugeError::FluxObstruction {
                row: i,
                col: j,
                residual,
            });
        }
    }
    Ok(gauge)
}
