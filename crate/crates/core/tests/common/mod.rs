//! Reference implementations that share no code with the library: a closed
//! form for the uniform ring and a dense Fock-space builder that applies
//! annihilation and creation operators one at a time.

#![allow(dead_code)]

use std::f64::consts::TAU;

use fluxring::model::ModelSpec;
use nalgebra::DMatrix;
use num_complex::Complex64;

/// One-particle levels of the uniform ring, `2 cos((2 pi k + phi) / L)`,
/// ascending.
pub fn fourier_levels(sites: usize, phi: f64) -> Vec<f64> {
    let mut levels: Vec<f64> = (0..sites)
        .map(|k| 2.0 * ((TAU * k as f64 + phi) / sites as f64).cos())
        .collect();
    levels.sort_by(f64::total_cmp);
    levels
}

/// Sum of the `k` lowest uniform-ring levels.
pub fn fourier_sum(sites: usize, k: usize, phi: f64) -> f64 {
    fourier_levels(sites, phi)[..k].iter().sum()
}

/// Free ground energy of the uniform ring with `n_up` and `n_down`
/// particles: each species fills its own lowest levels.
pub fn fourier_ground(sites: usize, n_up: usize, n_down: usize, phi: f64) -> f64 {
    fourier_sum(sites, n_up, phi) + fourier_sum(sites, n_down, phi)
}

/// Dense Fock space of `2L` modes. Mode order here is spin-major
/// (`sigma * L + x`), unlike the library, and the Jordan-Wigner string
/// counts the occupied modes below the target.
pub struct Fock {
    sites: usize,
}

impl Fock {
    pub fn new(sites: usize) -> Self {
        assert!(sites <= 6, "dense Fock space would be too large");
        Self { sites }
    }

    fn mode(&self, x: usize, spin: usize) -> usize {
        spin * self.sites + x
    }

    /// `c_m |state>` as (sign, new state).
    fn annihilate(&self, m: usize, state: u32) -> Option<(f64, u32)> {
        if state & (1 << m) == 0 {
            return None;
        }
        let below = (state & ((1u32 << m) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
        Some((sign, state & !(1 << m)))
    }

    /// `c_m^dagger |state>` as (sign, new state).
    fn create(&self, m: usize, state: u32) -> Option<(f64, u32)> {
        if state & (1 << m) != 0 {
            return None;
        }
        let below = (state & ((1u32 << m) - 1)).count_ones();
        let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
        Some((sign, state | (1 << m)))
    }

    fn count(&self, state: u32, spin: usize) -> usize {
        (0..self.sites)
            .filter(|&x| state & (1 << self.mode(x, spin)) != 0)
            .count()
    }

    fn doubly_occupied(&self, state: u32) -> bool {
        (0..self.sites).any(|x| {
            state & (1 << self.mode(x, 0)) != 0 && state & (1 << self.mode(x, 1)) != 0
        })
    }

    /// Sector states in increasing bit order; hard-core drops double
    /// occupancy.
    pub fn sector(&self, n_up: usize, n_down: usize, hardcore: bool) -> Vec<u32> {
        (0..1u32 << (2 * self.sites))
            .filter(|&s| self.count(s, 0) == n_up && self.count(s, 1) == n_down)
            .filter(|&s| !hardcore || !self.doubly_occupied(s))
            .collect()
    }

    /// Hamiltonian matrix on a sector. The interaction term is dropped for
    /// hard-core models, whose sector already excludes double occupancy.
    pub fn hamiltonian(&self, spec: &ModelSpec, n_up: usize, n_down: usize) -> DMatrix<Complex64> {
        assert_eq!(spec.sites(), self.sites);
        let states = self.sector(n_up, n_down, spec.is_hardcore());
        let dim = states.len();
        let position = |s: u32| states.iter().position(|&t| t == s);
        let mut h = DMatrix::<Complex64>::zeros(dim, dim);
        for (col, &state) in states.iter().enumerate() {
            for x in 0..self.sites {
                let y = (x + 1) % self.sites;
                let t = spec.hopping(x);
                for spin in 0..2 {
                    let (from, to) = (self.mode(x, spin), self.mode(y, spin));
                    // t c^dag_y c_x and its conjugate c^dag_x c_y
                    for (src, dst, amp) in [(from, to, t), (to, from, t.conj())] {
                        let Some((s1, mid)) = self.annihilate(src, state) else {
                            continue;
                        };
                        let Some((s2, out)) = self.create(dst, mid) else {
                            continue;
                        };
                        if let Some(row) = position(out) {
                            h[(row, col)] += amp * (s1 * s2);
                        }
                    }
                }
            }
            let mut diag = 0.0;
            for x in 0..self.sites {
                let up = state & (1 << self.mode(x, 0)) != 0;
                let down = state & (1 << self.mode(x, 1)) != 0;
                diag += spec.potential()[x] * (up as u8 + down as u8) as f64;
                if up && down && !spec.is_hardcore() {
                    diag += spec.interaction_at(x);
                }
            }
            h[(col, col)] += Complex64::new(diag, 0.0);
        }
        h
    }

    pub fn spectrum(&self, spec: &ModelSpec, n_up: usize, n_down: usize) -> Vec<f64> {
        let mut values: Vec<f64> = self
            .hamiltonian(spec, n_up, n_down)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
