//! Occupation-number bases for fixed `(N, S_z)` sectors and the splitting of
//! hard-core sectors into blocks that hopping never connects.
//!
//! A configuration is a bit string over the `2L` modes ordered site-major,
//! up before down: mode `2x` is `(x, up)` and mode `2x + 1` is `(x, down)`.

use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::Serialize;
use thiserror::Error;

use crate::model::ModelSpec;

/// Largest ring the `u64` configuration encoding supports.
pub const MAX_SITES: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BasisError {
    #[error("2Sz = {two_sz} is incompatible with N = {particles}")]
    InvalidSpin { particles: usize, two_sz: i64 },
    #[error("no configurations with {n_up} up and {n_down} down spins on {sites} sites (hard-core: {hardcore})")]
    EmptySector {
        sites: usize,
        n_up: usize,
        n_down: usize,
        hardcore: bool,
    },
    #[error("ring of {0} sites exceeds the supported maximum of {MAX_SITES}")]
    TooManySites(usize),
    #[error("block decomposition needs a hard-core basis")]
    NotHardCore,
    #[error("basis is for L = {basis_sites}, model has L = {model_sites}")]
    SiteMismatch {
        basis_sites: usize,
        model_sites: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn index(self) -> usize {
        match self {
            Spin::Up => 0,
            Spin::Down => 1,
        }
    }

    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];
}

/// Mode index of `(site, spin)`.
#[inline]
pub fn mode(site: usize, spin: Spin) -> usize {
    2 * site + spin.index()
}

#[inline]
pub fn is_occupied(config: u64, m: usize) -> bool {
    config >> m & 1 == 1
}

/// Particle-number and spin-projection labels of a sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Sector {
    pub n_up: usize,
    pub n_down: usize,
}

impl Sector {
    pub fn new(n_up: usize, n_down: usize) -> Self {
        Self { n_up, n_down }
    }

    /// Sector with `N` particles and spin projection `two_sz / 2`.
    pub fn from_spin(particles: usize, two_sz: i64) -> Result<Self, BasisError> {
        let n = particles as i64;
        if two_sz.abs() > n || (n + two_sz).rem_euclid(2) != 0 {
            return Err(BasisError::InvalidSpin {
                particles,
                two_sz,
            });
        }
        Ok(Self {
            n_up: ((n + two_sz) / 2) as usize,
            n_down: ((n - two_sz) / 2) as usize,
        })
    }

    /// Smallest `|S_z|` sector: `S_z = 0` for even `N`, `1/2` for odd.
    pub fn balanced(particles: usize) -> Self {
        Self {
            n_up: particles.div_ceil(2),
            n_down: particles / 2,
        }
    }

    pub fn particles(&self) -> usize {
        self.n_up + self.n_down
    }

    pub fn two_sz(&self) -> i64 {
        self.n_up as i64 - self.n_down as i64
    }
}

/// Explicit, sorted list of the configurations of one sector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    sites: usize,
    sector: Sector,
    hardcore: bool,
    states: Vec<u64>,
}

/// All `k`-subsets of `0..n` as bit masks, in increasing numeric order.
fn subsets(n: usize, k: usize) -> Vec<u64> {
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let limit = 1u64 << n;
    let mut out = Vec::new();
    let mut mask = (1u64 << k) - 1;
    while mask < limit {
        out.push(mask);
        // Gosper's hack: next integer with the same popcount
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    out
}

/// Spreads a site mask onto the modes of one spin species.
fn spread(site_mask: u64, spin: Spin) -> u64 {
    let mut out = 0u64;
    let mut rest = site_mask;
    while rest != 0 {
        let x = rest.trailing_zeros() as usize;
        out |= 1 << mode(x, spin);
        rest &= rest - 1;
    }
    out
}

impl SectorBasis {
    pub fn new(sites: usize, sector: Sector, hardcore: bool) -> Result<Self, BasisError> {
        if sites > MAX_SITES {
            return Err(BasisError::TooManySites(sites));
        }
        let empty = || BasisError::EmptySector {
            sites,
            n_up: sector.n_up,
            n_down: sector.n_down,
            hardcore,
        };
        let ups = subsets(sites, sector.n_up);
        let downs = subsets(sites, sector.n_down);
        let mut states = Vec::with_capacity(ups.len() * downs.len());
        for &u in &ups {
            for &d in &downs {
                if hardcore && u & d != 0 {
                    continue;
                }
                states.push(spread(u, Spin::Up) | spread(d, Spin::Down));
            }
        }
        if states.is_empty() {
            return Err(empty());
        }
        states.sort_unstable();
        Ok(Self {
            sites,
            sector,
            hardcore,
            states,
        })
    }

    /// Sector basis addressed by particle number and `2 S_z`.
    pub fn enumerate(
        sites: usize,
        particles: usize,
        two_sz: i64,
        hardcore: bool,
    ) -> Result<Self, BasisError> {
        Self::new(sites, Sector::from_spin(particles, two_sz)?, hardcore)
    }

    /// Basis matching a model's ring, particle number and interaction mode.
    pub fn for_model(spec: &ModelSpec, sector: Sector) -> Result<Self, BasisError> {
        Self::new(spec.sites(), sector, spec.is_hardcore())
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    pub fn particles(&self) -> usize {
        self.sector.particles()
    }

    pub fn hardcore(&self) -> bool {
        self.hardcore
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, index: usize) -> u64 {
        self.states[index]
    }

    pub fn index_of(&self, config: u64) -> Option<usize> {
        self.states.binary_search(&config).ok()
    }

    /// Spins of the occupied sites read along the ring from site 0.
    /// Doubly occupied sites contribute up then down.
    pub fn spin_word(&self, config: u64) -> SpinWord {
        let mut word = Vec::with_capacity(self.particles());
        for x in 0..self.sites {
            for spin in Spin::BOTH {
                if is_occupied(config, mode(x, spin)) {
                    word.push(spin);
                }
            }
        }
        SpinWord(word)
    }

    /// Occupied sites of a configuration, ignoring spin.
    pub fn positions(&self, config: u64) -> Vec<usize> {
        (0..self.sites)
            .filter(|&x| {
                is_occupied(config, mode(x, Spin::Up)) || is_occupied(config, mode(x, Spin::Down))
            })
            .collect()
    }

    /// Configurations reachable by one nearest-neighbour hop.
    pub fn neighbors(&self, config: u64) -> Vec<u64> {
        let mut out = Vec::new();
        for x in 0..self.sites {
            let y = (x + 1) % self.sites;
            for spin in Spin::BOTH {
                for (from, to) in [(x, y), (y, x)] {
                    let src = mode(from, spin);
                    let dst = mode(to, spin);
                    if !is_occupied(config, src) || is_occupied(config, dst) {
                        continue;
                    }
                    let moved = config & !(1 << src) | 1 << dst;
                    if self.hardcore && site_doubly_occupied(moved, to) {
                        continue;
                    }
                    out.push(moved);
                }
            }
        }
        out
    }
}

fn site_doubly_occupied(config: u64, x: usize) -> bool {
    is_occupied(config, mode(x, Spin::Up)) && is_occupied(config, mode(x, Spin::Down))
}

/// Spin labels of the particles in ring order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinWord(pub Vec<Spin>);

impl SpinWord {
    pub fn parse(text: &str) -> Option<Self> {
        text.chars()
            .map(|c| match c {
                'u' | 'U' | '↑' => Some(Spin::Up),
                'd' | 'D' | '↓' => Some(Spin::Down),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(SpinWord)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Word shifted left by `k`: `(tau_{k+1}, ..., tau_N, tau_1, ..., tau_k)`.
    pub fn rotated(&self, k: usize) -> Self {
        let mut w = self.0.clone();
        let len = w.len();
        if len > 0 {
            w.rotate_left(k % len);
        }
        SpinWord(w)
    }

    /// Lexicographically smallest rotation; labels the cyclic class.
    pub fn canonical_rotation(&self) -> Self {
        (0..self.len().max(1))
            .map(|k| self.rotated(k))
            .min()
            .unwrap_or_else(|| self.clone())
    }

    pub fn period(&self) -> usize {
        necklace_period(&self.0)
    }
}

impl fmt::Display for SpinWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(match s {
                Spin::Up => "u",
                Spin::Down => "d",
            })?;
        }
        Ok(())
    }
}

/// Smallest `p > 0` such that shifting the word cyclically by `p` leaves it
/// unchanged. Always divides the word length.
pub fn necklace_period<T: PartialEq>(word: &[T]) -> usize {
    let n = word.len();
    assert!(n > 0, "necklace period of an empty word");
    (1..=n)
        .filter(|p| n % p == 0)
        .find(|&p| (0..n).all(|i| word[i] == word[(i + p) % n]))
        .unwrap_or(n)
}

/// One connected component of the hard-core hopping graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NecklaceBlock {
    pub period: usize,
    #[serde(serialize_with = "serialize_word")]
    pub representative: SpinWord,
    #[serde(skip)]
    pub members: Vec<usize>,
}

fn serialize_word<S: serde::Serializer>(w: &SpinWord, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&w.to_string())
}

impl NecklaceBlock {
    pub fn dim(&self) -> usize {
        self.members.len()
    }
}

/// Splits a hard-core sector into the connected components of its hopping
/// graph and labels each with the necklace period of its spin words.
///
/// Blocks come out ordered by their smallest member index; members are
/// sorted.
pub fn decompose_blocks(
    basis: &SectorBasis,
    spec: &ModelSpec,
) -> Result<Vec<NecklaceBlock>, BasisError> {
    if !basis.hardcore() {
        return Err(BasisError::NotHardCore);
    }
    if basis.sites() != spec.sites() {
        return Err(BasisError::SiteMismatch {
            basis_sites: basis.sites(),
            model_sites: spec.sites(),
        });
    }
    let dim = basis.dim();
    let mut uf = UnionFind::<usize>::new(dim);
    for (i, &config) in basis.states().iter().enumerate() {
        for next in basis.neighbors(config) {
            let j = basis
                .index_of(next)
                .expect("hop preserves particle numbers");
            uf.union(i, j);
        }
    }
    let labels = uf.into_labeling();
    let mut order: Vec<usize> = Vec::new();
    let mut members_by_root: std::collections::HashMap<usize, Vec<usize>> = Default::default();
    for (i, &root) in labels.iter().enumerate() {
        members_by_root
            .entry(root)
            .or_insert_with(|| {
                order.push(root);
                Vec::new()
            })
            .push(i);
    }
    Ok(order
        .into_iter()
        .map(|root| {
            let members = members_by_root.remove(&root).unwrap_or_default();
            let representative = members
                .iter()
                .map(|&i| basis.spin_word(basis.state(i)).canonical_rotation())
                .min()
                .expect("blocks are nonempty");
            let period = if representative.is_empty() {
                1
            } else {
                representative.period()
            };
            NecklaceBlock {
                period,
                representative,
                members,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binom(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn sector_dimensions() {
        assert_eq!(SectorBasis::enumerate(4, 2, 0, false).unwrap().dim(), 16);
        assert_eq!(SectorBasis::enumerate(4, 2, 0, true).unwrap().dim(), 12);
        assert_eq!(SectorBasis::enumerate(7, 6, 0, true).unwrap().dim(), 140);
        for l in 3..=7 {
            for n in 0..=2 * l {
                for nu in 0..=n {
                    let nd = n - nu;
                    let free = SectorBasis::new(l, Sector::new(nu, nd), false)
                        .map(|b| b.dim())
                        .unwrap_or(0);
                    assert_eq!(free, binom(l, nu) * binom(l, nd));
                    let hc = SectorBasis::new(l, Sector::new(nu, nd), true)
                        .map(|b| b.dim())
                        .unwrap_or(0);
                    assert_eq!(hc, binom(l, n) * binom(n, nu));
                }
            }
        }
    }

    #[test]
    fn states_sorted_unique_and_indexed() {
        let b = SectorBasis::enumerate(5, 4, 0, false).unwrap();
        assert!(b.states().windows(2).all(|w| w[0] < w[1]));
        for (i, &s) in b.states().iter().enumerate() {
            assert_eq!(b.index_of(s), Some(i));
            let ups = (0..5).filter(|&x| is_occupied(s, mode(x, Spin::Up))).count();
            assert_eq!(ups, 2);
            assert_eq!(s.count_ones(), 4);
        }
    }

    #[test]
    fn hardcore_excludes_double_occupancy() {
        let b = SectorBasis::enumerate(5, 4, 0, true).unwrap();
        for &s in b.states() {
            for x in 0..5 {
                assert!(!site_doubly_occupied(s, x));
            }
        }
    }

    #[test]
    fn sector_errors() {
        assert!(matches!(
            SectorBasis::enumerate(4, 2, 1, false),
            Err(BasisError::InvalidSpin { .. })
        ));
        assert!(matches!(
            SectorBasis::enumerate(4, 2, 4, false),
            Err(BasisError::InvalidSpin { .. })
        ));
        assert!(matches!(
            SectorBasis::enumerate(3, 7, 1, false),
            Err(BasisError::EmptySector { .. })
        ));
        assert!(matches!(
            SectorBasis::enumerate(3, 4, 0, true),
            Err(BasisError::EmptySector { .. })
        ));
    }

    #[test]
    fn necklace_periods() {
        let w = |s: &str| SpinWord::parse(s).unwrap();
        assert_eq!(w("udud").period(), 2);
        assert_eq!(w("uudd").period(), 4);
        assert_eq!(w("ududud").period(), 2);
        assert_eq!(w("uu").period(), 1);
        assert_eq!(w("uuduud").period(), 3);
        assert_eq!(w("dduu").canonical_rotation(), w("uudd"));
        assert_eq!(w("uddu").canonical_rotation(), w("uudd"));
    }

    #[test]
    fn single_block_for_two_particles_on_four_sites() {
        let spec = ModelSpec::uniform(4, 2).unwrap();
        let b = SectorBasis::enumerate(4, 2, 0, true).unwrap();
        let blocks = decompose_blocks(&b, &spec).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].period, 2);
        assert_eq!(blocks[0].dim(), 12);
    }

    #[test]
    fn necklace_classes_on_six_sites() {
        // words of length 4 with two ups: {uudd: 4 rotations, p = 4},
        // {udud: 2 rotations, p = 2}; 15 position sets each
        let spec = ModelSpec::uniform(6, 4).unwrap();
        let b = SectorBasis::enumerate(6, 4, 0, true).unwrap();
        let blocks = decompose_blocks(&b, &spec).unwrap();
        let mut summary: Vec<(usize, usize, String)> = blocks
            .iter()
            .map(|blk| (blk.period, blk.dim(), blk.representative.to_string()))
            .collect();
        summary.sort();
        assert_eq!(
            summary,
            vec![(2, 30, "udud".to_string()), (4, 60, "uudd".to_string())]
        );
    }

    #[test]
    fn polarized_pair_has_period_one() {
        let spec = ModelSpec::uniform(5, 2).unwrap();
        let b = SectorBasis::enumerate(5, 2, 2, true).unwrap();
        let blocks = decompose_blocks(&b, &spec).unwrap();
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].period, 1);
        assert_eq!(blocks[0].dim(), 10);
    }

    #[test]
    fn blocks_partition_and_are_closed() {
        for (l, n) in [(5, 4), (6, 4), (7, 6), (7, 4)] {
            let spec = ModelSpec::uniform(l, n).unwrap();
            let b = SectorBasis::enumerate(l, n, 0, true).unwrap();
            let blocks = decompose_blocks(&b, &spec).unwrap();
            let mut owner = vec![usize::MAX; b.dim()];
            for (k, blk) in blocks.iter().enumerate() {
                for &i in &blk.members {
                    assert_eq!(owner[i], usize::MAX);
                    owner[i] = k;
                }
                for &i in &blk.members {
                    let word = b.spin_word(b.state(i)).canonical_rotation();
                    assert_eq!(word, blk.representative);
                }
            }
            assert!(owner.iter().all(|&o| o != usize::MAX));
            for (i, &s) in b.states().iter().enumerate() {
                for next in b.neighbors(s) {
                    assert_eq!(owner[b.index_of(next).unwrap()], owner[i]);
                }
            }
        }
    }

    #[test]
    fn free_basis_rejected_for_blocks() {
        let spec = ModelSpec::uniform(4, 2).unwrap();
        let b = SectorBasis::enumerate(4, 2, 0, false).unwrap();
        assert_eq!(decompose_blocks(&b, &spec), Err(BasisError::NotHardCore));
    }
}
