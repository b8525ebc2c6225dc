use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::{
    lowest_sector, optimal_flux, perron_frobenius_flux, AnalysisError, Check, VerificationReport,
};
use crate::basis::{decompose_blocks, Sector, SectorBasis, SpinWord};
use crate::model::{angle_distance, Interaction, ModelSpec};
use crate::operators::{
    build_hamiltonian, build_total_spin, solve_sign_gauge, DiagonalGauge,
    SparseHermitian,
};
use crate::spectra::{
    degeneracy_threshold, ground, lowest_sum, spin_from_s2, GroundInfo, GroundOptions, Solver,
    ENERGY_DENSE_LIMIT,
};

const ENERGY_TOL: f64 = 1e-10;

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    dot(a, a).re.sqrt()
}

fn residual(h: &SparseHermitian, v: &[Complex64], e: f64) -> f64 {
    let hv = h.apply(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Ground manifold of one sector with its spin content resolved.
pub fn ground_manifold_spins(spec: &ModelSpec, sector: Sector) -> Result<GroundInfo, AnalysisError> {
    let basis = SectorBasis::for_model(spec, sector)?;
    let h = build_hamiltonian(spec, &basis)?;
    let mut info = ground(&h, &GroundOptions::default())?;
    info.resolve_spin(&build_total_spin(&basis))?;
    Ok(info)
}

/// Basis of the ground manifold diagonalizing `S^2`, as `(S, vector)` pairs
/// with `S` ascending.
fn spin_eigenvectors(
    vectors: &[Vec<Complex64>],
    s2: &SparseHermitian,
) -> Result<Vec<(f64, Vec<Complex64>)>, AnalysisError> {
    let d = vectors.len();
    let images: Vec<Vec<Complex64>> = vectors.iter().map(|v| s2.apply(v)).collect();
    let projected = DMatrix::from_fn(d, d, |a, b| dot(&vectors[a], &images[b]));
    let eig = projected.symmetric_eigen();
    let dim = vectors.first().map_or(0, Vec::len);
    let mut out = Vec::with_capacity(d);
    for k in 0..d {
        let s = spin_from_s2(eig.eigenvalues[k])?;
        let mut v = vec![Complex64::new(0.0, 0.0); dim];
        for (a, basis_vec) in vectors.iter().enumerate() {
            let c = eig.eigenvectors[(a, k)];
            for (vi, bi) in v.iter_mut().zip(basis_vec) {
                *vi += c * bi;
            }
        }
        out.push((s, v));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Every nonempty `S_z` sector of `N` particles on `L` sites.
fn all_sectors(spec: &ModelSpec) -> Vec<Sector> {
    let (l, n) = (spec.sites(), spec.particles());
    let cap = if spec.is_hardcore() { n } else { l };
    (0..=n)
        .filter(|&up| up <= cap && n - up <= cap)
        .map(|up| Sector::new(up, n - up))
        .filter(|s| SectorBasis::new(l, *s, spec.is_hardcore()).is_ok())
        .collect()
}

/// Uniqueness of the ground state up to its spin multiplet, swept over all
/// `S_z` sectors, and its total spin (0 for even `N`, 1/2 for odd `N`).
///
/// The model is examined at its own flux; the optimal flux is recorded for
/// comparison.
pub fn verify_singlet(spec: &ModelSpec) -> Result<VerificationReport, AnalysisError> {
    if spec.is_hardcore() {
        return Err(AnalysisError::HypothesisViolated(
            "uniqueness is claimed for finite U only".into(),
        ));
    }
    let (l, n) = (spec.sites(), spec.particles());
    let mut per_sector = Vec::new();
    for sector in all_sectors(spec) {
        let basis = SectorBasis::for_model(spec, sector)?;
        let h = build_hamiltonian(spec, &basis)?;
        let opts = GroundOptions {
            want_vectors: false,
            ..GroundOptions::default()
        };
        let info = ground(&h, &opts)?;
        per_sector.push((sector, info.energy, info.degeneracy));
    }
    let energy = per_sector
        .iter()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    let thr = degeneracy_threshold(energy);
    let total: usize = per_sector
        .iter()
        .filter(|p| p.1 - energy <= thr)
        .map(|p| p.2)
        .sum();
    let info = ground_manifold_spins(spec, lowest_sector(n))?;
    let spins = info.distinct_spins();
    let expected = if n % 2 == 0 { 0.0 } else { 0.5 };
    let single = info.spin_content.len() == 1 && (info.energy - energy).abs() <= thr;
    let multiplet = single && total as f64 == 2.0 * info.spin_content[0] + 1.0;

    let mut report = VerificationReport::new(
        "singlet-uniqueness",
        format!("L={l} N={n} flux={:.12}", spec.flux()),
    );
    report.observe("energy", energy);
    report.observe("total_degeneracy", total);
    report.observe("sector_degeneracy", info.degeneracy);
    report.observe("spins", &spins);
    report.observe("gap", info.gap);
    if n % 2 == 0 {
        let opt = optimal_flux(l, n);
        report.observe("optimal_flux", opt);
        report.observe("at_optimal_flux", angle_distance(spec.flux(), opt) < 1e-9);
    }
    report.check(Check::condition("unique up to the spin multiplet", multiplet));
    report.check(Check::condition(
        "ground spin",
        spins.len() == 1 && (spins[0] - expected).abs() < 1e-9,
    ));
    Ok(report)
}

/// Spin–flux relation for hard-core particles with even `N < L`.
///
/// With `phi_f` the Perron–Frobenius flux and `phi_s = phi_f + pi` (that is,
/// `pi` and `0` on even rings), checks that the fully polarized spin is
/// absent from the ground manifold of `H(phi_s)` exactly when
/// `F_N(phi_f) < F_N(phi_s)`, that it is indeed absent, and that
/// `E(phi_s) = E(phi_f) = F_N(phi_f)`.
pub fn verify_relation(spec: &ModelSpec) -> Result<VerificationReport, AnalysisError> {
    let (l, n) = (spec.sites(), spec.particles());
    if !spec.is_hardcore() || n % 2 != 0 || n >= l {
        return Err(AnalysisError::HypothesisViolated(format!(
            "need hard-core particles with even N < L, got N={n} on L={l}"
        )));
    }
    let phi_f = perron_frobenius_flux(l, n);
    let phi_s = phi_f + PI;
    let sector = lowest_sector(n);
    let singlet_side = ground_manifold_spins(&spec.with_flux(phi_s), sector)?;
    let ferro_side = ground_manifold_spins(&spec.with_flux(phi_f), sector)?;
    let full_spin = n as f64 / 2.0;
    let lhs = !singlet_side.has_spin(full_spin);
    let f_f = lowest_sum(spec, n, phi_f)?;
    let f_s = lowest_sum(spec, n, phi_s)?;
    let rhs = f_f < f_s - ENERGY_TOL;

    let mut report = VerificationReport::new(
        "spin-flux-relation",
        format!("L={l} N={n} U=inf"),
    );
    report.observe("phi_f", phi_f);
    report.observe("spins_at_phi_s", singlet_side.distinct_spins());
    report.observe("spins_at_phi_f", ferro_side.distinct_spins());
    report.observe("F_N(phi_f)", f_f);
    report.observe("F_N(phi_s)", f_s);
    report.observe("E(phi_s)", singlet_side.energy);
    report.check(Check::condition("biconditional", lhs == rhs));
    report.check(Check::condition("full spin absent at phi_s", lhs));
    report.check(Check::condition(
        "full spin present at phi_f",
        ferro_side.has_spin(full_spin),
    ));
    report.check(Check::residual(
        "E(phi_s) - E(phi_f)",
        (singlet_side.energy - ferro_side.energy).abs(),
        ENERGY_TOL,
    ));
    report.check(Check::residual(
        "E(phi_f) - F_N(phi_f)",
        (ferro_side.energy - f_f).abs(),
        ENERGY_TOL,
    ));
    Ok(report)
}

/// The singlet obtained from the ferromagnetic hard-core ground state by a
/// diagonal gauge transformation.
#[derive(Debug, Clone)]
pub struct SpiralState {
    /// Hard-core `S_z = 0` basis the vectors live on.
    pub basis: SectorBasis,
    /// Fully polarized ground state of `H(phi_f)`.
    pub ferromagnet: Vec<Complex64>,
    /// Gauge with `g H(phi_f) g^{-1} = H(phi_s)`.
    pub gauge: DiagonalGauge,
    /// `g` applied to the ferromagnet.
    pub state: Vec<Complex64>,
    /// Ground energy of `H(phi_s)`.
    pub energy: f64,
    pub phi_f: f64,
    pub phi_s: f64,
}

#[derive(Serialize)]
struct RotationSample {
    word: String,
    ratio: [f64; 2],
}

/// Largest number of blocks for the exhaustive block-sign search.
pub const MAX_SIGN_BLOCKS: usize = 16;

/// Builds the spiral singlet for hard-core `N = 4n + 2 <= L`.
///
/// A gauge `g0` with `g0 H(phi_f) g0^{-1} = H(phi_s)` comes from the
/// spanning-tree solver. It is unique only up to one phase per necklace
/// block; those phases are chosen as signs by exhaustive search so that
/// `g Psi_f` has the smallest `<S^2>`, and the result is then checked.
pub fn spiral_state(spec: &ModelSpec) -> Result<(SpiralState, VerificationReport), AnalysisError> {
    let (l, n) = (spec.sites(), spec.particles());
    if n % 4 != 2 {
        return Err(AnalysisError::NotFourNPlusTwo(n));
    }
    if !spec.is_hardcore() || n > l {
        return Err(AnalysisError::HypothesisViolated(format!(
            "need hard-core particles with N <= L, got N={n} on L={l}"
        )));
    }
    let phi_s = optimal_flux(l, n);
    let phi_f = perron_frobenius_flux(l, n);
    let sector = Sector::balanced(n);
    let basis = SectorBasis::new(l, sector, true)?;
    let s2 = build_total_spin(&basis);
    let h_f = build_hamiltonian(&spec.with_flux(phi_f), &basis)?;
    let h_s = build_hamiltonian(&spec.with_flux(phi_s), &basis)?;
    let g0 = solve_sign_gauge(&h_f, &h_s)?;
    let blocks = decompose_blocks(&basis, spec)?;
    if blocks.len() > MAX_SIGN_BLOCKS {
        return Err(AnalysisError::HypothesisViolated(format!(
            "{} blocks exceed the sign search limit of {MAX_SIGN_BLOCKS}",
            blocks.len()
        )));
    }

    let ferro_info = ground(&h_f, &GroundOptions::default())?;
    let mut ferro = spin_eigenvectors(&ferro_info.vectors, &s2)?
        .pop()
        .filter(|(s, _)| (s - n as f64 / 2.0).abs() < 1e-9)
        .map(|(_, v)| v)
        .ok_or_else(|| {
            AnalysisError::HypothesisViolated("no fully polarized ground state".into())
        })?;
    let pivot = ferro
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let unit = pivot.conj() / pivot.norm();
    ferro.iter_mut().for_each(|z| *z *= unit);

    // <S^2> between the block pieces of g0 Psi_f
    let image = g0.apply(&ferro);
    let pieces: Vec<Vec<Complex64>> = blocks
        .iter()
        .map(|b| {
            let mut v = vec![Complex64::new(0.0, 0.0); basis.dim()];
            for &i in &b.members {
                v[i] = image[i];
            }
            v
        })
        .collect();
    let applied: Vec<Vec<Complex64>> = pieces.iter().map(|v| s2.apply(v)).collect();
    let k = blocks.len();
    let gram = DMatrix::from_fn(k, k, |a, b| dot(&pieces[a], &applied[b]).re);
    let (signs, _) = (0u32..1 << (k - 1))
        .map(|mask| {
            let c: Vec<f64> = (0..k)
                .map(|b| if b > 0 && mask >> (b - 1) & 1 == 1 { -1.0 } else { 1.0 })
                .collect();
            let value: f64 = (0..k)
                .flat_map(|a| (0..k).map(move |b| (a, b)))
                .map(|(a, b)| c[a] * gram[(a, b)] * c[b])
                .sum();
            (c, value)
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one block");
    let mut phases = g0.phases().to_vec();
    for (b, block) in blocks.iter().enumerate() {
        for &i in &block.members {
            phases[i] *= signs[b];
        }
    }
    let gauge = DiagonalGauge::new(phases);
    let state = gauge.apply(&ferro);

    let energy = ground(
        &h_s,
        &GroundOptions {
            want_vectors: false,
            ..GroundOptions::default()
        },
    )?
    .energy;
    let conj_residual = gauge
        .conjugate(&h_f)
        .entries()
        .map(|(i, j, v)| (v - h_s.get(i, j)).norm())
        .fold(0.0, f64::max);
    let s2_expect = s2.expectation(&state).re;
    let uniform_words = uniform_over_words(&basis, &ferro);

    let mut alternation = 0.0f64;
    let mut samples = Vec::new();
    for (i, &c) in basis.states().iter().enumerate() {
        let positions = basis.positions(c);
        let word = basis.spin_word(c);
        let rotated = word.rotated(1);
        let j = basis
            .index_of(config_from(&positions, &rotated))
            .expect("rotated word stays in the sector");
        let ratio = gauge.phases()[j] / gauge.phases()[i];
        alternation = alternation.max((ratio + 1.0).norm());
        if samples.len() < 4 && i % 7 == 0 {
            samples.push(RotationSample {
                word: word.to_string(),
                ratio: [ratio.re, ratio.im],
            });
        }
    }

    let mut report = VerificationReport::new("spiral-state", format!("L={l} N={n} U=inf"));
    report.observe("phi_f", phi_f);
    report.observe("phi_s", phi_s);
    report.observe("energy", energy);
    report.observe("gauge_is_real_sign", gauge.is_real_sign(1e-10));
    report.observe(
        "block_signs",
        blocks
            .iter()
            .zip(&signs)
            .map(|(b, s)| (b.representative.to_string(), *s))
            .collect::<Vec<_>>(),
    );
    report.observe("rotation_samples", samples);
    report.check(Check::residual("g H(phi_f) g^-1 - H(phi_s)", conj_residual, ENERGY_TOL));
    report.check(Check::residual(
        "ferromagnet uniform over spin words",
        uniform_words,
        1e-9,
    ));
    report.check(Check::residual("|norm - 1|", (norm(&state) - 1.0).abs(), 1e-12));
    report.check(Check::residual("<S^2>", s2_expect.abs(), 1e-8));
    report.check(Check::residual(
        "energy residual",
        residual(&h_s, &state, energy),
        1e-9,
    ));
    report.check(Check::residual("alternating signs under rotation", alternation, 1e-9));

    Ok((
        SpiralState {
            basis,
            ferromagnet: ferro,
            gauge,
            state,
            energy,
            phi_f,
            phi_s,
        },
        report,
    ))
}

/// Largest spread of `|psi|` among configurations sharing their particle
/// positions.
fn uniform_over_words(basis: &SectorBasis, psi: &[Complex64]) -> f64 {
    let mut by_positions: std::collections::BTreeMap<Vec<usize>, (f64, f64)> = Default::default();
    for (i, &c) in basis.states().iter().enumerate() {
        let m = psi[i].norm();
        let e = by_positions
            .entry(basis.positions(c))
            .or_insert((f64::INFINITY, f64::NEG_INFINITY));
        e.0 = e.0.min(m);
        e.1 = e.1.max(m);
    }
    by_positions.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max)
}

fn config_from(positions: &[usize], word: &SpinWord) -> u64 {
    positions
        .iter()
        .zip(&word.0)
        .fold(0u64, |acc, (&x, &s)| acc | 1u64 << crate::basis::mode(x, s))
}

/// Follows the finite-`U` ground state at `phi_s` as `U` grows: its overlap
/// with the spiral state and its weight inside the hard-core ground
/// manifold. Diagnostic only; the report carries no checks.
pub fn limit_trace(spec: &ModelSpec, couplings: &[f64]) -> Result<VerificationReport, AnalysisError> {
    let (spiral, _) = spiral_state(spec)?;
    let l = spec.sites();
    let sector = spiral.basis.sector();
    let full = SectorBasis::new(l, sector, false)?;
    let embed = |v: &[Complex64]| {
        let mut out = vec![Complex64::new(0.0, 0.0); full.dim()];
        for (k, &c) in spiral.basis.states().iter().enumerate() {
            out[full.index_of(c).expect("hard-core states are free states")] = v[k];
        }
        out
    };
    let embedded = embed(&spiral.state);
    let h_s = build_hamiltonian(&spec.with_flux(spiral.phi_s), &spiral.basis)?;
    let manifold: Vec<Vec<Complex64>> = ground(&h_s, &GroundOptions::default())?
        .vectors
        .iter()
        .map(|v| embed(v))
        .collect();
    let solver = if full.dim() > ENERGY_DENSE_LIMIT {
        Solver::Lanczos
    } else {
        Solver::Dense
    };
    let mut rows = Vec::new();
    for &u in couplings {
        let model = spec
            .with_interaction(Interaction::Finite(vec![u; l]))?
            .with_flux(spiral.phi_s);
        let h = build_hamiltonian(&model, &full)?;
        let info = ground(
            &h,
            &GroundOptions {
                want_vectors: true,
                max_degeneracy: 1,
                solver,
            },
        )?;
        let psi = &info.vectors[0];
        let weight: f64 = manifold.iter().map(|m| dot(m, psi).norm_sqr()).sum();
        rows.push(LimitRow {
            u,
            energy: info.energy,
            spiral_overlap: dot(psi, &embedded).norm(),
            manifold_weight: weight,
        });
    }
    let mut report = VerificationReport::new(
        "spiral-state-limit",
        format!("L={l} N={} U->inf", spec.particles()),
    );
    report.observe("trace", rows);
    report.observe("hardcore_energy", spiral.energy);
    Ok(report)
}

#[derive(Serialize)]
struct LimitRow {
    u: f64,
    energy: f64,
    spiral_overlap: f64,
    manifold_weight: f64,
}
