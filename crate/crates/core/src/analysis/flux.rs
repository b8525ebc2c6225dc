use std::f64::consts::PI;

use num_complex::Complex64;

use super::{
    circular_hausdorff, hardcore_optimal_set, lowest_sector, optimal_flux, refine_argmin,
    scan_flux, shift_residual, detect_period, AnalysisError, Check, EnergyFunction,
    VerificationReport, ANGLE_MERGE,
};
use crate::model::{GaugeAssignment, ModelSpec};
use crate::operators::build_one_particle;
use crate::spectra::{lowest_sum, one_particle_levels, FluxCurve, Solver};

/// Tolerance on exact identities between energies.
const IDENTITY_TOL: f64 = 1e-10;

fn describe(spec: &ModelSpec) -> String {
    let u = if spec.is_hardcore() {
        "inf".to_string()
    } else {
        let u = spec.interaction_at(0);
        if (0..spec.sites()).all(|x| spec.interaction_at(x) == u) {
            format!("{u}")
        } else {
            "site-dependent".to_string()
        }
    };
    format!("L={} N={} U={}", spec.sites(), spec.particles(), u)
}

/// Checks the optimal flux of an even number of particles.
///
/// For finite `U` the refined minimizer must be `(N/2 + 1) pi` (even `L`)
/// or `N pi / 2` (odd `L`). For hard-core particles the minimizers must be
/// exactly `phi_PF + 2 pi n / N` and the curve must have period `2 pi / N`.
pub fn verify_even(spec: &ModelSpec, grid: usize) -> Result<VerificationReport, AnalysisError> {
    let (l, n) = (spec.sites(), spec.particles());
    if n == 0 || n % 2 != 0 || n > l {
        return Err(AnalysisError::HypothesisViolated(format!(
            "need an even particle number 0 < N <= L, got N={n} on L={l}"
        )));
    }
    let sector = lowest_sector(n);
    let energy = EnergyFunction::new(spec, sector, Solver::Auto)?;
    let curve = scan_flux(spec, sector, grid, Solver::Auto)?;
    let ext = refine_argmin(&curve, |phi| energy.eval(phi))?;

    let mut report = VerificationReport::new("even-optimal-flux", describe(spec));
    report.observe("argmin", &ext.points);
    report.observe("min_energy", ext.value);
    let expected = if spec.is_hardcore() {
        hardcore_optimal_set(l, n)
    } else {
        vec![optimal_flux(l, n)]
    };
    report.observe("expected_argmin", &expected);
    report.check(Check::residual(
        "argmin distance",
        circular_hausdorff(&ext.points, &expected),
        ANGLE_MERGE,
    ));
    if spec.is_hardcore() {
        report.check(Check::condition(
            "grid divisible by N",
            grid % n == 0,
        ));
        if grid % n == 0 {
            report.check(Check::residual(
                "period 2pi/N residual",
                shift_residual(&curve, grid / n),
                IDENTITY_TOL,
            ));
        }
        let values = expected
            .iter()
            .map(|&phi| energy.eval(phi))
            .collect::<Result<Vec<_>, _>>()?;
        let spread = values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - values.iter().copied().fold(f64::INFINITY, f64::min);
        report.check(Check::residual("minimum value spread", spread, IDENTITY_TOL));
        report.observe("detected_period", detect_period(&curve, IDENTITY_TOL));
    }
    Ok(report)
}

/// Checks an odd, half-filled, free ring: period `pi`, minimizers
/// `{pi/2, 3pi/2}`, and the reduction `E_N = F_n + F_{n+1}` with
/// `F_{n+1}(phi) = F_n(phi + pi)`.
///
/// Refuses models with a potential or an interaction: there the statement
/// is false in general.
pub fn verify_odd(spec: &ModelSpec, grid: usize) -> Result<VerificationReport, AnalysisError> {
    let (l, n_tot) = (spec.sites(), spec.particles());
    if n_tot != l || l % 2 == 0 {
        return Err(AnalysisError::HypothesisViolated(format!(
            "need N = L odd, got N={n_tot} on L={l}"
        )));
    }
    if spec.has_potential() {
        return Err(AnalysisError::HypothesisViolated(
            "V must vanish; a potential can move the optimal flux".into(),
        ));
    }
    if !spec.is_noninteracting() {
        return Err(AnalysisError::HypothesisViolated("U must vanish".into()));
    }
    if grid % 4 != 0 {
        return Err(AnalysisError::GridNotMultiple { grid, step: 4 });
    }
    let n = (n_tot - 1) / 2;
    let sector = lowest_sector(n_tot);
    let energy = EnergyFunction::new(spec, sector, Solver::Auto)?;
    let curve = scan_flux(spec, sector, grid, Solver::Auto)?;
    let ext = refine_argmin(&curve, |phi| energy.eval(phi))?;

    let mut report = VerificationReport::new("odd-half-filling", describe(spec));
    report.observe("argmin", &ext.points);
    report.observe("min_energy", ext.value);
    report.observe("energy_at_half_pi", energy.eval(PI / 2.0)?);
    report.observe("detected_period", detect_period(&curve, IDENTITY_TOL));
    report.check(Check::residual(
        "period pi residual",
        shift_residual(&curve, grid / 2),
        IDENTITY_TOL,
    ));
    report.check(Check::residual(
        "argmin distance",
        circular_hausdorff(&ext.points, &[PI / 2.0, 1.5 * PI]),
        ANGLE_MERGE,
    ));

    let mut slater = 0.0f64;
    let mut shift = 0.0f64;
    let mut holes = 0.0f64;
    for (&phi, &e) in curve.grid.iter().zip(&curve.values) {
        let f_n = lowest_sum(spec, n, phi)?;
        let f_n1 = lowest_sum(spec, n + 1, phi)?;
        let f_n_shift = lowest_sum(spec, n, phi + PI)?;
        slater = slater.max((e - f_n - f_n1).abs());
        shift = shift.max((f_n1 - f_n_shift).abs());
        // n down spins leave L - n holes; V = 0 makes their level sum equal F_n
        let hp = spec.with_flux(phi).hole_particle_down()?;
        let hole_levels = one_particle_levels(&hp);
        let hole_sum: f64 = hole_levels[..l - n].iter().sum();
        holes = holes.max((f_n - hole_sum).abs());
    }
    report.check(Check::residual("E_N - F_n - F_(n+1)", slater, IDENTITY_TOL));
    report.check(Check::residual("F_(n+1)(phi) - F_n(phi+pi)", shift, IDENTITY_TOL));
    report.check(Check::residual("hole-particle sum", holes, IDENTITY_TOL));
    Ok(report)
}

/// `F_n(phi) + F_n(phi + pi) = F_{2n}(2 phi)` on the doubled ring, for every
/// `n` and every grid point, plus the explicit doubled eigenvectors.
pub fn verify_doubling(spec: &ModelSpec, grid: usize) -> Result<VerificationReport, AnalysisError> {
    if spec.has_potential() || !spec.is_noninteracting() {
        return Err(AnalysisError::HypothesisViolated(
            "the doubling identity needs V = U = 0".into(),
        ));
    }
    let l = spec.sites();
    let doubled = spec.extend_ring(2)?;
    let mut sums = 0.0f64;
    let mut vectors = 0.0f64;
    for &phi in &FluxCurve::uniform_grid(grid) {
        let lo = one_particle_levels(&spec.with_flux(phi));
        let hi = one_particle_levels(&spec.with_flux(phi + PI));
        let ext = one_particle_levels(&doubled.with_flux(2.0 * phi));
        for n in 0..=l {
            let lhs: f64 = lo[..n].iter().sum::<f64>() + hi[..n].iter().sum::<f64>();
            let rhs: f64 = ext[..2 * n].iter().sum();
            sums = sums.max((lhs - rhs).abs());
        }
        vectors = vectors.max(doubled_vector_residual(spec, &doubled, phi)?);
    }
    let mut report = VerificationReport::new("doubling-identity", describe(spec));
    report.observe("grid", grid);
    report.check(Check::residual("level-sum residual", sums, IDENTITY_TOL));
    report.check(Check::residual("doubled eigenvector residual", vectors, IDENTITY_TOL));
    Ok(report)
}

/// Largest `|h^ psi^ - e psi^|` over the eigenvectors `psi` of `h(phi)` in
/// the gauge with all phase on the last bond, where `psi^ = (psi, e^{i phi}
/// psi)` and `h^` carries the whole flux `2 phi` on the bond joining the
/// two copies.
fn doubled_vector_residual(
    spec: &ModelSpec,
    doubled: &ModelSpec,
    phi: f64,
) -> Result<f64, AnalysisError> {
    let l = spec.sites();
    let h = build_one_particle(&spec.with_flux(phi).canonical_gauge());
    let mut phases = vec![0.0; 2 * l];
    phases[l - 1] = 2.0 * phi;
    let h_ext = build_one_particle(&doubled.with_flux(2.0 * phi).regauge(&GaugeAssignment::new(phases))?);
    let eig = h.symmetric_eigen();
    let twist = Complex64::from_polar(1.0, phi);
    let mut worst = 0.0f64;
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        let psi = eig.eigenvectors.column(k);
        let ext = nalgebra::DVector::from_fn(2 * l, |x, _| {
            if x < l {
                psi[x]
            } else {
                twist * psi[x - l]
            }
        });
        let r = (&h_ext * &ext - &ext * Complex64::new(e, 0.0)).norm();
        worst = worst.max(r);
    }
    Ok(worst)
}
