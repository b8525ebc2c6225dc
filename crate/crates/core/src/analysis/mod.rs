//! Claim-level verifiers built on flux scans of ground energies, partition
//! functions and block spectra.
//!
//! Every verifier returns a [`VerificationReport`] listing the quantities it
//! measured, each with its tolerance; the report passes iff all checks pass.

mod blocks;
mod flux;
mod spin;
mod thermal;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use crate::basis::{BasisError, Sector, SectorBasis};
use crate::model::{angle_distance, fold_angle, ModelError, ModelSpec};
use crate::operators::{FluxFamily, GaugeError, OperatorError};
use crate::spectra::{ground_energy, FluxCurve, Solver, SpectraError};

pub use blocks::{block_curves, verify_block_lemma, BlockCurves};
pub use flux::{verify_doubling, verify_even, verify_odd};
pub use spin::{
    ground_manifold_spins, limit_trace, spiral_state, verify_relation, verify_singlet, SpiralState,
};
pub use thermal::{partition_curve, thermal_scan, ThermalOptions};

/// Default number of grid points of a flux scan.
pub const DEFAULT_GRID: usize = 720;

/// Angular resolution of golden-section refinement.
pub const ARGMIN_TOL: f64 = 1e-8;

/// Two refined extrema closer than this are the same point.
pub const ANGLE_MERGE: f64 = 1e-6;

/// Energy window, relative to `max(1, |E|)`, for global extrema.
pub const VALUE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Gauge(#[from] GaugeError),
    #[error(transparent)]
    Spectra(#[from] SpectraError),
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("particle number {0} is not of the form 4n+2")]
    NotFourNPlusTwo(usize),
    #[error("grid of {0} points is too coarse")]
    GridTooSmall(usize),
    #[error("grid of {grid} points must be a multiple of {step}")]
    GridNotMultiple { grid: usize, step: usize },
}

/// One measured quantity and its verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    /// Passes when `measured <= tolerance`.
    pub fn residual(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            tolerance,
            passed: measured <= tolerance,
        }
    }

    /// A yes/no condition, recorded as measured 0 (holds) or 1 (fails).
    pub fn condition(name: impl Into<String>, holds: bool) -> Self {
        Self {
            name: name.into(),
            measured: if holds { 0.0 } else { 1.0 },
            tolerance: 0.0,
            passed: holds,
        }
    }
}

/// Outcome of a verifier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub claim: String,
    pub instance: String,
    pub checks: Vec<Check>,
    pub observations: BTreeMap<String, Value>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(claim: impl Into<String>, instance: impl Into<String>) -> Self {
        Self {
            claim: claim.into(),
            instance: instance.into(),
            checks: Vec::new(),
            observations: BTreeMap::new(),
            passed: true,
        }
    }

    pub fn check(&mut self, check: Check) {
        self.passed &= check.passed;
        self.checks.push(check);
    }

    pub fn observe(&mut self, key: impl Into<String>, value: impl Serialize) {
        let value = serde_json::to_value(value).unwrap_or(Value::Null);
        self.observations.insert(key.into(), value);
    }

    /// Folds several reports on the same claim into one; check and
    /// observation names are prefixed by the instance they came from.
    pub fn combine(
        claim: impl Into<String>,
        instance: impl Into<String>,
        parts: impl IntoIterator<Item = VerificationReport>,
    ) -> Self {
        let mut out = Self::new(claim, instance);
        for part in parts {
            for c in part.checks {
                out.check(Check {
                    name: format!("{}: {}", part.instance, c.name),
                    ..c
                });
            }
            for (k, v) in part.observations {
                out.observations.insert(format!("{}: {}", part.instance, k), v);
            }
        }
        out
    }

    /// Failing checks, for diagnostics.
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

/// Sector holding the ground state of every spin multiplet: `S_z = 0` or
/// `1/2`.
pub fn lowest_sector(particles: usize) -> Sector {
    Sector::balanced(particles)
}

/// Optimal flux for finite `U` and even `N`: `(N/2 + 1) pi` on even rings,
/// `N pi / 2` on odd ones, folded into `[0, 2pi)`.
pub fn optimal_flux(sites: usize, particles: usize) -> f64 {
    let n = particles as f64;
    if sites % 2 == 0 {
        fold_angle((n / 2.0 + 1.0) * PI)
    } else {
        fold_angle(n * PI / 2.0)
    }
}

/// Flux at which every hard-core hopping matrix element can be made
/// non-positive: `(L + N - 1) pi`.
pub fn perron_frobenius_flux(sites: usize, particles: usize) -> f64 {
    fold_angle(((sites + particles + 1) % 2) as f64 * PI)
}

/// Minimizers of the hard-core ground energy, `phi_PF + 2 pi n / N`, sorted.
pub fn hardcore_optimal_set(sites: usize, particles: usize) -> Vec<f64> {
    let base = perron_frobenius_flux(sites, particles);
    let n = particles.max(1);
    let mut out: Vec<f64> = (0..n)
        .map(|k| fold_angle(base + TAU * k as f64 / n as f64))
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Largest distance from a point of either set to the other set, on the
/// circle. Infinite if exactly one set is empty.
pub fn circular_hausdorff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let one_way = |p: &[f64], q: &[f64]| {
        p.iter()
            .map(|&x| {
                q.iter()
                    .map(|&y| angle_distance(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Ground energy as a function of flux on one sector.
#[derive(Debug, Clone)]
pub struct EnergyFunction {
    family: FluxFamily,
    solver: Solver,
}

impl EnergyFunction {
    pub fn new(spec: &ModelSpec, sector: Sector, solver: Solver) -> Result<Self, AnalysisError> {
        let basis = SectorBasis::for_model(spec, sector)?;
        Ok(Self {
            family: FluxFamily::new(spec, &basis)?,
            solver,
        })
    }

    pub fn dim(&self) -> usize {
        self.family.dim()
    }

    pub fn family(&self) -> &FluxFamily {
        &self.family
    }

    pub fn eval(&self, phi: f64) -> Result<f64, AnalysisError> {
        Ok(ground_energy(&self.family.at(phi), self.solver)?)
    }
}

/// Samples `f` on a uniform grid in parallel; results are in grid order.
pub fn sample_curve<F>(label: &str, grid_size: usize, f: F) -> Result<FluxCurve, AnalysisError>
where
    F: Fn(f64) -> Result<f64, AnalysisError> + Sync,
{
    let grid = FluxCurve::uniform_grid(grid_size);
    let values = grid
        .par_iter()
        .map(|&phi| f(phi))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FluxCurve {
        grid,
        values,
        label: label.to_string(),
    })
}

/// `E_N(phi)` on a uniform grid over `[0, 2pi)`.
pub fn scan_flux(
    spec: &ModelSpec,
    sector: Sector,
    grid_size: usize,
    solver: Solver,
) -> Result<FluxCurve, AnalysisError> {
    if grid_size < 8 {
        return Err(AnalysisError::GridTooSmall(grid_size));
    }
    if sector.particles() == 0 {
        return Ok(FluxCurve::sample("energy", grid_size, |_| 0.0));
    }
    let energy = EnergyFunction::new(spec, sector, solver)?;
    sample_curve("energy", grid_size, |phi| energy.eval(phi))
}

/// Refined global extrema of a sampled curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Extrema {
    /// Sorted positions in `[0, 2pi)`.
    pub points: Vec<f64>,
    pub value: f64,
    /// The sampled curve is constant; `points` is then the whole grid.
    pub degenerate: bool,
}

fn golden_section<F>(mut a: f64, mut b: f64, f: &F) -> Result<(f64, f64), AnalysisError>
where
    F: Fn(f64) -> Result<f64, AnalysisError>,
{
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > ARGMIN_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x, f(x)?))
}

/// One parabolic step through `x - h, x, x + h`. Rounding noise in `f`
/// limits golden-section search to roughly the square root of machine
/// precision on flat minima; the fitted vertex does much better there. The
/// step is kept only when it does not raise `f`, which rejects it at kinks.
fn parabolic_polish<F>(x: f64, fx: f64, f: &F) -> Result<(f64, f64), AnalysisError>
where
    F: Fn(f64) -> Result<f64, AnalysisError>,
{
    const H: f64 = 1e-4;
    let fp = f(x + H)?;
    let fm = f(x - H)?;
    let curvature = fp - 2.0 * fx + fm;
    if curvature <= 0.0 {
        return Ok((x, fx));
    }
    let shift = H * (fm - fp) / (2.0 * curvature);
    if shift.abs() >= H {
        return Ok((x, fx));
    }
    let y = x + shift;
    let fy = f(y)?;
    if fy <= fx + 1e-14 * fx.abs().max(1.0) {
        Ok((y, fy.min(fx)))
    } else {
        Ok((x, fx))
    }
}

/// Refines every circular local minimum of `curve` by golden-section search
/// on `f` and keeps those within [`VALUE_TOL`] of the best one.
pub fn refine_argmin<F>(curve: &FluxCurve, f: F) -> Result<Extrema, AnalysisError>
where
    F: Fn(f64) -> Result<f64, AnalysisError> + Sync,
{
    let n = curve.len();
    let lo = curve.min_value();
    let hi = curve.max_value();
    if hi - lo <= 1e-12 * lo.abs().max(1.0) {
        return Ok(Extrema {
            points: curve.grid.clone(),
            value: lo,
            degenerate: true,
        });
    }
    let v = &curve.values;
    let step = TAU / n as f64;
    let candidates: Vec<usize> = (0..n)
        .filter(|&i| v[i] <= v[(i + n - 1) % n] && v[i] <= v[(i + 1) % n])
        .collect();
    let refined = candidates
        .par_iter()
        .map(|&i| {
            let center = curve.grid[i];
            let (x, fx) = golden_section(center - step, center + step, &f)?;
            let (x, fx) = parabolic_polish(x, fx, &f)?;
            // a kink sitting on the grid point can beat the interior search
            let (x, fx) = if v[i] < fx { (center, v[i]) } else { (x, fx) };
            Ok((fold_angle(x), fx))
        })
        .collect::<Result<Vec<_>, AnalysisError>>()?;
    let best = refined.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let window = VALUE_TOL * best.abs().max(1.0);
    let mut points: Vec<f64> = Vec::new();
    let mut kept: Vec<(f64, f64)> = refined
        .into_iter()
        .filter(|&(_, fx)| fx - best <= window)
        .collect();
    kept.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (x, _) in kept {
        if points.iter().all(|&p| angle_distance(p, x) > ANGLE_MERGE) {
            points.push(x);
        }
    }
    Ok(Extrema {
        points,
        value: best,
        degenerate: false,
    })
}

/// [`refine_argmin`] applied to `-f`.
pub fn refine_argmax<F>(curve: &FluxCurve, f: F) -> Result<Extrema, AnalysisError>
where
    F: Fn(f64) -> Result<f64, AnalysisError> + Sync,
{
    let negated = FluxCurve {
        grid: curve.grid.clone(),
        values: curve.values.iter().map(|v| -v).collect(),
        label: curve.label.clone(),
    };
    let ext = refine_argmin(&negated, |phi| f(phi).map(|v| -v))?;
    Ok(Extrema {
        value: -ext.value,
        ..ext
    })
}

/// Largest deviation between the curve and its shift by `k` grid steps.
pub fn shift_residual(curve: &FluxCurve, k: usize) -> f64 {
    let n = curve.len();
    (0..n)
        .map(|i| (curve.values[i] - curve.values[(i + k) % n]).abs())
        .fold(0.0, f64::max)
}

/// Smallest period `2 pi / m`, `m` dividing the grid size, under which the
/// sampled curve is invariant to within `tol`; `2 pi` when none is.
pub fn detect_period(curve: &FluxCurve, tol: f64) -> f64 {
    let n = curve.len();
    (2..=n)
        .rev()
        .filter(|m| n % m == 0)
        .find(|&m| shift_residual(curve, n / m) <= tol)
        .map_or(TAU, |m| TAU / m as f64)
}
