use std::f64::consts::PI;

use num_complex::Complex64;

use super::{
    circular_hausdorff, lowest_sector, optimal_flux, refine_argmax, sample_curve, AnalysisError,
    Check, VerificationReport, ANGLE_MERGE, DEFAULT_GRID,
};
use crate::basis::{Sector, SectorBasis};
use crate::model::ModelSpec;
use crate::operators::FluxFamily;
use crate::spectra::{dense_eigen, full_spectrum, FluxCurve, LogPartition};

/// Inverse temperatures and grid of a thermal scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalOptions {
    pub betas: Vec<f64>,
    pub grid: usize,
    /// Step of the central difference reported next to the exact derivative.
    pub step: f64,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self {
            betas: vec![0.5, 1.0, 2.0],
            grid: DEFAULT_GRID,
            step: 1e-4,
        }
    }
}

const CRITICAL_TOL: f64 = 1e-8;

struct Partition {
    family: FluxFamily,
}

impl Partition {
    fn new(spec: &ModelSpec, sector: Sector) -> Result<Self, AnalysisError> {
        let basis = SectorBasis::for_model(spec, sector)?;
        Ok(Self {
            family: FluxFamily::new(spec, &basis)?,
        })
    }

    fn log_value(&self, phi: f64, beta: f64) -> Result<f64, AnalysisError> {
        let spectrum = full_spectrum(&self.family.at(phi))?;
        Ok(LogPartition::from_spectrum(&spectrum, beta).log_value())
    }

    /// `dP/dphi = -beta Tr(exp(-beta H) dH/dphi)`.
    fn derivative(&self, phi: f64, beta: f64) -> Result<f64, AnalysisError> {
        let (values, vectors) = dense_eigen(&self.family.at(phi))?;
        let dh = self.family.derivative_at(phi);
        let mut acc = 0.0;
        for (k, &e) in values.iter().enumerate() {
            let v: Vec<Complex64> = vectors.column(k).iter().copied().collect();
            acc += (-beta * e).exp() * dh.expectation(&v).re;
        }
        Ok(-beta * acc)
    }
}

/// `log P(phi)` with `P = Tr exp(-beta H(phi))` on one sector.
pub fn partition_curve(
    spec: &ModelSpec,
    sector: Sector,
    beta: f64,
    grid: usize,
) -> Result<FluxCurve, AnalysisError> {
    let p = Partition::new(spec, sector)?;
    sample_curve("log_partition", grid, |phi| p.log_value(phi, beta))
}

/// Partition-function scan on the lowest `S_z` sector.
///
/// Odd half-filled free rings: `dP/dphi` must vanish at `pi/2` and `3pi/2`.
/// Even `N` with finite `U`: the maximizer of `P` must be the optimal flux
/// of the ground state at every `beta`. Other models are scanned and
/// recorded without checks.
pub fn thermal_scan(
    spec: &ModelSpec,
    opts: &ThermalOptions,
) -> Result<VerificationReport, AnalysisError> {
    let (l, n) = (spec.sites(), spec.particles());
    let sector = lowest_sector(n);
    let p = Partition::new(spec, sector)?;
    let odd_free = n == l && n % 2 == 1 && !spec.has_potential() && spec.is_noninteracting();
    let even = n % 2 == 0 && n > 0 && !spec.is_hardcore();

    let mut report = VerificationReport::new("thermal-critical-points", format!("L={l} N={n}"));
    for &beta in &opts.betas {
        let curve = sample_curve("log_partition", opts.grid, |phi| p.log_value(phi, beta))?;
        let max = refine_argmax(&curve, |phi| p.log_value(phi, beta))?;
        report.observe(format!("beta={beta}: argmax"), &max.points);
        report.observe(format!("beta={beta}: max log P"), max.value);
        if odd_free {
            for phi in [PI / 2.0, 1.5 * PI] {
                let exact = p.derivative(phi, beta)?;
                let h = opts.step;
                let plus = p.log_value(phi + h, beta)?.exp();
                let minus = p.log_value(phi - h, beta)?.exp();
                let label = format!("beta={beta}: dP/dphi at {:.6}", phi);
                report.observe(format!("{label} (central difference)"), (plus - minus) / (2.0 * h));
                report.check(Check::residual(label, exact.abs(), CRITICAL_TOL));
            }
        }
        if even {
            let want = [optimal_flux(l, n)];
            report.check(Check::residual(
                format!("beta={beta}: argmax distance"),
                circular_hausdorff(&max.points, &want),
                ANGLE_MERGE,
            ));
        }
    }
    Ok(report)
}
