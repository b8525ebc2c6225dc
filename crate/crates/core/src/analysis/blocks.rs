use std::f64::consts::TAU;

use rayon::prelude::*;

use super::{perron_frobenius_flux, AnalysisError, Check, VerificationReport};
use crate::basis::{decompose_blocks, NecklaceBlock, Sector, SectorBasis};
use crate::model::ModelSpec;
use crate::operators::FluxFamily;
use crate::spectra::{ground_energy, FluxCurve, Solver};

const BLOCK_TOL: f64 = 1e-10;

/// Lowest energy of every hard-core block, sampled over flux.
#[derive(Debug, Clone)]
pub struct BlockCurves {
    pub blocks: Vec<NecklaceBlock>,
    /// One curve per block, in block order.
    pub curves: Vec<FluxCurve>,
}

struct BlockFamily {
    family: FluxFamily,
    blocks: Vec<NecklaceBlock>,
}

impl BlockFamily {
    fn new(spec: &ModelSpec) -> Result<Self, AnalysisError> {
        if !spec.is_hardcore() {
            return Err(AnalysisError::HypothesisViolated(
                "blocks are defined for hard-core particles".into(),
            ));
        }
        let basis = SectorBasis::new(spec.sites(), Sector::balanced(spec.particles()), true)?;
        Ok(Self {
            family: FluxFamily::new(spec, &basis)?,
            blocks: decompose_blocks(&basis, spec)?,
        })
    }

    fn energies(&self, phi: f64) -> Result<Vec<f64>, AnalysisError> {
        let h = self.family.at(phi);
        self.blocks
            .iter()
            .map(|b| Ok(ground_energy(&h.restrict(&b.members), Solver::Auto)?))
            .collect()
    }

    fn energy(&self, block: usize, phi: f64) -> Result<f64, AnalysisError> {
        let h = self.family.at(phi).restrict(&self.blocks[block].members);
        Ok(ground_energy(&h, Solver::Auto)?)
    }
}

/// Per-block lowest energies of the hard-core `S_z` balanced sector on a
/// uniform grid.
pub fn block_curves(spec: &ModelSpec, grid: usize) -> Result<BlockCurves, AnalysisError> {
    let fam = BlockFamily::new(spec)?;
    let points = FluxCurve::uniform_grid(grid);
    let rows = points
        .par_iter()
        .map(|&phi| fam.energies(phi))
        .collect::<Result<Vec<_>, _>>()?;
    let curves = (0..fam.blocks.len())
        .map(|b| FluxCurve {
            grid: points.clone(),
            values: rows.iter().map(|r| r[b]).collect(),
            label: format!("block {b}"),
        })
        .collect();
    Ok(BlockCurves {
        blocks: fam.blocks,
        curves,
    })
}

/// Checks that the minimum over blocks is attained on a block of period `N`
/// at every grid point and that each block of period `p` is periodic in the
/// flux with period `2 pi / p`.
///
/// On even rings with even `N` also checks that all blocks share their
/// lowest energy at the Perron–Frobenius flux and that each block is
/// minimized there.
pub fn verify_block_lemma(spec: &ModelSpec, grid: usize) -> Result<VerificationReport, AnalysisError> {
    let (l, n) = (spec.sites(), spec.particles());
    let fam = BlockFamily::new(spec)?;
    let curves = block_curves(spec, grid)?;
    let full: Vec<usize> = (0..fam.blocks.len())
        .filter(|&b| fam.blocks[b].period == n)
        .collect();

    let mut lemma = 0.0f64;
    for k in 0..grid {
        let all = curves
            .curves
            .iter()
            .map(|c| c.values[k])
            .fold(f64::INFINITY, f64::min);
        let best_full = full
            .iter()
            .map(|&b| curves.curves[b].values[k])
            .fold(f64::INFINITY, f64::min);
        lemma = lemma.max(best_full - all);
    }

    let periods = (0..fam.blocks.len())
        .into_par_iter()
        .map(|b| {
            let shift = TAU / fam.blocks[b].period as f64;
            let curve = &curves.curves[b];
            curve
                .grid
                .iter()
                .zip(&curve.values)
                .map(|(&phi, &e)| Ok((fam.energy(b, phi + shift)? - e).abs()))
                .try_fold(0.0f64, |acc, r: Result<f64, AnalysisError>| Ok(acc.max(r?)))
        })
        .collect::<Result<Vec<f64>, AnalysisError>>()?;

    let mut report = VerificationReport::new("block-lemma", format!("L={l} N={n} U=inf"));
    report.observe(
        "blocks",
        fam.blocks
            .iter()
            .map(|b| (b.period, b.dim(), b.representative.to_string()))
            .collect::<Vec<_>>(),
    );
    report.check(Check::condition("a block of period N exists", !full.is_empty()));
    report.check(Check::residual(
        "period-N block minimal at every grid point",
        lemma,
        BLOCK_TOL,
    ));
    report.check(Check::residual(
        "per-block period 2pi/p",
        periods.iter().copied().fold(0.0, f64::max),
        BLOCK_TOL,
    ));

    if l % 2 == 0 && n % 2 == 0 {
        let phi_pf = perron_frobenius_flux(l, n);
        let at_pf = fam.energies(phi_pf)?;
        let spread = at_pf.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - at_pf.iter().copied().fold(f64::INFINITY, f64::min);
        let mut above = 0.0f64;
        for (b, curve) in curves.curves.iter().enumerate() {
            for &e in &curve.values {
                above = above.max(at_pf[b] - e);
            }
        }
        report.observe("block_energies_at_pf", &at_pf);
        report.check(Check::residual("block energies agree at phi_PF", spread, BLOCK_TOL));
        report.check(Check::residual("each block minimal at phi_PF", above, BLOCK_TOL));
    }
    Ok(report)
}
