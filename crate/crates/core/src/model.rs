//! Ring geometry, hoppings with Peierls phases, potentials and the on-site
//! interaction.
//!
//! Sites are indexed `0..L` in code; bond `x` joins site `x` to site
//! `(x + 1) % L`. Its amplitude is `|t_x| e^{i theta_x}` and multiplies
//! `c†_{x+1} c_x`. Only the total flux `sum theta_x mod 2pi` is a gauge
//! invariant.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

/// Tolerance used for angle comparisons modulo `2pi`.
pub const ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("hopping magnitude on bond {bond} must be strictly positive and finite, got {value}")]
    ZeroHopping { bond: usize, value: f64 },
    #[error("`{field}` has length {found}, expected {expected}")]
    BadLength {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("hard-core constraint admits at most {sites} particles, got {particles}")]
    HardCoreOverfill { sites: usize, particles: usize },
    #[error("ring needs at least 3 sites, got {0}")]
    RingTooSmall(usize),
    #[error("{particles} particles do not fit on {sites} sites with two spin states")]
    TooManyParticles { sites: usize, particles: usize },
    #[error("non-finite value in `{0}`")]
    NonFinite(&'static str),
    #[error("finite and infinite on-site interactions cannot be mixed")]
    MixedInteraction,
    #[error("gauge phases sum to {found}, but the model flux is {expected}")]
    FluxMismatch { expected: f64, found: f64 },
    #[error("operation requires {0} to vanish")]
    NotFree(&'static str),
    #[error("malformed model file: {0}")]
    Parse(String),
}

/// Folds an angle into `[0, 2pi)`.
pub fn fold_angle(angle: f64) -> f64 {
    let folded = angle.rem_euclid(TAU);
    // rem_euclid can return TAU itself for tiny negative inputs
    if folded >= TAU {
        0.0
    } else {
        folded
    }
}

/// Distance between two angles on the circle, in `[0, pi]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = fold_angle(a - b);
    d.min(TAU - d)
}

/// One bond of the ring.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bond {
    #[serde(rename = "mag")]
    pub magnitude: f64,
    #[serde(rename = "theta")]
    pub phase: f64,
}

impl Bond {
    pub fn new(magnitude: f64, phase: f64) -> Self {
        Self { magnitude, phase }
    }

    pub fn amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// On-site interaction: site-resolved finite `U(x)` or the hard-core limit.
#[derive(Debug, Clone, PartialEq)]
pub enum Interaction {
    Finite(Vec<f64>),
    HardCore,
}

/// A validated Hubbard ring. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    particles: usize,
    bonds: Vec<Bond>,
    potential: Vec<f64>,
    interaction: Interaction,
}

/// Redistributed bond phases with a prescribed sum.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeAssignment {
    phases: Vec<f64>,
}

impl GaugeAssignment {
    pub fn new(phases: Vec<f64>) -> Self {
        Self { phases }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn flux(&self) -> f64 {
        fold_angle(self.phases.iter().sum())
    }
}

impl ModelSpec {
    /// Validates raw model data and folds every phase into `[0, 2pi)`.
    pub fn new(
        particles: usize,
        bonds: Vec<Bond>,
        potential: Vec<f64>,
        interaction: Interaction,
    ) -> Result<Self, ModelError> {
        let sites = bonds.len();
        if sites < 3 {
            return Err(ModelError::RingTooSmall(sites));
        }
        if potential.len() != sites {
            return Err(ModelError::BadLength {
                field: "V",
                expected: sites,
                found: potential.len(),
            });
        }
        for (bond, b) in bonds.iter().enumerate() {
            if !b.phase.is_finite() {
                return Err(ModelError::NonFinite("theta"));
            }
            if !(b.magnitude.is_finite() && b.magnitude > 0.0) {
                return Err(ModelError::ZeroHopping {
                    bond,
                    value: b.magnitude,
                });
            }
        }
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite("V"));
        }
        match &interaction {
            Interaction::Finite(u) => {
                if u.len() != sites {
                    return Err(ModelError::BadLength {
                        field: "U",
                        expected: sites,
                        found: u.len(),
                    });
                }
                if u.iter().any(|v| !v.is_finite()) {
                    return Err(ModelError::NonFinite("U"));
                }
                if particles > 2 * sites {
                    return Err(ModelError::TooManyParticles { sites, particles });
                }
            }
            Interaction::HardCore => {
                if particles > sites {
                    return Err(ModelError::HardCoreOverfill { sites, particles });
                }
            }
        }
        let bonds = bonds
            .into_iter()
            .map(|b| Bond::new(b.magnitude, fold_angle(b.phase)))
            .collect();
        Ok(Self {
            particles,
            bonds,
            potential,
            interaction,
        })
    }

    /// Uniform ring: `|t| = 1`, no phases, no potential, `U = 0`.
    pub fn uniform(sites: usize, particles: usize) -> Result<Self, ModelError> {
        Self::new(
            particles,
            vec![Bond::new(1.0, 0.0); sites],
            vec![0.0; sites],
            Interaction::Finite(vec![0.0; sites]),
        )
    }

    /// Ring with the given hopping magnitudes and nothing else.
    pub fn from_magnitudes(magnitudes: &[f64], particles: usize) -> Result<Self, ModelError> {
        let sites = magnitudes.len();
        Self::new(
            particles,
            magnitudes.iter().map(|&m| Bond::new(m, 0.0)).collect(),
            vec![0.0; sites],
            Interaction::Finite(vec![0.0; sites]),
        )
    }

    pub fn sites(&self) -> usize {
        self.bonds.len()
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn interaction(&self) -> &Interaction {
        &self.interaction
    }

    pub fn is_hardcore(&self) -> bool {
        matches!(self.interaction, Interaction::HardCore)
    }

    /// Finite on-site interaction at site `x`; zero in hard-core mode, where
    /// double occupancy is excluded from the basis instead.
    pub fn interaction_at(&self, x: usize) -> f64 {
        match &self.interaction {
            Interaction::Finite(u) => u[x],
            Interaction::HardCore => 0.0,
        }
    }

    pub fn hopping(&self, bond: usize) -> Complex64 {
        self.bonds[bond].amplitude()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bonds.iter().map(|b| b.magnitude).collect()
    }

    pub fn phases(&self) -> Vec<f64> {
        self.bonds.iter().map(|b| b.phase).collect()
    }

    /// Total flux through the ring, in `[0, 2pi)`.
    pub fn flux(&self) -> f64 {
        fold_angle(self.bonds.iter().map(|b| b.phase).sum())
    }

    pub fn has_potential(&self) -> bool {
        self.potential.iter().any(|&v| v != 0.0)
    }

    /// True when `U` is finite and identically zero.
    pub fn is_noninteracting(&self) -> bool {
        match &self.interaction {
            Interaction::Finite(u) => u.iter().all(|&v| v == 0.0),
            Interaction::HardCore => false,
        }
    }

    pub fn with_particles(&self, particles: usize) -> Result<Self, ModelError> {
        Self::new(
            particles,
            self.bonds.clone(),
            self.potential.clone(),
            self.interaction.clone(),
        )
    }

    pub fn with_interaction(&self, interaction: Interaction) -> Result<Self, ModelError> {
        Self::new(
            self.particles,
            self.bonds.clone(),
            self.potential.clone(),
            interaction,
        )
    }

    pub fn with_potential(&self, potential: Vec<f64>) -> Result<Self, ModelError> {
        Self::new(
            self.particles,
            self.bonds.clone(),
            potential,
            self.interaction.clone(),
        )
    }

    pub fn with_magnitudes(&self, magnitudes: &[f64]) -> Result<Self, ModelError> {
        if magnitudes.len() != self.sites() {
            return Err(ModelError::BadLength {
                field: "hop",
                expected: self.sites(),
                found: magnitudes.len(),
            });
        }
        let bonds = self
            .bonds
            .iter()
            .zip(magnitudes)
            .map(|(b, &m)| Bond::new(m, b.phase))
            .collect();
        Self::new(
            self.particles,
            bonds,
            self.potential.clone(),
            self.interaction.clone(),
        )
    }

    /// Same model with the flux replaced by `flux`. The phases of bonds
    /// `0..L-1` are kept and the last bond absorbs the difference.
    pub fn with_flux(&self, flux: f64) -> Self {
        let mut out = self.clone();
        let last = self.sites() - 1;
        let shift = flux - self.flux();
        out.bonds[last].phase = fold_angle(out.bonds[last].phase + shift);
        out
    }

    /// Moves the flux to a different phase assignment with the same sum.
    pub fn regauge(&self, target: &GaugeAssignment) -> Result<Self, ModelError> {
        if target.phases.len() != self.sites() {
            return Err(ModelError::BadLength {
                field: "phases",
                expected: self.sites(),
                found: target.phases.len(),
            });
        }
        let found = target.flux();
        if angle_distance(found, self.flux()) > ANGLE_TOL {
            return Err(ModelError::FluxMismatch {
                expected: self.flux(),
                found,
            });
        }
        let bonds = self
            .bonds
            .iter()
            .zip(&target.phases)
            .map(|(b, &p)| Bond::new(b.magnitude, p))
            .collect();
        Self::new(
            self.particles,
            bonds,
            self.potential.clone(),
            self.interaction.clone(),
        )
    }

    /// All of the flux on the last bond, zero phase elsewhere.
    pub fn canonical_gauge(&self) -> Self {
        let mut out = self.clone();
        let flux = self.flux();
        let last = self.sites() - 1;
        for (x, b) in out.bonds.iter_mut().enumerate() {
            b.phase = if x == last { flux } else { 0.0 };
        }
        out
    }

    /// Repeats the ring `factor` times around a ring of length
    /// `factor * L`; the flux of the result is `factor * flux`.
    ///
    /// Only defined for free models (`V = U = 0`).
    pub fn extend_ring(&self, factor: usize) -> Result<Self, ModelError> {
        if self.has_potential() {
            return Err(ModelError::NotFree("V"));
        }
        if !self.is_noninteracting() {
            return Err(ModelError::NotFree("U"));
        }
        let sites = factor * self.sites();
        let bonds = self.bonds.iter().copied().cycle().take(sites).collect();
        Self::new(
            self.particles * factor,
            bonds,
            vec![0.0; sites],
            Interaction::Finite(vec![0.0; sites]),
        )
    }

    /// Single-species model seen by the down-spin holes after
    /// `c_{x,down} -> c†_{x,down}`: bond amplitudes become `-conj(t_x)` and
    /// a ring filled with `n` down spins maps to one holding `L - n` holes.
    pub fn hole_particle_down(&self) -> Result<Self, ModelError> {
        if self.has_potential() {
            return Err(ModelError::NotFree("V"));
        }
        if !self.is_noninteracting() {
            return Err(ModelError::NotFree("U"));
        }
        let bonds = self
            .bonds
            .iter()
            .map(|b| Bond::new(b.magnitude, PI - b.phase))
            .collect();
        let sites = self.sites();
        Self::new(
            sites.saturating_sub(self.particles.min(sites)),
            bonds,
            vec![0.0; sites],
            Interaction::Finite(vec![0.0; sites]),
        )
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        file.into_spec()
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile::from(self);
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }
}

/// On-disk model layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(rename = "L")]
    pub sites: usize,
    #[serde(rename = "N")]
    pub particles: usize,
    pub hop: Vec<Bond>,
    #[serde(rename = "V")]
    pub potential: Vec<f64>,
    #[serde(rename = "U")]
    pub interaction: Value,
}

fn is_infinity_token(v: &Value) -> bool {
    match v {
        Value::String(s) => matches!(
            s.to_ascii_lowercase().as_str(),
            "inf" | "infinity" | "+inf"
        ),
        _ => false,
    }
}

impl ModelFile {
    pub fn into_spec(self) -> Result<ModelSpec, ModelError> {
        if self.hop.len() != self.sites {
            return Err(ModelError::BadLength {
                field: "hop",
                expected: self.sites,
                found: self.hop.len(),
            });
        }
        let interaction = match &self.interaction {
            v if is_infinity_token(v) => Interaction::HardCore,
            Value::Number(n) => {
                let u = n
                    .as_f64()
                    .ok_or_else(|| ModelError::Parse("U is not a number".into()))?;
                Interaction::Finite(vec![u; self.sites])
            }
            Value::Array(items) => {
                let infinite = items.iter().filter(|v| is_infinity_token(v)).count();
                if infinite == items.len() && !items.is_empty() {
                    Interaction::HardCore
                } else if infinite > 0 {
                    return Err(ModelError::MixedInteraction);
                } else {
                    let values = items
                        .iter()
                        .map(|v| {
                            v.as_f64()
                                .ok_or_else(|| ModelError::Parse(format!("bad U entry {v}")))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Interaction::Finite(values)
                }
            }
            other => return Err(ModelError::Parse(format!("bad U value {other}"))),
        };
        ModelSpec::new(self.particles, self.hop, self.potential, interaction)
    }
}

impl From<&ModelSpec> for ModelFile {
    fn from(spec: &ModelSpec) -> Self {
        let interaction = match &spec.interaction {
            Interaction::HardCore => Value::String("inf".into()),
            Interaction::Finite(u) => serde_json::to_value(u).expect("finite floats"),
        };
        Self {
            sites: spec.sites(),
            particles: spec.particles,
            hop: spec.bonds.clone(),
            potential: spec.potential.clone(),
            interaction,
        }
    }
}
