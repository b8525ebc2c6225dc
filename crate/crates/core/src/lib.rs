//! Exact diagonalization of Hubbard rings threaded by a magnetic flux.
//!
//! A [`model::ModelSpec`] describes the ring. [`basis::SectorBasis`] enumerates
//! one `(N_up, N_down)` sector, [`operators`] builds sparse Hamiltonians and
//! spin operators on it, and [`spectra`] diagonalizes them. [`analysis`]
//! scans the ground energy over the flux and checks where it is minimal and
//! what the spin of the ground state is there.
//!
//! ```
//! use fluxring::analysis::{lowest_sector, scan_flux};
//! use fluxring::fixtures::uniform;
//! use fluxring::spectra::Solver;
//!
//! let curve = scan_flux(&uniform(3, 3)?, lowest_sector(3), 24, Solver::Auto)?;
//! assert_eq!(curve.len(), 24);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```
//!
//! The guide in `book/` covers each module with runnable examples.

pub mod basis;
pub mod model;
pub mod operators;
pub mod spectra;
pub mod analysis;
pub mod fixtures;

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/models.md")]
mod book_models {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/sectors.md")]
mod book_sectors {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/operators.md")]
mod book_operators {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/spectra.md")]
mod book_spectra {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/flux.md")]
mod book_flux {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/spin.md")]
mod book_spin {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/blocks.md")]
mod book_blocks {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/thermal.md")]
mod book_thermal {}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
