//! Spin-resonance modeling and fitting toolkit for the negatively charged
//! boron vacancy in hexagonal boron nitride.
//!
//! The crate covers the full chain from a spin Hamiltonian to publishable
//! numbers: transition lines (exact and secular), Lorentzian ODMR spectra,
//! phonon-driven thermal shifts of the resonance parameters, two-phonon
//! relaxation rates, magnetometry / thermometry sensitivities, and nuclear
//! polarization extracted from hyperfine line amplitudes.
//!
//! Frequencies are in MHz, magnetic fields in Gauss, energies in meV,
//! temperatures in Kelvin, and times in ms unless a name says otherwise.
//!
//! Entry points:
//! - [`spin`]: operators, Hamiltonians, transition lines.
//! - [`lineshape`]: multi-Lorentzian ODMR model and synthetic spectra.
//! - [`fit`]: Levenberg-Marquardt engine plus the domain fits.
//! - [`phonon`]: Bose occupations, mode sums, mode tables.
//! - [`sensitivity`]: magnetic and thermal sensitivity figures.
//! - [`polarization`]: binomial amplitude weights and polarization recovery.
//! - [`data`] / [`pipeline`] / [`report`]: CSV input, batch runs, outputs.
//!
//! The `vb-odmr` binary exposes the same functionality as subcommands; the
//! `examples/` directory has one runnable walkthrough per capability.

pub mod cli;
pub mod constants;
pub mod data;
mod error;
pub mod fit;
pub mod lineshape;
pub mod linalg;
pub mod phonon;
pub mod pipeline;
pub mod polarization;
pub mod report;
pub mod sensitivity;
pub mod spin;
pub mod svg;
pub mod synth;
mod util;

pub use error::{Error, Result};
