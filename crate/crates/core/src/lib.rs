//! Microscopic simulation of single-photon scattering from an array of
//! Zeeman-degenerate atoms trapped near a single-mode optical nanofiber.
//!
//! The crate solves the HE11 guided mode of a step-index cylindrical
//! waveguide, builds the electric-field Green's function near the fiber
//! (vacuum + guided pole + paraxial subtraction), assembles the collective
//! self-energy over the single-excitation basis of an `F0 = 1 -> F = 0`
//! atom array, and produces transmission/reflection/loss spectra with a
//! per-channel (Rayleigh same/cross polarization, Raman) decomposition via
//! the resolvent and S-matrix.
//!
//! Internal units: `hbar = c = 1`, `omega0 = 1` (see [`units`]). The
//! normalization bookkeeping shared by mode fields, Green's functions and
//! scattering vertices is documented in [`greens`] ("normalization ledger").
//!
//! Entry points:
//! * [`fiber`]: dispersion relation, mode profiles, normalization;
//! * [`greens`]: Green's-tensor contributions;
//! * [`atomic`]: dipole vectors, arrays, seeded disorder;
//! * [`spectral`]: excitation basis, self-energy, resolvent, spectra;
//! * [`experiments`]: figure-style pipelines and ensemble statistics;
//! * [`config`], [`table`]: run configuration and tabular output.

pub mod atomic;
pub mod config;
pub mod experiments;
pub mod fiber;
pub mod greens;
pub mod numerics;
pub mod selftest;
pub mod spectral;
pub mod table;
pub mod units;

pub use atomic::{build_ordered_array, sample_disordered_array, AtomArray, AtomicTransition};
pub use config::RunConfig;
pub use fiber::{
    check_single_mode, normalize_mode, solve_dispersion, Direction, FiberSpec, GuidedMode,
    Polarization,
};
pub use greens::{total_green, GreenVariant, GreensTensor};
pub use spectral::{
    compute_spectrum, enumerate_basis, ExcitationBasis, ModelOptions, SpectrumResult, Truncation,
};
pub use units::UnitSystem;
