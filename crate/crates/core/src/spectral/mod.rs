//! Collective single-excitation spectral machinery: basis enumeration,
//! self-energy assembly, resolvent solves and T/R/L spectra.

pub mod basis;
pub mod scattering;
pub mod self_energy;

pub use basis::{
    basis_dimension, enumerate_basis, enumerate_basis_with_cap, BasisError, BasisState,
    ExcitationBasis, Truncation, DEFAULT_DIMENSION_CAP,
};
pub use scattering::{
    absorption_source, compute_spectrum, detuning_grid, emission_contraction,
    factorize_resolvent, resolvent_solve, s_matrix_element, t_matrix_element, IncidentChannel,
    ModelOptions, ResolventContext, ScatteringChannel, ScatteringError, SpectrumPoint,
    SpectrumResult,
};
pub use self_energy::{
    assemble_self_energy, gamma_ext, gamma_total, gamma_wg, pair_self_energy,
    single_atom_self_energy, SelfEnergyError, SelfEnergyMatrix,
};
