//! Scattering channels, the projected resolvent, T/S-matrix elements and
//! the transmission/reflection/loss spectrum with channel decomposition.
//!
//! Everything is per-unit-length normalized; the quantization length never
//! appears. Under the default pole approximation the self-energy, the
//! vertex amplitudes, the `4 pi^2 hbar omega` prefactor, the dispersion
//! phases and the group velocity are all evaluated once at `omega0`, and
//! the frequency scan enters only through the resolvent energy denominator.
//! That joint freezing keeps the guided-only S-matrix exactly unitary at
//! every scan point. With `sigma_at_scan_freq` the whole chain is instead
//! re-evaluated consistently at each scan frequency.

use std::collections::BTreeSet;

use nalgebra::DVector;
#[cfg(test)]
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::{AtomArray, SUBLEVELS};
use crate::fiber::{
    mode_field_cartesian, normalize_mode, Direction, FiberError, GuidedMode, Polarization,
};
use crate::greens::GreenVariant;
use crate::spectral::basis::{enumerate_basis_with_cap, BasisError, ExcitationBasis, Truncation,
    DEFAULT_DIMENSION_CAP};
use crate::spectral::self_energy::{assemble_self_energy, SelfEnergyError, SelfEnergyMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScatteringError {
    #[error("resolvent matrix is singular at this energy")]
    SingularMatrix,
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error(transparent)]
    SelfEnergy(#[from] SelfEnergyError),
    #[error(transparent)]
    Fiber(#[from] FiberError),
}

/// One outgoing guided channel: polarization, propagation direction and the
/// final ground-state Zeeman configuration of every atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScatteringChannel {
    pub sigma_out: Polarization,
    pub direction: Direction,
    pub final_config: Vec<i8>,
}

/// Incident guided channel: polarization and the initial ground
/// configuration; forward-propagating by convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IncidentChannel {
    pub sigma_in: Polarization,
    pub config: Vec<i8>,
}

impl IncidentChannel {
    /// The paper's initial condition: left-hand polarized mode, all atoms
    /// spin-oriented in `M0 = +1`.
    pub fn standard(n: usize) -> Self {
        Self {
            sigma_in: Polarization::SigmaMinus,
            config: vec![1; n],
        }
    }
}

/// LU factorization of `(E - hbar omega0 - Sigma)` at one scan energy,
/// reused across source vectors.
pub struct ResolventContext {
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Factorize the resolvent at detuning energy `e_minus_resonance = E - hbar
/// omega0` (passing the difference directly avoids the catastrophic
/// cancellation of forming `E - 1` at detunings of order `1e-7`).
pub fn factorize_resolvent(
    sigma: &SelfEnergyMatrix,
    e_minus_resonance: f64,
) -> Result<ResolventContext, ScatteringError> {
    let dim = sigma.dim();
    let mut m = -sigma.matrix.clone();
    for i in 0..dim {
        m[(i, i)] += C64::new(e_minus_resonance, 0.0);
    }
    let lu = m.lu();
    if lu.u().diagonal().iter().any(|d| d.norm() == 0.0) {
        return Err(ScatteringError::SingularMatrix);
    }
    Ok(ResolventContext { lu })
}

impl ResolventContext {
    pub fn solve(&self, source: &DVector<C64>) -> Result<DVector<C64>, ScatteringError> {
        self.lu
            .solve(source)
            .ok_or(ScatteringError::SingularMatrix)
    }
}

/// Solve `(E - hbar omega0 - Sigma) x = source` by dense LU with partial
/// pivoting.
pub fn resolvent_solve(
    sigma: &SelfEnergyMatrix,
    e_minus_resonance: f64,
    source: &DVector<C64>,
) -> Result<DVector<C64>, ScatteringError> {
    factorize_resolvent(sigma, e_minus_resonance)?.solve(source)
}

/// Absorption source vector: `(d(m_a) . E^(in)(r_a))` on every basis state
/// reachable by exciting one atom of the incident ground configuration.
pub fn absorption_source(
    basis: &ExcitationBasis,
    array: &AtomArray,
    mode: &GuidedMode,
    input: &IncidentChannel,
) -> Result<DVector<C64>, ScatteringError> {
    let mut src = DVector::from_element(basis.len(), C64::new(0.0, 0.0));
    for a in 0..array.len() {
        if let Some(i) = basis.position_for(a, &input.config) {
            let p = &array.positions[a];
            let field =
                mode_field_cartesian(mode, input.sigma_in, Direction::Forward, p.rho, p.phi, p.z)?;
            src[i] = array.transition.dipole_vector(input.config[a]).dot(&field);
        }
    }
    Ok(src)
}

/// Emission contraction of a resolvent solution with one outgoing channel:
/// `sum_b conj(d(M'_b) . E^(out)(r_b)) x[(b, M' minus b)]`.
pub fn emission_contraction(
    basis: &ExcitationBasis,
    array: &AtomArray,
    mode: &GuidedMode,
    channel: &ScatteringChannel,
    x: &DVector<C64>,
) -> Result<C64, ScatteringError> {
    let mut amp = C64::new(0.0, 0.0);
    for b in 0..array.len() {
        if let Some(i) = basis.position_for(b, &channel.final_config) {
            let p = &array.positions[b];
            let field = mode_field_cartesian(
                mode,
                channel.sigma_out,
                channel.direction,
                p.rho,
                p.phi,
                p.z,
            )?;
            let em = array
                .transition
                .dipole_vector(channel.final_config[b])
                .dot(&field)
                .conj();
            amp += em * x[i];
        }
    }
    Ok(amp)
}

/// Per-unit-length T-matrix element at scan frequency `omega`:
/// `4 pi^2 hbar omega` times the emission contraction of the resolved
/// source. The resolvent must already be factorized at the matching energy.
pub fn t_matrix_element(
    basis: &ExcitationBasis,
    array: &AtomArray,
    mode: &GuidedMode,
    channel_out: &ScatteringChannel,
    channel_in: &IncidentChannel,
    omega: f64,
    ctx: &ResolventContext,
) -> Result<C64, ScatteringError> {
    let src = absorption_source(basis, array, mode, channel_in)?;
    let x = ctx.solve(&src)?;
    let contraction = emission_contraction(basis, array, mode, channel_out, &x)?;
    Ok(C64::new(4.0 * std::f64::consts::PI.powi(2) * omega, 0.0) * contraction)
}

/// S-matrix element `S = delta - (i / hbar v_g) T`; the quantization length
/// cancels identically and never appears.
pub fn s_matrix_element(
    basis: &ExcitationBasis,
    array: &AtomArray,
    mode: &GuidedMode,
    channel_out: &ScatteringChannel,
    channel_in: &IncidentChannel,
    omega: f64,
    ctx: &ResolventContext,
) -> Result<C64, ScatteringError> {
    let t = t_matrix_element(basis, array, mode, channel_out, channel_in, omega, ctx)?;
    let delta = channel_out.direction == Direction::Forward
        && channel_out.sigma_out == channel_in.sigma_in
        && channel_out.final_config == channel_in.config;
    let mut s = C64::new(0.0, -1.0 / mode.group_velocity()) * t;
    if delta {
        s += C64::new(1.0, 0.0);
    }
    Ok(s)
}

/// Channel class of the breakdown: elastic with preserved or flipped
/// polarization, or any final configuration different from the initial one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChannelClass {
    RayleighSame,
    RayleighCross,
    Raman,
}

/// Model options of a spectrum run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelOptions {
    pub green: GreenVariant,
    pub truncation: Truncation,
    /// Common Lamb-type shift in units of the natural linewidth.
    pub shift_delta_over_gamma: f64,
    /// Re-evaluate the self-energy (and the whole mode chain) at each scan
    /// frequency instead of freezing it at `omega0`.
    pub sigma_at_scan_freq: bool,
    pub basis_cap: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            green: GreenVariant::Full,
            truncation: Truncation::MaxSpinFlips(1),
            shift_delta_over_gamma: 0.0,
            sigma_at_scan_freq: false,
            basis_cap: DEFAULT_DIMENSION_CAP,
        }
    }
}

/// One spectrum grid point: total T/R/L plus the per-channel breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub t: f64,
    pub r: f64,
    pub l: f64,
    pub t_rayleigh_same: f64,
    pub t_rayleigh_cross: f64,
    pub t_raman: f64,
    pub r_rayleigh_same: f64,
    pub r_rayleigh_cross: f64,
    pub r_raman: f64,
}

/// Spectrum over a detuning grid (detunings in units of the natural
/// linewidth).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub detunings: Vec<f64>,
    pub points: Vec<SpectrumPoint>,
}

impl SpectrumResult {
    pub fn peak_r(&self) -> f64 {
        self.points.iter().map(|p| p.r).fold(0.0, f64::max)
    }

    pub fn peak_r_rayleigh(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.r_rayleigh_same + p.r_rayleigh_cross)
            .fold(0.0, f64::max)
    }

    pub fn peak_l(&self) -> f64 {
        self.points.iter().map(|p| p.l).fold(0.0, f64::max)
    }

    pub fn min_t(&self) -> f64 {
        self.points.iter().map(|p| p.t).fold(f64::INFINITY, f64::min)
    }

    /// Detuning of the transmission minimum.
    pub fn argmin_t(&self) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for (d, p) in self.detunings.iter().zip(&self.points) {
            if p.t < best.0 {
                best = (p.t, *d);
            }
        }
        best.1
    }

    /// Largest unitarity defect `|T + R + L - 1|` (zero by construction) and
    /// probability-bound violation over the grid.
    pub fn max_probability_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.points {
            for v in [p.t, p.r, p.l] {
                worst = worst.max((-v).max(v - 1.0).max(0.0));
            }
        }
        worst
    }
}

/// One precomputed outgoing channel: classification plus the sparse
/// emission contraction against the resolvent solution.
struct ChannelData {
    is_input: bool,
    class: ChannelClass,
    direction: Direction,
    terms: Vec<(usize, C64)>,
}

/// Precomputed frozen quantities of one scattering setup: the self-energy,
/// the source vector and all emission-channel contractions.
struct Engine {
    source: DVector<C64>,
    sigma: SelfEnergyMatrix,
    gamma_nat: f64,
    omega: f64,
    inv_vg: f64,
    channels: Vec<ChannelData>,
}

fn build_engine(
    basis: &ExcitationBasis,
    array: &AtomArray,
    mode: &GuidedMode,
    omega: f64,
    options: &ModelOptions,
) -> Result<Engine, ScatteringError> {
    let n = array.len();
    let transition = &array.transition;
    let shift = options.shift_delta_over_gamma * transition.gamma_nat;
    let sigma = assemble_self_energy(basis, array, mode, omega, shift, options.green)?;
    let input = IncidentChannel::standard(n);
    let source = absorption_source(basis, array, mode, &input)?;

    // all reachable final configurations, in deterministic order
    let mut configs: BTreeSet<Vec<i8>> = BTreeSet::new();
    for state in basis.states() {
        for &m in &SUBLEVELS {
            let cfg: Vec<i8> = (0..n)
                .map(|j| {
                    if j == state.excited {
                        m
                    } else {
                        state.spectator(j)
                    }
                })
                .collect();
            configs.insert(cfg);
        }
    }

    let mut channels = Vec::new();
    for config in &configs {
        for sigma_out in Polarization::BOTH {
            for direction in Direction::BOTH {
                let mut terms = Vec::new();
                for b in 0..n {
                    if let Some(i) = basis.position_for(b, config) {
                        let p = &array.positions[b];
                        let field =
                            mode_field_cartesian(mode, sigma_out, direction, p.rho, p.phi, p.z)?;
                        let em = transition.dipole_vector(config[b]).dot(&field).conj();
                        terms.push((i, em));
                    }
                }
                let is_input = sigma_out == input.sigma_in
                    && direction == Direction::Forward
                    && *config == input.config;
                let class = if *config == input.config {
                    if sigma_out == input.sigma_in {
                        ChannelClass::RayleighSame
                    } else {
                        ChannelClass::RayleighCross
                    }
                } else {
                    ChannelClass::Raman
                };
                channels.push(ChannelData {
                    is_input,
                    class,
                    direction,
                    terms,
                });
            }
        }
    }
    Ok(Engine {
        source,
        sigma,
        gamma_nat: transition.gamma_nat,
        omega,
        inv_vg: 1.0 / mode.group_velocity(),
        channels,
    })
}

impl Engine {
    fn point(&self, delta_gamma: f64) -> Result<SpectrumPoint, ScatteringError> {
        let ctx = factorize_resolvent(&self.sigma, delta_gamma * self.gamma_nat)?;
        let x = ctx.solve(&self.source)?;
        let prefactor = 4.0 * std::f64::consts::PI.powi(2) * self.omega;
        let mut pt = SpectrumPoint::default();
        for channel in &self.channels {
            let mut contraction = C64::new(0.0, 0.0);
            for (i, em) in &channel.terms {
                contraction += em * x[*i];
            }
            let t_bar = C64::new(prefactor, 0.0) * contraction;
            let mut s = C64::new(0.0, -self.inv_vg) * t_bar;
            if channel.is_input {
                s += C64::new(1.0, 0.0);
            }
            let p = s.norm_sqr();
            match channel.direction {
                Direction::Forward => {
                    pt.t += p;
                    match channel.class {
                        ChannelClass::RayleighSame => pt.t_rayleigh_same += p,
                        ChannelClass::RayleighCross => pt.t_rayleigh_cross += p,
                        ChannelClass::Raman => pt.t_raman += p,
                    }
                }
                Direction::Backward => {
                    pt.r += p;
                    match channel.class {
                        ChannelClass::RayleighSame => pt.r_rayleigh_same += p,
                        ChannelClass::RayleighCross => pt.r_rayleigh_cross += p,
                        ChannelClass::Raman => pt.r_raman += p,
                    }
                }
            }
        }
        pt.l = 1.0 - pt.t - pt.r;
        Ok(pt)
    }
}

/// Compute the T/R/L spectrum of `array` over `detunings` (units of the
/// natural linewidth). The scan over grid points is an order-preserving
/// parallel map; results are bit-identical regardless of thread count.
pub fn compute_spectrum(
    array: &AtomArray,
    mode: &GuidedMode,
    detunings: &[f64],
    options: &ModelOptions,
) -> Result<SpectrumResult, ScatteringError> {
    if array.is_empty() {
        // no scatterers: perfect transparency
        return Ok(SpectrumResult {
            detunings: detunings.to_vec(),
            points: vec![
                SpectrumPoint {
                    t: 1.0,
                    t_rayleigh_same: 1.0,
                    ..SpectrumPoint::default()
                };
                detunings.len()
            ],
        });
    }
    let basis = enumerate_basis_with_cap(array.len(), options.truncation, options.basis_cap)?;
    let points: Result<Vec<SpectrumPoint>, ScatteringError> = if options.sigma_at_scan_freq {
        detunings
            .par_iter()
            .map(|&d| {
                let omega = 1.0 + d * array.transition.gamma_nat;
                let scan_mode = normalize_mode(&GuidedMode::solve(*mode.fiber(), omega)?)?;
                // self-energy and vertices re-evaluated at omega; the
                // resolvent energy offset E - hbar omega0 is unchanged
                build_engine(&basis, array, &scan_mode, omega, options)?.point(d)
            })
            .collect()
    } else {
        let engine = build_engine(&basis, array, mode, mode.omega(), options)?;
        detunings.par_iter().map(|&d| engine.point(d)).collect()
    };
    Ok(SpectrumResult {
        detunings: detunings.to_vec(),
        points: points?,
    })
}

/// Uniform detuning grid in units of the natural linewidth.
pub fn detuning_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![0.5 * (min + max)];
    }
    (0..points)
        .map(|i| min + (max - min) * i as f64 / (points - 1) as f64)
        .collect()
}
