//! Position-dependent decay rates and the collective self-energy matrix
//! over the single-excitation basis, evaluated at the pole `E = hbar omega0`.


#![allow(clippy::needless_range_loop)]
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::atomic::{AtomArray, AtomicTransition, CylPosition, SUBLEVELS};
use crate::fiber::GuidedMode;
use crate::greens::{total_green, GreenVariant, GreensError, GreensTensor};
use crate::spectral::basis::ExcitationBasis;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelfEnergyError {
    #[error("basis is for {basis} atoms but the array holds {array}")]
    Mismatch { basis: usize, array: usize },
    #[error(transparent)]
    Greens(#[from] GreensError),
}

/// Guided-mode contribution to the spontaneous decay rate at radius `rho`
/// (the pole-term trace): `(4 omega / v_g) d0^2 * 2 pi (P^2 + F^2 + W^2)`
/// with the stored profile triplet. This identity is the executable anchor
/// of the normalization bookkeeping (see the ledger in [`crate::greens`]).
pub fn gamma_wg(
    mode: &GuidedMode,
    transition: &AtomicTransition,
    rho: f64,
) -> Result<f64, crate::fiber::FiberError> {
    let (p, f, w) = mode.profile_triplet(rho)?;
    Ok(4.0 * mode.omega() / mode.group_velocity()
        * transition.d0_sq
        * std::f64::consts::TAU
        * (p * p + f * f + w * w))
}

/// External-mode decay estimate: the natural rate minus the emission into
/// the vacuum modes that coincide with the guided mode in the paraxial
/// limit, `gamma - 2 omega d0^2 * 2 pi (P + F)^2`.
pub fn gamma_ext(
    mode: &GuidedMode,
    transition: &AtomicTransition,
    rho: f64,
) -> Result<f64, crate::fiber::FiberError> {
    let (p, f, _) = mode.profile_triplet(rho)?;
    Ok(transition.gamma_nat
        - 2.0 * mode.omega() * transition.d0_sq * std::f64::consts::TAU * (p + f) * (p + f))
}

/// Total decay rate entering the diagonal self-energy, per Green's-function
/// variant: guided-only, guided + external estimate, or the naive sum
/// (no paraxial subtraction).
pub fn gamma_total(
    mode: &GuidedMode,
    transition: &AtomicTransition,
    rho: f64,
    variant: GreenVariant,
) -> Result<f64, crate::fiber::FiberError> {
    let wg = gamma_wg(mode, transition, rho)?;
    Ok(match variant {
        GreenVariant::GuidedOnly => wg,
        GreenVariant::Full => wg + gamma_ext(mode, transition, rho)?,
        GreenVariant::FullNoSubtraction => wg + transition.gamma_nat,
    })
}

/// Single-atom self-energy at the pole:
/// `hbar shift_delta - (i hbar / 2) gamma(rho)`.
///
/// `shift_delta` is the configurable common Lamb-type shift (same for every
/// dipole; default 0), in internal energy units.
pub fn single_atom_self_energy(
    mode: &GuidedMode,
    transition: &AtomicTransition,
    position: &CylPosition,
    shift_delta: f64,
    variant: GreenVariant,
) -> Result<C64, SelfEnergyError> {
    if position.rho <= mode.fiber().radius() {
        return Err(GreensError::InsideFiber.into());
    }
    let gamma = gamma_total(mode, transition, position.rho, variant)
        .map_err(GreensError::Fiber)?;
    Ok(C64::new(shift_delta, -0.5 * gamma))
}

/// Pairwise self-energy element for the excitation hop from atom `a`
/// (emitter, landing in ground sublevel `m_prime_a`) to atom `b` (absorber,
/// previously in ground sublevel `m_b`):
/// `(1/hbar) sum_munu d_mu(m_b) conj(d_nu(m_prime_a)) D_munu(r_b, r_a)`.
#[allow(clippy::too_many_arguments)]
pub fn pair_self_energy(
    mode: &GuidedMode,
    transition: &AtomicTransition,
    emitter: &CylPosition,
    absorber: &CylPosition,
    m_b: i8,
    m_prime_a: i8,
    omega: f64,
    variant: GreenVariant,
) -> Result<C64, SelfEnergyError> {
    let tensor = total_green(mode, absorber, emitter, omega, variant)?;
    Ok(contract_pair(transition, &tensor, m_b, m_prime_a))
}

fn contract_pair(
    transition: &AtomicTransition,
    tensor_b_a: &GreensTensor,
    m_b: i8,
    m_prime_a: i8,
) -> C64 {
    let d_abs = transition.dipole_vector(m_b);
    let d_em = transition.dipole_vector(m_prime_a);
    tensor_b_a.contract(&d_abs.components, &d_em.components)
}

/// The complex collective self-energy matrix over `basis`, in internal
/// energy units.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfEnergyMatrix {
    pub matrix: DMatrix<C64>,
}

impl SelfEnergyMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Anti-Hermitian part `(Sigma - Sigma^dag) / (2i)`, a Hermitian matrix
    /// whose spectrum is non-positive for a dissipative self-energy.
    pub fn anti_hermitian_part(&self) -> DMatrix<C64> {
        let adj = self.matrix.adjoint();
        (&self.matrix - adj) * C64::new(0.0, -0.5)
    }
}

/// Assemble the self-energy matrix at the pole `E = hbar omega0`.
///
/// Diagonal entries carry the single-atom self-energy of the excited atom
/// (independent of the spectator configuration); off-diagonal entries couple
/// states whose spectators agree everywhere except that the excitation hops
/// `a -> b`, exchanging the absorber's prior sublevel against the emitter's
/// landing sublevel. Evaluated once at `omega` (callers pass `omega0` under
/// the pole approximation).
pub fn assemble_self_energy(
    basis: &ExcitationBasis,
    array: &AtomArray,
    mode: &GuidedMode,
    omega: f64,
    shift_delta: f64,
    variant: GreenVariant,
) -> Result<SelfEnergyMatrix, SelfEnergyError> {
    let n = array.len();
    if basis.n_atoms != n {
        return Err(SelfEnergyError::Mismatch {
            basis: basis.n_atoms,
            array: n,
        });
    }
    let transition = &array.transition;
    let dim = basis.len();
    let mut matrix = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));

    // per-atom diagonal values and per-ordered-pair Green tensors, cached
    let mut diag = Vec::with_capacity(n);
    for pos in &array.positions {
        diag.push(single_atom_self_energy(mode, transition, pos, shift_delta, variant)?);
    }
    let mut pair_tensor = vec![GreensTensor::zero(); n * n];
    for b in 0..n {
        for a in 0..n {
            if a != b {
                pair_tensor[b * n + a] =
                    total_green(mode, &array.positions[b], &array.positions[a], omega, variant)?;
            }
        }
    }

    for (i, state) in basis.states().iter().enumerate() {
        let a = state.excited;
        matrix[(i, i)] = diag[a];
        for b in 0..n {
            if b == a {
                continue;
            }
            let m_b = state.spectator(b);
            for &m_prime_a in &SUBLEVELS {
                // final state: excitation at b, atom a lands in m_prime_a,
                // every other spectator unchanged
                let config: Vec<i8> = (0..n)
                    .map(|j| {
                        if j == a {
                            m_prime_a
                        } else if j == b {
                            0 // absorber's slot is ignored by the lookup
                        } else {
                            state.spectator(j)
                        }
                    })
                    .collect();
                if let Some(f) = basis.position_for(b, &config) {
                    matrix[(f, i)] +=
                        contract_pair(transition, &pair_tensor[b * n + a], m_b, m_prime_a);
                }
            }
        }
    }
    Ok(SelfEnergyMatrix { matrix })
}
