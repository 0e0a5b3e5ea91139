//! Atomic species constants, Zeeman structure and dipole matrix elements of
//! the `F0 = 1 -> F = 0` transition, array geometry and seeded disorder.
//!
//! Ground sublevels are labelled by `M0 = -1, 0, +1`; the excited state is
//! the single `F = 0` level. All ground sublevels sit at zero energy, so
//! Raman channels are elastic in photon frequency.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fiber::FiberSpec;
use crate::units::LAMBDA0_INTERNAL;

/// Ground-state Zeeman sublevels in the deterministic enumeration order used
/// throughout the crate.
pub const SUBLEVELS: [i8; 3] = [-1, 0, 1];

/// Minimum longitudinal separation enforced by the disorder sampler, in
/// units of the vacuum wavelength.
pub const MIN_SEPARATION_LAMBDA0: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AtomicError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("disorder sampler exhausted {0} resampling attempts under the minimum-separation floor")]
    ResampleExhausted(usize),
}

/// Constants of the optical transition in internal units (`omega0 = 1`).
///
/// `d0_sq` is defined by the calibration identity: plugging it into the
/// free-space decay formula with the coincident vacuum Green's function
/// returns `gamma_nat` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomicTransition {
    pub omega0: f64,
    pub gamma_nat: f64,
    pub d0_sq: f64,
}

impl AtomicTransition {
    pub fn new(gamma_nat: f64) -> Self {
        Self {
            omega0: 1.0,
            gamma_nat,
            d0_sq: calibrate_d0(gamma_nat),
        }
    }

    /// Cartesian dipole vector of the absorption vertex
    /// `|F0=1, M0> -> |F=0, 0>`: `d0 * conj(e_{-M0})` with the spherical
    /// unit vectors `e_{+-1} = -+(x +- i y)/sqrt(2)`, `e_0 = z`
    /// (Condon-Shortley phases). The modulus is `d0` for all three.
    pub fn dipole_vector(&self, m0: i8) -> DipoleVector {
        let d0 = self.d0_sq.sqrt();
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        let components = match m0 {
            // conj(e_{-1}) = (x + i y)/sqrt(2)
            1 => [
                C64::new(d0 * inv_sqrt2, 0.0),
                C64::new(0.0, d0 * inv_sqrt2),
                C64::new(0.0, 0.0),
            ],
            0 => [C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(d0, 0.0)],
            // conj(e_{+1}) = -(x - i y)/sqrt(2)
            -1 => [
                C64::new(-d0 * inv_sqrt2, 0.0),
                C64::new(0.0, d0 * inv_sqrt2),
                C64::new(0.0, 0.0),
            ],
            _ => panic!("Zeeman sublevel out of range: {m0}"),
        };
        DipoleVector { components }
    }
}

/// Complex Cartesian dipole vector of one Zeeman transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleVector {
    pub components: [C64; 3],
}

impl DipoleVector {
    /// Contraction `sum_mu d_mu E_mu` (no conjugation).
    pub fn dot(&self, field: &[C64; 3]) -> C64 {
        self.components[0] * field[0] + self.components[1] * field[1] + self.components[2] * field[2]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.components.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Solve the free-space calibration identity
/// `gamma = -(2/hbar^2) d0^2 Im[D0_mumu(r, r; omega0)]` for `d0^2`.
///
/// With `Im trace = -2 hbar omega0^3 / c^3` this gives
/// `d0^2 = hbar gamma c^3 / (4 omega0^3)`, i.e. `gamma/4` in internal units.
pub fn calibrate_d0(gamma_nat: f64) -> f64 {
    gamma_nat / 4.0
}

/// Cylindrical position `(rho, phi, z)` of one atom relative to the fiber
/// axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CylPosition {
    pub rho: f64,
    pub phi: f64,
    pub z: f64,
}

impl CylPosition {
    pub fn to_cartesian(self) -> [f64; 3] {
        [self.rho * self.phi.cos(), self.rho * self.phi.sin(), self.z]
    }
}

/// Trapped-atom array: positions, initial Zeeman configuration and species.
///
/// Constructors emit the common-line layout of the trap geometry (shared
/// `rho` and `phi`); the data model keeps them per-atom.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomArray {
    pub positions: Vec<CylPosition>,
    pub initial_zeeman: Vec<i8>,
    pub transition: AtomicTransition,
}

impl AtomArray {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

fn check_radius(fiber: &FiberSpec, rho: f64) -> Result<(), AtomicError> {
    if rho <= fiber.radius() {
        return Err(AtomicError::InvalidGeometry(format!(
            "atom radius {rho} must exceed the fiber radius {}",
            fiber.radius()
        )));
    }
    Ok(())
}

/// Ordered array: atoms at `z_j = j * spacing`, common `(rho, phi)`, all
/// prepared in `M0 = +1`.
pub fn build_ordered_array(
    transition: AtomicTransition,
    fiber: &FiberSpec,
    n: usize,
    spacing: f64,
    rho: f64,
    phi: f64,
) -> Result<AtomArray, AtomicError> {
    check_radius(fiber, rho)?;
    if n >= 2 && spacing <= 0.0 {
        return Err(AtomicError::InvalidGeometry(format!(
            "spacing must be positive for n >= 2, got {spacing}"
        )));
    }
    let positions = (0..n)
        .map(|j| CylPosition {
            rho,
            phi,
            z: j as f64 * spacing,
        })
        .collect();
    Ok(AtomArray {
        positions,
        initial_zeeman: vec![1; n],
        transition,
    })
}

/// Disordered array: longitudinal coordinates i.i.d. uniform on
/// `[0, n * mean_spacing)`, sorted, with a minimum-separation floor of
/// `1e-3 lambda0` enforced by resampling the whole configuration.
/// Deterministic for a fixed seed.
pub fn sample_disordered_array(
    transition: AtomicTransition,
    fiber: &FiberSpec,
    n: usize,
    mean_spacing: f64,
    rho: f64,
    phi: f64,
    seed: u64,
) -> Result<AtomArray, AtomicError> {
    check_radius(fiber, rho)?;
    if mean_spacing <= 0.0 {
        return Err(AtomicError::InvalidGeometry(format!(
            "mean spacing must be positive, got {mean_spacing}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let length = n as f64 * mean_spacing;
    let floor = MIN_SEPARATION_LAMBDA0 * LAMBDA0_INTERNAL;
    const MAX_ATTEMPTS: usize = 1000;
    for _ in 0..MAX_ATTEMPTS {
        let mut zs: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..length)).collect();
        zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let min_gap_ok = zs.windows(2).all(|w| w[1] - w[0] >= floor);
        if min_gap_ok {
            let positions = zs
                .into_iter()
                .map(|z| CylPosition { rho, phi, z })
                .collect();
            return Ok(AtomArray {
                positions,
                initial_zeeman: vec![1; n],
                transition,
            });
        }
    }
    Err(AtomicError::ResampleExhausted(MAX_ATTEMPTS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn fiber() -> FiberSpec {
        FiberSpec::new(1.611, 2.1025).unwrap()
    }

    fn transition() -> AtomicTransition {
        AtomicTransition::new(1.578e-8)
    }

    #[test]
    fn dipole_m0_is_z() {
        let t = transition();
        let d = t.dipole_vector(0);
        assert_eq!(d.components[0], C64::new(0.0, 0.0));
        assert_eq!(d.components[1], C64::new(0.0, 0.0));
        assert_abs_diff_eq!(d.components[2].re, t.d0_sq.sqrt(), epsilon = 1e-18);
    }

    #[test]
    fn dipole_completeness() {
        // sum_M0 d_mu(M0) conj(d_nu(M0)) = d0^2 delta_munu, to machine precision
        let t = transition();
        for mu in 0..3 {
            for nu in 0..3 {
                let mut s = C64::new(0.0, 0.0);
                for m in SUBLEVELS {
                    let d = t.dipole_vector(m);
                    s += d.components[mu] * d.components[nu].conj();
                }
                let expected = if mu == nu { t.d0_sq } else { 0.0 };
                assert_abs_diff_eq!(s.re, expected, epsilon = 1e-24);
                assert_abs_diff_eq!(s.im, 0.0, epsilon = 1e-24);
            }
        }
    }

    #[test]
    fn dipole_channels_orthogonal() {
        let t = transition();
        let plus = t.dipole_vector(1);
        let minus = t.dipole_vector(-1);
        let overlap: C64 = (0..3)
            .map(|mu| plus.components[mu] * minus.components[mu].conj())
            .sum();
        assert_abs_diff_eq!(overlap.norm(), 0.0, epsilon = 1e-24);
    }

    #[test]
    fn calibration_linear() {
        assert_relative_eq!(calibrate_d0(2.0 * 1.578e-8), 2.0 * calibrate_d0(1.578e-8));
        assert!(calibrate_d0(1.578e-8) > 0.0);
    }

    #[test]
    fn ordered_array_layout() {
        let arr = build_ordered_array(transition(), &fiber(), 5, 2.868, 2.4, 0.0).unwrap();
        assert_eq!(arr.len(), 5);
        for w in arr.positions.windows(2) {
            assert_relative_eq!(w[1].z - w[0].z, 2.868, epsilon = 1e-15);
        }
        assert!(arr.initial_zeeman.iter().all(|&m| m == 1));
        // single atom sits at the origin
        let single = build_ordered_array(transition(), &fiber(), 1, 2.868, 2.4, 0.0).unwrap();
        assert_eq!(single.positions[0].z, 0.0);
    }

    #[test]
    fn ordered_array_rejects_bad_geometry() {
        assert!(build_ordered_array(transition(), &fiber(), 5, 2.868, 1.0, 0.0).is_err());
        assert!(build_ordered_array(transition(), &fiber(), 2, 0.0, 2.4, 0.0).is_err());
    }

    #[test]
    fn disorder_deterministic_and_sorted() {
        let a = sample_disordered_array(transition(), &fiber(), 5, 2.868, 2.4, 0.0, 42).unwrap();
        let b = sample_disordered_array(transition(), &fiber(), 5, 2.868, 2.4, 0.0, 42).unwrap();
        assert_eq!(a, b);
        let c = sample_disordered_array(transition(), &fiber(), 5, 2.868, 2.4, 0.0, 43).unwrap();
        assert_ne!(a, c);
        for w in a.positions.windows(2) {
            assert!(w[1].z > w[0].z);
            assert!(w[1].z - w[0].z >= MIN_SEPARATION_LAMBDA0 * LAMBDA0_INTERNAL);
        }
    }

    #[test]
    fn disorder_mean_spacing_statistics() {
        // Monte-Carlo check of uniform order statistics. The mean gap of n
        // sorted uniforms on [0, n d) is n d/(n+1); at n = 127 the bias is
        // 0.8%, inside the 2% band.
        let n = 127;
        let d = 1.0;
        let mut sum = 0.0;
        let mut count = 0usize;
        for seed in 0..400u64 {
            let arr =
                sample_disordered_array(transition(), &fiber(), n, d, 2.4, 0.0, seed).unwrap();
            for w in arr.positions.windows(2) {
                sum += w[1].z - w[0].z;
                count += 1;
            }
        }
        let mean = sum / count as f64;
        assert!((mean - d).abs() / d < 0.02, "mean gap {mean}");
    }
}
