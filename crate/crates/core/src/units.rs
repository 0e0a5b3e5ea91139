//! Internal unit system.
//!
//! All physics in this crate is computed with `hbar = c = 1` and the atomic
//! resonance frequency `omega0 = 1`. Lengths are measured in `c/omega0 =
//! lambda0 / 2pi`, energies in `hbar * omega0`, and rates in `omega0`. The
//! only dimensional inputs are the vacuum wavelength and the natural
//! linewidth, which fix the conversion factors here.

use serde::{Deserialize, Serialize};

/// Speed of light in m/s, used only to convert config values into internal units.
pub const C_SI: f64 = 299_792_458.0;

/// Vacuum wavelength of the transition in internal length units (`2 pi c/omega0`).
pub const LAMBDA0_INTERNAL: f64 = std::f64::consts::TAU;

/// Conversion context between laboratory inputs and internal units.
///
/// `gamma_nat` is the natural decay rate in units of `omega0`; `d0_sq` is the
/// squared dipole modulus fixed by the free-space calibration identity (see
/// [`crate::atomic::calibrate_d0`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub lambda0_nm: f64,
    pub gamma_nat: f64,
    pub d0_sq: f64,
}

impl UnitSystem {
    /// Build from the laboratory transition parameters.
    ///
    /// `gamma_natural_mhz` is the linewidth gamma/2pi in MHz (so rubidium's
    /// 6.0666 MHz gives gamma/omega0 ~ 1.58e-8).
    pub fn new(lambda0_nm: f64, gamma_natural_mhz: f64) -> Self {
        let nu0 = C_SI / (lambda0_nm * 1e-9); // Hz
        let gamma_nat = gamma_natural_mhz * 1e6 / nu0;
        Self {
            lambda0_nm,
            gamma_nat,
            d0_sq: crate::atomic::calibrate_d0(gamma_nat),
        }
    }

    /// Convert a length in nm to internal units (`c/omega0`).
    pub fn length_from_nm(&self, nm: f64) -> f64 {
        LAMBDA0_INTERNAL * nm / self.lambda0_nm
    }

    /// Convert an internal wavenumber (units of `omega0/c`) to rad/m.
    pub fn wavenumber_to_si(&self, k: f64) -> f64 {
        k * LAMBDA0_INTERNAL / (self.lambda0_nm * 1e-9)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rubidium_defaults() {
        let u = UnitSystem::new(780.0, 6.0666);
        // 6.0666 MHz vs 384.35 THz
        assert!((u.gamma_nat - 1.578e-8).abs() < 2e-11, "{}", u.gamma_nat);
        assert!(u.d0_sq > 0.0 && u.d0_sq.is_finite());
        assert!((u.length_from_nm(780.0) - LAMBDA0_INTERNAL).abs() < 1e-15);
    }

    #[test]
    fn wavenumber_conversion_window() {
        let u = UnitSystem::new(780.0, 6.0666);
        // omega0/c in SI is 2pi/lambda0 = 8.0553e6 rad/m
        let k_si = u.wavenumber_to_si(1.0);
        assert!((k_si - 8.0553e6).abs() / 8.0553e6 < 1e-4);
    }
}
