//! HE11 guided mode of a step-index cylindrical nanofiber: dispersion
//! relation, radial field profiles, normalization and Cartesian mode fields.
//!
//! The characteristic equation and the profile expansions are the standard
//! hybrid-mode results for a core of permittivity `eps` and unit-permittivity
//! cladding. Inside the core the fields are Bessel `J_n`; outside they decay
//! as modified Bessel `K_n` (the Hankel functions of imaginary argument are
//! rewritten through `K_n`, which keeps every quantity real). The phase
//! convention fixes `-i E_rho(rho)` real and positive just outside the fiber
//! surface, so all three stored profile functions are real.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use spec_math::cephes64::{j0, j1, jv, k0, k1, kn};
use thiserror::Error;

use crate::numerics::{self, bracket_roots, refine_root};

const SQRT_TAU: f64 = 2.506_628_274_631_000_5; // sqrt(2 pi)

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FiberError {
    #[error("invalid fiber: {0}")]
    InvalidFiber(String),
    #[error("no guided-mode root in the window (omega/c, sqrt(eps) omega/c)")]
    NoRoot,
    #[error("multiple roots in the guided window; fiber is not single-mode here")]
    MultipleRoots,
    #[error("Bessel evaluation at a zero of J1(kappa_in a)")]
    BesselDomain,
    #[error("mode is not normalized; call normalize_mode first")]
    NotNormalized,
    #[error("quadrature failure during mode normalization")]
    QuadratureFailure,
}

impl From<numerics::NumericsError> for FiberError {
    fn from(_: numerics::NumericsError) -> Self {
        FiberError::QuadratureFailure
    }
}

/// Waveguide geometry and material: radius `a` and (real) permittivity
/// `eps = n^2`, both in internal units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberSpec {
    radius: f64,
    permittivity: f64,
}

impl FiberSpec {
    pub fn new(radius: f64, permittivity: f64) -> Result<Self, FiberError> {
        if !radius.is_finite() || radius <= 0.0 {
            return Err(FiberError::InvalidFiber(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !permittivity.is_finite() || permittivity <= 1.0 {
            return Err(FiberError::InvalidFiber(format!(
                "permittivity must exceed 1, got {permittivity}"
            )));
        }
        Ok(Self {
            radius,
            permittivity,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn permittivity(&self) -> f64 {
        self.permittivity
    }

    pub fn refractive_index(&self) -> f64 {
        self.permittivity.sqrt()
    }
}

/// `x d/dx ln J1(x)`, from the recurrence `J1'(x) = J0(x) - J1(x)/x`.
fn log_deriv_j1(x: f64) -> f64 {
    x * j0(x) / j1(x) - 1.0
}

/// `x d/dx ln H1^(1)(x)` evaluated at `x = i y`, rewritten through `K_n`:
/// equals `y K1'(y)/K1(y) = -y K0(y)/K1(y) - 1`, a real quantity.
fn log_deriv_h1_imag(y: f64) -> f64 {
    -y * k0(y) / k1(y) - 1.0
}

/// Characteristic function of the HE/EH family with azimuthal index 1,
/// multiplied by `J1(kappa_in a)^2` to clear the poles at zeros of `J1`.
/// Guided-mode wavenumbers are exactly its zeros in `(omega, sqrt(eps) omega)`.
pub fn characteristic_fn(fiber: &FiberSpec, omega: f64, k: f64) -> f64 {
    let eps = fiber.permittivity;
    let a = fiber.radius;
    let h2 = eps * omega * omega - k * k;
    let q2 = k * k - omega * omega;
    if h2 <= 0.0 || q2 <= 0.0 {
        return f64::NAN;
    }
    let x = h2.sqrt() * a;
    let y = q2.sqrt() * a;
    let j1x = j1(x);
    let p = x * j0(x) - j1x; // J1(x) * [x d/dx ln J1(x)]
    let lh = log_deriv_h1_imag(y);
    let b1 = eps * (q2 / h2) * p + lh * j1x;
    let b2 = (q2 / h2) * p + lh * j1x;
    let rhs = (eps - 1.0).powi(2) * omega * omega * k * k / (h2 * h2) * j1x * j1x;
    b1 * b2 - rhs
}

fn scan_window(fiber: &FiberSpec, omega: f64, n: usize) -> Vec<(f64, f64)> {
    let lo = omega * (1.0 + 1e-9);
    let hi = omega * fiber.permittivity.sqrt() * (1.0 - 1e-9);
    bracket_roots(|k| characteristic_fn(fiber, omega, k), lo, hi, n)
}

/// Solve the dispersion relation for the fundamental mode at `omega`.
///
/// Brackets with a 512-point scan of the open guided window (endpoints pulled
/// inward by 1e-9 relative) and bisects to machine precision.
pub fn solve_dispersion(fiber: &FiberSpec, omega: f64) -> Result<f64, FiberError> {
    let brackets = scan_window(fiber, omega, 512);
    match brackets.len() {
        0 => Err(FiberError::NoRoot),
        1 => {
            let (lo, hi) = brackets[0];
            refine_root(|k| characteristic_fn(fiber, omega, k), lo, hi, 1e-15)
                .map_err(|_| FiberError::NoRoot)
        }
        _ => Err(FiberError::MultipleRoots),
    }
}

/// True iff exactly one root of the characteristic equation lies in the
/// guided window, counted by a 10^4-point scan.
pub fn check_single_mode(fiber: &FiberSpec, omega: f64) -> bool {
    scan_window(fiber, omega, 10_000).len() == 1
}

/// Group velocity `v_g = d omega / d k` by central finite difference of the
/// dispersion curve, with relative frequency step `rel_step`.
pub fn group_velocity_with_step(
    fiber: &FiberSpec,
    omega: f64,
    rel_step: f64,
) -> Result<f64, FiberError> {
    let d = rel_step * omega;
    let kp = solve_dispersion(fiber, omega + d)?;
    let km = solve_dispersion(fiber, omega - d)?;
    Ok(2.0 * d / (kp - km))
}

/// Group velocity with the default relative step 1e-6.
pub fn group_velocity(fiber: &FiberSpec, omega: f64) -> Result<f64, FiberError> {
    group_velocity_with_step(fiber, omega, 1e-6)
}

/// Mode profile triplet `(E_rho, E_phi, E_z)` at one radius, in the phase
/// convention where `-i E_rho`, `-E_phi` and `E_z` are all real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub e_rho: C64,
    pub e_phi: C64,
    pub e_z: C64,
}

impl RadialProfile {
    /// `|E_rho|^2 + |E_phi|^2 + |E_z|^2`.
    pub fn intensity(&self) -> f64 {
        self.e_rho.norm_sqr() + self.e_phi.norm_sqr() + self.e_z.norm_sqr()
    }
}

/// A solved dispersion point of the fundamental HE11 mode.
///
/// Immutable once normalized; all scattering code shares it by reference.
#[derive(Debug, Clone, PartialEq)]
pub struct GuidedMode {
    fiber: FiberSpec,
    omega: f64,
    wavenumber: f64,
    group_velocity: f64,
    u_param: f64,
    kappa_in: f64,
    kappa_out: f64, // modulus |kappa_out|; the exterior wavenumber is i*kappa_out
    norm_const: Option<f64>,
}

impl GuidedMode {
    /// Solve the dispersion relation and mode parameters at `omega`.
    /// The returned mode is unnormalized; call [`normalize_mode`].
    pub fn solve(fiber: FiberSpec, omega: f64) -> Result<Self, FiberError> {
        let k = solve_dispersion(&fiber, omega)?;
        let vg = group_velocity(&fiber, omega)?;
        let h = (fiber.permittivity * omega * omega - k * k).sqrt();
        let q = (k * k - omega * omega).sqrt();
        let mut mode = Self {
            fiber,
            omega,
            wavenumber: k,
            group_velocity: vg,
            u_param: 0.0,
            kappa_in: h,
            kappa_out: q,
            norm_const: None,
        };
        mode.u_param = eval_u_param(&mode)?;
        Ok(mode)
    }

    pub fn fiber(&self) -> &FiberSpec {
        &self.fiber
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn group_velocity(&self) -> f64 {
        self.group_velocity
    }

    pub fn u_param(&self) -> f64 {
        self.u_param
    }

    pub fn norm_const(&self) -> Option<f64> {
        self.norm_const
    }

    pub fn is_normalized(&self) -> bool {
        self.norm_const.is_some()
    }

    /// Half guided wavelength `pi / k`, the Bragg spacing of the ordered array.
    pub fn half_guided_wavelength(&self) -> f64 {
        std::f64::consts::PI / self.wavenumber
    }

    /// Raw real profile triplet `(-i E_rho, -E_phi, E_z)` with unit amplitude
    /// (no normalization constant applied).
    fn raw_triplet(&self, rho: f64) -> (f64, f64, f64) {
        let a = self.fiber.radius;
        let k = self.wavenumber;
        let u = self.u_param;
        if rho < a {
            let h = self.kappa_in;
            let j1a = j1(h * a);
            let j0r = j0(h * rho);
            let j2r = jv(2.0, h * rho);
            let p = (k / (2.0 * h)) * ((1.0 - u) * j0r - (1.0 + u) * j2r) / j1a;
            let f = (k / (2.0 * h)) * ((1.0 - u) * j0r + (1.0 + u) * j2r) / j1a;
            let w = j1(h * rho) / j1a;
            (p, f, w)
        } else {
            // The H_n^(1)(i y) -> K_n(y) rewrite leaves the transverse
            // components with the opposite sign to the interior branch; the
            // extra minus restores continuity of E_phi and eps*E_rho at the
            // surface (checked by the boundary-continuity tests).
            let q = self.kappa_out;
            let k1a = k1(q * a);
            let k0r = k0(q * rho);
            let k2r = kn(2, q * rho);
            let p = (k / (2.0 * q)) * ((1.0 - u) * k0r + (1.0 + u) * k2r) / k1a;
            let f = (k / (2.0 * q)) * ((1.0 - u) * k0r - (1.0 + u) * k2r) / k1a;
            let w = k1(q * rho) / k1a;
            (p, f, w)
        }
    }

    /// Normalized real triplet `(-i E_rho, -E_phi, E_z)` at `rho`.
    pub fn profile_triplet(&self, rho: f64) -> Result<(f64, f64, f64), FiberError> {
        let c = self.norm_const.ok_or(FiberError::NotNormalized)?;
        let (p, f, w) = self.raw_triplet(rho);
        Ok((c * p, c * f, c * w))
    }
}

/// The dimensionless mode parameter `u` built from the logarithmic
/// derivatives of `J1` and `H1^(1)` at the surface (Bessel recurrences, no
/// numerical differentiation).
pub fn eval_u_param(mode: &GuidedMode) -> Result<f64, FiberError> {
    let a = mode.fiber.radius;
    let x = mode.kappa_in * a;
    let y = mode.kappa_out * a;
    if j1(x).abs() < 1e-280 {
        return Err(FiberError::BesselDomain);
    }
    // numerator omega^2 (eps-1)/c^2 = kappa_in^2 + |kappa_out|^2
    let num = 1.0 / (x * x) + 1.0 / (y * y);
    // (1/x d/dx ln H1)(x = iy) = -(1/y d/dy ln K1)(y), so the subtraction in
    // the bracket becomes a sum of the two real logarithmic derivatives.
    let den = log_deriv_j1(x) / (x * x) + log_deriv_h1_imag(y) / (y * y);
    Ok(num / den)
}

/// Evaluate the normalized radial profile at `rho`, interior branch for
/// `rho < a`, exterior (evanescent) branch otherwise.
pub fn eval_radial_profile(mode: &GuidedMode, rho: f64) -> Result<RadialProfile, FiberError> {
    let (p, f, w) = mode.profile_triplet(rho)?;
    Ok(RadialProfile {
        e_rho: C64::new(0.0, p), // E_rho = i * (-i E_rho)
        e_phi: C64::new(-f, 0.0),
        e_z: C64::new(w, 0.0),
    })
}

/// Radius beyond which the evanescent tail is smaller than 1e-16 of its
/// surface value; the normalization integral is truncated there.
fn exterior_cutoff(mode: &GuidedMode) -> f64 {
    let a = mode.fiber.radius;
    let q = mode.kappa_out;
    let surface = k1(q * a);
    let mut rho = a + 40.0 / q;
    for _ in 0..64 {
        if k1(q * rho) < 1e-16 * surface {
            return rho;
        }
        rho += 4.0 / q;
    }
    rho
}

/// Fix the normalization constant so that
/// `int_0^inf rho d rho eps(rho) [|E_rho|^2 + |E_phi|^2 + |E_z|^2] = 1/(2 pi)`,
/// which makes the full mode (azimuthal and longitudinal factors restored)
/// carry unit norm per unit length. The sign is chosen so `-i E_rho` is
/// positive just outside the surface.
pub fn normalize_mode(mode: &GuidedMode) -> Result<GuidedMode, FiberError> {
    let a = mode.fiber.radius;
    let eps = mode.fiber.permittivity;
    let weighted = |rho: f64, scale: f64| {
        let (p, f, w) = mode.raw_triplet(rho);
        rho * scale * (p * p + f * f + w * w)
    };
    let interior = numerics::integrate(|rho| weighted(rho, eps), 0.0, a, 1e-10)?;
    let exterior = numerics::integrate(|rho| weighted(rho, 1.0), a, exterior_cutoff(mode), 1e-10)?;
    let total = interior + exterior;
    if !total.is_finite() || total <= 0.0 {
        return Err(FiberError::QuadratureFailure);
    }
    let mut c = (1.0 / (std::f64::consts::TAU * total)).sqrt();
    let (p_surface, _, _) = mode.raw_triplet(a * (1.0 + 1e-12));
    if p_surface < 0.0 {
        c = -c;
    }
    let mut normalized = mode.clone();
    normalized.norm_const = Some(c);
    Ok(normalized)
}

/// Re-evaluate the normalization integral of a (possibly normalized) mode;
/// used by the idempotence checks.
pub fn normalization_integral(mode: &GuidedMode) -> Result<f64, FiberError> {
    let c = mode.norm_const.unwrap_or(1.0);
    let a = mode.fiber.radius;
    let eps = mode.fiber.permittivity;
    let weighted = |rho: f64, scale: f64| {
        let (p, f, w) = mode.raw_triplet(rho);
        rho * scale * (p * p + f * f + w * w) * c * c
    };
    let interior = numerics::integrate(|rho| weighted(rho, eps), 0.0, a, 1e-10)?;
    let exterior = numerics::integrate(|rho| weighted(rho, 1.0), a, exterior_cutoff(mode), 1e-10)?;
    Ok(interior + exterior)
}

/// Azimuthal mode index `sigma = +-1` of the two degenerate HE11 modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    SigmaPlus,
    SigmaMinus,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::SigmaPlus, Polarization::SigmaMinus];

    pub fn sign(self) -> f64 {
        match self {
            Polarization::SigmaPlus => 1.0,
            Polarization::SigmaMinus => -1.0,
        }
    }
}

/// Propagation direction along the fiber axis (sign of the longitudinal
/// wavenumber).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Forward, Direction::Backward];

    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Cartesian mode field `(E_x, E_y, E_z)` at `(rho, phi, z)`, including the
/// azimuthal factors and the longitudinal plane-wave factor
/// `exp(i * direction * k * z)`, in the per-unit-length convention.
///
/// The backward mode is gauged so its transverse components match the
/// forward ones and `E_z` flips sign.
pub fn mode_field_cartesian(
    mode: &GuidedMode,
    sigma: Polarization,
    direction: Direction,
    rho: f64,
    phi: f64,
    z: f64,
) -> Result<[C64; 3], FiberError> {
    let (p, f, mut w) = mode.profile_triplet(rho)?;
    if direction == Direction::Backward {
        w = -w;
    }
    let s = sigma.sign();
    // E_rho - i E_phi = i (P + F); E_rho + i E_phi = i (P - F)
    let co = C64::new(0.0, (p + f) / (2.0 * SQRT_TAU));
    let counter = C64::new(0.0, (p - f) / (2.0 * SQRT_TAU));
    let e2 = C64::from_polar(1.0, 2.0 * s * phi);
    let ex = co + counter * e2;
    let ey = C64::new(0.0, s) * (co - counter * e2);
    let ez = C64::from_polar(w / SQRT_TAU, s * phi);
    let phase = C64::from_polar(1.0, direction.sign() * mode.wavenumber * z);
    Ok([ex * phase, ey * phase, ez * phase])
}

/// Transverse projection of the mode field with the azimuthal-angle-dependent
/// terms dropped (the paraxial-limit field shape): `A(rho) (x + i sigma y)`
/// with `A = (E_rho - i E_phi)/(2 sqrt(2 pi))`. Carries no longitudinal
/// phase; the vacuum-pole phase is applied by the caller.
pub fn mode_field_transverse_paraxial(
    mode: &GuidedMode,
    sigma: Polarization,
    rho: f64,
) -> Result<[C64; 3], FiberError> {
    let (p, f, _) = mode.profile_triplet(rho)?;
    let co = C64::new(0.0, (p + f) / (2.0 * SQRT_TAU));
    Ok([co, C64::new(0.0, sigma.sign()) * co, C64::new(0.0, 0.0)])
}
