//! Figure-style pipelines: mode profiles with a Gaussian-fit comparison,
//! position-dependent decay rates, single-run spectra and seeded disorder
//! ensembles. Every pipeline is a deterministic function of
//! `(configuration, seed)` and embeds its configuration in the emitted
//! tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atomic::{
    build_ordered_array, sample_disordered_array, AtomArray, AtomicError, AtomicTransition,
};
use crate::config::{RunConfig, SpacingMode};
use crate::fiber::{
    normalize_mode, FiberError, FiberSpec, GuidedMode,
};
use crate::greens::GreenVariant;
use crate::spectral::{
    compute_spectrum, detuning_grid, gamma_ext, gamma_wg, ModelOptions, ScatteringError,
    SpectrumResult,
};
use crate::table::Table;
use crate::units::{UnitSystem, LAMBDA0_INTERNAL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Fiber(#[from] FiberError),
    #[error(transparent)]
    Atomic(#[from] AtomicError),
    #[error(transparent)]
    Scattering(#[from] ScatteringError),
}

/// Solved physical stage shared by the pipelines: units, fiber, normalized
/// mode and transition constants.
#[derive(Debug, Clone)]
pub struct Scene {
    pub units: UnitSystem,
    pub fiber: FiberSpec,
    pub mode: GuidedMode,
    pub transition: AtomicTransition,
}

/// Solve and normalize the guided mode for a configuration.
pub fn setup_scene(config: &RunConfig) -> Result<Scene, ExperimentError> {
    let units = UnitSystem::new(config.atom.lambda0_nm, config.atom.gamma_natural_mhz);
    let fiber = FiberSpec::new(
        units.length_from_nm(config.fiber.radius_nm),
        config.fiber.refractive_index * config.fiber.refractive_index,
    )?;
    let mode = normalize_mode(&GuidedMode::solve(fiber, 1.0)?)?;
    let transition = AtomicTransition::new(units.gamma_nat);
    Ok(Scene {
        units,
        fiber,
        mode,
        transition,
    })
}

fn resolve_spacing(scene: &Scene, mode: SpacingMode) -> f64 {
    match mode {
        SpacingMode::HalfGuidedWavelength => scene.mode.half_guided_wavelength(),
        SpacingMode::ExplicitNm(nm) => scene.units.length_from_nm(nm),
    }
}

/// Build the atom array of a configuration (ordered, or disordered with the
/// configured seed).
pub fn build_array(config: &RunConfig, scene: &Scene) -> Result<AtomArray, ExperimentError> {
    build_array_seeded(config, scene, config.array.disorder.seed)
}

/// Build the array with an explicit disorder seed (ensemble realizations).
pub fn build_array_seeded(
    config: &RunConfig,
    scene: &Scene,
    seed: u64,
) -> Result<AtomArray, ExperimentError> {
    let rho = config.array.rho_over_a * scene.fiber.radius();
    let phi = config.array.phi_deg.to_radians();
    let array = if config.array.disorder.enabled {
        let mean = resolve_spacing(scene, config.array.disorder.mean_spacing_mode);
        sample_disordered_array(
            scene.transition,
            &scene.fiber,
            config.array.n_atoms,
            mean,
            rho,
            phi,
            seed,
        )?
    } else {
        let spacing = resolve_spacing(scene, config.array.spacing_mode);
        build_ordered_array(
            scene.transition,
            &scene.fiber,
            config.array.n_atoms,
            spacing,
            rho,
            phi,
        )?
    };
    Ok(array)
}

/// Model options implied by a configuration.
pub fn model_options(config: &RunConfig) -> ModelOptions {
    ModelOptions {
        green: config.model.green.into(),
        truncation: config.model.truncation.into(),
        shift_delta_over_gamma: config.atom.shift_delta_over_gamma,
        sigma_at_scan_freq: config.model.sigma_at_scan_freq,
        ..ModelOptions::default()
    }
}

fn config_meta(table: Table, config: &RunConfig) -> Table {
    table.with_meta(
        "config",
        serde_json::to_string(config).expect("config serializes"),
    )
}

/// Least-squares Gaussian fit of a mode intensity profile:
/// `ln I = log_amp - 2 rho^2 / waist^2`, unweighted over the sampled points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub log_amp: f64,
    pub waist: f64,
    /// RMS residual of the log-intensity over the fitted region.
    pub rms_residual: f64,
}

/// Fit `exp(c0 + c1 rho^2)` to `(rho, intensity)` samples by linear least
/// squares on the log-intensity.
pub fn gaussian_fit(samples: &[(f64, f64)]) -> GaussianFit {
    let n = samples.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(rho, intensity) in samples {
        let x = rho * rho;
        let y = intensity.ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    let c1 = (n * sxy - sx * sy) / denom;
    let c0 = (sy - c1 * sx) / n;
    let mut ss = 0.0;
    for &(rho, intensity) in samples {
        let r = intensity.ln() - (c0 + c1 * rho * rho);
        ss += r * r;
    }
    GaussianFit {
        log_amp: c0,
        waist: if c1 < 0.0 { (-2.0 / c1).sqrt() } else { f64::INFINITY },
        rms_residual: (ss / n).sqrt(),
    }
}

/// Mode-profile table over the given refractive-index variants: the three
/// real profile functions against radius, with the exterior Gaussian fit of
/// each variant's intensity profile recorded in the metadata.
pub fn run_mode_profiles(
    config: &RunConfig,
    variants: &[f64],
) -> Result<Table, ExperimentError> {
    let mut table = Table::new(&[
        "refractive_index",
        "rho_over_a",
        "minus_i_e_rho",
        "minus_e_phi",
        "e_z",
        "intensity",
        "gaussian_fit_intensity",
    ]);
    table = config_meta(table, config);
    let units = UnitSystem::new(config.atom.lambda0_nm, config.atom.gamma_natural_mhz);
    let a = units.length_from_nm(config.fiber.radius_nm);
    let rho_max = a + 2.0 * LAMBDA0_INTERNAL;
    let n_points = 400usize;
    for &index in variants {
        let fiber = FiberSpec::new(a, index * index)?;
        let mode = normalize_mode(&GuidedMode::solve(fiber, 1.0)?)?;
        // exterior samples for the fit
        let mut samples = Vec::new();
        for i in 0..=200 {
            let rho = a + (rho_max - a) * i as f64 / 200.0;
            let (p, f, w) = mode.profile_triplet(rho)?;
            samples.push((rho, p * p + f * f + w * w));
        }
        let fit = gaussian_fit(&samples);
        table = table
            .with_meta(&format!("gaussian_fit_n{index}"), serde_json::to_string(&fit).unwrap());
        for i in 0..=n_points {
            let rho = rho_max * i as f64 / n_points as f64;
            let rho = rho.max(1e-9);
            let (p, f, w) = mode.profile_triplet(rho)?;
            let intensity = p * p + f * f + w * w;
            let fitted = (fit.log_amp - 2.0 * rho * rho / (fit.waist * fit.waist)).exp();
            table.push_row(vec![index, rho / a, p, f, w, intensity, fitted]);
        }
    }
    Ok(table)
}

/// Decay-rate table against distance from the surface: the guided
/// contribution, the naive sum with the natural rate, and the external-mode
/// estimate. (The exact external-mode decay is outside this model; the
/// `gamma_over_gamma` column uses the paraxial-subtraction estimate.)
pub fn run_decay_rates(config: &RunConfig) -> Result<Table, ExperimentError> {
    let scene = setup_scene(config)?;
    let mut table = Table::new(&[
        "rho_minus_a_over_a",
        "rho_minus_a_nm",
        "gamma_wg_over_gamma",
        "gamma_naive_sum_over_gamma",
        "gamma_over_gamma",
    ]);
    table = config_meta(table, config).with_meta(
        "note",
        "gamma_over_gamma is the guided + paraxial-subtraction estimate; the exact external-mode rate is not computed",
    );
    let a = scene.fiber.radius();
    let gamma = scene.transition.gamma_nat;
    let lambda0_nm = config.atom.lambda0_nm;
    let max_dist = 2.5 * LAMBDA0_INTERNAL;
    let n_points = 320usize;
    for i in 0..=n_points {
        let dist = 0.01 * a + (max_dist - 0.01 * a) * i as f64 / n_points as f64;
        let rho = a + dist;
        let wg = gamma_wg(&scene.mode, &scene.transition, rho)?;
        let ext = gamma_ext(&scene.mode, &scene.transition, rho)?;
        table.push_row(vec![
            dist / a,
            dist / LAMBDA0_INTERNAL * lambda0_nm,
            wg / gamma,
            (wg + gamma) / gamma,
            (wg + ext) / gamma,
        ]);
    }
    Ok(table)
}

/// Spectrum CSV column contract (bit-exact header of `spectrum.csv`).
pub const SPECTRUM_COLUMNS: [&str; 10] = [
    "delta_over_gamma",
    "T",
    "R",
    "L",
    "T_rayleigh_same",
    "T_rayleigh_cross",
    "T_raman",
    "R_rayleigh_same",
    "R_rayleigh_cross",
    "R_raman",
];

/// Render a spectrum into the tabular contract.
pub fn spectrum_table(config: &RunConfig, spectrum: &SpectrumResult) -> Table {
    let mut table = Table::new(&SPECTRUM_COLUMNS);
    table = config_meta(table, config);
    for (d, p) in spectrum.detunings.iter().zip(&spectrum.points) {
        table.push_row(vec![
            *d,
            p.t,
            p.r,
            p.l,
            p.t_rayleigh_same,
            p.t_rayleigh_cross,
            p.t_raman,
            p.r_rayleigh_same,
            p.r_rayleigh_cross,
            p.r_raman,
        ]);
    }
    table
}

/// Run the spectrum pipeline of a configuration.
pub fn run_spectrum(config: &RunConfig) -> Result<SpectrumResult, ExperimentError> {
    let scene = setup_scene(config)?;
    let array = build_array(config, &scene)?;
    let grid = detuning_grid(
        config.scan.delta_min_gamma,
        config.scan.delta_max_gamma,
        config.scan.points,
    );
    Ok(compute_spectrum(
        &array,
        &scene.mode,
        &grid,
        &model_options(config),
    )?)
}

/// The lossless/full spectrum pair of one geometry (the single-atom and
/// ordered-array reference runs).
pub fn run_spectrum_pair(
    config: &RunConfig,
) -> Result<(SpectrumResult, SpectrumResult), ExperimentError> {
    let scene = setup_scene(config)?;
    let array = build_array(config, &scene)?;
    let grid = detuning_grid(
        config.scan.delta_min_gamma,
        config.scan.delta_max_gamma,
        config.scan.points,
    );
    let mut options = model_options(config);
    options.green = GreenVariant::GuidedOnly;
    let lossless = compute_spectrum(&array, &scene.mode, &grid, &options)?;
    options.green = GreenVariant::Full;
    let full = compute_spectrum(&array, &scene.mode, &grid, &options)?;
    Ok((lossless, full))
}

/// Count local minima of a transmission spectrum: strict interior minima
/// after 5-point moving-average smoothing.
pub fn local_minima_count(t: &[f64]) -> usize {
    if t.len() < 7 {
        return 0;
    }
    let smoothed: Vec<f64> = t
        .windows(5)
        .map(|w| w.iter().sum::<f64>() / 5.0)
        .collect();
    smoothed
        .windows(3)
        .filter(|w| w[1] < w[0] && w[1] < w[2])
        .count()
}

fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Per-realization statistics of the disorder ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationStats {
    pub seed: u64,
    pub peak_r: f64,
    pub peak_r_rayleigh: f64,
    pub peak_l: f64,
    pub t_min: f64,
    pub local_t_minima: usize,
}

/// Ensemble summary: per-realization rows plus aggregates recomputable from
/// them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_realizations: usize,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub ordered_peak_r: f64,
    pub ordered_peak_r_rayleigh: f64,
    pub realizations: Vec<RealizationStats>,
    pub median_peak_r: f64,
    pub median_peak_r_ratio: f64,
    pub median_peak_r_rayleigh_ratio: f64,
    pub peak_r_ratio_q25: f64,
    pub peak_r_ratio_q75: f64,
    pub multi_minima_fraction: f64,
}

/// Run the seeded disorder ensemble: `n_realizations` spectra with seeds
/// `base_seed + i`, summarized against the ordered baseline of the same
/// configuration.
pub fn run_ensemble(
    config: &RunConfig,
    n_realizations: usize,
    base_seed: u64,
) -> Result<(EnsembleSummary, Vec<SpectrumResult>), ExperimentError> {
    let scene = setup_scene(config)?;
    let grid = detuning_grid(
        config.scan.delta_min_gamma,
        config.scan.delta_max_gamma,
        config.scan.points,
    );
    let options = model_options(config);

    let mut ordered_config = config.clone();
    ordered_config.array.disorder.enabled = false;
    let ordered_array = build_array(&ordered_config, &scene)?;
    let ordered = compute_spectrum(&ordered_array, &scene.mode, &grid, &options)?;

    let mut disordered_config = config.clone();
    disordered_config.array.disorder.enabled = true;

    let mut spectra = Vec::with_capacity(n_realizations);
    let mut stats = Vec::with_capacity(n_realizations);
    let mut seeds = Vec::with_capacity(n_realizations);
    for i in 0..n_realizations {
        let seed = base_seed.wrapping_add(i as u64);
        seeds.push(seed);
        let array = build_array_seeded(&disordered_config, &scene, seed)?;
        let spectrum = compute_spectrum(&array, &scene.mode, &grid, &options)?;
        let t: Vec<f64> = spectrum.points.iter().map(|p| p.t).collect();
        stats.push(RealizationStats {
            seed,
            peak_r: spectrum.peak_r(),
            peak_r_rayleigh: spectrum.peak_r_rayleigh(),
            peak_l: spectrum.peak_l(),
            t_min: spectrum.min_t(),
            local_t_minima: local_minima_count(&t),
        });
        spectra.push(spectrum);
    }

    let ratios: Vec<f64> = stats.iter().map(|s| s.peak_r / ordered.peak_r()).collect();
    let rayleigh_ratios: Vec<f64> = stats
        .iter()
        .map(|s| s.peak_r_rayleigh / ordered.peak_r_rayleigh())
        .collect();
    let multi = stats.iter().filter(|s| s.local_t_minima >= 2).count();
    let summary = EnsembleSummary {
        n_realizations,
        base_seed,
        seeds,
        ordered_peak_r: ordered.peak_r(),
        ordered_peak_r_rayleigh: ordered.peak_r_rayleigh(),
        median_peak_r: median(&stats.iter().map(|s| s.peak_r).collect::<Vec<_>>()),
        median_peak_r_ratio: median(&ratios),
        median_peak_r_rayleigh_ratio: median(&rayleigh_ratios),
        peak_r_ratio_q25: quantile(&ratios, 0.25),
        peak_r_ratio_q75: quantile(&ratios, 0.75),
        multi_minima_fraction: multi as f64 / n_realizations.max(1) as f64,
        realizations: stats,
    };
    Ok((summary, spectra))
}
