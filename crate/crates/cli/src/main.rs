//! `nanofiber-qed`: config-driven spectra of single-photon scattering from
//! atom arrays near an optical nanofiber.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical/runtime
//! failure, 4 selftest failure.

mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use nanofiber_qed::config::{OutputFormat, RunConfig};
use nanofiber_qed::experiments::{
    build_array, model_options, run_decay_rates, run_ensemble, run_mode_profiles, run_spectrum,
    setup_scene, spectrum_table, Scene,
};
use nanofiber_qed::selftest::run_selftest;
use nanofiber_qed::spectral::{basis_dimension, gamma_total, gamma_wg, SpectrumResult};
use nanofiber_qed::table::{emit_csv, Table};
use nanofiber_qed::GreenVariant;

#[derive(Parser)]
#[command(name = "nanofiber-qed", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON run configuration (defaults apply when omitted)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output.dir`)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (fallback: env NANOFIBER_QED_THREADS, then all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Disorder seed override (base seed for `ensemble`)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Mode profiles of the guided HE11 mode, with a Gaussian-fit comparison
    Modes(CommonArgs),
    /// Position-dependent spontaneous decay rates
    Decay(CommonArgs),
    /// Transmission/reflection/loss spectrum of the configured array
    Spectrum(CommonArgs),
    /// Seeded disorder ensemble of spectra
    Ensemble {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of disorder realizations
        #[arg(long, default_value_t = 32)]
        realizations: usize,
    },
    /// Run the built-in invariant suites and report PASS/FAIL per group
    Selftest {
        #[command(flatten)]
        common: CommonArgs,
    },
}

enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn report(&self) -> ExitCode {
        match self {
            CliError::Config(msg) => {
                eprintln!("error: config: {msg}");
                ExitCode::from(2)
            }
            CliError::Numerical(msg) => {
                eprintln!("error: numerical: {msg}");
                ExitCode::from(3)
            }
        }
    }
}

fn config_error<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn numerical_error<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numerical(e.to_string())
}

fn init_threads(requested: Option<usize>) {
    let n = requested.or_else(|| {
        std::env::var("NANOFIBER_QED_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(config_error)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &args.out {
        config.output.dir = out.display().to_string();
    }
    if let Some(seed) = args.seed {
        config.array.disorder.seed = seed;
    }
    Ok(config)
}

fn config_hash(config: &RunConfig) -> String {
    let canonical = serde_json::to_string(config).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    format!("{:x}", hasher.finalize())
}

fn ensure_out_dir(config: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(&config.output.dir);
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir)
}

fn wants(config: &RunConfig, format: OutputFormat) -> bool {
    config.output.formats.contains(&format)
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Derived quantities of the solved stage, embedded into `run_meta.json`.
fn run_meta(config: &RunConfig, scene: &Scene) -> Result<serde_json::Value, CliError> {
    let mode = &scene.mode;
    let rho = config.array.rho_over_a * scene.fiber.radius();
    let gamma = scene.transition.gamma_nat;
    let dim = basis_dimension(config.array.n_atoms, model_options(config).truncation);
    let meta = serde_json::json!({
        "tool": { "name": "nanofiber-qed", "version": env!("CARGO_PKG_VERSION") },
        "config": config,
        "config_sha256": config_hash(config),
        "derived": {
            "n_eff": mode.wavenumber(),
            "wavenumber_rad_per_m": scene.units.wavenumber_to_si(mode.wavenumber()),
            "group_velocity_over_c": mode.group_velocity(),
            "u_param": mode.u_param(),
            "half_guided_wavelength_nm":
                mode.half_guided_wavelength() / scene.units.length_from_nm(1.0),
            "gamma_over_omega0": gamma,
            "gamma_wg_over_gamma":
                gamma_wg(mode, &scene.transition, rho).map_err(numerical_error)? / gamma,
            "gamma_total_over_gamma":
                gamma_total(mode, &scene.transition, rho, GreenVariant::Full)
                    .map_err(numerical_error)? / gamma,
            "basis_dimension": dim as u64,
        },
    });
    Ok(meta)
}

fn write_meta(config: &RunConfig, scene: &Scene, dir: &Path) -> Result<(), CliError> {
    if wants(config, OutputFormat::Json) {
        let meta = run_meta(config, scene)?;
        write_file(
            &dir.join("run_meta.json"),
            &serde_json::to_string_pretty(&meta).expect("meta serializes"),
        )?;
    }
    Ok(())
}

fn spectrum_plot(spectrum: &SpectrumResult, title: &str) -> svg::Plot {
    let xs = &spectrum.detunings;
    let series = |label: &str, f: &dyn Fn(usize) -> f64, dashed: bool| svg::Series {
        label: label.into(),
        points: xs
            .iter()
            .enumerate()
            .map(|(i, &x)| (x, f(i)))
            .collect(),
        dashed,
    };
    svg::Plot {
        title: title.into(),
        x_label: "detuning (units of gamma)".into(),
        y_label: "probability".into(),
        series: vec![
            series("T", &|i| spectrum.points[i].t, false),
            series("R", &|i| spectrum.points[i].r, false),
            series("L", &|i| spectrum.points[i].l, true),
        ],
    }
}

fn table_plot(table: &Table, x: &str, ys: &[(&str, bool)], title: &str, y_label: &str) -> svg::Plot {
    let xs = table.column(x).unwrap_or_default();
    let series = ys
        .iter()
        .filter_map(|(name, dashed)| {
            table.column(name).map(|col| svg::Series {
                label: (*name).into(),
                points: xs.iter().cloned().zip(col).collect(),
                dashed: *dashed,
            })
        })
        .collect();
    svg::Plot {
        title: title.into(),
        x_label: x.into(),
        y_label: y_label.into(),
        series,
    }
}

fn cmd_modes(args: &CommonArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let scene = setup_scene(&config).map_err(numerical_error)?;
    let dir = ensure_out_dir(&config)?;
    // the configured index plus the weakly guided reference
    let mut variants = vec![config.fiber.refractive_index];
    if (config.fiber.refractive_index - 1.1).abs() > 1e-9 {
        variants.push(1.1);
    }
    let table = run_mode_profiles(&config, &variants).map_err(numerical_error)?;
    if wants(&config, OutputFormat::Csv) {
        write_file(&dir.join("modes.csv"), &emit_csv(&table))?;
    }
    if wants(&config, OutputFormat::Svg) {
        let plot = table_plot(
            &table,
            "rho_over_a",
            &[("minus_i_e_rho", false), ("minus_e_phi", false), ("e_z", false)],
            "HE11 mode profiles",
            "field amplitude",
        );
        write_file(&dir.join("modes.svg"), &plot.render(&config_hash(&config)))?;
    }
    write_meta(&config, &scene, &dir)
}

fn cmd_decay(args: &CommonArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let scene = setup_scene(&config).map_err(numerical_error)?;
    let dir = ensure_out_dir(&config)?;
    let table = run_decay_rates(&config).map_err(numerical_error)?;
    if wants(&config, OutputFormat::Csv) {
        write_file(&dir.join("decay.csv"), &emit_csv(&table))?;
    }
    if wants(&config, OutputFormat::Svg) {
        let plot = table_plot(
            &table,
            "rho_minus_a_over_a",
            &[
                ("gamma_wg_over_gamma", false),
                ("gamma_naive_sum_over_gamma", true),
                ("gamma_over_gamma", false),
            ],
            "Spontaneous decay rate vs distance",
            "rate (units of gamma)",
        );
        write_file(&dir.join("decay.svg"), &plot.render(&config_hash(&config)))?;
    }
    write_meta(&config, &scene, &dir)
}

fn cmd_spectrum(args: &CommonArgs) -> Result<(), CliError> {
    let config = load_config(args)?;
    let scene = setup_scene(&config).map_err(numerical_error)?;
    // validate the array geometry eagerly so config mistakes exit with 2
    build_array(&config, &scene).map_err(config_error)?;
    let dir = ensure_out_dir(&config)?;
    let spectrum = run_spectrum(&config).map_err(numerical_error)?;
    if wants(&config, OutputFormat::Csv) {
        let table = spectrum_table(&config, &spectrum);
        write_file(&dir.join("spectrum.csv"), &emit_csv(&table))?;
    }
    if wants(&config, OutputFormat::Svg) {
        let title = format!("N = {} spectrum", config.array.n_atoms);
        write_file(
            &dir.join("spectrum.svg"),
            &spectrum_plot(&spectrum, &title).render(&config_hash(&config)),
        )?;
    }
    write_meta(&config, &scene, &dir)
}

fn cmd_ensemble(common: &CommonArgs, realizations: usize) -> Result<(), CliError> {
    let mut config = load_config(common)?;
    config.array.disorder.enabled = true;
    let scene = setup_scene(&config).map_err(numerical_error)?;
    let dir = ensure_out_dir(&config)?;
    let base_seed = config.array.disorder.seed;
    let (summary, spectra) =
        run_ensemble(&config, realizations, base_seed).map_err(numerical_error)?;
    if wants(&config, OutputFormat::Csv) {
        for (i, spectrum) in spectra.iter().enumerate() {
            let table = spectrum_table(&config, spectrum)
                .with_meta("realization", i)
                .with_meta("seed", summary.seeds[i]);
            write_file(&dir.join(format!("spectrum_{i:03}.csv")), &emit_csv(&table))?;
        }
    }
    write_file(
        &dir.join("summary.json"),
        &serde_json::to_string_pretty(&summary).expect("summary serializes"),
    )?;
    if wants(&config, OutputFormat::Svg) && !spectra.is_empty() {
        let mut plot = spectrum_plot(&spectra[0], "Disorder ensemble (first realization)");
        plot.series.truncate(2); // T and R of the first realization
        write_file(&dir.join("ensemble.svg"), &plot.render(&config_hash(&config)))?;
    }
    write_meta(&config, &scene, &dir)
}

fn cmd_selftest(common: &CommonArgs) -> Result<bool, CliError> {
    // config accepted for symmetry; the invariant suite runs on the
    // reference stage regardless
    let _ = load_config(common)?;
    let results = run_selftest();
    let mut all_pass = true;
    for r in &results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        println!("{status} {}: {}", r.group, r.detail);
        all_pass &= r.pass;
    }
    Ok(all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Modes(c) | Command::Decay(c) | Command::Spectrum(c) => c.clone(),
        Command::Ensemble { common, .. } | Command::Selftest { common } => common.clone(),
    };
    init_threads(common.threads);
    let outcome = match &cli.command {
        Command::Modes(args) => cmd_modes(args),
        Command::Decay(args) => cmd_decay(args),
        Command::Spectrum(args) => cmd_spectrum(args),
        Command::Ensemble {
            common,
            realizations,
        } => cmd_ensemble(common, *realizations),
        Command::Selftest { common } => match cmd_selftest(common) {
            Ok(true) => Ok(()),
            Ok(false) => {
                eprintln!("error: selftest: one or more invariant groups failed");
                return ExitCode::from(4);
            }
            Err(e) => Err(e),
        },
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}
