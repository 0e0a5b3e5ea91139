//! Run configuration: JSON schema, defaults and validation.
//!
//! Unknown keys are rejected. Defaults reproduce the reference setup:
//! silica fiber `a = 200 nm`, `n = 1.45`, rubidium line `lambda0 = 780 nm`,
//! `gamma/2pi = 6.0666 MHz`, detuning grid `[-10, 10]` natural linewidths
//! with 401 points.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::greens::GreenVariant;
use crate::spectral::Truncation;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("config validation error at `{field}`: {constraint}")]
    Validation { field: String, constraint: String },
}

fn invalid(field: &str, constraint: impl ToString) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        constraint: constraint.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FiberConfig {
    pub radius_nm: f64,
    pub refractive_index: f64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            radius_nm: 200.0,
            refractive_index: 1.45,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AtomConfig {
    pub lambda0_nm: f64,
    #[serde(rename = "gamma_natural_MHz")]
    pub gamma_natural_mhz: f64,
    pub shift_delta_over_gamma: f64,
}

impl Default for AtomConfig {
    fn default() -> Self {
        Self {
            lambda0_nm: 780.0,
            gamma_natural_mhz: 6.0666,
            shift_delta_over_gamma: 0.0,
        }
    }
}

/// Longitudinal spacing choice: half of the guided wavelength `pi/k(omega0)`
/// or an explicit value in nm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpacingMode {
    HalfGuidedWavelength,
    ExplicitNm(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DisorderConfig {
    pub enabled: bool,
    pub mean_spacing_mode: SpacingMode,
    pub seed: u64,
}

impl Default for DisorderConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            mean_spacing_mode: SpacingMode::HalfGuidedWavelength,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArrayConfig {
    pub n_atoms: usize,
    pub spacing_mode: SpacingMode,
    pub rho_over_a: f64,
    pub phi_deg: f64,
    pub disorder: DisorderConfig,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self {
            n_atoms: 1,
            spacing_mode: SpacingMode::HalfGuidedWavelength,
            rho_over_a: 1.5,
            phi_deg: 0.0,
            disorder: DisorderConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    pub delta_min_gamma: f64,
    pub delta_max_gamma: f64,
    pub points: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            delta_min_gamma: -10.0,
            delta_max_gamma: 10.0,
            points: 401,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenModel {
    Full,
    GuidedOnly,
}

impl From<GreenModel> for GreenVariant {
    fn from(g: GreenModel) -> Self {
        match g {
            GreenModel::Full => GreenVariant::Full,
            GreenModel::GuidedOnly => GreenVariant::GuidedOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationConfig {
    Full,
    MaxFlips(usize),
}

impl From<TruncationConfig> for Truncation {
    fn from(t: TruncationConfig) -> Self {
        match t {
            TruncationConfig::Full => Truncation::Full,
            TruncationConfig::MaxFlips(s) => Truncation::MaxSpinFlips(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub green: GreenModel,
    pub truncation: TruncationConfig,
    pub sigma_at_scan_freq: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            green: GreenModel::Full,
            truncation: TruncationConfig::MaxFlips(1),
            sigma_at_scan_freq: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".to_string(),
            formats: vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg],
        }
    }
}

/// Complete run configuration of every subcommand.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub fiber: FiberConfig,
    pub atom: AtomConfig,
    pub array: ArrayConfig,
    pub scan: ScanConfig,
    pub model: ModelConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parse and validate a JSON configuration string.
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = serde_json::from_str(text)
            .map_err(|e| ConfigError::Parse(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        fn above(field: &str, value: f64, bound: f64, what: &str) -> Result<(), ConfigError> {
            if value.is_finite() && value > bound {
                Ok(())
            } else {
                Err(invalid(field, what))
            }
        }
        above("fiber.radius_nm", self.fiber.radius_nm, 0.0, "must be positive")?;
        above(
            "fiber.refractive_index",
            self.fiber.refractive_index,
            1.0,
            "must exceed 1",
        )?;
        above("atom.lambda0_nm", self.atom.lambda0_nm, 0.0, "must be positive")?;
        above(
            "atom.gamma_natural_MHz",
            self.atom.gamma_natural_mhz,
            0.0,
            "must be positive",
        )?;
        if !self.atom.shift_delta_over_gamma.is_finite() {
            return Err(invalid("atom.shift_delta_over_gamma", "must be finite"));
        }
        above(
            "array.rho_over_a",
            self.array.rho_over_a,
            1.0,
            "must exceed 1 (atom inside fiber)",
        )?;
        if let SpacingMode::ExplicitNm(nm) = self.array.spacing_mode {
            above("array.spacing_mode.explicit_nm", nm, 0.0, "must be positive")?;
        }
        if let SpacingMode::ExplicitNm(nm) = self.array.disorder.mean_spacing_mode {
            above(
                "array.disorder.mean_spacing_mode.explicit_nm",
                nm,
                0.0,
                "must be positive",
            )?;
        }
        if self.scan.points == 0 {
            return Err(invalid("scan.points", "must be at least 1"));
        }
        if self.scan.points > 1 && self.scan.delta_min_gamma >= self.scan.delta_max_gamma {
            return Err(invalid(
                "scan.delta_min_gamma",
                "must be below scan.delta_max_gamma",
            ));
        }
        Ok(())
    }
}
