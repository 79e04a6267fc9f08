//! Run configuration: a TOML file, resolved into core types.

use std::path::{Path, PathBuf};

use kerrfocus::capacity::SweepMode;
use kerrfocus::dt_model::{ModelOptions, ModelVariant, Normalization};
use kerrfocus::focusing::RingStrategy;
use kerrfocus::params::{derive_coefficients, direct_coefficients, Coefficients, PhysicalParams};
use kerrfocus::User;
use serde::Deserialize;

use crate::error::CliError;

pub const OUT_ENV: &str = "KERRFOCUS_OUT";
pub const DEFAULT_OUT: &str = "out";
pub const DEFAULT_OS: usize = 1024;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub channel: ChannelSection,
    pub focusing: Option<FocusingSection>,
    #[serde(default)]
    pub model: ModelSection,
    pub simulate: Option<SimulateSection>,
    pub validate: Option<ValidateSection>,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub io: IoSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub direct: Option<DirectChannel>,
    pub physical: Option<PhysicalChannel>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirectChannel {
    pub h11: f64,
    pub h12: f64,
    pub h21: f64,
    pub h22: f64,
    pub memory: usize,
    #[serde(default = "one")]
    pub es: f64,
    #[serde(default)]
    pub noise: f64,
    #[serde(default = "one")]
    pub ts: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalChannel {
    pub gamma1: f64,
    pub gamma2: f64,
    pub length: f64,
    pub gvm: f64,
    pub ts: f64,
    #[serde(default = "one")]
    pub es: f64,
    #[serde(default)]
    pub noise: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "strategy", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    Explicit { rings: Vec<u64> },
    Quadratic { c: u64 },
}

impl From<&StrategySpec> for RingStrategy {
    fn from(s: &StrategySpec) -> Self {
        match s {
            StrategySpec::Explicit { rings } => RingStrategy::Explicit(rings.clone()),
            StrategySpec::Quadratic { c } => RingStrategy::Quadratic { c: *c },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FocusingSection {
    pub p1: f64,
    pub p2: f64,
    pub user1: StrategySpec,
    pub user2: StrategySpec,
    /// Phases per ring; default scales with the square root of the SNR.
    pub phases1: Option<usize>,
    pub phases2: Option<usize>,
}

impl FocusingSection {
    pub fn power(&self, user: User) -> f64 {
        match user {
            User::One => self.p1,
            User::Two => self.p2,
        }
    }

    pub fn strategy(&self, user: User) -> RingStrategy {
        match user {
            User::One => (&self.user1).into(),
            User::Two => (&self.user2).into(),
        }
    }

    pub fn phases(&self, user: User) -> Option<usize> {
        match user {
            User::One => self.phases1,
            User::Two => self.phases2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum VariantSpec {
    #[default]
    Symmetric,
    Shifted,
}

impl From<VariantSpec> for ModelVariant {
    fn from(v: VariantSpec) -> Self {
        match v {
            VariantSpec::Symmetric => ModelVariant::Symmetric,
            VariantSpec::Shifted => ModelVariant::Shifted,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationSpec {
    #[default]
    Physical,
    Normalized,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub variant: VariantSpec,
    #[serde(default)]
    pub normalization: NormalizationSpec,
    #[serde(default)]
    pub mixed_v2: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub block_length: usize,
    #[serde(default = "yes")]
    pub noise: bool,
    #[serde(default = "yes")]
    pub write_inputs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    #[default]
    Focused,
    Random,
    Zero,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateSection {
    pub block_length: usize,
    #[serde(default)]
    pub inputs: InputKind,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepModeSpec {
    HighPower,
    LowNoise,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub mode: SweepModeSpec,
    #[serde(default = "both_users")]
    pub users: Vec<u8>,
    /// High-power mode: `P1 = noise * 10^(snr/10)`.
    pub snr_db: Option<Vec<f64>>,
    /// High-power mode: P1 values given directly.
    pub p1_grid: Option<Vec<f64>>,
    /// Low-noise mode: noise values, increasing.
    pub noise_grid: Option<Vec<f64>>,
    pub noise: Option<f64>,
    #[serde(default = "one")]
    pub beta: f64,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub phases: Option<usize>,
    /// Also run the one-phase-per-ring baseline.
    #[serde(default = "yes")]
    pub amplitude_only: bool,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IoSection {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub os: Option<usize>,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_threshold() -> f64 {
    1e-2
}

fn default_samples() -> usize {
    20_000
}

fn both_users() -> Vec<u8> {
    vec![1, 2]
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub os: Option<usize>,
    pub variant: Option<VariantSpec>,
}

/// Everything a subcommand needs, after validation and overrides.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub file: RunConfig,
    pub coeffs: Coefficients,
    pub opts: ModelOptions,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub os: usize,
}

impl Resolved {
    pub fn focusing(&self) -> Result<&FocusingSection, CliError> {
        self.file.focusing.as_ref().ok_or_else(|| missing("focusing"))
    }

    pub fn simulate(&self) -> Result<&SimulateSection, CliError> {
        self.file.simulate.as_ref().ok_or_else(|| missing("simulate"))
    }

    pub fn validate(&self) -> Result<&ValidateSection, CliError> {
        self.file.validate.as_ref().ok_or_else(|| missing("validate"))
    }

    pub fn sweep(&self) -> Result<&SweepSection, CliError> {
        self.file.sweep.as_ref().ok_or_else(|| missing("sweep"))
    }
}

fn missing(section: &str) -> CliError {
    CliError::Config(format!("section [{section}] is required for this subcommand"))
}

pub fn load(path: &Path, overrides: &Overrides) -> Result<Resolved, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let file: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    resolve(file, overrides)
}

pub fn resolve(file: RunConfig, overrides: &Overrides) -> Result<Resolved, CliError> {
    let coeffs = match (&file.channel.direct, &file.channel.physical) {
        (Some(d), None) => direct_coefficients(d.h11, d.h12, d.h21, d.h22, d.memory, d.es, d.noise, d.ts)?,
        (None, Some(p)) => derive_coefficients(&PhysicalParams {
            gamma1: p.gamma1,
            gamma2: p.gamma2,
            length: p.length,
            gvm: p.gvm,
            ts: p.ts,
            es: p.es,
            noise: p.noise,
        })?,
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "[channel]: give exactly one of [channel.direct] and [channel.physical], not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Config(
                "[channel]: one of [channel.direct] or [channel.physical] is required".into(),
            ))
        }
    };
    let variant = overrides.variant.unwrap_or(file.model.variant);
    let opts = ModelOptions {
        variant: variant.into(),
        normalization: match file.model.normalization {
            NormalizationSpec::Physical => Normalization::Physical,
            NormalizationSpec::Normalized => Normalization::Normalized,
        },
        mixed_v2: file.model.mixed_v2,
    };
    let out_dir = overrides
        .out
        .clone()
        .or_else(|| file.io.out_dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let seed = overrides.seed.or(file.io.seed).unwrap_or(0);
    let os = overrides.os.or(file.io.os).unwrap_or(DEFAULT_OS);
    Ok(Resolved {
        file,
        coeffs,
        opts,
        out_dir,
        seed,
        os,
    })
}

pub fn parse_user(k: u8) -> Result<User, CliError> {
    User::from_index(k).ok_or_else(|| CliError::Config(format!("[sweep] users: unknown user {k}; expected 1 or 2")))
}

impl SweepSection {
    /// The core sweep mode, with the grid checked for presence and exclusivity.
    pub fn mode(&self) -> Result<SweepMode, CliError> {
        let bad = |m: &str| Err(CliError::Config(format!("[sweep]: {m}")));
        match self.mode {
            SweepModeSpec::HighPower => {
                let Some(noise) = self.noise else {
                    return bad("high_power mode needs `noise`");
                };
                if self.noise_grid.is_some() || self.p1.is_some() || self.p2.is_some() {
                    return bad("`noise_grid`, `p1` and `p2` belong to low_noise mode");
                }
                let p1_grid = match (&self.snr_db, &self.p1_grid) {
                    (Some(snr), None) => snr.iter().map(|s| noise * 10f64.powf(s / 10.0)).collect(),
                    (None, Some(g)) => g.clone(),
                    _ => return bad("high_power mode needs exactly one of `snr_db` and `p1_grid`"),
                };
                Ok(SweepMode::HighPower {
                    p1_grid,
                    beta: self.beta,
                    noise,
                })
            }
            SweepModeSpec::LowNoise => {
                let (Some(p1), Some(p2), Some(grid)) = (self.p1, self.p2, &self.noise_grid) else {
                    return bad("low_noise mode needs `p1`, `p2` and `noise_grid`");
                };
                if self.snr_db.is_some() || self.p1_grid.is_some() || self.noise.is_some() {
                    return bad("`snr_db`, `p1_grid` and `noise` belong to high_power mode");
                }
                Ok(SweepMode::LowNoise {
                    p1,
                    p2,
                    noise_grid: grid.clone(),
                })
            }
        }
    }
}
