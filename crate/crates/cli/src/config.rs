//! Tool configuration: flags, then `HOWIRE_DATA_ROOT`, then the config file, then defaults.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use howire_core::forge::curation::validate_roster;
use howire_core::forge::{GenerateConfig, GridLimits};
use howire_core::CameraIntrinsics;
use serde::Deserialize;

pub const DATA_ROOT_ENV: &str = "HOWIRE_DATA_ROOT";
pub const DEFAULT_BIND: &str = "127.0.0.1:8080";
pub const DEFAULT_FOV_DEG: f64 = 45.0;

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntrinsicsFile {
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub vertical_fov_deg: Option<f64>,
}

/// Contents of the TOML config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub data_root: Option<PathBuf>,
    pub seed: Option<u64>,
    pub solids: Option<usize>,
    pub views: Option<usize>,
    pub split_ratio: Option<f64>,
    pub grid: Option<GridLimits>,
    pub intrinsics: Option<IntrinsicsFile>,
    pub bind: Option<String>,
    pub roster: Option<Vec<String>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Values given on the command line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub data_root: Option<PathBuf>,
    pub seed: Option<u64>,
    pub solids: Option<usize>,
    pub views: Option<usize>,
    pub split_ratio: Option<f64>,
    pub bind: Option<String>,
    pub roster: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToolConfig {
    pub data_root: PathBuf,
    pub seed: u64,
    pub solids: usize,
    pub views: usize,
    pub split_ratio: f64,
    pub grid: GridLimits,
    pub intrinsics: CameraIntrinsics,
    pub bind: String,
    pub roster: Vec<String>,
}

pub fn default_roster() -> Vec<String> {
    ["voter1", "voter2", "voter3"].map(String::from).to_vec()
}

impl ToolConfig {
    pub fn resolve(flags: &Overrides, env_data_root: Option<PathBuf>, file: &FileConfig) -> anyhow::Result<Self> {
        let defaults = GenerateConfig::default();
        let k = file.intrinsics.clone().unwrap_or_default();
        let intrinsics = CameraIntrinsics::from_fov(
            k.width.unwrap_or(defaults.intrinsics.width),
            k.height.unwrap_or(defaults.intrinsics.height),
            k.vertical_fov_deg.unwrap_or(DEFAULT_FOV_DEG),
        );
        let config = Self {
            data_root: flags
                .data_root
                .clone()
                .or(env_data_root)
                .or_else(|| file.data_root.clone())
                .unwrap_or_else(|| PathBuf::from("data")),
            seed: flags.seed.or(file.seed).unwrap_or(defaults.seed),
            solids: flags.solids.or(file.solids).unwrap_or(defaults.solids),
            views: flags.views.or(file.views).unwrap_or(defaults.views),
            split_ratio: flags.split_ratio.or(file.split_ratio).unwrap_or(defaults.split_ratio),
            grid: file.grid.unwrap_or(defaults.grid),
            intrinsics,
            bind: flags.bind.clone().or_else(|| file.bind.clone()).unwrap_or_else(|| DEFAULT_BIND.to_string()),
            roster: flags.roster.clone().or_else(|| file.roster.clone()).unwrap_or_else(default_roster),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.solids == 0 || self.views == 0 {
            bail!("solids and views must be positive");
        }
        if !(0.0..=1.0).contains(&self.split_ratio) {
            bail!("split ratio {} outside [0, 1]", self.split_ratio);
        }
        self.intrinsics.validate()?;
        validate_roster(&self.roster)?;
        Ok(())
    }

    pub fn generate_config(&self) -> GenerateConfig {
        GenerateConfig {
            seed: self.seed,
            solids: self.solids,
            views: self.views,
            split_ratio: self.split_ratio,
            grid: self.grid,
            intrinsics: self.intrinsics,
            ..GenerateConfig::default()
        }
    }
}
