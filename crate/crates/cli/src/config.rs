//! Experiment configuration: JSON file merged under command-line flags.

use std::fmt;
use std::path::Path;

use secrecy_lab::bounds::PowerScaling;
use secrecy_lab::channel::ChannelModel;
use secrecy_lab::multi::MultiModel;
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "SECRECY_LAB_SEED";
pub const DEFAULT_SEED: u64 = 1;

/// Bad input from the user; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn bad<T>(msg: impl Into<String>) -> anyhow::Result<T> {
    Err(ConfigError(msg.into()).into())
}

/// Every field is optional in the file. After resolution the fields used by
/// the subcommand are filled in, and the struct is echoed into the output
/// header; feeding that line back through `--config` reproduces the run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    /// A single-adversary model (`hm`, `he`, `hz`) or a multi-adversary one
    /// (`hm`, `he_list`, `hz_list`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pj: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_jammer_csi: Option<bool>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pt_scaling: Option<PowerScaling>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pj_scaling: Option<PowerScaling>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub renewals: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_mode: Option<String>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adversary: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub accounting: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_tilde: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_key: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<usize>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub figure: Option<String>,
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())).into())
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        serde_json::from_str(&read(path)?).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
    }

    pub fn load_model(path: &Path) -> anyhow::Result<serde_json::Value> {
        serde_json::from_str(&read(path)?).map_err(|e| ConfigError(format!("{}: {e}", path.display())).into())
    }

    fn model_value(&self) -> anyhow::Result<&serde_json::Value> {
        match &self.model {
            Some(v) => Ok(v),
            None => bad("no channel model given (use --model or a \"model\" entry in --config)"),
        }
    }

    pub fn channel_model(&self) -> anyhow::Result<ChannelModel> {
        let text = self.model_value()?.to_string();
        Ok(ChannelModel::from_json(&text)?)
    }

    /// Accepts either model form; a single adversary becomes `S = 1`.
    pub fn multi_model(&self) -> anyhow::Result<MultiModel> {
        let v = self.model_value()?;
        let text = v.to_string();
        if v.get("he_list").is_some() {
            Ok(MultiModel::from_json(&text)?)
        } else {
            Ok(MultiModel::from_single(&ChannelModel::from_json(&text)?))
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}
