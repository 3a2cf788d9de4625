//! JSON scenario and result files.
//!
//! A scenario file holds `schema` (currently 1), a `units` table naming the
//! unit of every physical field, the scenario itself, the channel model
//! used, the generator seed when known, and the channel coefficients as
//! `[re, im]` pairs indexed `[ru][ue]`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radio::ChannelSet;
use crate::scenario::{validate, ChannelModel, Scenario};

pub const SCHEMA_VERSION: u32 = 1;

pub fn default_units() -> BTreeMap<String, String> {
    [
        ("bandwidth_hz", "Hz"),
        ("noise_psd", "W/Hz"),
        ("p_max", "W"),
        ("r_min", "bit/s"),
        ("c_max", "bit/s/Hz"),
        ("d_max", "s"),
        ("mu1", "packet/s"),
        ("mu2", "packet/s"),
        ("arrival_rate", "packet/s"),
        ("packet_size_bits", "bit"),
        ("sigma_q2", "W"),
        ("sigma_q_default", "W"),
        ("position", "m"),
        ("memory_gb", "GB"),
        ("storage_tb", "TB"),
        ("cpu_ghz", "GHz"),
        ("phi_idle", "W"),
        ("phi_per_unit", "W per weighted unit"),
        ("channels", "amplitude gain, [re, im]"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema: u32,
    pub units: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub channel_model: ChannelModel,
    pub scenario: Scenario,
    pub channels: ChannelSet,
}

impl ScenarioFile {
    pub fn new(scenario: Scenario, channels: ChannelSet, channel_model: ChannelModel, seed: Option<u64>) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            units: default_units(),
            seed,
            channel_model,
            scenario,
            channels,
        }
    }

    /// Schema, scenario invariants and channel dimensions.
    pub fn check(&self) -> Result<()> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::config("schema", format!("unsupported version {}", self.schema)));
        }
        if let Some(v) = validate(&self.scenario).first() {
            return Err(Error::config(v.entity.clone(), v.message.clone()));
        }
        self.channels.check(&self.scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        file.check()?;
        Ok(file)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}
