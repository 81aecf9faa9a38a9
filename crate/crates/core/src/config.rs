//! Run configuration: the key-value (TOML) file format shared by the
//! command-line tools. Flags override file values; the file round-trips
//! losslessly.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::casestudies::{Case1Params, Case1Port, Case2Params, PortModelSource};
use crate::sim::{FusionProfile, InterruptStyle, PortKind};
use crate::teacher::EqConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("config serialize error: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("invalid config value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for every randomized component of a run.
    pub seed: Option<u64>,
    /// Fusion profile name, e.g. `calibrated-v1`.
    pub fusion: Option<String>,
    pub port: Option<PortConfig>,
    pub eq: Option<EqConfig>,
    pub case1: Option<Case1Config>,
    pub case2: Option<Case2Config>,
    pub limits: Option<LimitsConfig>,
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortConfig {
    /// `standard`, `buffered-nonstrict` or `buffered-strict`.
    pub kind: String,
    /// Strict buffer capacity.
    pub n: Option<u32>,
    /// Extensions: `read-nb`, `intr-actual`, `intr-expected`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extensions: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case1Config {
    /// Messages per burst.
    pub n: u32,
    /// `nonstrict` or `strict`.
    pub port: String,
    /// Strict channel capacity; defaults to the burst length.
    pub capacity: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case2Config {
    pub n1: u32,
    pub n2: u32,
    pub n3: u32,
    pub size: u32,
    #[serde(default)]
    pub nonblocking_first: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsConfig {
    pub max_states: Option<usize>,
    /// `dfs` or `bfs`.
    pub search: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub model: Option<PathBuf>,
    pub dot: Option<PathBuf>,
    pub witness: Option<PathBuf>,
    pub report_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn fusion_profile(&self) -> Result<FusionProfile, ConfigError> {
        match &self.fusion {
            None => Ok(FusionProfile::Calibrated),
            Some(name) => FusionProfile::parse(name)
                .ok_or_else(|| ConfigError::Invalid(format!("unknown fusion profile `{name}`"))),
        }
    }

    pub fn eq_config(&self) -> EqConfig {
        let mut eq = self.eq.clone().unwrap_or_default();
        if let Some(seed) = self.seed {
            eq.rng_seed = seed;
        }
        eq
    }
}

/// Parses a port kind triple the way both the CLI and the config file spell
/// it.
pub fn parse_port_kind(
    kind: &str,
    n: Option<u32>,
    extensions: &[String],
) -> Result<PortKind, ConfigError> {
    let mut port = match kind {
        "standard" | "port" => PortKind::standard(),
        "buffered-nonstrict" | "nonstrict" => PortKind::nonstrict(),
        "buffered-strict" | "strict" => PortKind::strict(n.ok_or_else(|| {
            ConfigError::Invalid("buffered-strict needs a capacity (--n)".into())
        })?),
        other => {
            return Err(ConfigError::Invalid(format!("unknown port kind `{other}`")))
        }
    };
    if port.variant != crate::sim::PortVariant::BufferedStrict && n.is_some() {
        return Err(ConfigError::Invalid(
            "capacity (--n) is only meaningful for buffered-strict".into(),
        ));
    }
    for ext in extensions {
        port = match ext.as_str() {
            "read-nb" | "read_nb" => port.with_nonblocking_read(),
            "intr-actual" | "intr" => port.with_interrupt(InterruptStyle::Actual),
            "intr-expected" => port.with_interrupt(InterruptStyle::Expected),
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown extension `{other}`"
                )))
            }
        };
    }
    port.validate()
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(port)
}

impl Case1Config {
    pub fn to_params(&self, source: PortModelSource) -> Result<Case1Params, ConfigError> {
        let port = match self.port.as_str() {
            "nonstrict" | "buffered-nonstrict" => Case1Port::NonStrict,
            "strict" | "buffered-strict" => Case1Port::Strict {
                capacity: self.capacity.unwrap_or(self.n),
            },
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown case-1 port `{other}`"
                )))
            }
        };
        Ok(Case1Params {
            n: self.n,
            port,
            source,
        })
    }
}

impl Case2Config {
    pub fn to_params(&self, source: PortModelSource) -> Case2Params {
        Case2Params {
            n1: self.n1,
            n2: self.n2,
            n3: self.n3,
            size: self.size,
            nonblocking_first: self.nonblocking_first,
            source,
        }
    }
}
