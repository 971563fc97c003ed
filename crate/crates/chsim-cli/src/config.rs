//! Run configuration: one human-editable TOML document with nested
//! sections, strict about unknown keys, and round-trippable through
//! serialization so manifests echo the complete effective configuration.

use anyhow::{bail, Context, Result};
use chsim::dynamics::{InitSpec, SystemKind};
use chsim::grid::Grid1D;
use chsim::integrator::IntegratorConfig;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n_points: usize,
    pub half_length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { n_points: 1024, half_length: 20.0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    pub m0: InitSpec,
    pub n0: InitSpec,
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig { m0: InitSpec::Zero, n0: InitSpec::Zero }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CharacteristicsConfig {
    pub n_seeds: usize,
    pub extra_seeds: Vec<f64>,
}

impl Default for CharacteristicsConfig {
    fn default() -> Self {
        CharacteristicsConfig { n_seeds: 64, extra_seeds: Vec::new() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    /// write field snapshots every this many samples; 0 disables
    pub snapshot_every: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { directory: "out".to_string(), snapshot_every: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemTag,
    pub grid: GridConfig,
    pub integrator: IntegratorConfig,
    pub init: InitConfig,
    pub characteristics: CharacteristicsConfig,
    pub outputs: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemTag::A,
            grid: GridConfig::default(),
            integrator: IntegratorConfig::default(),
            init: InitConfig::default(),
            characteristics: CharacteristicsConfig::default(),
            outputs: OutputConfig::default(),
        }
    }
}

/// Short system names used in config files: `A`, `B`, `cubic`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub enum SystemTag {
    A,
    B,
    #[serde(rename = "cubic")]
    Cubic,
}

impl SystemTag {
    pub fn kind(self) -> SystemKind {
        match self {
            SystemTag::A => SystemKind::SystemA,
            SystemTag::B => SystemKind::SystemB,
            SystemTag::Cubic => SystemKind::CubicCh,
        }
    }
}

impl RunConfig {
    /// Parse and validate; unknown keys are hard errors with the offending
    /// key named, parse errors carry line/column.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).context("failed to parse run configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.integrator
            .validate()
            .map_err(|e| anyhow::anyhow!("integrator section invalid: {e}"))?;
        if self.characteristics.n_seeds == 0 && self.characteristics.extra_seeds.is_empty() {
            bail!("characteristics section must request at least one seed");
        }
        let g = self.grid()?;
        for spec in [&self.init.m0, &self.init.n0] {
            spec.build(&g).map_err(|e| anyhow::anyhow!("initial data invalid: {e}"))?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid1D>> {
        Grid1D::new(self.grid.n_points, self.grid.half_length)
            .map_err(|e| anyhow::anyhow!("grid section invalid: {e}"))
    }

    /// Full effective configuration, defaults included.
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Apply a `dotted.path=value` override onto the TOML representation.
    pub fn with_override(&self, assignment: &str) -> Result<RunConfig> {
        let Some((path, value)) = assignment.split_once('=') else {
            bail!("override must look like section.key=value, got {assignment}");
        };
        let mut doc: toml::Value = toml::from_str(&self.to_toml())?;
        let parsed: toml::Value = match value.parse::<toml::Value>() {
            Ok(v) => v,
            Err(_) => toml::Value::String(value.to_string()),
        };
        let mut cursor = &mut doc;
        let parts: Vec<&str> = path.trim().split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            if i + 1 == parts.len() {
                let table = cursor
                    .as_table_mut()
                    .with_context(|| format!("{} is not a table", parts[..i].join(".")))?;
                table.insert(part.to_string(), parsed.clone());
            } else {
                let table = cursor
                    .as_table_mut()
                    .with_context(|| format!("{} is not a table", parts[..i].join(".")))?;
                cursor = table
                    .entry(part.to_string())
                    .or_insert(toml::Value::Table(Default::default()));
            }
        }
        let cfg: RunConfig = doc.try_into().context("override produced an invalid config")?;
        cfg.validate()?;
        Ok(cfg)
    }
}
