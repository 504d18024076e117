//! Run configuration: a TOML file with flag overrides.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use emclosure::{Grid1D, Params, ScenarioKind, ScenarioSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n: 256, length: 2.0 * std::f64::consts::PI }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    /// Step size; `0.5·h` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    pub t_end: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { dt: None, t_end: 1.0 }
    }
}

/// Scenario selection; unset shape parameters take the scenario's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub em_amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pedestal: Option<f64>,
}

impl ScenarioConfig {
    pub fn spec(&self) -> ScenarioSpec {
        let mut s = ScenarioSpec::new(self.name);
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut s.amplitude, self.amplitude);
        set(&mut s.width, self.width);
        set(&mut s.wavenumber, self.wavenumber);
        set(&mut s.offset, self.offset);
        set(&mut s.em_amplitude, self.em_amplitude);
        set(&mut s.pedestal, self.pedestal);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub every: usize,
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { every: 10, dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub grid: GridConfig,
    pub params: Params,
    pub time: TimeConfig,
    pub scenario: ScenarioConfig,
    pub output: OutputConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| anyhow::anyhow!("invalid configuration: {e}"))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn grid(&self) -> emclosure::Result<Grid1D> {
        Grid1D::new(self.grid.n, self.grid.length)
    }

    /// Step size, defaulting to half the grid spacing.
    pub fn dt(&self, g: &Grid1D) -> f64 {
        self.time.dt.unwrap_or(0.5 * g.h())
    }

    /// Check what the core types do not: positive times and cadence.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.params.validate()?;
        if let Some(dt) = self.time.dt {
            anyhow::ensure!(dt > 0.0 && dt.is_finite(), "time.dt must be positive (got {dt})");
        }
        anyhow::ensure!(self.time.t_end >= 0.0 && self.time.t_end.is_finite(), "time.t_end must be >= 0 (got {})", self.time.t_end);
        anyhow::ensure!(self.output.every >= 1, "output.every must be >= 1");
        Ok(())
    }
}
