//! Scenario configuration: TOML-style sections `[system]`, `[source.pv]`,
//! `[source.fc]`, `[load]`, `[sim]`. Every field is optional and falls back
//! to the built-in two-source defaults; unknown keys are rejected.

use std::path::Path;

use serde::Deserialize;

use crate::error::{Result, SimError};

#[derive(Debug, Clone, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    pub source: SourcesConfig,
    pub load: LoadConfig,
    pub sim: SimConfig,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Nominal bus voltage, V RMS.
    pub voltage_rms: f64,
    /// Nominal frequency, Hz.
    pub frequency_hz: f64,
    /// Inverter output filter inductance, H (sets the coupling reactance).
    pub filter_inductance: f64,
    /// Inverter output filter capacitance, F (kept for record; its ~1 Mohm
    /// shunt at nominal frequency is ignored in the phasor solve).
    pub filter_capacitance: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            voltage_rms: 320.0,
            frequency_hz: 5.0,
            filter_inductance: 35e-3,
            filter_capacitance: 3e-6,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SourcesConfig {
    pub pv: PvSourceConfig,
    pub fc: FcSourceConfig,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PvSourceConfig {
    pub rated_p: f64,
    pub rated_q: f64,
    /// Frequency-droop coefficient, rad/s/W. Default: 1% of nominal
    /// frequency at rated active power.
    pub m_coef: Option<f64>,
    /// Voltage-droop coefficient, V/var. Default: 5% of nominal voltage at
    /// rated reactive power.
    pub n_coef: Option<f64>,
    /// DC-side headroom factor used when sizing the array.
    pub headroom: f64,
    // Single-diode array parameters (one string; the scenario builder scales
    // the string count to cover rated_p * headroom).
    pub i_pv: f64,
    pub i_0: f64,
    pub ideality: f64,
    pub n_cell: u32,
    pub temperature: f64,
    pub irradiance: f64,
}

impl Default for PvSourceConfig {
    fn default() -> Self {
        PvSourceConfig {
            rated_p: 8_000.0,
            rated_q: 1_000.0,
            m_coef: None,
            n_coef: None,
            headroom: 1.5,
            i_pv: 8.0,
            i_0: 1e-10,
            ideality: 1.3,
            n_cell: 54,
            temperature: 298.15,
            irradiance: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct FcSourceConfig {
    pub rated_p: f64,
    pub rated_q: f64,
    pub m_coef: Option<f64>,
    pub n_coef: Option<f64>,
    pub headroom: f64,
    // DMFC cell parameters (single cell; the scenario builder picks the
    // series count to cover rated_p * headroom). Representative values, not
    // taken from any datasheet.
    pub temperature: f64,
    pub p_h2_anode: f64,
    pub p_h2_cathode: f64,
    pub n_h2_flow: f64,
    pub area: f64,
    pub r1: f64,
    pub r2: f64,
    pub i_max_norm: f64,
}

impl Default for FcSourceConfig {
    fn default() -> Self {
        FcSourceConfig {
            rated_p: 8_000.0,
            rated_q: 1_000.0,
            m_coef: None,
            n_coef: None,
            headroom: 1.5,
            temperature: 343.0,
            p_h2_anode: 3.0e5,
            p_h2_cathode: 1.0e5,
            n_h2_flow: 5.18e-3,
            area: 0.1,
            r1: 0.008,
            r2: 0.25,
            i_max_norm: 1.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct LoadConfig {
    /// Constant-power load at the bus, W.
    pub p: f64,
    /// vars
    pub q: f64,
}

impl Default for LoadConfig {
    fn default() -> Self {
        LoadConfig {
            p: 16_000.0,
            q: 2_000.0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    /// Integration step, s.
    pub dt: f64,
    /// End time, s.
    pub t_end: f64,
    /// Power-measurement low-pass cutoff, rad/s.
    pub filter_cutoff: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 1e-3,
            t_end: 10.0,
            filter_cutoff: 10.0,
        }
    }
}

impl ScenarioConfig {
    /// Parse a config document, with `overrides` as dotted `key=value` pairs
    /// (e.g. `source.pv.rated_p=8000`) applied over it; last occurrence wins.
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e| SimError::Config(format!("cannot parse config: {e}")))?;
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        table
            .try_into()
            .map_err(|e| SimError::Config(e.to_string()))
    }

    /// Load from an optional path; `None` means pure defaults plus overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| SimError::Config(format!("cannot read {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, overrides)
    }
}

/// Sets one dotted `key=value` override into the raw config table.
fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (path, raw_value) = item
        .split_once('=')
        .ok_or_else(|| SimError::Config(format!("override `{item}` must be key=value")))?;
    let value = parse_override_value(raw_value.trim());

    let segments: Vec<&str> = path.trim().split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(SimError::Config(format!("override key `{path}` is malformed")));
    }
    let mut current = table;
    for seg in &segments[..segments.len() - 1] {
        current = current
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                SimError::Config(format!("override key `{path}` traverses a non-table"))
            })?;
    }
    current.insert(segments[segments.len() - 1].to_string(), value);
    Ok(())
}

fn parse_override_value(raw: &str) -> toml::Value {
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    toml::Value::String(raw.to_string())
}
