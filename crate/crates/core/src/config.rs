//! Run configuration: TOML sections with the full paper parameter set baked
//! in as defaults, so an empty config reproduces the reference setup. An
//! optional `[overrides]` table of dotted keys is applied onto the parsed
//! document before deserialization, which makes every field overridable
//! without bespoke plumbing.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::channel::FadingConfig;
use crate::scenario::{DeploymentKind, GridGeometry, ScenarioParams};
use crate::{DensimError, Result};

/// Campaign controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Deployments simulated by `densim run`.
    pub deployments: Vec<DeploymentKind>,
    /// One independent drop per seed.
    pub seeds: Vec<u64>,
    /// Slots per drop (0.25 ms each).
    pub n_slots: u64,
    pub output_dir: PathBuf,
    /// Write the per-slot transport-block trace CSV.
    pub write_trace: bool,
    /// Write the per-link channel trace CSV (slot, link, prb, loss, |h|^2).
    pub write_channel_trace: bool,
    /// Re-run association every this many slots; 0 keeps the initial one.
    pub association_interval_slots: u64,
    /// Slots between geometry refreshes (positions, beams, large-scale).
    pub geometry_update_interval_slots: u64,
    /// Optional scenario layout file overriding default node placement.
    pub layout: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            deployments: DeploymentKind::ALL.to_vec(),
            seeds: (1..=10).collect(),
            n_slots: 8000,
            output_dir: PathBuf::from("out"),
            write_trace: true,
            write_channel_trace: false,
            association_interval_slots: 0,
            geometry_update_interval_slots: 20,
            layout: None,
        }
    }
}

/// Carrier and numerology.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub scs_khz: f64,
    pub subcarriers_per_prb: usize,
    pub n_prbs: usize,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self {
            carrier_ghz: 28.0,
            bandwidth_mhz: 50.0,
            scs_khz: 60.0,
            subcarriers_per_prb: 12,
            n_prbs: 66,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 9.0,
        }
    }
}

impl RadioSection {
    pub fn prb_bandwidth_hz(&self) -> f64 {
        self.subcarriers_per_prb as f64 * self.scs_khz * 1e3
    }
}

/// Repeater settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NcrSection {
    /// Nominal amplify-and-forward gain, dB.
    pub gain_db: f64,
    /// Clip the per-PRB output at the node's rated transmit power.
    pub cap_output_power: bool,
}

impl Default for NcrSection {
    fn default() -> Self {
        Self {
            gain_db: 60.0,
            cap_output_power: true,
        }
    }
}

/// Reflective surface settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RisSection {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Phase quantization bits; 0 means continuous phases.
    pub phase_bits: u32,
    /// Slots between reflection retargeting decisions.
    pub retarget_interval_slots: u64,
}

impl Default for RisSection {
    fn default() -> Self {
        Self {
            n_rows: 32,
            n_cols: 32,
            phase_bits: 0,
            retarget_interval_slots: 200,
        }
    }
}

/// Link adaptation and transport-block settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MacSection {
    pub overhead_factor: f64,
    pub olla_step_down_db: f64,
    pub olla_step_up_db: f64,
    pub olla_min_db: f64,
    pub olla_max_db: f64,
    pub bler_slope_per_db: f64,
    /// Idealized error-free links (every block ACKs).
    pub ideal_bler: bool,
}

impl Default for MacSection {
    fn default() -> Self {
        Self {
            overhead_factor: 0.86,
            olla_step_down_db: 1.0,
            olla_step_up_db: 0.1,
            olla_min_db: -20.0,
            olla_max_db: 5.0,
            bler_slope_per_db: 2.0,
            ideal_bler: false,
        }
    }
}

/// Beam codebook granularity per panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodebookSection {
    pub n_az: usize,
    pub n_el: usize,
}

impl Default for CodebookSection {
    fn default() -> Self {
        Self { n_az: 8, n_el: 4 }
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub radio: RadioSection,
    pub geometry: GridGeometry,
    pub scenario: ScenarioParams,
    pub channel: FadingConfig,
    pub ncr: NcrSection,
    pub ris: RisSection,
    pub mac: MacSection,
    pub codebook: CodebookSection,
}

impl RunConfig {
    /// Parse a TOML document, applying its `[overrides]` table (dotted keys
    /// onto any field) before deserialization.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text)
            .map_err(|e| DensimError::Config(format!("config parse error: {e}")))?;
        if let Some(overrides) = table.remove("overrides") {
            let overrides = overrides.as_table().cloned().ok_or_else(|| {
                DensimError::Config("[overrides] must be a table of dotted keys".into())
            })?;
            for (key, value) in overrides {
                apply_override(&mut table, &key, value)?;
            }
        }
        let text = toml::to_string(&table)
            .map_err(|e| DensimError::Config(format!("config re-encode error: {e}")))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| DensimError::Config(format!("config error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            DensimError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self)
            .map_err(|e| DensimError::Config(format!("config serialize error: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.run.deployments.is_empty() {
            return Err(DensimError::Config("run.deployments is empty".into()));
        }
        if self.run.seeds.is_empty() {
            return Err(DensimError::Config("run.seeds is empty".into()));
        }
        if self.run.n_slots == 0 {
            return Err(DensimError::Config("run.n_slots must be at least 1".into()));
        }
        let occupied = self.radio.n_prbs as f64 * self.radio.prb_bandwidth_hz();
        if occupied > self.radio.bandwidth_mhz * 1e6 + 1e-6 {
            return Err(DensimError::Config(format!(
                "radio.n_prbs: {} PRBs of {} kHz exceed radio.bandwidth_mhz = {}",
                self.radio.n_prbs,
                self.radio.prb_bandwidth_hz() / 1e3,
                self.radio.bandwidth_mhz
            )));
        }
        if self.radio.carrier_ghz < 0.5 || self.radio.carrier_ghz > 100.0 {
            return Err(DensimError::Config(
                "radio.carrier_ghz outside [0.5, 100]".into(),
            ));
        }
        if self.ris.n_rows == 0 || self.ris.n_cols == 0 {
            return Err(DensimError::Config("ris.n_rows/n_cols must be positive".into()));
        }
        if self.codebook.n_az == 0 || self.codebook.n_el == 0 {
            return Err(DensimError::Config("codebook.n_az/n_el must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.mac.overhead_factor) {
            return Err(DensimError::Config("mac.overhead_factor outside [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.channel.temporal_rho) {
            return Err(DensimError::Config("channel.temporal_rho outside [0, 1]".into()));
        }
        self.geometry.validate()?;
        Ok(())
    }

    /// Thermal noise per PRB, mW.
    pub fn noise_per_prb_mw(&self) -> f64 {
        crate::phy::noise_power_prb(
            self.radio.noise_density_dbm_hz,
            self.radio.subcarriers_per_prb,
            self.radio.scs_khz * 1e3,
            self.radio.noise_figure_db,
        )
    }
}

/// Apply `key = value` where key is a dotted path into the TOML document.
fn apply_override(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(DensimError::Config(format!("bad override key '{key}'")));
    }
    let mut current = table;
    for part in &parts[..parts.len() - 1] {
        current = current
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                DensimError::Config(format!("override '{key}' traverses a non-table value"))
            })?;
    }
    current.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Key-value pairs of the summary table (per deployment and direction).
pub type SummaryRows = BTreeMap<(DeploymentKind, String), Vec<(String, f64)>>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_paper_defaults() {
        let cfg = RunConfig::from_toml_str("").unwrap();
        assert_eq!(cfg.radio.carrier_ghz, 28.0);
        assert_eq!(cfg.radio.n_prbs, 66);
        assert_eq!(cfg.radio.scs_khz, 60.0);
        assert_eq!(cfg.ncr.gain_db, 60.0);
        assert_eq!(cfg.run.n_slots, 8000);
        assert_eq!(cfg.run.deployments.len(), 6);
        assert_eq!(cfg.run.seeds.len(), 10);
        assert_eq!(cfg.scenario.gnb_power_dbm, 35.0);
    }

    #[test]
    fn roundtrip_preserves_config() {
        let cfg = RunConfig::from_toml_str(
            "[run]\nn_slots = 100\nseeds = [7]\ndeployments = [\"stationary_ris\"]\n",
        )
        .unwrap();
        let text = cfg.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn unknown_key_is_named_in_error() {
        let err = RunConfig::from_toml_str("[radio]\nbogus_key = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn invariant_violation_names_key() {
        let err = RunConfig::from_toml_str("[radio]\nn_prbs = 100\n").unwrap_err();
        assert!(err.to_string().contains("n_prbs"), "{err}");
        let err = RunConfig::from_toml_str("[run]\nn_slots = 0\n").unwrap_err();
        assert!(err.to_string().contains("n_slots"), "{err}");
    }

    #[test]
    fn overrides_table_reaches_nested_fields() {
        let cfg = RunConfig::from_toml_str(
            "[overrides]\n\"mac.overhead_factor\" = 0.9\n\"ris.n_rows\" = 16\n",
        )
        .unwrap();
        assert_eq!(cfg.mac.overhead_factor, 0.9);
        assert_eq!(cfg.ris.n_rows, 16);
    }

    #[test]
    fn override_of_unknown_field_fails() {
        let err = RunConfig::from_toml_str("[overrides]\n\"radio.nonsense\" = 1\n").unwrap_err();
        assert!(err.to_string().contains("nonsense"), "{err}");
    }
}
