//! System-level simulator for mmWave network densification.
//!
//! Models an outdoor event served by two macro gNBs, optionally assisted by
//! integrated access and backhaul (IAB) nodes, network-controlled repeaters
//! (NCR), reconfigurable intelligent surfaces (RIS), or UAV-mounted IAB/NCR
//! nodes. The simulator computes per-PRB SINR for every served UE, runs a
//! TDD round-robin MAC with outer-loop link adaptation against a 10% BLER
//! target, and aggregates SINR/throughput CDFs, MCS histograms and Jain's
//! fairness index across deployments and seeds.
//!
//! Module map:
//! - [`scenario`]: Madrid-grid geometry, node placement, mobility, association
//! - [`antenna`]: 3GPP 3D element pattern, URA steering vectors, codebooks
//! - [`channel`]: link classification, path loss, shadowing, ray channels
//! - [`phy`]: per-PRB SINR decompositions for direct/IAB/NCR/RIS service
//! - [`mac`]: TDD slots, round-robin PRBs, MCS/outer-loop, transport blocks
//! - [`metrics`]: CDFs, percentiles, fairness, histograms
//! - [`config`] + [`campaign`]: run configuration and multi-seed orchestration
//! - [`sim`]: the slot-level engine tying the above together for one run

pub mod antenna;
pub mod campaign;
pub mod channel;
pub mod config;
pub mod geom;
pub mod mac;
pub mod metrics;
pub mod phy;
pub mod scenario;
pub mod sim;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum DensimError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("scenario error: {0}")]
    Scenario(String),
    #[error("antenna error: {0}")]
    Antenna(String),
    #[error("channel error: {0}")]
    Channel(String),
    #[error("phy error: {0}")]
    Phy(String),
    #[error("metrics error: {0}")]
    Metrics(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DensimError>;

/// Convert a dB value to a linear power ratio.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Convert a linear power ratio to dB.
#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Convert dBm to milliwatts.
#[inline]
pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Convert milliwatts to dBm.
#[inline]
pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}
