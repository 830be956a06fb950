//! Slot-level MAC: TDD alternation, round-robin PRB allocation, half-duplex
//! IAB hop scheduling, MCS selection with outer-loop correction, block error
//! realization and throughput accounting.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{DensimError, Result};

/// Transmission direction of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SlotDirection {
    Dl,
    Ul,
}

/// TDD slot timing: 0.25 ms slots of 14 OFDM symbols, directions strictly
/// alternating with slot 0 in downlink.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotPattern {
    pub slot_duration_s: f64,
    pub symbols_per_slot: usize,
}

impl Default for SlotPattern {
    fn default() -> Self {
        Self {
            slot_duration_s: 0.25e-3,
            symbols_per_slot: 14,
        }
    }
}

/// Even slots are DL, odd slots are UL.
pub fn tdd_direction(slot: u64) -> SlotDirection {
    if slot % 2 == 0 {
        SlotDirection::Dl
    } else {
        SlotDirection::Ul
    }
}

/// Which hop of a half-duplex IAB chain is active in a slot.
///
/// Downlink slots alternate donor-to-node backhaul and node-to-UE access;
/// uplink slots alternate UE-to-node access and node-to-donor backhaul, so
/// data always enters a hop before it leaves and the node never transmits
/// and receives in the same slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IabHopPhase {
    BackhaulDl,
    AccessDl,
    AccessUl,
    BackhaulUl,
}

pub fn schedule_iab_hop(slot: u64) -> IabHopPhase {
    match (slot % 2, (slot / 2) % 2) {
        (0, 0) => IabHopPhase::BackhaulDl,
        (0, _) => IabHopPhase::AccessDl,
        (_, 0) => IabHopPhase::AccessUl,
        _ => IabHopPhase::BackhaulUl,
    }
}

/// One contiguous PRB assignment produced by the round-robin scheduler.
#[derive(Debug, Clone, PartialEq)]
pub struct PrbAssignment<U> {
    pub user: U,
    /// First PRB index (inclusive).
    pub first_prb: usize,
    /// Number of PRBs.
    pub n_prbs: usize,
}

impl<U> PrbAssignment<U> {
    pub fn contains(&self, prb: usize) -> bool {
        prb >= self.first_prb && prb < self.first_prb + self.n_prbs
    }
}

/// Round-robin PRB allocation: contiguous chunks assigned cyclically
/// starting at `rr_pointer`, per-slot counts across users differing by at
/// most one. The pointer should advance by one user each slot so the larger
/// chunks rotate.
pub fn rr_allocate<U: Clone>(
    users: &[U],
    rr_pointer: usize,
    n_prbs: usize,
) -> Vec<PrbAssignment<U>> {
    if users.is_empty() || n_prbs == 0 {
        return Vec::new();
    }
    let n_users = users.len();
    let base = n_prbs / n_users;
    let extra = n_prbs % n_users;
    let mut out = Vec::with_capacity(n_users);
    let mut next_prb = 0;
    for pos in 0..n_users {
        let user = users[(rr_pointer + pos) % n_users].clone();
        let count = if pos < extra { base + 1 } else { base };
        if count == 0 {
            continue;
        }
        out.push(PrbAssignment {
            user,
            first_prb: next_prb,
            n_prbs: count,
        });
        next_prb += count;
    }
    out
}

/// One modulation-and-coding scheme entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: usize,
    /// Bits per modulation symbol (2 = QPSK, 4 = 16QAM, 6 = 64QAM).
    pub modulation_order: u8,
    /// Code rate times 1024.
    pub code_rate_x1024: u16,
    /// Information bits per resource element.
    pub spectral_efficiency: f64,
    /// SINR at which the link hits the 10% BLER target, dB.
    pub sinr_threshold_db: f64,
}

/// MCS table indexed 0..=15 with strictly increasing efficiency and
/// thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsTable {
    pub entries: Vec<McsEntry>,
}

impl McsTable {
    /// 16-entry default: indices 1-15 carry the 64QAM CQI efficiencies with
    /// link-level 10%-BLER thresholds; index 0 is a extra-robust QPSK floor
    /// used below the lowest CQI operating point.
    pub fn default_16() -> Self {
        let rows: [(u8, u16, f64, f64); 16] = [
            (2, 40, 0.0781, -8.0),
            (2, 78, 0.1523, -6.7),
            (2, 120, 0.2344, -4.7),
            (2, 193, 0.3770, -2.3),
            (2, 308, 0.6016, 0.2),
            (2, 449, 0.8770, 2.4),
            (2, 602, 1.1758, 4.3),
            (4, 378, 1.4766, 5.9),
            (4, 490, 1.9141, 8.1),
            (4, 616, 2.4063, 10.3),
            (6, 466, 2.7305, 11.7),
            (6, 567, 3.3223, 14.1),
            (6, 666, 3.9023, 16.3),
            (6, 772, 4.5234, 18.7),
            (6, 873, 5.1152, 21.0),
            (6, 948, 5.5547, 22.7),
        ];
        let entries = rows
            .iter()
            .enumerate()
            .map(|(i, &(m, r, se, thr))| McsEntry {
                index: i,
                modulation_order: m,
                code_rate_x1024: r,
                spectral_efficiency: se,
                sinr_threshold_db: thr,
            })
            .collect();
        Self { entries }
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(DensimError::Config("MCS table is empty".into()));
        }
        for w in self.entries.windows(2) {
            if w[1].spectral_efficiency <= w[0].spectral_efficiency
                || w[1].sinr_threshold_db <= w[0].sinr_threshold_db
            {
                return Err(DensimError::Config(format!(
                    "MCS table not strictly increasing between indices {} and {}",
                    w[0].index, w[1].index
                )));
            }
        }
        Ok(())
    }

    pub fn max_index(&self) -> usize {
        self.entries.len() - 1
    }
}

/// Highest MCS whose threshold the corrected SINR estimate clears; index 0
/// when even the lowest threshold is missed.
pub fn select_mcs(table: &McsTable, estimated_sinr_db: f64, offset_db: f64) -> usize {
    let eff = estimated_sinr_db + offset_db;
    table
        .entries
        .iter()
        .rev()
        .find(|e| e.sinr_threshold_db <= eff)
        .map(|e| e.index)
        .unwrap_or(0)
}

/// ACK/NACK outcome of a transport block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TxOutcome {
    Ack,
    Nack,
}

/// Outer-loop link adaptation state: a running dB correction applied to the
/// SINR estimate, stepped down hard on errors and up gently on successes so
/// the long-run error rate settles near step_up/(step_up + step_down).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterLoopState {
    pub offset_db: f64,
    pub step_down_db: f64,
    pub step_up_db: f64,
    pub min_offset_db: f64,
    pub max_offset_db: f64,
}

impl Default for OuterLoopState {
    fn default() -> Self {
        Self {
            offset_db: 0.0,
            step_down_db: 1.0,
            step_up_db: 0.1,
            min_offset_db: -20.0,
            max_offset_db: 5.0,
        }
    }
}

/// Apply one ACK/NACK observation to the outer-loop offset.
pub fn outer_loop_update(state: &OuterLoopState, outcome: TxOutcome) -> OuterLoopState {
    let mut next = *state;
    next.offset_db = match outcome {
        TxOutcome::Nack => state.offset_db - state.step_down_db,
        TxOutcome::Ack => state.offset_db + state.step_up_db,
    }
    .clamp(state.min_offset_db, state.max_offset_db);
    next
}

/// Block error probability model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlerModel {
    /// Logistic waterfall anchored so BLER is exactly 10% at the MCS
    /// threshold: `1 / (1 + 9 * exp(slope * (sinr - thr)))`.
    Logistic { slope_per_db: f64 },
    /// Idealized error-free links.
    AlwaysAck,
}

impl Default for BlerModel {
    fn default() -> Self {
        BlerModel::Logistic { slope_per_db: 2.0 }
    }
}

impl BlerModel {
    pub fn bler(&self, mcs: &McsEntry, actual_sinr_db: f64) -> f64 {
        match self {
            BlerModel::Logistic { slope_per_db } => {
                let x = slope_per_db * (actual_sinr_db - mcs.sinr_threshold_db);
                // guard the exp against extreme margins
                if x > 500.0 {
                    0.0
                } else if x < -500.0 {
                    1.0
                } else {
                    1.0 / (1.0 + 9.0 * x.exp())
                }
            }
            BlerModel::AlwaysAck => 0.0,
        }
    }
}

/// Hop carried by a transport block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hop {
    Access,
    Backhaul,
}

/// One scheduled transport block.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportBlock {
    /// Transmitting node id.
    pub tx_node: u32,
    /// Receiving node id.
    pub rx_node: u32,
    /// UE whose traffic this block carries.
    pub ue: u32,
    pub slot: u64,
    pub direction: SlotDirection,
    pub hop: Hop,
    pub mcs: usize,
    pub first_prb: usize,
    pub n_prbs: usize,
    /// Capacity of the block: floor(SE * 12 * 14 * n_prbs * overhead).
    pub bits: u64,
    /// Payload bits actually delivered end to end when the final hop ACKs.
    pub delivered_bits: u64,
    /// Effective SINR the block was received at, dB.
    pub sinr_db: f64,
    pub outcome: TxOutcome,
}

/// Transport block capacity in bits.
pub fn transport_block_bits(
    se: f64,
    n_prbs: usize,
    symbols_per_slot: usize,
    overhead_factor: f64,
) -> u64 {
    (se * 12.0 * symbols_per_slot as f64 * n_prbs as f64 * overhead_factor).floor() as u64
}

/// Draw the ACK/NACK outcome of a block received at `actual_sinr_db`.
pub fn transmit(
    mcs: &McsEntry,
    actual_sinr_db: f64,
    model: &BlerModel,
    rng: &mut impl Rng,
) -> TxOutcome {
    let p = model.bler(mcs, actual_sinr_db);
    if rng.random::<f64>() < p {
        TxOutcome::Nack
    } else {
        TxOutcome::Ack
    }
}

/// Per-UE end-to-end throughput in bit/s over a window.
///
/// Only bits credited as delivered (final-hop ACKs; for relayed chains that
/// is the second hop) count toward a UE's throughput.
pub fn account_throughput(tbs: &[TransportBlock], window_s: f64) -> Vec<(u32, f64)> {
    let mut per_ue: std::collections::BTreeMap<u32, u64> = std::collections::BTreeMap::new();
    for tb in tbs {
        if tb.outcome == TxOutcome::Ack && tb.delivered_bits > 0 {
            *per_ue.entry(tb.ue).or_insert(0) += tb.delivered_bits;
        }
    }
    per_ue
        .into_iter()
        .map(|(ue, bits)| (ue, bits as f64 / window_s))
        .collect()
}
