//! Madrid-grid scenario: node inventory for the six deployments, UE/UAV
//! mobility, and max-power association of UEs onto serving chains.
//!
//! The default layout puts the two gNBs at the south and north grid edges at
//! the mouth of a north-south street canyon; the auxiliary IAB/NCR nodes sit
//! two blocks up that canyon at the intersection with their street, with the
//! backhaul panel facing the gNB and two access panels straddling the street
//! axis 120 degrees apart. Four RIS panels hang mid-block on building faces
//! at 40 m. UAV-mounted nodes launch from their gNB site and chase the
//! centroid of their assigned UE group. Every coordinate can be overridden
//! through a layout file.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::channel::LinkEnd;
use crate::geom::Vec3;
use crate::{DensimError, Result};

/// Madrid-grid dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridGeometry {
    pub block_size_m: f64,
    pub sidewalk_width_m: f64,
    pub street_width_m: f64,
    pub n_blocks_traversed: usize,
}

impl Default for GridGeometry {
    fn default() -> Self {
        Self {
            block_size_m: 120.0,
            sidewalk_width_m: 3.0,
            street_width_m: 14.0,
            n_blocks_traversed: 3,
        }
    }
}

impl GridGeometry {
    pub fn validate(&self) -> Result<()> {
        if self.block_size_m <= 0.0
            || self.sidewalk_width_m <= 0.0
            || self.street_width_m <= 0.0
            || self.n_blocks_traversed == 0
        {
            return Err(DensimError::Scenario(
                "grid dimensions must be positive".into(),
            ));
        }
        if self.street_width_m <= self.sidewalk_width_m {
            return Err(DensimError::Scenario(
                "street width must exceed sidewalk width".into(),
            ));
        }
        Ok(())
    }

    /// Block plus street pitch.
    pub fn block_pitch_m(&self) -> f64 {
        self.block_size_m + self.street_width_m
    }

    /// Length of the UE course along the street.
    pub fn course_length_m(&self) -> f64 {
        self.n_blocks_traversed as f64 * self.block_pitch_m()
    }
}

/// The six compared deployments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentKind {
    MacroOnly,
    StationaryIab,
    StationaryNcr,
    StationaryRis,
    UavIab,
    UavNcr,
}

impl DeploymentKind {
    pub const ALL: [DeploymentKind; 6] = [
        DeploymentKind::MacroOnly,
        DeploymentKind::StationaryIab,
        DeploymentKind::StationaryNcr,
        DeploymentKind::StationaryRis,
        DeploymentKind::UavIab,
        DeploymentKind::UavNcr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            DeploymentKind::MacroOnly => "macro_only",
            DeploymentKind::StationaryIab => "stationary_iab",
            DeploymentKind::StationaryNcr => "stationary_ncr",
            DeploymentKind::StationaryRis => "stationary_ris",
            DeploymentKind::UavIab => "uav_iab",
            DeploymentKind::UavNcr => "uav_ncr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| DensimError::Config(format!("unknown deployment kind '{s}'")))
    }

    /// Auxiliary node kind added by this deployment, if any.
    pub fn aux_kind(&self) -> Option<NodeKind> {
        match self {
            DeploymentKind::MacroOnly => None,
            DeploymentKind::StationaryIab | DeploymentKind::UavIab => Some(NodeKind::IabNode),
            DeploymentKind::StationaryNcr | DeploymentKind::UavNcr => Some(NodeKind::Ncr),
            DeploymentKind::StationaryRis => Some(NodeKind::Ris),
        }
    }

    pub fn is_uav(&self) -> bool {
        matches!(self, DeploymentKind::UavIab | DeploymentKind::UavNcr)
    }
}

impl std::fmt::Display for DeploymentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Node roles in the scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Gnb,
    IabNode,
    Ncr,
    Ris,
    Ue,
}

/// Mounting direction of one antenna panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PanelOrientation {
    pub az_deg: f64,
    pub el_deg: f64,
}

/// One physical node of the scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDescriptor {
    pub id: u32,
    pub kind: NodeKind,
    pub position: Vec3,
    /// Total transmit power, dBm (None for passive surfaces).
    pub tx_power_dbm: Option<f64>,
    /// Panel orientations; for IAB/NCR nodes panel 0 is the backhaul panel.
    pub panels: Vec<PanelOrientation>,
    pub speed_kmh: f64,
    pub mounted_on_uav: bool,
}

impl NodeDescriptor {
    pub fn height_m(&self) -> f64 {
        self.position.z
    }

    pub fn link_end(&self) -> LinkEnd {
        match self.kind {
            NodeKind::Gnb => LinkEnd::Gnb,
            NodeKind::Ue => LinkEnd::Ue,
            _ if self.mounted_on_uav => LinkEnd::UavAux,
            _ => LinkEnd::StationaryAux,
        }
    }
}

/// Serving chain of one UE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServingChain {
    Direct { gnb: u32 },
    ViaIab { gnb: u32, iab: u32 },
    ViaNcr { gnb: u32, ncr: u32 },
    ViaRis { gnb: u32, ris: u32 },
    OutOfCoverage,
}

impl ServingChain {
    pub fn root_gnb(&self) -> Option<u32> {
        match self {
            ServingChain::Direct { gnb }
            | ServingChain::ViaIab { gnb, .. }
            | ServingChain::ViaNcr { gnb, .. }
            | ServingChain::ViaRis { gnb, .. } => Some(*gnb),
            ServingChain::OutOfCoverage => None,
        }
    }

    /// Node transmitting the DL access signal for this chain.
    pub fn access_node(&self) -> Option<u32> {
        match self {
            ServingChain::Direct { gnb }
            | ServingChain::ViaNcr { gnb, .. }
            | ServingChain::ViaRis { gnb, .. } => Some(*gnb),
            ServingChain::ViaIab { iab, .. } => Some(*iab),
            ServingChain::OutOfCoverage => None,
        }
    }

    /// Distinguishing node for tie-breaking between candidates.
    fn tiebreak_id(&self) -> u32 {
        match self {
            ServingChain::Direct { gnb } => *gnb,
            ServingChain::ViaIab { iab, .. } => *iab,
            ServingChain::ViaNcr { ncr, .. } => *ncr,
            ServingChain::ViaRis { ris, .. } => *ris,
            ServingChain::OutOfCoverage => u32::MAX,
        }
    }
}

/// Table-I entity parameters and association controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioParams {
    pub gnb_height_m: f64,
    pub gnb_power_dbm: f64,
    pub stationary_aux_height_m: f64,
    pub stationary_aux_power_dbm: f64,
    pub ris_height_m: f64,
    pub uav_height_m: f64,
    pub uav_power_dbm: f64,
    pub ue_height_m: f64,
    pub ue_power_dbm: f64,
    pub ue_speed_kmh: f64,
    pub uav_speed_kmh: f64,
    /// Candidates below this wideband received power are unreachable, dBm.
    pub coverage_floor_dbm: f64,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        Self {
            gnb_height_m: 25.0,
            gnb_power_dbm: 35.0,
            stationary_aux_height_m: 10.0,
            stationary_aux_power_dbm: 32.0,
            ris_height_m: 40.0,
            uav_height_m: 40.0,
            uav_power_dbm: 29.0,
            ue_height_m: 1.5,
            ue_power_dbm: 24.0,
            ue_speed_kmh: 40.0,
            uav_speed_kmh: 40.0,
            coverage_floor_dbm: -140.0,
        }
    }
}

/// Node ids are stable across deployments so per-link random streams match
/// between compared runs.
pub const GNB_IDS: [u32; 2] = [0, 1];
pub const AUX_IDS: [u32; 2] = [10, 11];
pub const RIS_IDS: [u32; 4] = [20, 21, 22, 23];
pub const UE_ID_BASE: u32 = 100;
pub const N_UES: usize = 8;

/// Full scenario state for one deployment.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioState {
    pub deployment: DeploymentKind,
    pub geometry: GridGeometry,
    pub params: ScenarioParams,
    pub nodes: Vec<NodeDescriptor>,
    /// UE id -> serving chain.
    pub associations: BTreeMap<u32, ServingChain>,
    /// Auxiliary node id -> donor gNB id.
    pub donors: BTreeMap<u32, u32>,
    /// Auxiliary node id -> UE group it covers (used for UAV tracking and
    /// repeater/surface target selection).
    pub assigned_ues: BTreeMap<u32, Vec<u32>>,
    /// Per-UE course start x, for end-of-course clamping.
    pub ue_course_start: BTreeMap<u32, f64>,
    pub sim_time_s: f64,
}

impl ScenarioState {
    pub fn node(&self, id: u32) -> &NodeDescriptor {
        self.nodes
            .iter()
            .find(|n| n.id == id)
            .unwrap_or_else(|| panic!("unknown node id {id}"))
    }

    fn node_mut(&mut self, id: u32) -> &mut NodeDescriptor {
        self.nodes
            .iter_mut()
            .find(|n| n.id == id)
            .unwrap_or_else(|| panic!("unknown node id {id}"))
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &NodeDescriptor> {
        self.nodes.iter().filter(move |n| n.kind == kind)
    }

    pub fn ue_ids(&self) -> Vec<u32> {
        self.nodes_of_kind(NodeKind::Ue).map(|n| n.id).collect()
    }

    /// Cell (root gNB) a node belongs to.
    pub fn cell_of(&self, node_id: u32) -> Option<u32> {
        let node = self.node(node_id);
        match node.kind {
            NodeKind::Gnb => Some(node_id),
            NodeKind::Ue => self.associations.get(&node_id).and_then(|c| c.root_gnb()),
            _ => self.donors.get(&node_id).copied(),
        }
    }

    pub fn same_cell(&self, a: u32, b: u32) -> bool {
        match (self.cell_of(a), self.cell_of(b)) {
            (Some(x), Some(y)) => x == y,
            _ => false,
        }
    }
}

/// Node record of a scenario layout file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayoutNode {
    pub id: u32,
    pub kind: NodeKind,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    #[serde(default)]
    pub power_dbm: Option<f64>,
    #[serde(default)]
    pub panel_azimuths: Vec<f64>,
    #[serde(default)]
    pub uav: bool,
}

/// Scenario layout file: a list of node records.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Layout {
    #[serde(default, rename = "node")]
    pub nodes: Vec<LayoutNode>,
}

impl Layout {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| DensimError::Config(format!("layout parse error: {e}")))
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }
}

/// Build the scenario for one deployment kind.
pub fn build_scenario(
    kind: DeploymentKind,
    geometry: GridGeometry,
    params: &ScenarioParams,
) -> Result<ScenarioState> {
    build_scenario_with_layout(kind, geometry, params, None)
}

/// Build a scenario, optionally overriding node records from a layout file.
pub fn build_scenario_with_layout(
    kind: DeploymentKind,
    geometry: GridGeometry,
    params: &ScenarioParams,
    layout: Option<&Layout>,
) -> Result<ScenarioState> {
    geometry.validate()?;
    let mut nodes = default_nodes(kind, &geometry, params);
    if let Some(layout) = layout {
        apply_layout(&mut nodes, layout, params)?;
    }
    nodes.sort_by_key(|n| n.id);

    let mut donors = BTreeMap::new();
    let mut assigned = BTreeMap::new();
    let ue_ids: Vec<u32> = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Ue)
        .map(|n| n.id)
        .collect();
    // Split UEs into the two street groups by y coordinate.
    let mut sorted_by_y: Vec<(u32, f64)> = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Ue)
        .map(|n| (n.id, n.position.y))
        .collect();
    sorted_by_y.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let half = sorted_by_y.len() / 2;
    let street_a: Vec<u32> = sorted_by_y[..half].iter().map(|p| p.0).collect();
    let street_b: Vec<u32> = sorted_by_y[half..].iter().map(|p| p.0).collect();

    for node in &nodes {
        match node.kind {
            NodeKind::IabNode | NodeKind::Ncr | NodeKind::Ris => {
                // Donor is the nearer gNB; covered UEs are the nearer street.
                let gnb = nodes
                    .iter()
                    .filter(|n| n.kind == NodeKind::Gnb)
                    .min_by(|a, b| {
                        a.position
                            .distance(node.position)
                            .partial_cmp(&b.position.distance(node.position))
                            .unwrap()
                            .then(a.id.cmp(&b.id))
                    })
                    .map(|n| n.id)
                    .ok_or_else(|| DensimError::Scenario("no gNB in scenario".into()))?;
                donors.insert(node.id, gnb);
                let dist_to = |group: &[u32]| -> f64 {
                    group
                        .iter()
                        .map(|ue| nodes.iter().find(|n| n.id == *ue).unwrap())
                        .map(|ue| (ue.position.y - node.position.y).abs())
                        .sum::<f64>()
                };
                let group = if dist_to(&street_a) <= dist_to(&street_b) {
                    street_a.clone()
                } else {
                    street_b.clone()
                };
                assigned.insert(node.id, group);
            }
            _ => {}
        }
    }

    let ue_course_start = nodes
        .iter()
        .filter(|n| n.kind == NodeKind::Ue)
        .map(|n| (n.id, n.position.x))
        .collect();

    let state = ScenarioState {
        deployment: kind,
        geometry,
        params: *params,
        nodes,
        associations: ue_ids
            .iter()
            .map(|&ue| (ue, ServingChain::OutOfCoverage))
            .collect(),
        donors,
        assigned_ues: assigned,
        ue_course_start,
        sim_time_s: 0.0,
    };
    validate_counts(&state)?;
    Ok(state)
}

fn default_nodes(
    kind: DeploymentKind,
    geometry: &GridGeometry,
    params: &ScenarioParams,
) -> Vec<NodeDescriptor> {
    let pitch = geometry.block_pitch_m();
    let block = geometry.block_size_m;
    let street = geometry.street_width_m;
    // Horizontal streets between block rows; the UE race uses the middle two.
    let street_a_y = pitch + block + street / 2.0; // lower middle
    let street_b_y = 2.0 * pitch + block + street / 2.0; // upper middle
    let canyon_x = 2.0 * pitch + block + street / 2.0; // north-south canyon carrying both gNBs
    let south_y = -10.0;
    let north_y = 4.0 * pitch + block + 10.0;

    let mut nodes = Vec::new();
    let gnb_positions = [
        Vec3::new(canyon_x, south_y, params.gnb_height_m),
        Vec3::new(canyon_x, north_y, params.gnb_height_m),
    ];
    // Boresights face up/down the canyon toward the served streets.
    let gnb_boresight = [90.0, 270.0];
    for (i, (&id, pos)) in GNB_IDS.iter().zip(gnb_positions).enumerate() {
        nodes.push(NodeDescriptor {
            id,
            kind: NodeKind::Gnb,
            position: pos,
            tx_power_dbm: Some(params.gnb_power_dbm),
            panels: vec![PanelOrientation {
                az_deg: gnb_boresight[i],
                el_deg: 0.0,
            }],
            speed_kmh: 0.0,
            mounted_on_uav: false,
        });
    }

    // UEs: half on each middle street, starting inside the leftmost block.
    for i in 0..N_UES {
        let street_y = if i < N_UES / 2 { street_a_y } else { street_b_y };
        let x = 15.0 + 30.0 * (i % (N_UES / 2)) as f64;
        nodes.push(NodeDescriptor {
            id: UE_ID_BASE + i as u32,
            kind: NodeKind::Ue,
            position: Vec3::new(x, street_y, params.ue_height_m),
            tx_power_dbm: Some(params.ue_power_dbm),
            panels: Vec::new(),
            speed_kmh: params.ue_speed_kmh,
            mounted_on_uav: false,
        });
    }

    match kind.aux_kind() {
        None => {}
        Some(NodeKind::Ris) => {
            // Two surfaces per street on mid-block building faces at 40 m,
            // boresight across the street toward the serving gNB's side.
            let face_a_y = street_a_y + street / 2.0; // north face of street A
            let face_b_y = street_b_y - street / 2.0; // south face of street B
            let xs = [block / 2.0, pitch + block / 2.0];
            let mut id = RIS_IDS[0];
            for &x in &xs {
                nodes.push(ris_node(id, x, face_a_y, 270.0, params));
                id += 1;
            }
            for &x in &xs {
                nodes.push(ris_node(id, x, face_b_y, 90.0, params));
                id += 1;
            }
        }
        Some(aux_kind) => {
            let uav = kind.is_uav();
            let (height, power) = if uav {
                (params.uav_height_m, params.uav_power_dbm)
            } else {
                (params.stationary_aux_height_m, params.stationary_aux_power_dbm)
            };
            // Stationary relays sit two blocks up the canyon from their gNB,
            // at the intersection with the served street; UAVs launch from
            // the gNB site.
            let spots = if uav {
                [
                    Vec3::new(canyon_x, south_y, height),
                    Vec3::new(canyon_x, north_y, height),
                ]
            } else {
                [
                    Vec3::new(canyon_x, street_a_y, height),
                    Vec3::new(canyon_x, street_b_y, height),
                ]
            };
            // Backhaul panel toward the gNB, access panels 120 degrees away.
            for (i, (&id, pos)) in AUX_IDS.iter().zip(spots).enumerate() {
                let backhaul_az = if i == 0 { 270.0 } else { 90.0 };
                let panels = if uav {
                    vec![
                        PanelOrientation { az_deg: backhaul_az, el_deg: 0.0 },
                        PanelOrientation { az_deg: 0.0, el_deg: -90.0 },
                    ]
                } else {
                    vec![
                        PanelOrientation { az_deg: backhaul_az, el_deg: 0.0 },
                        PanelOrientation {
                            az_deg: crate::geom::wrap_deg(backhaul_az + 120.0),
                            el_deg: 0.0,
                        },
                        PanelOrientation {
                            az_deg: crate::geom::wrap_deg(backhaul_az - 120.0),
                            el_deg: 0.0,
                        },
                    ]
                };
                nodes.push(NodeDescriptor {
                    id,
                    kind: aux_kind,
                    position: pos,
                    tx_power_dbm: Some(power),
                    panels,
                    speed_kmh: if uav { params.uav_speed_kmh } else { 0.0 },
                    mounted_on_uav: uav,
                });
            }
        }
    }
    nodes
}

fn ris_node(id: u32, x: f64, y: f64, boresight_az: f64, params: &ScenarioParams) -> NodeDescriptor {
    NodeDescriptor {
        id,
        kind: NodeKind::Ris,
        position: Vec3::new(x, y, params.ris_height_m),
        tx_power_dbm: None,
        panels: vec![PanelOrientation {
            az_deg: boresight_az,
            el_deg: 0.0,
        }],
        speed_kmh: 0.0,
        mounted_on_uav: false,
    }
}

fn apply_layout(nodes: &mut Vec<NodeDescriptor>, layout: &Layout, params: &ScenarioParams) -> Result<()> {
    for rec in &layout.nodes {
        let pos = Vec3::new(rec.x, rec.y, rec.z);
        if let Some(existing) = nodes.iter_mut().find(|n| n.id == rec.id) {
            if existing.kind != rec.kind {
                return Err(DensimError::Config(format!(
                    "layout node {} changes kind of an existing node",
                    rec.id
                )));
            }
            existing.position = pos;
            if rec.power_dbm.is_some() {
                existing.tx_power_dbm = rec.power_dbm;
            }
            if !rec.panel_azimuths.is_empty() {
                existing.panels = panel_set(rec, existing.mounted_on_uav);
            }
        } else {
            let uav = rec.uav;
            nodes.push(NodeDescriptor {
                id: rec.id,
                kind: rec.kind,
                position: pos,
                tx_power_dbm: rec.power_dbm.or(match rec.kind {
                    NodeKind::Gnb => Some(params.gnb_power_dbm),
                    NodeKind::Ue => Some(params.ue_power_dbm),
                    NodeKind::Ris => None,
                    _ if uav => Some(params.uav_power_dbm),
                    _ => Some(params.stationary_aux_power_dbm),
                }),
                panels: panel_set(rec, uav),
                speed_kmh: match rec.kind {
                    NodeKind::Ue => params.ue_speed_kmh,
                    _ if uav => params.uav_speed_kmh,
                    _ => 0.0,
                },
                mounted_on_uav: uav,
            });
        }
    }
    Ok(())
}

fn panel_set(rec: &LayoutNode, uav: bool) -> Vec<PanelOrientation> {
    rec.panel_azimuths
        .iter()
        .enumerate()
        .map(|(i, &az)| PanelOrientation {
            az_deg: az,
            // UAV access panels (all but the backhaul panel) look straight down.
            el_deg: if uav && i > 0 { -90.0 } else { 0.0 },
        })
        .collect()
}

fn validate_counts(state: &ScenarioState) -> Result<()> {
    let count = |k: NodeKind| state.nodes_of_kind(k).count();
    if count(NodeKind::Gnb) != 2 {
        return Err(DensimError::Scenario(format!(
            "expected 2 gNBs, found {}",
            count(NodeKind::Gnb)
        )));
    }
    if count(NodeKind::Ue) != N_UES {
        return Err(DensimError::Scenario(format!(
            "expected {N_UES} UEs, found {}",
            count(NodeKind::Ue)
        )));
    }
    let expect_aux: usize = match state.deployment {
        DeploymentKind::MacroOnly => 0,
        DeploymentKind::StationaryRis => 4,
        _ => 2,
    };
    let aux = count(NodeKind::IabNode) + count(NodeKind::Ncr) + count(NodeKind::Ris);
    if aux != expect_aux {
        return Err(DensimError::Scenario(format!(
            "expected {expect_aux} auxiliary nodes for {}, found {aux}",
            state.deployment
        )));
    }
    for n in &state.nodes {
        let expect_panels = match n.kind {
            NodeKind::Gnb | NodeKind::Ris => 1,
            NodeKind::IabNode | NodeKind::Ncr => {
                if n.mounted_on_uav {
                    2
                } else {
                    3
                }
            }
            NodeKind::Ue => 0,
        };
        if n.panels.len() != expect_panels {
            return Err(DensimError::Scenario(format!(
                "node {} has {} panels, expected {expect_panels}",
                n.id,
                n.panels.len()
            )));
        }
    }
    Ok(())
}

/// Advance UE and UAV positions by `dt` seconds.
///
/// UEs ride their street in +x at their configured speed and stop at the end
/// of the course. UAVs fly toward the centroid of their assigned UE group at
/// up to their configured speed, holding altitude; their backhaul panel is
/// re-aimed at the donor gNB.
pub fn step_mobility(state: &mut ScenarioState, dt: f64) {
    if dt < 0.0 {
        return;
    }
    let course = state.geometry.course_length_m();
    let starts = state.ue_course_start.clone();
    for node in state.nodes.iter_mut().filter(|n| n.kind == NodeKind::Ue) {
        let start = starts.get(&node.id).copied().unwrap_or(node.position.x);
        let v = node.speed_kmh / 3.6;
        node.position.x = (node.position.x + v * dt).min(start + course);
    }

    let uav_ids: Vec<u32> = state
        .nodes
        .iter()
        .filter(|n| n.mounted_on_uav)
        .map(|n| n.id)
        .collect();
    for uav_id in uav_ids {
        let group = state.assigned_ues.get(&uav_id).cloned().unwrap_or_default();
        if group.is_empty() {
            continue;
        }
        let mut cx = 0.0;
        let mut cy = 0.0;
        for ue in &group {
            let p = state.node(*ue).position;
            cx += p.x;
            cy += p.y;
        }
        let n = group.len() as f64;
        let target = Vec3::new(cx / n, cy / n, state.node(uav_id).position.z);
        let donor = state.donors.get(&uav_id).copied();
        let node = state.node_mut(uav_id);
        let to_target = target.sub(node.position);
        let dist = to_target.norm();
        let step = (node.speed_kmh / 3.6) * dt;
        if dist > 1e-9 {
            let advance = step.min(dist);
            node.position = node.position.add(to_target.scale(advance / dist));
        }
        if let Some(donor) = donor {
            let donor_pos = state.node(donor).position;
            let node = state.node_mut(uav_id);
            let bearing = crate::geom::AzEl::between(node.position, donor_pos);
            if let Some(p0) = node.panels.first_mut() {
                p0.az_deg = bearing.az_deg;
                p0.el_deg = bearing.el_deg;
            }
        }
    }
    state.sim_time_s += dt;
}

/// Candidate serving chains available to a UE in this deployment.
pub fn candidate_chains(state: &ScenarioState, _ue: u32) -> Vec<ServingChain> {
    let mut chains = Vec::new();
    for gnb in state.nodes_of_kind(NodeKind::Gnb) {
        chains.push(ServingChain::Direct { gnb: gnb.id });
    }
    for node in &state.nodes {
        let donor = state.donors.get(&node.id).copied();
        match node.kind {
            NodeKind::IabNode => chains.push(ServingChain::ViaIab {
                gnb: donor.unwrap_or(GNB_IDS[0]),
                iab: node.id,
            }),
            NodeKind::Ncr => chains.push(ServingChain::ViaNcr {
                gnb: donor.unwrap_or(GNB_IDS[0]),
                ncr: node.id,
            }),
            NodeKind::Ris => chains.push(ServingChain::ViaRis {
                gnb: donor.unwrap_or(GNB_IDS[0]),
                ris: node.id,
            }),
            _ => {}
        }
    }
    chains
}

/// Associate every UE with the candidate chain of highest wideband received
/// power as reported by `estimator` (dBm), breaking ties toward the lowest
/// distinguishing node id. Candidates below the coverage floor are ignored;
/// a UE with no reachable candidate is flagged out of coverage.
pub fn associate_ues<F>(state: &mut ScenarioState, estimator: F)
where
    F: Fn(u32, &ServingChain) -> f64,
{
    let ues = state.ue_ids();
    let floor = state.params.coverage_floor_dbm;
    for ue in ues {
        let mut best: Option<(f64, ServingChain)> = None;
        for chain in candidate_chains(state, ue) {
            let p = estimator(ue, &chain);
            if p < floor {
                continue;
            }
            let better = match &best {
                None => true,
                Some((bp, bc)) => {
                    p > *bp || (p == *bp && chain.tiebreak_id() < bc.tiebreak_id())
                }
            };
            if better {
                best = Some((p, chain));
            }
        }
        let chain = best.map(|(_, c)| c).unwrap_or(ServingChain::OutOfCoverage);
        state.associations.insert(ue, chain);
    }
}
