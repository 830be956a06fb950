//! Per-link large-scale losses and per-PRB small-scale channel matrices.
//!
//! Links are classified into urban-macro / urban-micro LOS/NLOS classes by
//! endpoint kind and cell membership, path loss follows the standard UMa/UMi
//! piecewise formulas with breakpoint distance, shadowing is a lognormal
//! process with exponential spatial correlation, and fast fading is a
//! geometric ray model: one deterministic geometric ray for LOS links plus a
//! configurable number of random rays, with per-PRB phase rotation from each
//! ray's excess delay.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::antenna::Panel;
use crate::geom::{AzEl, Vec3};
use crate::{DensimError, Result};

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Dense row-major complex matrix (n_rx x n_tx).
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub n_rx: usize,
    pub n_tx: usize,
    pub data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(n_rx: usize, n_tx: usize) -> Self {
        Self {
            n_rx,
            n_tx,
            data: vec![Complex64::new(0.0, 0.0); n_rx * n_tx],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.n_tx + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.n_tx + c] = v;
    }

    /// Add `scale * rx * tx^H` (outer product of response vectors).
    pub fn add_outer(&mut self, scale: Complex64, rx: &[Complex64], tx: &[Complex64]) {
        debug_assert_eq!(rx.len(), self.n_rx);
        debug_assert_eq!(tx.len(), self.n_tx);
        for (r, rv) in rx.iter().enumerate() {
            let row = scale * rv;
            let base = r * self.n_tx;
            for (c, tv) in tx.iter().enumerate() {
                self.data[base + c] += row * tv.conj();
            }
        }
    }

    pub fn transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.n_tx, self.n_rx);
        for r in 0..self.n_rx {
            for c in 0..self.n_tx {
                out.set(c, r, self.get(r, c));
            }
        }
        out
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }
}

/// Endpoint kind as far as link classification is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LinkEnd {
    Gnb,
    /// Stationary IAB node, NCR or RIS.
    StationaryAux,
    /// UAV-mounted IAB node or NCR.
    UavAux,
    Ue,
}

/// Propagation scenario of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropScenario {
    UMa,
    UMi,
}

/// LOS/NLOS state of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    Los,
    Nlos,
}

/// Classified link: endpoint kinds, cell relation and propagation class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkClass {
    pub endpoints: (LinkEnd, LinkEnd),
    pub same_cell: bool,
    pub scenario: PropScenario,
    pub visibility: Visibility,
}

/// Map a pair of endpoints onto its propagation class.
///
/// The mapping is symmetric in the endpoints. Pairs that never carry a
/// modeled transmission (gNB-gNB, aux-aux and aux-UAV) are rejected.
pub fn classify_link(a: LinkEnd, b: LinkEnd, same_cell: bool) -> Result<LinkClass> {
    use LinkEnd::*;
    use PropScenario::*;
    use Visibility::*;
    let pair = if a <= b { (a, b) } else { (b, a) };
    let (scenario, visibility) = match (pair, same_cell) {
        ((Gnb, Ue), _) => (UMa, Nlos),
        ((Gnb, StationaryAux), true) => (UMa, Los),
        ((Gnb, StationaryAux), false) => (UMa, Nlos),
        ((Gnb, UavAux), _) => (UMa, Los),
        ((StationaryAux, Ue), true) => (UMi, Los),
        ((StationaryAux, Ue), false) => (UMi, Nlos),
        ((UavAux, Ue), _) => (UMi, Los),
        ((Ue, Ue), true) => (UMi, Los),
        ((Ue, Ue), false) => (UMi, Nlos),
        _ => {
            return Err(DensimError::Channel(format!(
                "no propagation class for link {a:?} - {b:?}"
            )))
        }
    };
    Ok(LinkClass {
        endpoints: (a, b),
        same_cell,
        scenario,
        visibility,
    })
}

/// Large-scale loss of a link.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LargeScale {
    pub path_loss_db: f64,
    pub shadowing_db: f64,
}

impl LargeScale {
    pub fn total_loss_db(&self) -> f64 {
        self.path_loss_db + self.shadowing_db
    }

    /// Amplitude scale factor corresponding to the total loss.
    pub fn amplitude(&self) -> f64 {
        10f64.powf(-self.total_loss_db() / 20.0)
    }
}

// Height validity range of the UT-side correction terms.
const H_UT_MIN: f64 = 1.5;
const H_UT_MAX: f64 = 22.5;

/// Path loss in dB for a classified link.
///
/// `d3d_m` is the 3D endpoint distance, `fc_ghz` the carrier frequency and
/// `h_a_m`/`h_b_m` the endpoint heights. The higher endpoint plays the BS
/// role in the formulas. Distances below 1 m are clamped (with a warning);
/// heights are clamped into the validity range of the correction terms.
pub fn path_loss(class: &LinkClass, d3d_m: f64, fc_ghz: f64, h_a_m: f64, h_b_m: f64) -> Result<f64> {
    if !(0.5..=100.0).contains(&fc_ghz) {
        return Err(DensimError::Channel(format!(
            "carrier {fc_ghz} GHz outside [0.5, 100]"
        )));
    }
    let d3d = if d3d_m < 1.0 {
        log::warn!("path_loss distance {d3d_m:.3} m below 1 m, clamped");
        1.0
    } else {
        d3d_m
    };
    let h_bs = h_a_m.max(h_b_m);
    let h_ut = h_a_m.min(h_b_m).clamp(H_UT_MIN, H_UT_MAX);
    let dh = h_bs - h_ut;
    let d2d = (d3d * d3d - dh * dh).max(0.0).sqrt();
    // Breakpoint with 1 m effective environment height.
    let h_bs_eff = (h_bs - 1.0).max(0.0);
    let h_ut_eff = (h_ut - 1.0).max(0.0);
    let d_bp = 4.0 * h_bs_eff * h_ut_eff * fc_ghz * 1e9 / SPEED_OF_LIGHT;
    let lf = 20.0 * fc_ghz.log10();
    let ld = d3d.log10();

    let los = match class.scenario {
        PropScenario::UMa => {
            if d2d <= d_bp || d_bp <= 0.0 {
                28.0 + 22.0 * ld + lf
            } else {
                28.0 + 40.0 * ld + lf - 9.0 * (d_bp * d_bp + dh * dh).log10()
            }
        }
        PropScenario::UMi => {
            if d2d <= d_bp || d_bp <= 0.0 {
                32.4 + 21.0 * ld + lf
            } else {
                32.4 + 40.0 * ld + lf - 9.5 * (d_bp * d_bp + dh * dh).log10()
            }
        }
    };
    let pl = match (class.scenario, class.visibility) {
        (_, Visibility::Los) => los,
        (PropScenario::UMa, Visibility::Nlos) => {
            let nlos = 13.54 + 39.08 * ld + lf - 0.6 * (h_ut - 1.5);
            los.max(nlos)
        }
        (PropScenario::UMi, Visibility::Nlos) => {
            let nlos = 22.4 + 35.3 * ld + 21.3 * fc_ghz.log10() - 0.3 * (h_ut - 1.5);
            los.max(nlos)
        }
    };
    Ok(pl)
}

/// Lognormal shadowing standard deviation for a link class, dB.
pub fn shadowing_sigma_db(class: &LinkClass) -> f64 {
    match (class.scenario, class.visibility) {
        (PropScenario::UMa, Visibility::Los) => 4.0,
        (PropScenario::UMa, Visibility::Nlos) => 6.0,
        (PropScenario::UMi, Visibility::Los) => 4.0,
        (PropScenario::UMi, Visibility::Nlos) => 7.82,
    }
}

/// Shadowing decorrelation distance for a link class, meters.
pub fn shadowing_corr_dist_m(class: &LinkClass) -> f64 {
    match class.scenario {
        PropScenario::UMa => 37.0,
        PropScenario::UMi => 10.0,
    }
}

const SHADOW_GRID_STEP_M: f64 = 1.0;

/// Spatially correlated shadowing along a 1D trajectory.
///
/// An AR(1) chain on a 1 m grid with step correlation `exp(-step/d_corr)`,
/// so samples `d` meters apart correlate as `exp(-d/d_corr)`. Values are
/// memoized; queries may come in any order.
#[derive(Debug, Clone)]
pub struct ShadowingField {
    sigma_db: f64,
    corr_dist_m: f64,
    rng: ChaCha8Rng,
    grid: Vec<f64>,
}

impl ShadowingField {
    pub fn new(sigma_db: f64, corr_dist_m: f64, seed: u64) -> Self {
        Self {
            sigma_db,
            corr_dist_m,
            rng: ChaCha8Rng::seed_from_u64(seed),
            grid: Vec::new(),
        }
    }

    pub fn for_class(class: &LinkClass, seed: u64) -> Self {
        Self::new(shadowing_sigma_db(class), shadowing_corr_dist_m(class), seed)
    }

    /// Shadowing value in dB at arc position `arc_m` (meters traveled).
    pub fn value_at(&mut self, arc_m: f64) -> f64 {
        if self.sigma_db == 0.0 {
            return 0.0;
        }
        let idx = (arc_m.max(0.0) / SHADOW_GRID_STEP_M).floor() as usize;
        if self.grid.is_empty() {
            let n = Normal::new(0.0, self.sigma_db).unwrap();
            self.grid.push(n.sample(&mut self.rng));
        }
        let rho = (-SHADOW_GRID_STEP_M / self.corr_dist_m).exp();
        let innov = Normal::new(0.0, self.sigma_db * (1.0 - rho * rho).sqrt()).unwrap();
        while self.grid.len() <= idx {
            let prev = *self.grid.last().unwrap();
            self.grid.push(rho * prev + innov.sample(&mut self.rng));
        }
        self.grid[idx]
    }
}

/// Shadowing sample in dB for a link class at trajectory position `arc_m`.
pub fn sample_shadowing(class: &LinkClass, arc_m: f64, seed: u64) -> f64 {
    ShadowingField::for_class(class, seed).value_at(arc_m)
}

/// Fast-fading configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FadingConfig {
    /// Ricean K-factor for LOS classes, dB.
    pub ricean_k_db: f64,
    /// Number of random (non-geometric) rays.
    pub n_nlos_rays: usize,
    /// Mean excess delay of random rays, ns.
    pub delay_spread_ns: f64,
    /// Elevation spread of random rays, degrees (uniform +/- this value).
    pub el_spread_deg: f64,
    /// Slot-to-slot correlation of random ray gains.
    pub temporal_rho: f64,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            ricean_k_db: 10.0,
            n_nlos_rays: 6,
            delay_spread_ns: 100.0,
            el_spread_deg: 30.0,
            temporal_rho: 0.9,
        }
    }
}

/// Positions and panels of the two ends of a link (end A transmits in the
/// `AtoB` direction).
#[derive(Debug, Clone)]
pub struct LinkGeometry {
    pub pos_a: Vec3,
    pub pos_b: Vec3,
    pub panel_a: Panel,
    pub panel_b: Panel,
    pub carrier_ghz: f64,
}

/// Which way a reciprocal channel is being used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AtoB,
    BtoA,
}

/// One propagation ray of a link realization.
#[derive(Debug, Clone)]
pub struct Ray {
    /// Complex fading amplitude (excludes element patterns).
    pub gain: Complex64,
    /// Mean power this ray regresses to under temporal correlation.
    pub mean_power: f64,
    /// Excess delay relative to the first arrival, seconds.
    pub excess_delay_s: f64,
    /// Departure direction at end A, global frame.
    pub dep: AzEl,
    /// Arrival direction at end B, global frame.
    pub arr: AzEl,
    /// Deterministic geometric ray (not redrawn over time).
    pub geometric: bool,
}

/// Per-link, per-slot ray realization of the fading channel.
///
/// The realization is generated for the ordered pair A -> B; the reverse
/// direction is its transpose, so downlink and uplink matrices of one link
/// are reciprocal within a slot.
#[derive(Debug, Clone)]
pub struct RayChannel {
    pub rays: Vec<Ray>,
    pub class: LinkClass,
}

impl RayChannel {
    /// Draw a fresh realization for a link.
    pub fn generate(
        class: LinkClass,
        geom: &LinkGeometry,
        cfg: &FadingConfig,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut rays = Vec::with_capacity(cfg.n_nlos_rays + 1);
        let los = class.visibility == Visibility::Los;
        let n_random = if los {
            cfg.n_nlos_rays
        } else {
            cfg.n_nlos_rays.max(1)
        };
        let k_lin = 10f64.powf(cfg.ricean_k_db / 10.0);
        let (los_power, random_power) = if los {
            if n_random == 0 {
                (1.0, 0.0)
            } else {
                (k_lin / (k_lin + 1.0), 1.0 / (k_lin + 1.0))
            }
        } else {
            (0.0, 1.0)
        };

        if los {
            rays.push(Self::geometric_ray(geom, los_power));
        }
        if n_random > 0 && random_power > 0.0 {
            let per_ray = random_power / n_random as f64;
            let az_dist = Uniform::new(-180.0f64, 180.0).unwrap();
            let el_dist = Uniform::new(-cfg.el_spread_deg, cfg.el_spread_deg).unwrap();
            let delay_dist = Exp::new(1.0 / (cfg.delay_spread_ns * 1e-9)).unwrap();
            let gauss = Normal::new(0.0, (per_ray / 2.0).sqrt()).unwrap();
            for _ in 0..n_random {
                let gain = Complex64::new(gauss.sample(rng), gauss.sample(rng));
                rays.push(Ray {
                    gain,
                    mean_power: per_ray,
                    excess_delay_s: delay_dist.sample(rng),
                    dep: AzEl::new(az_dist.sample(rng), el_dist.sample(rng)),
                    arr: AzEl::new(az_dist.sample(rng), el_dist.sample(rng)),
                    geometric: false,
                });
            }
        }
        Self { rays, class }
    }

    fn geometric_ray(geom: &LinkGeometry, power: f64) -> Ray {
        let dist = geom.pos_a.distance(geom.pos_b).max(1e-3);
        let lambda = SPEED_OF_LIGHT / (geom.carrier_ghz * 1e9);
        let phase = -2.0 * std::f64::consts::PI * dist / lambda;
        Ray {
            gain: Complex64::from_polar(power.sqrt(), phase),
            mean_power: power,
            excess_delay_s: 0.0,
            dep: AzEl::between(geom.pos_a, geom.pos_b),
            arr: AzEl::between(geom.pos_b, geom.pos_a),
            geometric: true,
        }
    }

    /// Refresh the deterministic geometric ray after endpoint movement.
    pub fn update_geometry(&mut self, geom: &LinkGeometry) {
        if let Some(r) = self.rays.iter_mut().find(|r| r.geometric) {
            let power = r.mean_power;
            *r = Self::geometric_ray(geom, power);
        }
    }

    /// Advance random ray gains one slot with correlation `rho`.
    pub fn advance_slot(&mut self, rho: f64, rng: &mut ChaCha8Rng) {
        let innov_scale = (1.0 - rho * rho).max(0.0).sqrt();
        for ray in self.rays.iter_mut().filter(|r| !r.geometric) {
            let g = Normal::new(0.0, (ray.mean_power / 2.0).sqrt()).unwrap();
            let innov = Complex64::new(g.sample(rng), g.sample(rng));
            ray.gain = ray.gain * rho + innov * innov_scale;
        }
    }

    /// Per-PRB phase rotation of ray `ℓ` between adjacent PRBs.
    pub fn prb_rotation(&self, ray: &Ray, prb_bandwidth_hz: f64) -> Complex64 {
        Complex64::from_polar(
            1.0,
            -2.0 * std::f64::consts::PI * ray.excess_delay_s * prb_bandwidth_hz,
        )
    }

    /// Materialize the channel matrix at PRB `k` for the given direction.
    ///
    /// Includes both panels' element patterns. With omnidirectional elements
    /// the matrix is normalized so that `E[|H|_F^2] = n_rx * n_tx`.
    pub fn matrix(
        &self,
        geom: &LinkGeometry,
        prb: usize,
        prb_bandwidth_hz: f64,
        dir: Direction,
    ) -> CMat {
        let (tx_panel, rx_panel) = match dir {
            Direction::AtoB => (&geom.panel_a, &geom.panel_b),
            Direction::BtoA => (&geom.panel_b, &geom.panel_a),
        };
        let n_tx = tx_panel.array.n_elements();
        let n_rx = rx_panel.array.n_elements();
        // Responses have unit-modulus entries, so each rank-1 term carries
        // Frobenius power n_rx * n_tx and the ray gains sum to unit power.
        let mut h = CMat::zeros(n_rx, n_tx);
        for ray in &self.rays {
            let rot = Complex64::from_polar(
                1.0,
                -2.0 * std::f64::consts::PI * ray.excess_delay_s * prb_bandwidth_hz * prb as f64,
            );
            let amp_a = geom.panel_a.element_amplitude(ray.dep);
            let amp_b = geom.panel_b.element_amplitude(ray.arr);
            let coeff = ray.gain * rot * (amp_a * amp_b);
            match dir {
                Direction::AtoB => {
                    let rx = geom.panel_b.response(ray.arr);
                    let tx = geom.panel_a.response(ray.dep);
                    h.add_outer(coeff, &rx, &tx);
                }
                Direction::BtoA => {
                    let rx: Vec<Complex64> =
                        geom.panel_a.response(ray.dep).iter().map(|v| v.conj()).collect();
                    let tx: Vec<Complex64> =
                        geom.panel_b.response(ray.arr).iter().map(|v| v.conj()).collect();
                    h.add_outer(coeff, &rx, &tx);
                }
            }
        }
        h
    }
}

/// Realized per-PRB channel matrix with its large-scale context.
#[derive(Debug, Clone)]
pub struct ChannelMatrix {
    pub link_id: (u32, u32),
    pub prb: usize,
    pub matrix: CMat,
    pub large_scale: LargeScale,
}

/// Draw one fading realization and materialize PRB `k` (A transmits).
///
/// The returned matrix excludes large-scale loss (`large_scale` is zero);
/// the engine composes losses separately.
pub fn small_scale(
    class: LinkClass,
    geom: &LinkGeometry,
    cfg: &FadingConfig,
    prb: usize,
    prb_bandwidth_hz: f64,
    seed: u64,
) -> ChannelMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chan = RayChannel::generate(class, geom, cfg, &mut rng);
    ChannelMatrix {
        link_id: (0, 0),
        prb,
        matrix: chan.matrix(geom, prb, prb_bandwidth_hz, Direction::AtoB),
        large_scale: LargeScale::default(),
    }
}

/// Deterministic per-link RNG stream: identical node pairs get identical
/// streams regardless of deployment, which keeps deployment comparisons on
/// common random numbers.
pub fn link_rng(master_seed: u64, tag: &str, id_a: u32, id_b: u32) -> ChaCha8Rng {
    let (lo, hi) = if id_a <= id_b { (id_a, id_b) } else { (id_b, id_a) };
    let mut state = master_seed ^ 0x9e37_79b9_7f4a_7c15;
    for byte in tag.bytes() {
        state = state.wrapping_mul(0x100_0000_01b3).wrapping_add(byte as u64);
    }
    state ^= (lo as u64) << 32 | hi as u64;
    // splitmix64 finalizer
    state = (state ^ (state >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    state = (state ^ (state >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    state ^= state >> 31;
    ChaCha8Rng::seed_from_u64(state)
}

/// Convenience: draw a standard complex Gaussian CN(0, 1).
pub fn complex_gaussian(rng: &mut impl Rng) -> Complex64 {
    let n = Normal::new(0.0, (0.5f64).sqrt()).unwrap();
    Complex64::new(n.sample(rng), n.sample(rng))
}
