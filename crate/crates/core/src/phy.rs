//! Per-PRB SINR decompositions for direct, IAB-served, NCR-served and
//! RIS-served UEs, plus RIS reflection-coefficient optimization.
//!
//! Each `sinr_*` function evaluates one architecture's useful power S,
//! interference I and noise N from complex link gains and per-PRB transmit
//! powers, with all path powers combined in the linear domain:
//!
//! - direct:  S = |g|^2 p, N = sigma^2
//! - IAB:     S from the access hop only; backhaul and access transmissions
//!   of other links interfere
//! - NCR:     S adds the amplified cascade; interference adds repeater
//!   copies and amplified noise of the non-serving repeaters; N gains the
//!   serving repeater's amplified-noise term
//! - RIS:     S adds the passive cascade; no extra noise

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::antenna::{beam_pair_gain, BeamVector};
use crate::channel::CMat;
use crate::{dbm_to_mw, DensimError, Result};

/// Thermal noise power in one PRB, in milliwatts.
///
/// `density_dbm_hz` (typically -174) integrated over `n_subcarriers` of
/// `scs_hz` each, plus the receiver noise figure.
pub fn noise_power_prb(
    density_dbm_hz: f64,
    n_subcarriers: usize,
    scs_hz: f64,
    noise_figure_db: f64,
) -> f64 {
    let bw = n_subcarriers as f64 * scs_hz;
    dbm_to_mw(density_dbm_hz + 10.0 * bw.log10() + noise_figure_db)
}

/// Per-PRB transmit power under an equal split of the node's total power
/// across its allocated PRBs, in milliwatts.
pub fn equal_power_split_mw(total_power_dbm: f64, n_allocated_prbs: usize) -> f64 {
    if n_allocated_prbs == 0 {
        return 0.0;
    }
    dbm_to_mw(total_power_dbm) / n_allocated_prbs as f64
}

/// Effective complex gain of a beamformed link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGain {
    /// `gamma = d^H H f`.
    pub gamma: Complex64,
    /// RIS cascade `eta = d^H H2 Theta H1 f` when the link runs through a
    /// reflective surface.
    pub eta: Option<Complex64>,
}

/// `gamma = d^H H f` for unit-norm beams `f`, `d`.
pub fn effective_gain(h: &CMat, f: &BeamVector, d: &BeamVector) -> Result<LinkGain> {
    Ok(LinkGain {
        gamma: beam_pair_gain(h, f, d)?,
        eta: None,
    })
}

/// Which SINR decomposition produced a breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Architecture {
    Direct,
    Iab,
    Ncr,
    Ris,
}

/// Useful power, interference and noise of one UE on one PRB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub signal_mw: f64,
    pub interference_mw: f64,
    pub noise_mw: f64,
    pub architecture: Architecture,
}

impl SinrBreakdown {
    pub fn sinr_linear(&self) -> f64 {
        self.signal_mw / (self.interference_mw + self.noise_mw)
    }

    pub fn sinr_db(&self) -> f64 {
        10.0 * self.sinr_linear().log10()
    }
}

/// One interfering path: complex gain from the interfering transmitter to
/// the victim receiver, and the transmitter's per-PRB power in mW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferencePath {
    pub gain: Complex64,
    pub power_mw: f64,
}

impl InterferencePath {
    pub fn new(gain: Complex64, power_mw: f64) -> Self {
        Self { gain, power_mw }
    }

    #[inline]
    fn power(&self) -> f64 {
        self.gain.norm_sqr() * self.power_mw
    }
}

fn sum_paths(paths: &[InterferencePath]) -> f64 {
    paths.iter().map(InterferencePath::power).sum()
}

/// SINR of a UE served directly by its gNB (macro-only baseline).
pub fn sinr_direct(
    direct_gain: Complex64,
    power_mw: f64,
    interference: &[InterferencePath],
    noise_mw: f64,
) -> SinrBreakdown {
    SinrBreakdown {
        signal_mw: direct_gain.norm_sqr() * power_mw,
        interference_mw: sum_paths(interference),
        noise_mw,
        architecture: Architecture::Direct,
    }
}

/// SINR of a UE served by an IAB node's access link.
///
/// `backhaul_interference` carries concurrent backhaul transmissions on this
/// PRB; `access_interference` carries concurrent access transmissions toward
/// other UEs. Only transmissions actually scheduled on the PRB belong here.
pub fn sinr_iab(
    access_gain: Complex64,
    power_mw: f64,
    backhaul_interference: &[InterferencePath],
    access_interference: &[InterferencePath],
    noise_mw: f64,
) -> SinrBreakdown {
    SinrBreakdown {
        signal_mw: access_gain.norm_sqr() * power_mw,
        interference_mw: sum_paths(backhaul_interference) + sum_paths(access_interference),
        noise_mw,
        architecture: Architecture::Iab,
    }
}

/// One amplified path through a repeater: donor-to-repeater gain, repeater
/// power gain (linear), repeater-to-victim gain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NcrCascade {
    /// Gain into the repeater (e.g. `gamma_{b,s}`).
    pub in_gain: Complex64,
    /// Repeater power gain `g_{s,k}`, linear.
    pub amp_gain: f64,
    /// Gain out of the repeater to the victim (e.g. `gamma_{s,u}`).
    pub out_gain: Complex64,
}

impl NcrCascade {
    /// Power gain of the full cascade.
    pub fn power_gain(&self) -> f64 {
        self.in_gain.norm_sqr() * self.amp_gain * self.out_gain.norm_sqr()
    }
}

/// SINR of a UE connected to its gNB through an NCR.
///
/// The useful power sums the direct and amplified paths; interference sums
/// (i) direct other-cell paths, (ii) repeater copies of those paths through
/// every powered repeater, and (iii) amplified thermal noise from the
/// non-serving repeaters. Noise gains the serving repeater's amplified term.
/// With `serving` absent (repeater off) the decomposition degenerates to the
/// direct-only terms.
pub fn sinr_ncr(
    direct_gain: Complex64,
    power_mw: f64,
    serving: Option<NcrCascade>,
    direct_interference: &[InterferencePath],
    cascaded_interference: &[(NcrCascade, f64)],
    other_ncr_noise: &[(Complex64, f64)],
    noise_mw: f64,
) -> SinrBreakdown {
    let mut signal = direct_gain.norm_sqr() * power_mw;
    let mut noise = noise_mw;
    if let Some(c) = serving {
        signal += c.power_gain() * power_mw;
        noise = noise_mw * (1.0 + c.out_gain.norm_sqr() * c.amp_gain);
    }
    let mut interference = sum_paths(direct_interference);
    for (c, p) in cascaded_interference {
        interference += c.power_gain() * p;
    }
    for (gain, g) in other_ncr_noise {
        interference += noise_mw * gain.norm_sqr() * g;
    }
    SinrBreakdown {
        signal_mw: signal,
        interference_mw: interference,
        noise_mw: noise,
        architecture: Architecture::Ncr,
    }
}

/// SINR of a UE connected to its gNB through a RIS.
///
/// `cascade_eta` is the serving cascade `eta`; `cascaded_interference`
/// carries other-cell signals reflected through every surface. The surface
/// is passive, so noise stays at the thermal floor.
pub fn sinr_ris(
    direct_gain: Complex64,
    power_mw: f64,
    cascade_eta: Option<Complex64>,
    direct_interference: &[InterferencePath],
    cascaded_interference: &[InterferencePath],
    noise_mw: f64,
) -> Result<SinrBreakdown> {
    let eta = cascade_eta.ok_or_else(|| {
        DensimError::Phy("RIS-served UE without a configured reflection cascade".into())
    })?;
    Ok(SinrBreakdown {
        signal_mw: (direct_gain.norm_sqr() + eta.norm_sqr()) * power_mw,
        interference_mw: sum_paths(direct_interference) + sum_paths(cascaded_interference),
        noise_mw,
        architecture: Architecture::Ris,
    })
}

/// Diagonal unit-modulus reflection configuration of one surface.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfig {
    /// Diagonal of Theta: one unit-modulus coefficient per element.
    pub theta: Vec<Complex64>,
    /// Number of quantization bits; `None` means continuous phases.
    pub phase_bits: Option<u32>,
}

impl RisConfig {
    pub fn n_elements(&self) -> usize {
        self.theta.len()
    }

    /// Identity configuration (all coefficients 1).
    pub fn identity(n_elements: usize) -> Self {
        Self {
            theta: vec![Complex64::new(1.0, 0.0); n_elements],
            phase_bits: None,
        }
    }
}

/// Cascade gain through a configured surface:
/// `eta = sum_n out[n] * theta[n] * incident[n]`.
///
/// `incident` is the per-element effective incident coefficient (`H1 f`)
/// and `outgoing` the per-element effective outgoing coefficient (`d^H H2`).
pub fn ris_cascade_gain(
    incident: &[Complex64],
    outgoing: &[Complex64],
    theta: &[Complex64],
) -> Complex64 {
    incident
        .iter()
        .zip(outgoing)
        .zip(theta)
        .map(|((a, b), t)| b * t * a)
        .sum()
}

/// Amplify-and-forward repeater configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NcrConfig {
    /// Nominal power gain, dB.
    pub gain_db: f64,
    /// Forwarding entity state; OFF forces zero gain.
    pub powered_on: bool,
    /// Maximum per-PRB output power, dBm (rated transmit power split
    /// equally across PRBs). `None` disables the output cap.
    pub max_output_dbm_per_prb: Option<f64>,
}

impl NcrConfig {
    pub fn new(gain_db: f64) -> Self {
        Self {
            gain_db,
            powered_on: true,
            max_output_dbm_per_prb: None,
        }
    }

    /// Effective per-PRB power gain `g_{s,k}` given the input power on that
    /// PRB: nominal gain, clipped so the output stays within the rated
    /// per-PRB power.
    pub fn per_prb_gain(&self, input_power_mw: f64) -> f64 {
        if !self.powered_on {
            return 0.0;
        }
        let g = 10f64.powf(self.gain_db / 10.0);
        match self.max_output_dbm_per_prb {
            Some(cap_dbm) if input_power_mw > 0.0 => {
                let cap_mw = dbm_to_mw(cap_dbm);
                g.min(cap_mw / input_power_mw)
            }
            _ => g,
        }
    }
}

/// Phase-align a surface to maximize the cascade magnitude.
///
/// Continuous mode sets `theta_n = exp(-j(arg(a_n) + arg(b_n)))`, reaching
/// `|eta| = sum_n |a_n b_n|`. Quantized mode restricts each phase to
/// `2^bits` uniform levels and finds the global optimum by enumerating the
/// rotation intervals on which the per-element level choice is constant.
pub fn optimize_theta(
    incident: &[Complex64],
    outgoing: &[Complex64],
    phase_bits: Option<u32>,
) -> Result<RisConfig> {
    if incident.is_empty() || incident.len() != outgoing.len() {
        return Err(DensimError::Phy(format!(
            "cascade element vectors empty or mismatched: {} vs {}",
            incident.len(),
            outgoing.len()
        )));
    }
    let coeffs: Vec<Complex64> = incident
        .iter()
        .zip(outgoing)
        .map(|(a, b)| a * b)
        .collect();

    let theta = match phase_bits {
        None => coeffs
            .iter()
            .map(|c| {
                if c.norm_sqr() == 0.0 {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, -c.arg())
                }
            })
            .collect(),
        Some(bits) => quantized_theta(&coeffs, bits)?,
    };
    Ok(RisConfig { theta, phase_bits })
}

fn quantized_theta(coeffs: &[Complex64], bits: u32) -> Result<Vec<Complex64>> {
    if bits == 0 || bits > 16 {
        return Err(DensimError::Phy(format!(
            "phase quantization bits {bits} outside [1, 16]"
        )));
    }
    let m = 1usize << bits;
    let step = 2.0 * std::f64::consts::PI / m as f64;
    let level = |idx: usize| Complex64::from_polar(1.0, idx as f64 * step);
    // Best level for coefficient c under rotation phi maximizes
    // cos(arg(c) + level - phi); boundaries sit halfway between levels.
    let best_level = |c: Complex64, phi: f64| -> usize {
        let want = phi - c.arg();
        let idx = (want / step).round() as i64;
        idx.rem_euclid(m as i64) as usize
    };
    let mut boundaries = Vec::with_capacity(coeffs.len() * m + 1);
    boundaries.push(0.0);
    for c in coeffs {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        for k in 0..m {
            let b = c.arg() + (2.0 * k as f64 + 1.0) * step / 2.0;
            boundaries.push(b.rem_euclid(2.0 * std::f64::consts::PI));
        }
    }
    boundaries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    boundaries.push(2.0 * std::f64::consts::PI);

    let mut best_sum = -1.0;
    let mut best: Vec<Complex64> = vec![Complex64::new(1.0, 0.0); coeffs.len()];
    for w in boundaries.windows(2) {
        let phi = (w[0] + w[1]) / 2.0;
        let assignment: Vec<usize> = coeffs.iter().map(|c| best_level(*c, phi)).collect();
        let total: Complex64 = coeffs
            .iter()
            .zip(&assignment)
            .map(|(c, idx)| c * level(*idx))
            .sum();
        if total.norm() > best_sum {
            best_sum = total.norm();
            best = assignment.iter().map(|idx| level(*idx)).collect();
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::BeamVector;
    use crate::{db_to_linear, linear_to_db};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rand_c(rng: &mut impl Rng) -> Complex64 {
        c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    }

    #[test]
    fn noise_power_reference_value() {
        // -174 + 10*log10(12 * 60 kHz) + 9 = -106.43 dBm
        let n = noise_power_prb(-174.0, 12, 60e3, 9.0);
        let dbm = 10.0 * n.log10();
        assert_abs_diff_eq!(dbm, -106.43, epsilon = 0.01);
        assert_abs_diff_eq!(dbm, -174.0 + 10.0 * 720000f64.log10() + 9.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_power_unit_bandwidth() {
        let n = noise_power_prb(-174.0, 1, 1.0, 0.0);
        assert_abs_diff_eq!(10.0 * n.log10(), -174.0, epsilon = 1e-12);
    }

    #[test]
    fn noise_power_without_noise_figure() {
        let n = noise_power_prb(-174.0, 12, 60e3, 0.0);
        assert_abs_diff_eq!(10.0 * n.log10(), -115.43, epsilon = 0.01);
    }

    #[test]
    fn effective_gain_identity() {
        let mut h = CMat::zeros(1, 1);
        h.set(0, 0, c(1.0, 0.0));
        let f = BeamVector { weights: vec![c(1.0, 0.0)] };
        let g = effective_gain(&h, &f, &f).unwrap();
        assert_abs_diff_eq!(g.gamma.re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.gamma.im, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn effective_gain_rank_one_matched() {
        // H = a b^H with unit a, b: gamma = 1 for f = b, d = a.
        let a: Vec<Complex64> = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let b: Vec<Complex64> = vec![c(0.0, 1.0)];
        let mut h = CMat::zeros(2, 1);
        for (r, av) in a.iter().enumerate() {
            h.set(r, 0, av * b[0].conj());
        }
        let f = BeamVector { weights: b };
        let d = BeamVector { weights: a };
        let g = effective_gain(&h, &f, &d).unwrap();
        assert_abs_diff_eq!(g.gamma.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn effective_gain_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let n = 4;
            let mut h = CMat::zeros(n, n);
            for r in 0..n {
                for cc in 0..n {
                    h.set(r, cc, rand_c(&mut rng));
                }
            }
            let f = BeamVector { weights: (0..n).map(|_| rand_c(&mut rng)).collect() };
            let d = BeamVector { weights: (0..n).map(|_| rand_c(&mut rng)).collect() };
            let got = effective_gain(&h, &f, &d).unwrap().gamma;
            // independent triple product, explicit index order
            let mut want = c(0.0, 0.0);
            for r in 0..n {
                for cc in 0..n {
                    want += d.weights[r].conj() * h.get(r, cc) * f.weights[cc];
                }
            }
            assert!((got - want).norm() <= 1e-12 * want.norm().max(1.0));
        }
    }

    #[test]
    fn effective_gain_rejects_mismatch() {
        let h = CMat::zeros(2, 2);
        let f = BeamVector { weights: vec![c(1.0, 0.0)] };
        let d = BeamVector { weights: vec![c(1.0, 0.0), c(0.0, 0.0)] };
        assert!(effective_gain(&h, &f, &d).is_err());
    }

    #[test]
    fn iab_balanced_signal_noise_is_zero_db() {
        let noise = noise_power_prb(-174.0, 12, 60e3, 9.0);
        let b = sinr_iab(c(1.0, 0.0), noise, &[], &[], noise);
        assert_abs_diff_eq!(b.sinr_db(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn iab_example_with_single_interferer() {
        // S = -80 dBm, I = -90 dBm, N = -106.43 dBm.
        let s = dbm_to_mw(-80.0);
        let i = dbm_to_mw(-90.0);
        let n = dbm_to_mw(-106.43);
        let b = sinr_iab(
            c(1.0, 0.0),
            s,
            &[InterferencePath::new(c(1.0, 0.0), i)],
            &[],
            n,
        );
        let expected_db = linear_to_db(s / (i + n));
        assert_abs_diff_eq!(b.sinr_db(), expected_db, epsilon = 1e-12);
        // the linear-domain oracle lands near 9.9 dB
        assert_abs_diff_eq!(expected_db, 9.902, epsilon = 0.005);
    }

    #[test]
    fn iab_interference_strictly_decreases_sinr() {
        let noise = 1e-11;
        let base = sinr_iab(c(0.5, 0.5), 1.0, &[], &[], noise);
        let extra = InterferencePath::new(c(0.01, 0.0), 1.0);
        let with = sinr_iab(c(0.5, 0.5), 1.0, &[], &[extra], noise);
        assert!(with.sinr_linear() < base.sinr_linear());
    }

    #[test]
    fn ncr_zero_gain_degenerates_to_direct() {
        let noise = 1e-11;
        let cascade = NcrCascade {
            in_gain: c(1e-5, 0.0),
            amp_gain: 0.0,
            out_gain: c(1e-5, 0.0),
        };
        let a = sinr_ncr(c(1e-5, 0.0), 1.0, Some(cascade), &[], &[], &[], noise);
        let d = sinr_direct(c(1e-5, 0.0), 1.0, &[], noise);
        assert_abs_diff_eq!(a.sinr_linear(), d.sinr_linear(), epsilon = 1e-15);
    }

    #[test]
    fn ncr_scalar_hand_oracle_without_direct_path() {
        // rho = |g2|^2 g |g1|^2 p / (sigma^2 (1 + |g2|^2 g))
        let sigma = noise_power_prb(-174.0, 12, 60e3, 9.0);
        let g1 = c(1e-5, 0.0);
        let g2 = c(0.0, 1e-5);
        let g = 1e6;
        let p = 1.0;
        let b = sinr_ncr(
            c(0.0, 0.0),
            p,
            Some(NcrCascade { in_gain: g1, amp_gain: g, out_gain: g2 }),
            &[],
            &[],
            &[],
            sigma,
        );
        let expected = (g2.norm_sqr() * g * g1.norm_sqr() * p)
            / (sigma * (1.0 + g2.norm_sqr() * g));
        assert!((b.sinr_linear() - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn ncr_saturates_with_large_gain() {
        // g -> inf: rho -> |g1|^2 p / sigma^2 (backhaul-limited).
        let sigma = 1e-11;
        let g1 = c(2e-5, 1e-5);
        let g2 = c(-1e-5, 3e-5);
        let p = 1.0;
        let limit = g1.norm_sqr() * p / sigma;
        let mut last = 0.0;
        for g_db in [20.0, 40.0, 60.0, 80.0, 120.0, 160.0] {
            let b = sinr_ncr(
                c(0.0, 0.0),
                p,
                Some(NcrCascade {
                    in_gain: g1,
                    amp_gain: db_to_linear(g_db),
                    out_gain: g2,
                }),
                &[],
                &[],
                &[],
                sigma,
            );
            assert!(b.sinr_linear() >= last);
            last = b.sinr_linear();
        }
        assert!((last - limit).abs() / limit < 1e-3, "limit {limit} got {last}");
    }

    #[test]
    fn ncr_noise_floor_exceeds_thermal_when_on() {
        let sigma = 1e-11;
        let b = sinr_ncr(
            c(1e-6, 0.0),
            1.0,
            Some(NcrCascade {
                in_gain: c(1e-5, 0.0),
                amp_gain: 1e6,
                out_gain: c(1e-4, 0.0),
            }),
            &[],
            &[],
            &[],
            sigma,
        );
        assert!(b.noise_mw > sigma);
    }

    #[test]
    fn ris_unit_cascade_example() {
        // 1-element surface, h1 = h2 = 1, theta = 1, no direct path,
        // p / sigma^2 = 10 -> rho = 10.
        let eta = ris_cascade_gain(&[c(1.0, 0.0)], &[c(1.0, 0.0)], &[c(1.0, 0.0)]);
        let b = sinr_ris(c(0.0, 0.0), 10.0, Some(eta), &[], &[], 1.0).unwrap();
        assert_abs_diff_eq!(b.sinr_linear(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn ris_zero_cascade_reduces_to_direct() {
        let noise = 1e-11;
        let r = sinr_ris(c(1e-5, 2e-5), 1.0, Some(c(0.0, 0.0)), &[], &[], noise).unwrap();
        let d = sinr_direct(c(1e-5, 2e-5), 1.0, &[], noise);
        assert_abs_diff_eq!(r.sinr_linear(), d.sinr_linear(), epsilon = 1e-18);
    }

    #[test]
    fn ris_requires_theta() {
        assert!(sinr_ris(c(1.0, 0.0), 1.0, None, &[], &[], 1e-11).is_err());
    }

    #[test]
    fn ris_cascade_matches_dense_product_oracle() {
        // eta via per-element coefficients equals d^H H2 Theta H1 f.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n_ris = 8;
            let n_tx = 3;
            let n_rx = 2;
            let mut h1 = CMat::zeros(n_ris, n_tx);
            let mut h2 = CMat::zeros(n_rx, n_ris);
            for v in h1.data.iter_mut().chain(h2.data.iter_mut()) {
                *v = rand_c(&mut rng);
            }
            let f: Vec<Complex64> = (0..n_tx).map(|_| rand_c(&mut rng)).collect();
            let d: Vec<Complex64> = (0..n_rx).map(|_| rand_c(&mut rng)).collect();
            let theta: Vec<Complex64> = (0..n_ris)
                .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 6.28))
                .collect();

            // per-element incident (H1 f) and outgoing (d^H H2) coefficients
            let incident: Vec<Complex64> = (0..n_ris)
                .map(|n| (0..n_tx).map(|t| h1.get(n, t) * f[t]).sum())
                .collect();
            let outgoing: Vec<Complex64> = (0..n_ris)
                .map(|n| (0..n_rx).map(|r| d[r].conj() * h2.get(r, n)).sum())
                .collect();
            let got = ris_cascade_gain(&incident, &outgoing, &theta);

            // dense oracle: d^H (H2 * diag(theta) * H1) f
            let mut want = c(0.0, 0.0);
            for r in 0..n_rx {
                for nn in 0..n_ris {
                    for t in 0..n_tx {
                        want += d[r].conj() * h2.get(r, nn) * theta[nn] * h1.get(nn, t) * f[t];
                    }
                }
            }
            assert!((got - want).norm() <= 1e-12 * want.norm().max(1e-12));
        }
    }

    #[test]
    fn direct_matches_ncr_with_all_gains_zero() {
        let noise = 1e-11;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let g = rand_c(&mut rng) * 1e-5;
            let i1 = InterferencePath::new(rand_c(&mut rng) * 1e-5, 2.0);
            let d = sinr_direct(g, 1.0, &[i1], noise);
            let n = sinr_ncr(g, 1.0, None, &[i1], &[], &[], noise);
            assert_abs_diff_eq!(d.sinr_linear(), n.sinr_linear(), epsilon = 1e-18);
        }
    }

    #[test]
    fn optimize_theta_single_element() {
        let a = [c(0.3, -0.4)];
        let b = [c(-1.0, 2.0)];
        let cfg = optimize_theta(&a, &b, None).unwrap();
        let eta = ris_cascade_gain(&a, &b, &cfg.theta);
        assert_abs_diff_eq!(eta.norm(), a[0].norm() * b[0].norm(), epsilon = 1e-12);
    }

    #[test]
    fn optimize_theta_continuous_reaches_magnitude_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let n = 1 + (rng.random::<u32>() % 8) as usize;
            let a: Vec<Complex64> = (0..n).map(|_| rand_c(&mut rng)).collect();
            let b: Vec<Complex64> = (0..n).map(|_| rand_c(&mut rng)).collect();
            let cfg = optimize_theta(&a, &b, None).unwrap();
            for t in &cfg.theta {
                assert_abs_diff_eq!(t.norm(), 1.0, epsilon = 1e-12);
            }
            let eta = ris_cascade_gain(&a, &b, &cfg.theta);
            let bound: f64 = a.iter().zip(&b).map(|(x, y)| (x * y).norm()).sum();
            assert_abs_diff_eq!(eta.norm(), bound, epsilon = 1e-9);
        }
    }

    #[test]
    fn optimize_theta_beats_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a: Vec<Complex64> = (0..6).map(|_| rand_c(&mut rng)).collect();
        let b: Vec<Complex64> = (0..6).map(|_| rand_c(&mut rng)).collect();
        let best = ris_cascade_gain(&a, &b, &optimize_theta(&a, &b, None).unwrap().theta).norm();
        for _ in 0..1000 {
            let theta: Vec<Complex64> = (0..6)
                .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * 6.2831853))
                .collect();
            assert!(ris_cascade_gain(&a, &b, &theta).norm() <= best + 1e-12);
        }
    }

    #[test]
    fn optimize_theta_quantized_matches_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..200 {
            let n = 1 + (rng.random::<u32>() % 4) as usize;
            let a: Vec<Complex64> = (0..n).map(|_| rand_c(&mut rng)).collect();
            let b: Vec<Complex64> = (0..n).map(|_| rand_c(&mut rng)).collect();
            let cfg = optimize_theta(&a, &b, Some(2)).unwrap();
            let got = ris_cascade_gain(&a, &b, &cfg.theta).norm();

            // exhaustive 4^n search
            let m = 4usize;
            let mut best = -1.0f64;
            let combos = m.pow(n as u32);
            for combo in 0..combos {
                let mut idx = combo;
                let theta: Vec<Complex64> = (0..n)
                    .map(|_| {
                        let l = idx % m;
                        idx /= m;
                        Complex64::from_polar(1.0, l as f64 * std::f64::consts::PI / 2.0)
                    })
                    .collect();
                best = best.max(ris_cascade_gain(&a, &b, &theta).norm());
            }
            assert!(
                (got - best).abs() <= 1e-9 * best.max(1e-12),
                "got {got}, exhaustive {best}"
            );
        }
    }

    #[test]
    fn optimize_theta_rejects_empty() {
        assert!(optimize_theta(&[], &[], None).is_err());
    }

    #[test]
    fn ncr_per_prb_gain_respects_cap_and_power_state() {
        let mut cfg = NcrConfig::new(60.0);
        cfg.max_output_dbm_per_prb = Some(13.8);
        // weak input: nominal gain applies
        let weak = cfg.per_prb_gain(dbm_to_mw(-60.0));
        assert_abs_diff_eq!(10.0 * weak.log10(), 60.0, epsilon = 1e-9);
        // strong input: clipped to the rated output
        let strong = cfg.per_prb_gain(dbm_to_mw(-20.0));
        assert_abs_diff_eq!(10.0 * strong.log10(), 33.8, epsilon = 1e-9);
        cfg.powered_on = false;
        assert_eq!(cfg.per_prb_gain(dbm_to_mw(-60.0)), 0.0);
    }

    #[test]
    fn equal_power_split_conserves_total() {
        let per = equal_power_split_mw(35.0, 66);
        assert_abs_diff_eq!(per * 66.0, dbm_to_mw(35.0), epsilon = 1e-12);
        assert_eq!(equal_power_split_mw(35.0, 0), 0.0);
    }
}
