//! Antenna element patterns, uniform rectangular arrays and beam codebooks.
//!
//! Infrastructure nodes use the 3GPP 3D directive element pattern on
//! half-wavelength URA panels; UEs use a single omnidirectional antenna.
//! Transmit and receive filters are unit-norm steering vectors picked from a
//! uniform angular codebook spanning the panel's 120-degree sector.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::CMat;
use crate::geom::{wrap_deg, AzEl, Vec3};
use crate::{DensimError, Result};

/// Directive antenna element pattern.
///
/// The directive variant follows the 3GPP 3D model:
/// `A(theta, phi) = g_max - min(-(A_v(theta) + A_h(phi)), floor)` with
/// `A_v = -min(12*((theta-90)/hpbw)^2, floor)` and
/// `A_h = -min(12*(phi/hpbw)^2, floor)`, angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementPattern {
    /// Peak element gain, dBi.
    pub max_gain_dbi: f64,
    /// Half-power beamwidth, degrees.
    pub half_power_beamwidth_deg: f64,
    /// Combined side-lobe floor below peak, dB.
    pub sidelobe_floor_db: f64,
    /// Omnidirectional element (UE): constant `max_gain_dbi` everywhere.
    pub omni: bool,
}

impl ElementPattern {
    /// 8 dBi directive element used by all infrastructure panels.
    pub fn three_gpp_3d() -> Self {
        Self {
            max_gain_dbi: 8.0,
            half_power_beamwidth_deg: 65.0,
            sidelobe_floor_db: 30.0,
            omni: false,
        }
    }

    /// 0 dBi omnidirectional UE antenna.
    pub fn omni() -> Self {
        Self {
            max_gain_dbi: 0.0,
            half_power_beamwidth_deg: 65.0,
            sidelobe_floor_db: 30.0,
            omni: true,
        }
    }
}

/// Element gain in dBi at zenith angle `theta_deg` in [0, 180] and azimuth
/// `phi_deg` in [-180, 180], both relative to the panel boresight frame
/// (boresight is theta = 90, phi = 0).
pub fn element_gain(pattern: &ElementPattern, theta_deg: f64, phi_deg: f64) -> Result<f64> {
    if !(0.0..=180.0).contains(&theta_deg) {
        return Err(DensimError::Antenna(format!(
            "zenith angle {theta_deg} outside [0, 180]"
        )));
    }
    if !(-180.0..=180.0).contains(&phi_deg) {
        return Err(DensimError::Antenna(format!(
            "azimuth {phi_deg} outside [-180, 180]"
        )));
    }
    Ok(element_gain_unchecked(pattern, theta_deg, phi_deg))
}

/// Same as [`element_gain`] without the range checks (hot path).
#[inline]
pub fn element_gain_unchecked(pattern: &ElementPattern, theta_deg: f64, phi_deg: f64) -> f64 {
    if pattern.omni {
        return pattern.max_gain_dbi;
    }
    let floor = pattern.sidelobe_floor_db;
    let hpbw = pattern.half_power_beamwidth_deg;
    let a_v = -(12.0 * ((theta_deg - 90.0) / hpbw).powi(2)).min(floor);
    let a_h = -(12.0 * (phi_deg / hpbw).powi(2)).min(floor);
    pattern.max_gain_dbi - (-(a_v + a_h)).min(floor)
}

/// Uniform rectangular array: `n_rows` vertical by `n_cols` horizontal
/// elements at `element_spacing` wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Element spacing in wavelengths.
    pub element_spacing: f64,
}

impl ArrayGeometry {
    pub fn new(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            element_spacing: 0.5,
        }
    }

    /// URA 8x8 (gNB and RIS-facing arrays).
    pub fn ura_8x8() -> Self {
        Self::new(8, 8)
    }

    /// URA 4x4 (IAB and NCR panels).
    pub fn ura_4x4() -> Self {
        Self::new(4, 4)
    }

    /// Single-element "array" (UE).
    pub fn single() -> Self {
        Self::new(1, 1)
    }

    pub fn n_elements(&self) -> usize {
        self.n_rows * self.n_cols
    }
}

/// Unit-L2-norm beamforming weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamVector {
    pub weights: Vec<Complex64>,
}

impl BeamVector {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Per-element phase of the URA response toward local direction
/// (`az_deg`, `el_deg`), row `r`, column `c`:
/// `2*pi*spacing*(r*sin(el) + c*cos(el)*sin(az))`.
///
/// Built with phase recurrences so only two sin/cos pairs are computed per
/// call. Entries have unit modulus; the result is not normalized.
pub fn array_response(array: &ArrayGeometry, az_deg: f64, el_deg: f64) -> Vec<Complex64> {
    let az = az_deg.to_radians();
    let el = el_deg.to_radians();
    let k = 2.0 * std::f64::consts::PI * array.element_spacing;
    let row_phase = k * el.sin();
    let col_phase = k * el.cos() * az.sin();
    let row_step = Complex64::from_polar(1.0, row_phase);
    let col_step = Complex64::from_polar(1.0, col_phase);

    let mut out = Vec::with_capacity(array.n_elements());
    let mut row_factor = Complex64::new(1.0, 0.0);
    for _ in 0..array.n_rows {
        let mut v = row_factor;
        for _ in 0..array.n_cols {
            out.push(v);
            v *= col_step;
        }
        row_factor *= row_step;
    }
    out
}

/// Unit-norm steering vector toward local direction (`az_deg`, `el_deg`).
pub fn steering_vector(array: &ArrayGeometry, az_deg: f64, el_deg: f64) -> BeamVector {
    let mut weights = array_response(array, az_deg, el_deg);
    let scale = 1.0 / (array.n_elements() as f64).sqrt();
    for w in &mut weights {
        *w *= scale;
    }
    BeamVector { weights }
}

/// Azimuth span covered by one panel's codebook, degrees.
pub const CODEBOOK_AZ_SPAN_DEG: f64 = 120.0;
/// Elevation span covered by one panel's codebook, degrees.
pub const CODEBOOK_EL_SPAN_DEG: f64 = 90.0;

/// Uniform angular grid of steering vectors covering the panel sector:
/// `n_az` beams across 120 degrees of azimuth and `n_el` beams across
/// 90 degrees of elevation, centered on boresight.
pub fn make_codebook(array: &ArrayGeometry, n_az: usize, n_el: usize) -> Result<Vec<BeamVector>> {
    if n_az == 0 || n_el == 0 {
        return Err(DensimError::Antenna(
            "codebook needs at least one azimuth and one elevation beam".into(),
        ));
    }
    let mut beams = Vec::with_capacity(n_az * n_el);
    for ei in 0..n_el {
        let el = grid_angle(ei, n_el, CODEBOOK_EL_SPAN_DEG);
        for ai in 0..n_az {
            let az = grid_angle(ai, n_az, CODEBOOK_AZ_SPAN_DEG);
            beams.push(steering_vector(array, az, el));
        }
    }
    Ok(beams)
}

/// Center of grid cell `i` of `n` across `span` degrees centered on zero.
fn grid_angle(i: usize, n: usize, span: f64) -> f64 {
    if n == 1 {
        0.0
    } else {
        -span / 2.0 + span * (i as f64 + 0.5) / n as f64
    }
}

/// Effective complex gain `d^H H f` of a matrix under a beam pair.
pub fn beam_pair_gain(h: &CMat, f: &BeamVector, d: &BeamVector) -> Result<Complex64> {
    if f.len() != h.n_tx || d.len() != h.n_rx {
        return Err(DensimError::Antenna(format!(
            "beam/matrix dimension mismatch: H is {}x{}, f has {}, d has {}",
            h.n_rx,
            h.n_tx,
            f.len(),
            d.len()
        )));
    }
    let mut gain = Complex64::new(0.0, 0.0);
    for r in 0..h.n_rx {
        let mut row_acc = Complex64::new(0.0, 0.0);
        for c in 0..h.n_tx {
            row_acc += h.get(r, c) * f.weights[c];
        }
        gain += d.weights[r].conj() * row_acc;
    }
    Ok(gain)
}

/// Exhaustively pick the codebook pair maximizing `|d^H H f|`.
///
/// Ties are broken toward the lowest (tx, rx) codebook indices. Returns the
/// winning indices alongside the beams so callers can reference the codebook.
pub fn select_beam_pair<'a>(
    h: &CMat,
    tx_codebook: &'a [BeamVector],
    rx_codebook: &'a [BeamVector],
) -> Result<(usize, usize, &'a BeamVector, &'a BeamVector)> {
    if tx_codebook.is_empty() || rx_codebook.is_empty() {
        return Err(DensimError::Antenna("empty codebook".into()));
    }
    let mut best = (0usize, 0usize);
    let mut best_gain = -1.0f64;
    for (ti, f) in tx_codebook.iter().enumerate() {
        for (ri, d) in rx_codebook.iter().enumerate() {
            let g = beam_pair_gain(h, f, d)?.norm();
            if g > best_gain {
                best_gain = g;
                best = (ti, ri);
            }
        }
    }
    Ok((best.0, best.1, &tx_codebook[best.0], &rx_codebook[best.1]))
}

/// A physically mounted panel: array geometry, element pattern, boresight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub array: ArrayGeometry,
    pub pattern: ElementPattern,
    /// Boresight azimuth in the global frame, degrees.
    pub boresight_az_deg: f64,
    /// Boresight elevation in the global frame, degrees (negative = downtilt).
    pub boresight_el_deg: f64,
}

impl Panel {
    pub fn new(array: ArrayGeometry, pattern: ElementPattern, az_deg: f64, el_deg: f64) -> Self {
        Self {
            array,
            pattern,
            boresight_az_deg: az_deg,
            boresight_el_deg: el_deg,
        }
    }

    /// Express a global direction in this panel's local az/el frame.
    ///
    /// Local +x is the boresight. For near-vertical boresights the local
    /// horizontal axis falls back to global +y to keep the frame defined.
    pub fn to_local(&self, global: AzEl) -> AzEl {
        let b = AzEl::new(self.boresight_az_deg, self.boresight_el_deg).unit_vector();
        let up = Vec3::new(0.0, 0.0, 1.0);
        let mut y_axis = up.cross(b);
        if y_axis.norm() < 1e-9 {
            y_axis = Vec3::new(0.0, 1.0, 0.0);
        }
        let y_axis = y_axis.normalized();
        let z_axis = b.cross(y_axis).normalized();
        let d = global.unit_vector();
        let local = Vec3::new(d.dot(b), d.dot(y_axis), d.dot(z_axis));
        AzEl::between(Vec3::default(), local)
    }

    /// Element amplitude gain (linear, field units) toward a global direction.
    pub fn element_amplitude(&self, global: AzEl) -> f64 {
        let local = self.to_local(global);
        let theta = (90.0 - local.el_deg).clamp(0.0, 180.0);
        let phi = wrap_deg(local.az_deg);
        let gain_db = element_gain_unchecked(&self.pattern, theta, phi.clamp(-180.0, 180.0));
        10f64.powf(gain_db / 20.0)
    }

    /// Unit-modulus array response toward a global direction.
    pub fn response(&self, global: AzEl) -> Vec<Complex64> {
        let local = self.to_local(global);
        array_response(&self.array, local.az_deg, local.el_deg)
    }

    /// Steering beam toward a global direction (for beam-pointing policies
    /// outside the codebook grid, e.g. NCR backhaul panels).
    pub fn steer_toward(&self, global: AzEl) -> BeamVector {
        let local = self.to_local(global);
        steering_vector(&self.array, local.az_deg, local.el_deg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn element_gain_boresight_is_max() {
        let p = ElementPattern::three_gpp_3d();
        assert_abs_diff_eq!(element_gain(&p, 90.0, 0.0).unwrap(), 8.0, epsilon = 1e-12);
    }

    #[test]
    fn element_gain_at_hpbw_edge() {
        // 8 - 12*(65/65)^2 = -4 dBi
        let p = ElementPattern::three_gpp_3d();
        assert_abs_diff_eq!(element_gain(&p, 90.0, 65.0).unwrap(), -4.0, epsilon = 1e-12);
    }

    #[test]
    fn element_gain_floor_clamp() {
        // 8 - 30 = -22 dBi at the back of the panel
        let p = ElementPattern::three_gpp_3d();
        assert_abs_diff_eq!(
            element_gain(&p, 90.0, 180.0).unwrap(),
            -22.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn element_gain_rejects_out_of_range() {
        let p = ElementPattern::three_gpp_3d();
        assert!(element_gain(&p, -1.0, 0.0).is_err());
        assert!(element_gain(&p, 90.0, 181.0).is_err());
    }

    #[test]
    fn element_gain_stays_within_band() {
        let p = ElementPattern::three_gpp_3d();
        for theta in 0..=180 {
            for phi in -180..=180 {
                let g = element_gain(&p, theta as f64, phi as f64).unwrap();
                assert!(g <= 8.0 + 1e-12 && g >= 8.0 - 30.0 - 1e-12);
            }
        }
    }

    #[test]
    fn ue_pattern_is_flat() {
        let p = ElementPattern::omni();
        assert_eq!(element_gain(&p, 10.0, 170.0).unwrap(), 0.0);
        assert_eq!(element_gain(&p, 90.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn steering_single_element_is_identity() {
        let v = steering_vector(&ArrayGeometry::single(), 25.0, -10.0);
        assert_eq!(v.len(), 1);
        assert_abs_diff_eq!(v.weights[0].re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.weights[0].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn steering_broadside_two_elements() {
        let v = steering_vector(&ArrayGeometry::new(1, 2), 0.0, 0.0);
        let expected = 1.0 / 2f64.sqrt();
        for w in &v.weights {
            assert_abs_diff_eq!(w.re, expected, epsilon = 1e-12);
            assert_abs_diff_eq!(w.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn steered_array_gain_equals_element_count() {
        // |w^H a|^2 with w = a/sqrt(N) gives N toward the steered direction.
        let arr = ArrayGeometry::ura_8x8();
        let w = steering_vector(&arr, 30.0, 0.0);
        let a = array_response(&arr, 30.0, 0.0);
        let g: Complex64 = w
            .weights
            .iter()
            .zip(&a)
            .map(|(wi, ai)| wi.conj() * ai)
            .sum();
        assert_abs_diff_eq!(g.norm_sqr(), 64.0, epsilon = 1e-9);
    }

    #[test]
    fn codebook_counts_and_norms() {
        let cb = make_codebook(&ArrayGeometry::ura_4x4(), 8, 4).unwrap();
        assert_eq!(cb.len(), 32);
        for b in &cb {
            assert_abs_diff_eq!(b.norm(), 1.0, epsilon = 1e-12);
        }
        let single = make_codebook(&ArrayGeometry::ura_4x4(), 1, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert!(make_codebook(&ArrayGeometry::ura_4x4(), 0, 4).is_err());
    }

    #[test]
    fn codebook_spacing_is_span_over_count() {
        let n_az = 8;
        let expected = CODEBOOK_AZ_SPAN_DEG / n_az as f64;
        for i in 0..n_az - 1 {
            let a0 = grid_angle(i, n_az, CODEBOOK_AZ_SPAN_DEG);
            let a1 = grid_angle(i + 1, n_az, CODEBOOK_AZ_SPAN_DEG);
            assert_abs_diff_eq!(a1 - a0, expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn array_gain_monotone_in_element_count() {
        // LOS channel toward a fixed direction: steered gain grows with N.
        let dir = AzEl::new(20.0, 5.0);
        let mut last = 0.0;
        for n in [1usize, 2, 4, 8] {
            let arr = ArrayGeometry::new(n, n);
            let local = dir;
            let w = steering_vector(&arr, local.az_deg, local.el_deg);
            let a = array_response(&arr, local.az_deg, local.el_deg);
            let g: Complex64 = w
                .weights
                .iter()
                .zip(&a)
                .map(|(wi, ai)| wi.conj() * ai)
                .sum();
            let p = g.norm_sqr();
            assert!(p >= last - 1e-9, "gain {p} not monotone at {n}x{n}");
            last = p;
        }
    }

    #[test]
    fn nadir_panel_local_frame() {
        let panel = Panel::new(
            ArrayGeometry::ura_4x4(),
            ElementPattern::three_gpp_3d(),
            0.0,
            -90.0,
        );
        // Straight down is boresight.
        let local = panel.to_local(AzEl::new(0.0, -90.0));
        assert_abs_diff_eq!(local.az_deg, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(local.el_deg, 0.0, epsilon = 1e-9);
        let amp = panel.element_amplitude(AzEl::new(0.0, -90.0));
        assert_abs_diff_eq!(20.0 * amp.log10(), 8.0, epsilon = 1e-9);
    }
}
