//! Jones-calculus polarization control of the collective drive.
//!
//! The drive laser passes a quarter-wave plate and then a half-wave plate;
//! the resulting polarization projects onto each emitter's transition
//! dipole, setting the per-emitter complex Rabi amplitude. For orthogonal
//! circular dipoles a horizontally polarized field drives the emitters
//! in-phase and a vertical one out-of-phase, and the half-wave plate alone
//! walks the relative phase while keeping the amplitudes equal: that line
//! is the equal-amplitude contour used as the phase control knob.

use ndarray::Array2;
use thiserror::Error;

use crate::C64;

#[derive(Debug, Error)]
pub enum PolarizationError {
    #[error("equal-amplitude level set is empty in the scanned window (qwp {qwp_min:.1}..{qwp_max:.1} deg, hwp {hwp_min:.1}..{hwp_max:.1} deg)")]
    EmptyContour {
        qwp_min: f64,
        qwp_max: f64,
        hwp_min: f64,
        hwp_max: f64,
    },
    #[error("requested phase {0:.4} rad is outside the contour's covered range")]
    PhaseNotCovered(f64),
}

/// Fully polarized field as complex (H, V) amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesVector {
    pub h: C64,
    pub v: C64,
}

impl JonesVector {
    pub fn new(h: C64, v: C64) -> Self {
        JonesVector { h, v }
    }

    pub fn horizontal() -> Self {
        JonesVector::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn vertical() -> Self {
        JonesVector::new(C64::new(0.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn diagonal() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        JonesVector::new(C64::new(r, 0.0), C64::new(r, 0.0))
    }

    /// Left/right circular, `(1, +-i)/sqrt(2)`.
    pub fn circular(plus: bool) -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        JonesVector::new(
            C64::new(r, 0.0),
            if plus { C64::new(0.0, r) } else { C64::new(0.0, -r) },
        )
    }

    pub fn norm(&self) -> f64 {
        (self.h.norm_sqr() + self.v.norm_sqr()).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize a zero field");
        JonesVector::new(self.h / C64::new(n, 0.0), self.v / C64::new(n, 0.0))
    }

    /// Conjugate inner product `<self | other>`.
    pub fn dot(&self, other: &JonesVector) -> C64 {
        self.h.conj() * other.h + self.v.conj() * other.v
    }
}

/// Rotated lossless retarder: fast axis at `angle` (radians from H), slow
/// axis delayed by `retardance`.
fn retarder(angle: f64, retardance: f64) -> [[C64; 2]; 2] {
    let (s, c) = angle.sin_cos();
    let e = C64::from_polar(1.0, retardance);
    let one = C64::new(1.0, 0.0);
    // R(a) diag(1, e) R(-a)
    [
        [one * C64::new(c * c, 0.0) + e * C64::new(s * s, 0.0), (one - e) * C64::new(s * c, 0.0)],
        [(one - e) * C64::new(s * c, 0.0), one * C64::new(s * s, 0.0) + e * C64::new(c * c, 0.0)],
    ]
}

fn apply(m: &[[C64; 2]; 2], j: &JonesVector) -> JonesVector {
    JonesVector::new(m[0][0] * j.h + m[0][1] * j.v, m[1][0] * j.h + m[1][1] * j.v)
}

/// Field after the quarter-wave plate (first) and half-wave plate (second)
/// at the given rotation angles in degrees.
pub fn waveplate_output(qwp_deg: f64, hwp_deg: f64, input: &JonesVector) -> JonesVector {
    let qwp = retarder(qwp_deg.to_radians(), std::f64::consts::FRAC_PI_2);
    let hwp = retarder(hwp_deg.to_radians(), std::f64::consts::PI);
    apply(&hwp, &apply(&qwp, input))
}

/// Transition-dipole Jones vectors of the two emitters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleConfig {
    pub dipoles: [JonesVector; 2],
}

impl Default for DipoleConfig {
    /// Orthogonal circular dipoles (opposite magnetization).
    fn default() -> Self {
        DipoleConfig {
            dipoles: [JonesVector::circular(true), JonesVector::circular(false)],
        }
    }
}

impl DipoleConfig {
    /// `|<d1 | d2>|`, zero for orthogonal dipoles.
    pub fn overlap(&self) -> f64 {
        self.dipoles[0].dot(&self.dipoles[1]).norm()
    }
}

/// Project a polarization onto the dipoles: per-emitter Rabi magnitude and
/// phase, `Omega_m e^{i theta_m} = scale * (d_m . eps)`.
pub fn drive_from_polarization(
    eps: &JonesVector,
    dipoles: &DipoleConfig,
    scale: f64,
) -> [(f64, f64); 2] {
    let mut out = [(0.0, 0.0); 2];
    for m in 0..2 {
        let a = dipoles.dipoles[m].dot(eps);
        out[m] = (scale * a.norm(), a.arg());
    }
    out
}

fn wrap_phase(p: f64) -> f64 {
    let mut x = p.rem_euclid(std::f64::consts::TAU);
    if x > std::f64::consts::PI {
        x -= std::f64::consts::TAU;
    }
    x
}

/// Projected drive amplitudes over a grid of waveplate angles.
#[derive(Debug, Clone)]
pub struct WaveplateMap {
    pub qwp_deg: Vec<f64>,
    pub hwp_deg: Vec<f64>,
    /// `a1sq[[i, j]]` at `(qwp_deg[i], hwp_deg[j])`.
    pub a1sq: Array2<f64>,
    pub a2sq: Array2<f64>,
    /// Relative amplitude `A1^2 / (A1^2 + A2^2)`.
    pub rel_a1: Array2<f64>,
    /// Relative drive phase `theta_1 - theta_2`, wrapped to `(-pi, pi]`.
    pub phase: Array2<f64>,
    input: JonesVector,
    dipoles: DipoleConfig,
    offsets: [f64; 2],
}

/// Per-cell projections `A_i^2 = |d_i . eps|^2` and the relative phase.
/// `offsets` are mounting-calibration offsets added to the two rotation
/// angles (qwp, hwp), zero for an aligned setup.
pub fn build_waveplate_map(
    qwp_deg: &[f64],
    hwp_deg: &[f64],
    input: &JonesVector,
    dipoles: &DipoleConfig,
    offsets: [f64; 2],
) -> WaveplateMap {
    assert!(!qwp_deg.is_empty() && !hwp_deg.is_empty(), "angle grids must be non-empty");
    let input = input.normalized();
    let shape = (qwp_deg.len(), hwp_deg.len());
    let mut a1sq = Array2::zeros(shape);
    let mut a2sq = Array2::zeros(shape);
    let mut rel = Array2::zeros(shape);
    let mut phase = Array2::zeros(shape);
    for (i, &q) in qwp_deg.iter().enumerate() {
        for (j, &h) in hwp_deg.iter().enumerate() {
            let eps = waveplate_output(q + offsets[0], h + offsets[1], &input);
            let a1 = dipoles.dipoles[0].dot(&eps);
            let a2 = dipoles.dipoles[1].dot(&eps);
            a1sq[[i, j]] = a1.norm_sqr();
            a2sq[[i, j]] = a2.norm_sqr();
            let total = a1.norm_sqr() + a2.norm_sqr();
            rel[[i, j]] = if total > 0.0 { a1.norm_sqr() / total } else { 0.0 };
            phase[[i, j]] = wrap_phase(a1.arg() - a2.arg());
        }
    }
    WaveplateMap {
        qwp_deg: qwp_deg.to_vec(),
        hwp_deg: hwp_deg.to_vec(),
        a1sq,
        a2sq,
        rel_a1: rel,
        phase,
        input,
        dipoles: *dipoles,
        offsets,
    }
}

impl WaveplateMap {
    /// Long-format CSV with one row per grid cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("qwp_deg,hwp_deg,A1sq,A2sq,rel_A1,phase_rad\n");
        for (i, &q) in self.qwp_deg.iter().enumerate() {
            for (j, &h) in self.hwp_deg.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    q,
                    h,
                    self.a1sq[[i, j]],
                    self.a2sq[[i, j]],
                    self.rel_a1[[i, j]],
                    self.phase[[i, j]]
                ));
            }
        }
        out
    }

    fn amplitude_split(&self, qwp: f64, hwp: f64) -> (f64, f64) {
        let eps = waveplate_output(qwp + self.offsets[0], hwp + self.offsets[1], &self.input);
        let a1 = self.dipoles.dipoles[0].dot(&eps);
        let a2 = self.dipoles.dipoles[1].dot(&eps);
        (a1.norm_sqr() - a2.norm_sqr(), wrap_phase(a1.arg() - a2.arg()))
    }
}

/// One point of the equal-amplitude contour.
#[derive(Debug, Clone, Copy)]
pub struct ContourPoint {
    pub qwp_deg: f64,
    pub hwp_deg: f64,
    /// Unwrapped relative drive phase along the contour.
    pub phase_rad: f64,
}

/// Equal-amplitude contour parametrized by the half-wave-plate grid, with
/// an unwrapped phase coordinate for inverse lookup.
#[derive(Debug, Clone)]
pub struct EqualAmplitudeContour {
    pub points: Vec<ContourPoint>,
    /// Total unwrapped phase range covered.
    pub phase_span: f64,
}

/// Trace the `A1 = A2` level set through the map's window: one refined
/// root in the qwp direction per hwp grid line, continued by nearest
/// branch, with the phase unwrapped along the way.
pub fn equal_amplitude_contour(
    map: &WaveplateMap,
) -> Result<EqualAmplitudeContour, PolarizationError> {
    let mut points: Vec<ContourPoint> = Vec::new();
    let mut prev_qwp: Option<f64> = None;
    let mut prev_phase: Option<f64> = None;

    for &hwp in &map.hwp_deg {
        // bracket sign changes of f(qwp) = A1^2 - A2^2 along this line
        let mut roots: Vec<f64> = Vec::new();
        let f = |q: f64| map.amplitude_split(q, hwp).0;
        let mut last = f(map.qwp_deg[0]);
        for w in map.qwp_deg.windows(2) {
            let cur = f(w[1]);
            if last == 0.0 {
                roots.push(w[0]);
            } else if last * cur < 0.0 {
                // bisect
                let (mut lo, mut hi) = (w[0], w[1]);
                let (mut flo, _fhi) = (last, cur);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm.abs() < 1e-9 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo * fm < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            last = cur;
        }
        if last == 0.0 {
            roots.push(*map.qwp_deg.last().unwrap());
        }
        if roots.is_empty() {
            continue;
        }
        // nearest-branch continuation
        let q = match prev_qwp {
            Some(p) => roots
                .iter()
                .cloned()
                .min_by(|a, b| (a - p).abs().partial_cmp(&(b - p).abs()).unwrap())
                .unwrap(),
            None => roots
                .iter()
                .cloned()
                .min_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap(),
        };
        let (_, mut phase) = map.amplitude_split(q, hwp);
        if let Some(pp) = prev_phase {
            while phase - pp > std::f64::consts::PI {
                phase -= std::f64::consts::TAU;
            }
            while phase - pp < -std::f64::consts::PI {
                phase += std::f64::consts::TAU;
            }
        }
        points.push(ContourPoint {
            qwp_deg: q,
            hwp_deg: hwp,
            phase_rad: phase,
        });
        prev_qwp = Some(q);
        prev_phase = Some(phase);
    }

    if points.len() < 2 {
        return Err(PolarizationError::EmptyContour {
            qwp_min: *map.qwp_deg.first().unwrap(),
            qwp_max: *map.qwp_deg.last().unwrap(),
            hwp_min: *map.hwp_deg.first().unwrap(),
            hwp_max: *map.hwp_deg.last().unwrap(),
        });
    }
    let lo = points.iter().map(|p| p.phase_rad).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.phase_rad).fold(f64::NEG_INFINITY, f64::max);
    Ok(EqualAmplitudeContour {
        points,
        phase_span: hi - lo,
    })
}

impl EqualAmplitudeContour {
    /// Waveplate angles realizing a target relative phase, by linear
    /// interpolation on a monotone segment of the unwrapped phase. The
    /// target is taken modulo 2 pi against the covered range.
    pub fn lookup(&self, target_phase: f64) -> Result<(f64, f64), PolarizationError> {
        let tau = std::f64::consts::TAU;
        for w in self.points.windows(2) {
            let (p0, p1) = (w[0].phase_rad, w[1].phase_rad);
            let (lo, hi) = if p0 <= p1 { (p0, p1) } else { (p1, p0) };
            // shift the target near this segment
            let k = ((lo + hi) / 2.0 - target_phase) / tau;
            for kk in [k.floor(), k.ceil()] {
                let t = target_phase + tau * kk;
                if t >= lo - 1e-12 && t <= hi + 1e-12 && (hi - lo) > 1e-12 {
                    let frac = (t - p0) / (p1 - p0);
                    if (-1e-9..=1.0 + 1e-9).contains(&frac) {
                        let q = w[0].qwp_deg + frac * (w[1].qwp_deg - w[0].qwp_deg);
                        let h = w[0].hwp_deg + frac * (w[1].hwp_deg - w[0].hwp_deg);
                        return Ok((q, h));
                    }
                }
            }
        }
        Err(PolarizationError::PhaseNotCovered(target_phase))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    /// Strip a global phase so states can be compared directly.
    fn align(j: &JonesVector) -> JonesVector {
        let r = if j.h.norm() > j.v.norm() { j.h } else { j.v };
        let ph = r / C64::new(r.norm(), 0.0);
        JonesVector::new(j.h / ph, j.v / ph)
    }

    #[test]
    fn aligned_plates_pass_horizontal_light() {
        let out = align(&waveplate_output(0.0, 0.0, &JonesVector::horizontal()));
        assert!(close(out.h, C64::new(1.0, 0.0), 1e-12));
        assert!(out.v.norm() < 1e-12);
    }

    #[test]
    fn half_wave_plate_rotates_linear_polarization() {
        let out = align(&waveplate_output(0.0, 22.5, &JonesVector::horizontal()));
        let d = JonesVector::diagonal();
        assert!(close(out.h, d.h, 1e-12) && close(out.v, d.v, 1e-12));
    }

    #[test]
    fn quarter_wave_at_45_gives_circular() {
        let out = waveplate_output(45.0, 0.0, &JonesVector::horizontal());
        assert!((out.h.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((out.v.norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        // quarter-wave retardance between the components
        let rel = (out.v / out.h).arg().abs();
        assert!((rel - FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn plates_conserve_energy() {
        let input = JonesVector::new(C64::new(0.3, 0.4), C64::new(-0.5, 0.2)).normalized();
        for q in [-80.0, -33.0, 0.0, 17.0, 45.0, 90.0] {
            for h in [0.0, 10.0, 22.5, 61.0, 89.0] {
                let out = waveplate_output(q, h, &input);
                assert!((out.norm() - 1.0).abs() < 1e-12, "qwp {q} hwp {h}");
            }
        }
    }

    #[test]
    fn polarization_selects_drive_phase() {
        let dip = DipoleConfig::default();
        // horizontal: in-phase, equal amplitudes
        let drive = drive_from_polarization(&JonesVector::horizontal(), &dip, 1.0);
        assert!((drive[0].0 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((drive[1].0 - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!(wrap_phase(drive[0].1 - drive[1].1).abs() < 1e-12);
        // vertical: out-of-phase
        let drive = drive_from_polarization(&JonesVector::vertical(), &dip, 1.0);
        assert!((wrap_phase(drive[0].1 - drive[1].1).abs() - PI).abs() < 1e-12);
        // matching one dipole drives only that emitter
        let drive = drive_from_polarization(&JonesVector::circular(true), &dip, 2.0);
        assert!((drive[0].0 - 2.0).abs() < 1e-12);
        assert!(drive[1].0 < 1e-12);
    }

    fn default_map() -> WaveplateMap {
        let qwp: Vec<f64> = (-45..=45).map(|k| k as f64).collect();
        let hwp: Vec<f64> = (0..=90).map(|k| k as f64).collect();
        build_waveplate_map(
            &qwp,
            &hwp,
            &JonesVector::horizontal(),
            &DipoleConfig::default(),
            [0.0, 0.0],
        )
    }

    #[test]
    fn map_amplitudes_complete_for_orthogonal_dipoles() {
        let map = default_map();
        for v in map.a1sq.iter().zip(map.a2sq.iter()) {
            let total = v.0 + v.1;
            assert!((total - 1.0).abs() < 1e-9);
        }
        // complementary: at the cell where A1^2 peaks, A2^2 is minimal
        let mut best = (0, 0);
        let mut best_val = -1.0;
        for i in 0..map.qwp_deg.len() {
            for j in 0..map.hwp_deg.len() {
                if map.a1sq[[i, j]] > best_val {
                    best_val = map.a1sq[[i, j]];
                    best = (i, j);
                }
            }
        }
        assert!(map.a2sq[[best.0, best.1]] < 0.05);
    }

    #[test]
    fn qwp_zero_line_is_equal_amplitude_with_varying_phase() {
        let map = default_map();
        let i0 = map.qwp_deg.iter().position(|&q| q == 0.0).unwrap();
        let mut phases = Vec::new();
        for j in 0..map.hwp_deg.len() {
            assert!((map.a1sq[[i0, j]] - 0.5).abs() < 1e-9);
            assert!((map.a2sq[[i0, j]] - 0.5).abs() < 1e-9);
            phases.push(map.phase[[i0, j]]);
        }
        // phase moves at -4 deg per deg of hwp
        let d = wrap_phase(phases[10] - phases[0]);
        assert!((d + 40.0f64.to_radians()).abs() < 1e-9, "phase step {d}");
    }

    #[test]
    fn map_phase_agrees_with_drive_projection() {
        let map = default_map();
        for (i, &q) in map.qwp_deg.iter().enumerate().step_by(13) {
            for (j, &h) in map.hwp_deg.iter().enumerate().step_by(17) {
                let eps = waveplate_output(q, h, &JonesVector::horizontal());
                let drive = drive_from_polarization(&eps, &DipoleConfig::default(), 1.0);
                let expect = wrap_phase(drive[0].1 - drive[1].1);
                let got = map.phase[[i, j]];
                let diff = wrap_phase(got - expect);
                assert!(diff.abs() < 1e-12, "({q}, {h}): {got} vs {expect}");
            }
        }
    }

    #[test]
    fn contour_round_trip_controls_phase() {
        let map = default_map();
        let contour = equal_amplitude_contour(&map).unwrap();
        assert!(contour.phase_span > 5.0, "span {}", contour.phase_span);
        // refined contour points sit on the level set
        for p in &contour.points {
            let (f, _) = map.amplitude_split(p.qwp_deg, p.hwp_deg);
            assert!(f.abs() < 1e-3, "off-contour point {p:?}");
        }
        // 32 uniformly spaced phase targets round-trip
        for k in 0..32 {
            let target = -PI + (k as f64 + 0.5) / 32.0 * std::f64::consts::TAU;
            let (q, h) = contour.lookup(target).unwrap();
            let eps = waveplate_output(q, h, &JonesVector::horizontal());
            let drive = drive_from_polarization(&eps, &DipoleConfig::default(), 1.0);
            let phase = wrap_phase(drive[0].1 - drive[1].1);
            let err = wrap_phase(phase - target).abs();
            assert!(err < 1e-3, "target {target}: got {phase}");
            let rel = (drive[0].0 - drive[1].0).abs() / drive[0].0;
            assert!(rel < 1e-3, "amplitude mismatch {rel}");
        }
        // explicit in-phase and out-of-phase settings
        for target in [0.0, PI] {
            let (q, h) = contour.lookup(target).unwrap();
            let eps = waveplate_output(q, h, &JonesVector::horizontal());
            let drive = drive_from_polarization(&eps, &DipoleConfig::default(), 1.0);
            let err = wrap_phase(drive[0].1 - drive[1].1 - target).abs();
            assert!(err < 1e-6, "target {target}: error {err}");
        }
    }

    #[test]
    fn contour_errors_when_window_misses_level_set() {
        // a window where A1 always dominates: input circular along d1 and a
        // tiny angle window keeps the projection lopsided
        let qwp: Vec<f64> = vec![40.0, 42.0, 44.0];
        let hwp: Vec<f64> = vec![0.0, 1.0, 2.0];
        let map = build_waveplate_map(
            &qwp,
            &hwp,
            &JonesVector::horizontal(),
            &DipoleConfig::default(),
            [0.0, 0.0],
        );
        assert!(matches!(
            equal_amplitude_contour(&map),
            Err(PolarizationError::EmptyContour { .. })
        ));
    }

    #[test]
    fn csv_export_has_header_and_all_cells() {
        let map = build_waveplate_map(
            &[0.0, 10.0],
            &[0.0, 30.0, 60.0],
            &JonesVector::horizontal(),
            &DipoleConfig::default(),
            [0.0, 0.0],
        );
        let csv = map.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "qwp_deg,hwp_deg,A1sq,A2sq,rel_A1,phase_rad");
        assert_eq!(lines.len(), 1 + 2 * 3);
    }
}
