//! Second-order intensity correlations of the waveguide output.
//!
//! Two routes are provided and cross-checked against each other:
//!
//! * [`g2_regression`] propagates the jump-conditioned state with the full
//!   Liouvillian (quantum regression theorem) — exact for any drive
//!   strength with a unique steady state.
//! * [`g2_analytic`] evaluates the weak-drive closed form
//!   `g2(tau) = |1 + c_+ e^{-i lambda_+ tau} + c_- e^{-i lambda_- tau}|^2`
//!   with coefficients obtained by projecting the perturbative steady state
//!   and the jump-conditioned state onto the decay eigenmodes of the
//!   single-excitation block. On resonance the exponents reduce to the
//!   super- and subradiant rates `Gamma_+-/2`.

use ndarray::Array1;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{detection_operator, steady_state, DynamicsError};
use crate::linalg::{c, dagger, expm, norm_max, trace, unvectorize, vectorize};
use crate::model::{
    build_liouvillian, single_excitation_heff, DriveConfig, ModelError,
    SystemParams, DIM,
};
use crate::C64;

#[derive(Debug, Error)]
pub enum CorrelationError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("steady state emits no waveguide light; g2 is undefined")]
    NoEmission,
    #[error("weak-drive expansion is undefined: the drive couples to a dark mode with vanishing decay rate")]
    DrivenDarkMode,
    #[error("tau grid invalid: {0}")]
    BadGrid(&'static str),
}

/// Uniform, symmetric delay grid for correlation traces.
#[derive(Debug, Clone, Copy)]
pub struct TauGrid {
    /// Largest delay (the grid runs from `-half_span` to `+half_span`).
    pub half_span: f64,
    pub step: f64,
}

impl TauGrid {
    pub fn new(half_span: f64, step: f64) -> Result<Self, CorrelationError> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(CorrelationError::BadGrid("step must be positive"));
        }
        if !(half_span >= step) || !half_span.is_finite() {
            return Err(CorrelationError::BadGrid("half_span must be at least one step"));
        }
        Ok(TauGrid { half_span, step })
    }

    /// Number of nonnegative delay samples.
    pub fn n_positive(&self) -> usize {
        (self.half_span / self.step).round() as usize + 1
    }

    pub fn positive(&self) -> Vec<f64> {
        (0..self.n_positive()).map(|k| k as f64 * self.step).collect()
    }

    pub fn symmetric(&self) -> Vec<f64> {
        let n = self.n_positive();
        let mut out = Vec::with_capacity(2 * n - 1);
        for k in (1..n).rev() {
            out.push(-(k as f64) * self.step);
        }
        for k in 0..n {
            out.push(k as f64 * self.step);
        }
        out
    }
}

/// Sampled `g2(tau)` on a symmetric delay grid.
#[derive(Debug, Clone)]
pub struct CorrelationTrace {
    pub tau: Vec<f64>,
    /// Normalized correlation, `g2(tau) = G2(tau) / I^2`.
    pub g2: Vec<f64>,
    /// Unnormalized coincidence rate `G2(tau)`.
    pub g2_raw: Vec<f64>,
    /// Steady-state intensity used for normalization.
    pub intensity: f64,
}

impl CorrelationTrace {
    fn from_positive(grid: &TauGrid, g2_pos: &[f64], raw_pos: &[f64], intensity: f64) -> Self {
        let n = g2_pos.len();
        let tau = grid.symmetric();
        let mut g2 = Vec::with_capacity(2 * n - 1);
        let mut raw = Vec::with_capacity(2 * n - 1);
        for k in (1..n).rev() {
            g2.push(g2_pos[k]);
            raw.push(raw_pos[k]);
        }
        g2.extend_from_slice(g2_pos);
        raw.extend_from_slice(raw_pos);
        CorrelationTrace {
            tau,
            g2,
            g2_raw: raw,
            intensity,
        }
    }

    /// Value at `tau = 0` (center sample).
    pub fn at_zero(&self) -> f64 {
        self.g2[self.g2.len() / 2]
    }
}

/// `g2(0)` without any propagation: the normalized two-photon coincidence
/// moment of the steady state.
pub fn g2_zero(sys: &SystemParams, drive: &DriveConfig) -> Result<f64, CorrelationError> {
    let rho = steady_state(sys, drive)?;
    let e = detection_operator(sys);
    let ede = dagger(&e).dot(&e);
    let intensity = rho.expectation(&ede).re;
    if intensity <= 1e-30 {
        return Err(CorrelationError::NoEmission);
    }
    let conditioned = e.dot(rho.as_array()).dot(&dagger(&e));
    let raw = trace(&ede.dot(&conditioned)).re.max(0.0);
    Ok(raw / (intensity * intensity))
}

/// Intensity correlation via the quantum regression theorem:
/// `G2(tau) = Tr[E^dag E e^{L tau}(E rho_ss E^dag)]`, normalized by the
/// squared steady-state intensity. The negative-delay branch is filled by
/// symmetry (stationary CW statistics).
pub fn g2_regression(
    sys: &SystemParams,
    drive: &DriveConfig,
    grid: &TauGrid,
) -> Result<CorrelationTrace, CorrelationError> {
    let rho = steady_state(sys, drive)?;
    let e = detection_operator(sys);
    let ede = dagger(&e).dot(&e);
    let intensity = rho.expectation(&ede).re;
    if intensity <= 1e-30 * norm_max(rho.as_array()).max(1.0) {
        return Err(CorrelationError::NoEmission);
    }
    let conditioned = e.dot(rho.as_array()).dot(&dagger(&e));

    let l = build_liouvillian(sys, drive, 0.0);
    let step = expm(&l.matrix().mapv(|z| z * c(grid.step)));
    let n = grid.n_positive();
    let mut raw = Vec::with_capacity(n);
    let mut v: Array1<C64> = vectorize(&conditioned);
    for k in 0..n {
        if k > 0 {
            v = step.dot(&v);
        }
        let m = unvectorize(&v, DIM);
        raw.push(trace(&ede.dot(&m)).re.max(0.0));
    }
    let g2_pos: Vec<f64> = raw.iter().map(|r| r / (intensity * intensity)).collect();
    Ok(CorrelationTrace::from_positive(grid, &g2_pos, &raw, intensity))
}

/// Coefficients of the weak-drive closed form, reported alongside the
/// evaluated trace.
#[derive(Debug, Clone)]
pub struct AnalyticCoefficients {
    /// The constant term (unity at leading order).
    pub constant: C64,
    /// Coefficients of the superradiant-like and subradiant-like modes.
    pub coeff: [C64; 2],
    /// Mode frequencies `lambda` (the trace term is `c e^{-i lambda tau}`);
    /// on resonance `lambda = -i Gamma_+- / 2`.
    pub exponents: [C64; 2],
    /// Set when the drive exceeds the weak-drive validity threshold
    /// (`max |Omega| > mean(Gamma)/20`).
    pub weak_drive_warning: bool,
    /// Set when the two modes are degenerate (exceptional point) and a
    /// linear-in-tau Jordan term was included.
    pub degenerate: bool,
    /// Coefficient of the Jordan term `tau e^{-i lambda tau}` (zero away
    /// from the exceptional point).
    pub jordan: C64,
}

/// Weak-drive closed-form `g2(tau)` for a CW drive.
///
/// The conditional field amplitude after a detection is expanded in the
/// decay eigenmodes of the single-excitation effective Hamiltonian; the
/// two-photon amplitude is `e0^2 (1 + sum_k c_k e^{-i lambda_k tau})` with
/// `e0` the steady-state field amplitude. Pure dephasing has no amplitude
/// representation and is ignored here.
pub fn g2_analytic(
    sys: &SystemParams,
    drive: &DriveConfig,
    grid: &TauGrid,
) -> Result<(CorrelationTrace, AnalyticCoefficients), CorrelationError> {
    assert!(drive.is_cw(), "g2_analytic requires a CW drive");
    let heff = single_excitation_heff(sys);
    let (a, b_off, d) = (heff[[0, 0]], heff[[0, 1]], heff[[1, 1]]);
    let scale = sys.mean_decay();

    // drive vector in {|eg>, |ge>} coordinates
    let b = [
        drive.complex_amplitude(0) * c(0.5),
        drive.complex_amplitude(1) * c(0.5),
    ];
    let weak_drive_warning =
        drive.amplitudes[0].0.max(drive.amplitudes[1].0) > sys.mean_decay() / 20.0;

    // detection amplitudes
    let g1 = c(sys.emitters[0].waveguide_rate().sqrt());
    let g2v = c(sys.emitters[1].waveguide_rate().sqrt()) * C64::from_polar(1.0, sys.coupling_phase);
    let g = [g1, g2v];

    let mean = (a + d) * c(0.5);
    let root = (((a - d) * c(0.5)).powi(2) + b_off * b_off).sqrt();
    let degenerate = root.norm() < 1e-9 * scale;

    let bilinear = |x: &[C64; 2], y: &[C64; 2]| x[0] * y[0] + x[1] * y[1];

    if degenerate {
        // exceptional point: e^{-iH tau} = e^{-i mean tau}(1 - i tau (H - mean))
        let lam = mean;
        // steady state amplitude: solve H alpha = -b directly
        let det = a * d - b_off * b_off;
        if det.norm() < 1e-12 * scale * scale {
            return Err(CorrelationError::DrivenDarkMode);
        }
        let alpha = [(-(d * b[0] - b_off * b[1])) / det, (-(a * b[1] - b_off * b[0])) / det];
        let gamma_sum = sys.emitters[0].total_decay + sys.emitters[1].total_decay;
        let dee = C64::new(
            sys.emitters[0].detuning + sys.emitters[1].detuning,
            -0.5 * gamma_sum,
        );
        let alpha_ee = -(b[1] * alpha[0] + b[0] * alpha[1]) / dee;
        let e0 = bilinear(&g, &alpha);
        if e0.norm_sqr() < 1e-30 {
            return Err(CorrelationError::NoEmission);
        }
        let dvec = [g[1] * alpha_ee - e0 * alpha[0], g[0] * alpha_ee - e0 * alpha[1]];
        let c0 = bilinear(&g, &dvec) / (e0 * e0);
        // (H - mean) d
        let hd = [
            (a - mean) * dvec[0] + b_off * dvec[1],
            b_off * dvec[0] + (d - mean) * dvec[1],
        ];
        let cj = bilinear(&g, &hd) / (e0 * e0) * C64::new(0.0, -1.0);
        let coeffs = AnalyticCoefficients {
            constant: c(1.0),
            coeff: [c0, c(0.0)],
            exponents: [lam, lam],
            weak_drive_warning,
            degenerate: true,
            jordan: cj,
        };
        let taus = grid.positive();
        let intensity = e0.norm_sqr();
        let mut g2_pos = Vec::with_capacity(taus.len());
        let mut raw = Vec::with_capacity(taus.len());
        for &tau in &taus {
            let ph = (lam * C64::new(0.0, -tau)).exp();
            let amp = c(1.0) + (c0 + cj * c(tau)) * ph;
            let v = amp.norm_sqr();
            g2_pos.push(v);
            raw.push(v * intensity * intensity);
        }
        return Ok((
            CorrelationTrace::from_positive(grid, &g2_pos, &raw, intensity),
            coeffs,
        ));
    }

    let lambdas = [mean + root, mean - root];
    let mut modes: Vec<(C64, [C64; 2])> = Vec::with_capacity(2);
    for &lam in &lambdas {
        let v = if b_off.norm() > 1e-14 * scale {
            [b_off, lam - a]
        } else if (lam - a).norm() < (lam - d).norm() {
            [c(1.0), c(0.0)]
        } else {
            [c(0.0), c(1.0)]
        };
        modes.push((lam, v));
    }
    // sort by decay rate: superradiant-like first
    modes.sort_by(|x, y| x.0.im.partial_cmp(&y.0.im).unwrap());

    // per-mode steady-state amplitudes alpha_k = -(v.b)/(lambda (v.v))
    let mut alpha = [c(0.0), c(0.0)];
    let mut alpha_modes = [c(0.0), c(0.0)];
    for (k, (lam, v)) in modes.iter().enumerate() {
        let vv = bilinear(v, v);
        if vv.norm() < 1e-12 {
            return Err(CorrelationError::DrivenDarkMode);
        }
        let vb = bilinear(v, &b);
        if lam.norm() < 1e-12 * scale {
            if vb.norm() > 1e-12 * scale * scale {
                return Err(CorrelationError::DrivenDarkMode);
            }
            alpha_modes[k] = c(0.0);
            continue;
        }
        let ak = -vb / (*lam * vv);
        alpha_modes[k] = ak;
        alpha[0] += ak * v[0];
        alpha[1] += ak * v[1];
    }
    let _ = alpha_modes;

    let gamma_sum = sys.emitters[0].total_decay + sys.emitters[1].total_decay;
    let dee = C64::new(
        sys.emitters[0].detuning + sys.emitters[1].detuning,
        -0.5 * gamma_sum,
    );
    let alpha_ee = -(b[1] * alpha[0] + b[0] * alpha[1]) / dee;

    let e0 = bilinear(&g, &alpha);
    if e0.norm_sqr() < 1e-30 {
        return Err(CorrelationError::NoEmission);
    }
    // conditional deficit after a detection
    let dvec = [g[1] * alpha_ee - e0 * alpha[0], g[0] * alpha_ee - e0 * alpha[1]];

    let mut coeff = [c(0.0); 2];
    let mut exponents = [c(0.0); 2];
    for (k, (lam, v)) in modes.iter().enumerate() {
        let vv = bilinear(v, v);
        coeff[k] = bilinear(&g, v) * bilinear(v, &dvec) / (vv * e0 * e0);
        exponents[k] = *lam;
    }

    let coeffs = AnalyticCoefficients {
        constant: c(1.0),
        coeff,
        exponents,
        weak_drive_warning,
        degenerate: false,
        jordan: c(0.0),
    };

    let taus = grid.positive();
    let intensity = e0.norm_sqr();
    let mut g2_pos = Vec::with_capacity(taus.len());
    let mut raw = Vec::with_capacity(taus.len());
    for &tau in &taus {
        let mut amp = c(1.0);
        for k in 0..2 {
            amp += coeff[k] * (exponents[k] * C64::new(0.0, -tau)).exp();
        }
        let v = amp.norm_sqr();
        g2_pos.push(v);
        raw.push(v * intensity * intensity);
    }
    Ok((
        CorrelationTrace::from_positive(grid, &g2_pos, &raw, intensity),
        coeffs,
    ))
}

/// Sweep axes for [`g2_sweep`].
#[derive(Debug, Clone, Copy)]
pub enum SweepAxis {
    /// Emitter-emitter detuning `Delta_12`.
    DetuningSplit(DetuningAnchor),
    /// Waveguide coupling of the undriven emitter.
    Beta2,
    /// Relative driving phase `theta = theta_1 - theta_2` with both
    /// emitters driven.
    RelativeDrivePhase,
}

/// How a detuning split is distributed between the emitters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningAnchor {
    /// Laser stays resonant with the driven emitter: `Delta_1 = 0`,
    /// `Delta_2 = -Delta_12`.
    PinDriven,
    /// Symmetric split: `Delta_1 = +Delta_12/2`, `Delta_2 = -Delta_12/2`.
    Symmetric,
}

pub fn apply_sweep_value(
    sys: &SystemParams,
    drive: &DriveConfig,
    axis: SweepAxis,
    value: f64,
) -> (SystemParams, DriveConfig) {
    let mut sys = *sys;
    let mut drive = *drive;
    match axis {
        SweepAxis::DetuningSplit(DetuningAnchor::PinDriven) => {
            sys.emitters[0].detuning = 0.0;
            sys.emitters[1].detuning = -value;
        }
        SweepAxis::DetuningSplit(DetuningAnchor::Symmetric) => {
            sys.emitters[0].detuning = 0.5 * value;
            sys.emitters[1].detuning = -0.5 * value;
        }
        SweepAxis::Beta2 => {
            sys.emitters[1].beta = value;
        }
        SweepAxis::RelativeDrivePhase => {
            drive.amplitudes[1].1 = drive.amplitudes[0].1 - value;
        }
    }
    (sys, drive)
}

/// One regression trace per sweep value on a shared grid; per-point
/// failures are reported with the failing value and the sweep continues.
pub fn g2_sweep(
    sys: &SystemParams,
    drive: &DriveConfig,
    axis: SweepAxis,
    values: &[f64],
    grid: &TauGrid,
) -> Vec<(f64, Result<CorrelationTrace, CorrelationError>)> {
    values
        .par_iter()
        .map(|&v| {
            let (s, dr) = apply_sweep_value(sys, drive, axis, v);
            (v, g2_regression(&s, &dr, grid))
        })
        .collect()
}
