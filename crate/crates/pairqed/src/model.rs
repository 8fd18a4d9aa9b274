//! Physical parameterization of the coupled two-emitter system.
//!
//! Basis convention (fixed everywhere in this crate): the four-level bare
//! basis is ordered `{|gg>, |ge>, |eg>, |ee>}` where the *first* letter is
//! emitter 1, so `|eg>` means emitter 1 excited and `|ge>` means emitter 2
//! excited. The collective basis orders the middle block as
//! `{|gg>, |+>, |->, |ee>}` with `|+-> = (|eg> +- |ge>)/sqrt(2)`.
//!
//! Units: time in ns, every rate/frequency as an angular frequency in
//! rad/ns. A linewidth quoted as `f` GHz enters as `2*pi*f`; the `_ghz`
//! constructors apply the factor.

use ndarray::{Array1, Array2};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::linalg::{self, c, dagger, eye, kron, trace, vectorize};
use crate::C64;

/// Hilbert-space dimension of the pair.
pub const DIM: usize = 4;
/// Basis indices.
pub const IDX_GG: usize = 0;
pub const IDX_GE: usize = 1;
pub const IDX_EG: usize = 2;
pub const IDX_EE: usize = 3;

/// Hermiticity slack accepted when constructing a [`DensityMatrix`].
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Trace slack accepted when constructing a [`DensityMatrix`].
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalue floor accepted when constructing a [`DensityMatrix`]; slightly
/// looser than exact-state arithmetic so that long integrations stay inside
/// the type.
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid parameter {name}: {reason} (got {value})")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
        value: f64,
    },
    #[error("density matrix violates {0}: deviation {1:.3e}")]
    InvalidState(&'static str, f64),
}

// ---------------------------------------------------------------------------
// Operators
// ---------------------------------------------------------------------------

/// Lowering operator for emitter 1 or 2 (0-indexed).
pub fn sigma_minus(emitter: usize) -> Array2<C64> {
    let mut m = Array2::zeros((DIM, DIM));
    match emitter {
        0 => {
            m[[IDX_GG, IDX_EG]] = c(1.0);
            m[[IDX_GE, IDX_EE]] = c(1.0);
        }
        1 => {
            m[[IDX_GG, IDX_GE]] = c(1.0);
            m[[IDX_EG, IDX_EE]] = c(1.0);
        }
        _ => panic!("emitter index must be 0 or 1"),
    }
    m
}

/// Projector onto the excited state of one emitter, `sigma^+ sigma^-`.
pub fn excited_projector(emitter: usize) -> Array2<C64> {
    let sm = sigma_minus(emitter);
    dagger(&sm).dot(&sm)
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// Parameters of a single emitter. All rates angular (rad/ns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmitterParams {
    /// Total decay rate Gamma_i.
    pub total_decay: f64,
    /// Fraction of decay routed into the waveguide mode.
    pub beta: f64,
    /// Pure dephasing rate Gamma_d,i.
    pub dephasing: f64,
    /// Detuning of the transition relative to the drive laser.
    pub detuning: f64,
}

impl EmitterParams {
    pub fn new(total_decay: f64, beta: f64, dephasing: f64, detuning: f64) -> Result<Self, ModelError> {
        let p = EmitterParams {
            total_decay,
            beta,
            dephasing,
            detuning,
        };
        p.validate()?;
        Ok(p)
    }

    /// Convenience constructor taking linear frequencies in GHz.
    pub fn from_ghz(decay_ghz: f64, beta: f64, dephasing_ghz: f64, detuning_ghz: f64) -> Result<Self, ModelError> {
        Self::new(TAU * decay_ghz, beta, TAU * dephasing_ghz, TAU * detuning_ghz)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.total_decay > 0.0) || !self.total_decay.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "total_decay",
                reason: "must be positive and finite",
                value: self.total_decay,
            });
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(ModelError::InvalidParameter {
                name: "beta",
                reason: "must lie in [0, 1]",
                value: self.beta,
            });
        }
        if self.dephasing < 0.0 || !self.dephasing.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "dephasing",
                reason: "must be nonnegative and finite",
                value: self.dephasing,
            });
        }
        if !self.detuning.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "detuning",
                reason: "must be finite",
                value: self.detuning,
            });
        }
        Ok(())
    }

    /// Decay rate into the guided mode, `beta * Gamma`.
    pub fn waveguide_rate(&self) -> f64 {
        self.beta * self.total_decay
    }

    /// Residual decay into non-guided modes, `(1 - beta) * Gamma`.
    pub fn loss_rate(&self) -> f64 {
        (1.0 - self.beta) * self.total_decay
    }
}

/// Full parameterization of the coupled pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub emitters: [EmitterParams; 2],
    /// Propagation phase between the emitter positions. `0 mod pi` gives a
    /// purely dissipative coupling; intermediate values add a coherent
    /// exchange term.
    pub coupling_phase: f64,
}

impl SystemParams {
    pub fn new(e1: EmitterParams, e2: EmitterParams, coupling_phase: f64) -> Result<Self, ModelError> {
        e1.validate()?;
        e2.validate()?;
        if !coupling_phase.is_finite() {
            return Err(ModelError::InvalidParameter {
                name: "coupling_phase",
                reason: "must be finite",
                value: coupling_phase,
            });
        }
        Ok(SystemParams {
            emitters: [e1, e2],
            coupling_phase,
        })
    }

    /// Ideal symmetric pair at zero detuning; useful in tests.
    pub fn symmetric(total_decay: f64, beta: f64) -> Self {
        let e = EmitterParams {
            total_decay,
            beta,
            dephasing: 0.0,
            detuning: 0.0,
        };
        SystemParams {
            emitters: [e, e],
            coupling_phase: 0.0,
        }
    }

    /// Dissipative cross rate `Gamma_12 = sqrt(g1 g2) cos(phi)`.
    pub fn cross_decay(&self) -> f64 {
        let g1 = self.emitters[0].waveguide_rate();
        let g2 = self.emitters[1].waveguide_rate();
        (g1 * g2).sqrt() * self.coupling_phase.cos()
    }

    /// Coherent exchange coupling `J_12 = sqrt(g1 g2)/2 sin(phi)`.
    pub fn coherent_coupling(&self) -> f64 {
        let g1 = self.emitters[0].waveguide_rate();
        let g2 = self.emitters[1].waveguide_rate();
        0.5 * (g1 * g2).sqrt() * self.coupling_phase.sin()
    }

    /// `Delta_12 = Delta_1 - Delta_2`.
    pub fn detuning_split(&self) -> f64 {
        self.emitters[0].detuning - self.emitters[1].detuning
    }

    pub fn mean_decay(&self) -> f64 {
        0.5 * (self.emitters[0].total_decay + self.emitters[1].total_decay)
    }

    /// Copy with detuning offsets added per emitter (spectral-diffusion
    /// quadrature and detuning sweeps).
    pub fn with_detuning_offsets(&self, d1: f64, d2: f64) -> Self {
        let mut s = *self;
        s.emitters[0].detuning += d1;
        s.emitters[1].detuning += d2;
        s
    }

    /// Copy with detunings replaced.
    pub fn with_detunings(&self, d1: f64, d2: f64) -> Self {
        let mut s = *self;
        s.emitters[0].detuning = d1;
        s.emitters[1].detuning = d2;
        s
    }
}

// ---------------------------------------------------------------------------
// Drive
// ---------------------------------------------------------------------------

/// Temporal envelope of the drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseEnvelope {
    /// Continuous wave; amplitudes are the constant Rabi rates.
    Cw,
    /// Gaussian pulse. `area` is the time integral of the instantaneous
    /// Rabi rate for the strongest-driven emitter; weaker drives scale
    /// proportionally to their amplitude ratio.
    Gaussian { center: f64, fwhm: f64, area: f64 },
}

/// Per-emitter complex Rabi drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    /// `(magnitude, phase)` per emitter. For CW the magnitude is the Rabi
    /// rate in rad/ns; for pulses it acts as a relative weight.
    pub amplitudes: [(f64, f64); 2],
    pub envelope: PulseEnvelope,
}

impl DriveConfig {
    pub fn zero() -> Self {
        DriveConfig {
            amplitudes: [(0.0, 0.0); 2],
            envelope: PulseEnvelope::Cw,
        }
    }

    /// CW drive with Rabi rates given in GHz (linear frequency).
    pub fn cw_ghz(omega1_ghz: f64, theta1: f64, omega2_ghz: f64, theta2: f64) -> Self {
        DriveConfig {
            amplitudes: [(TAU * omega1_ghz, theta1), (TAU * omega2_ghz, theta2)],
            envelope: PulseEnvelope::Cw,
        }
    }

    /// CW drive on emitter 1 only.
    pub fn cw_single_ghz(omega_ghz: f64) -> Self {
        Self::cw_ghz(omega_ghz, 0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (mag, phase) in self.amplitudes {
            if mag < 0.0 || !mag.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name: "drive magnitude",
                    reason: "must be nonnegative and finite",
                    value: mag,
                });
            }
            if !phase.is_finite() {
                return Err(ModelError::InvalidParameter {
                    name: "drive phase",
                    reason: "must be finite",
                    value: phase,
                });
            }
        }
        if let PulseEnvelope::Gaussian { fwhm, area, .. } = self.envelope {
            if !(fwhm > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name: "pulse fwhm",
                    reason: "must be positive",
                    value: fwhm,
                });
            }
            if !(area > 0.0) {
                return Err(ModelError::InvalidParameter {
                    name: "pulse area",
                    reason: "must be positive",
                    value: area,
                });
            }
        }
        Ok(())
    }

    pub fn is_cw(&self) -> bool {
        matches!(self.envelope, PulseEnvelope::Cw)
    }

    /// Complex amplitude `|Omega_m| e^{i theta_m}` at the CW level (no
    /// envelope applied).
    pub fn complex_amplitude(&self, emitter: usize) -> C64 {
        let (mag, phase) = self.amplitudes[emitter];
        C64::from_polar(mag, phase)
    }

    /// Instantaneous complex amplitudes at time `t` with the envelope
    /// applied. The Gaussian is normalized so the strongest-driven emitter
    /// integrates to the declared pulse area.
    pub fn amplitudes_at(&self, t: f64) -> [C64; 2] {
        match self.envelope {
            PulseEnvelope::Cw => [self.complex_amplitude(0), self.complex_amplitude(1)],
            PulseEnvelope::Gaussian { center, fwhm, area } => {
                let max_mag = self.amplitudes[0].0.max(self.amplitudes[1].0);
                if max_mag <= 0.0 {
                    return [c(0.0), c(0.0)];
                }
                let s = fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
                let peak = area / (s * TAU.sqrt());
                let env = peak * (-(t - center) * (t - center) / (2.0 * s * s)).exp();
                [
                    C64::from_polar(self.amplitudes[0].0 / max_mag * env, self.amplitudes[0].1),
                    C64::from_polar(self.amplitudes[1].0 / max_mag * env, self.amplitudes[1].1),
                ]
            }
        }
    }

    /// Pulse area delivered to each emitter (`integral |Omega_m(t)| dt`).
    pub fn pulse_areas(&self) -> [f64; 2] {
        match self.envelope {
            PulseEnvelope::Cw => [f64::INFINITY, f64::INFINITY],
            PulseEnvelope::Gaussian { area, .. } => {
                let max_mag = self.amplitudes[0].0.max(self.amplitudes[1].0);
                if max_mag <= 0.0 {
                    return [0.0, 0.0];
                }
                [
                    self.amplitudes[0].0 / max_mag * area,
                    self.amplitudes[1].0 / max_mag * area,
                ]
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Density matrix
// ---------------------------------------------------------------------------

/// Validated 4x4 density matrix in the bare basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: Array2<C64>,
}

impl DensityMatrix {
    /// Validate and wrap. Hermiticity within [`HERMITICITY_TOL`], unit trace
    /// within [`TRACE_TOL`], eigenvalues above `-`[`POSITIVITY_TOL`].
    pub fn new(mat: Array2<C64>) -> Result<Self, ModelError> {
        assert_eq!(mat.dim(), (DIM, DIM));
        let herm_dev = linalg::norm_max(&(&mat - &dagger(&mat)));
        if herm_dev > HERMITICITY_TOL {
            return Err(ModelError::InvalidState("hermiticity", herm_dev));
        }
        let tr = trace(&mat);
        let tr_dev = (tr - c(1.0)).norm();
        if tr_dev > TRACE_TOL {
            return Err(ModelError::InvalidState("unit trace", tr_dev));
        }
        if !linalg::hermitian_psd(&mat, POSITIVITY_TOL) {
            let min_eig = linalg::eigenvalues(&mat)
                .map(|e| e.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
                .unwrap_or(f64::NAN);
            return Err(ModelError::InvalidState("positivity", -min_eig));
        }
        Ok(DensityMatrix { mat })
    }

    /// Pure state from a (not necessarily normalized) 4-vector.
    pub fn pure(amplitudes: &[C64; DIM]) -> Self {
        let norm2: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        assert!(norm2 > 0.0, "state vector must be nonzero");
        let mut mat = Array2::zeros((DIM, DIM));
        for i in 0..DIM {
            for j in 0..DIM {
                mat[[i, j]] = amplitudes[i] * amplitudes[j].conj() / c(norm2);
            }
        }
        DensityMatrix { mat }
    }

    pub fn basis_state(index: usize) -> Self {
        let mut amps = [c(0.0); DIM];
        amps[index] = c(1.0);
        Self::pure(&amps)
    }

    pub fn ground() -> Self {
        Self::basis_state(IDX_GG)
    }

    /// Symmetric single-excitation state `|+>`.
    pub fn plus_state() -> Self {
        Self::pure(&[c(0.0), c(1.0), c(1.0), c(0.0)])
    }

    /// Antisymmetric single-excitation state `|->`; note `|-> =
    /// (|eg> - |ge>)/sqrt(2)` so the `|ge>` component is negative.
    pub fn minus_state() -> Self {
        Self::pure(&[c(0.0), c(-1.0), c(1.0), c(0.0)])
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix {
            mat: eye(DIM).mapv(|z| z / c(DIM as f64)),
        }
    }

    pub fn as_array(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_array(self) -> Array2<C64> {
        self.mat
    }

    pub fn population(&self, index: usize) -> f64 {
        self.mat[[index, index]].re
    }

    /// Excited-state population of one emitter.
    pub fn emitter_population(&self, emitter: usize) -> f64 {
        match emitter {
            0 => self.population(IDX_EG) + self.population(IDX_EE),
            1 => self.population(IDX_GE) + self.population(IDX_EE),
            _ => panic!("emitter index must be 0 or 1"),
        }
    }

    /// Populations of the collective `|+>` and `|->` states.
    pub fn collective_populations(&self) -> (f64, f64) {
        let m = &self.mat;
        let cross = m[[IDX_EG, IDX_GE]];
        let half = 0.5 * (self.population(IDX_EG) + self.population(IDX_GE));
        (half + cross.re, half - cross.re)
    }

    pub fn expectation(&self, op: &Array2<C64>) -> C64 {
        trace(&op.dot(&self.mat))
    }

    /// Minimum eigenvalue (positivity diagnostic).
    pub fn min_eigenvalue(&self) -> f64 {
        linalg::eigenvalues(&self.mat)
            .map(|e| e.iter().map(|z| z.re).fold(f64::INFINITY, f64::min))
            .unwrap_or(f64::NAN)
    }
}

// ---------------------------------------------------------------------------
// Jump channels and generators
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    /// Collective waveguide decay (eigenmode of the waveguide rate matrix).
    WaveguideCollective,
    /// Independent residual loss of one emitter.
    ResidualLoss(usize),
    /// Pure dephasing of one emitter.
    Dephasing(usize),
}

#[derive(Debug, Clone)]
pub struct JumpChannel {
    pub operator: Array2<C64>,
    pub rate: f64,
    pub kind: ChannelKind,
}

/// Drive + detuning Hamiltonian at time `t` (rotating frame of the laser).
pub fn build_hamiltonian(sys: &SystemParams, drive: &DriveConfig, t: f64) -> Array2<C64> {
    let mut h = Array2::zeros((DIM, DIM));
    for m in 0..2 {
        let proj = excited_projector(m);
        h = h + proj.mapv(|z| z * c(sys.emitters[m].detuning));
    }
    let j12 = sys.coherent_coupling();
    if j12 != 0.0 {
        let s1 = sigma_minus(0);
        let s2 = sigma_minus(1);
        let exch = dagger(&s1).dot(&s2) + dagger(&s2).dot(&s1);
        h = h + exch.mapv(|z| z * c(j12));
    }
    let amps = drive.amplitudes_at(t);
    for m in 0..2 {
        if amps[m].norm() == 0.0 {
            continue;
        }
        let sm = sigma_minus(m);
        let sp = dagger(&sm);
        h = h + sp.mapv(|z| z * amps[m] * c(0.5)) + sm.mapv(|z| z * amps[m].conj() * c(0.5));
    }
    h
}

/// All Lindblad channels of the pair: the two eigenmodes of the waveguide
/// rate matrix `[[g1, G12], [G12, g2]]`, per-emitter residual loss
/// `(1-beta) Gamma`, and pure dephasing with jump `sigma^+ sigma^-` at rate
/// `2 Gamma_d` (so the coherence decay gains `Gamma_d`). Zero-rate channels
/// are kept so the channel list has a fixed, deterministic layout.
pub fn build_dissipators(sys: &SystemParams) -> Vec<JumpChannel> {
    let g1 = sys.emitters[0].waveguide_rate();
    let g2 = sys.emitters[1].waveguide_rate();
    let g12 = sys.cross_decay();
    let mut channels = Vec::with_capacity(6);

    let ((l1, v1), (l2, v2)) = linalg::sym_eig2(g1, g12, g2);
    for (rate, v) in [(l1, v1), (l2, v2)] {
        let op = sigma_minus(0).mapv(|z| z * c(v[0])) + sigma_minus(1).mapv(|z| z * c(v[1]));
        channels.push(JumpChannel {
            operator: op,
            // the rate matrix is PSD by construction; clip rounding noise
            rate: rate.max(0.0),
            kind: ChannelKind::WaveguideCollective,
        });
    }
    for m in 0..2 {
        channels.push(JumpChannel {
            operator: sigma_minus(m),
            rate: sys.emitters[m].loss_rate(),
            kind: ChannelKind::ResidualLoss(m),
        });
    }
    for m in 0..2 {
        channels.push(JumpChannel {
            operator: excited_projector(m),
            rate: 2.0 * sys.emitters[m].dephasing,
            kind: ChannelKind::Dephasing(m),
        });
    }
    channels
}

/// 16x16 generator of dissipative dynamics acting on column-vectorized
/// density matrices.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    mat: Array2<C64>,
}

impl Liouvillian {
    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> Array2<C64> {
        self.mat
    }

    pub fn apply(&self, rho: &Array2<C64>) -> Array2<C64> {
        let v = self.mat.dot(&vectorize(rho));
        linalg::unvectorize(&v, DIM)
    }

    /// Max modulus of `vec(I)^T L`, which is zero for a trace-preserving
    /// generator.
    pub fn trace_defect(&self) -> f64 {
        let idvec = vectorize(&eye(DIM));
        let mut worst = 0.0f64;
        for j in 0..self.mat.ncols() {
            let mut s = c(0.0);
            for i in 0..self.mat.nrows() {
                s += idvec[i] * self.mat[[i, j]];
            }
            worst = worst.max(s.norm());
        }
        worst
    }
}

/// Superoperator `-i (I (x) H - H^T (x) I)` for a Hamiltonian `H`.
pub fn hamiltonian_superoperator(h: &Array2<C64>) -> Array2<C64> {
    let id = eye(DIM);
    let ht = h.t().to_owned();
    (kron(&id, h) - kron(&ht, &id)).mapv(|z| z * C64::new(0.0, -1.0))
}

/// Superoperator for all Lindblad channels of `sys` (drive-independent).
pub fn dissipator_superoperator(sys: &SystemParams) -> Array2<C64> {
    let id = eye(DIM);
    let mut out = Array2::zeros((DIM * DIM, DIM * DIM));
    for ch in build_dissipators(sys) {
        if ch.rate == 0.0 {
            continue;
        }
        let l = &ch.operator;
        let ldag_l = dagger(l).dot(l);
        let lconj = l.mapv(|z| z.conj());
        let term = kron(&lconj, l)
            - kron(&id, &ldag_l).mapv(|z| z * c(0.5))
            - kron(&ldag_l.t().to_owned(), &id).mapv(|z| z * c(0.5));
        out = out + term.mapv(|z| z * c(ch.rate));
    }
    out
}

/// Assemble the full generator `-i[H, .] + sum_k D[L_k]` at time `t`.
pub fn build_liouvillian(sys: &SystemParams, drive: &DriveConfig, t: f64) -> Liouvillian {
    let h = build_hamiltonian(sys, drive, t);
    Liouvillian {
        mat: hamiltonian_superoperator(&h) + dissipator_superoperator(sys),
    }
}

impl Liouvillian {
    /// Wrap an explicit 16x16 generator.
    pub fn from_matrix(mat: Array2<C64>) -> Self {
        assert_eq!(mat.dim(), (DIM * DIM, DIM * DIM));
        Liouvillian { mat }
    }
}

// ---------------------------------------------------------------------------
// Collective quantities
// ---------------------------------------------------------------------------

/// Super- and subradiant decay rates `Gamma_+- = mean(Gamma) +- Re S` with
/// the splitting parameter `S = sqrt(Gamma_12^2 - Delta_12^2)`.
#[derive(Debug, Clone, Copy)]
pub struct CollectiveRates {
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    /// Complex splitting; imaginary for `|Delta_12| > |Gamma_12|`, where the
    /// pair beats at `Im S` instead of splitting in decay rate.
    pub splitting: C64,
}

impl CollectiveRates {
    /// Beat frequency of the single-excitation coherence when the splitting
    /// is imaginary (zero otherwise).
    pub fn oscillation(&self) -> f64 {
        self.splitting.im.abs()
    }
}

pub fn collective_rates(sys: &SystemParams) -> CollectiveRates {
    let g12 = sys.cross_decay();
    let d12 = sys.detuning_split();
    let s = C64::new(g12 * g12 - d12 * d12, 0.0).sqrt();
    let mean = sys.mean_decay();
    CollectiveRates {
        gamma_plus: mean + s.re,
        gamma_minus: mean - s.re,
        splitting: s,
    }
}

/// Unitary taking bare-basis coordinates to the collective ordering
/// `{|gg>, |+>, |->, |ee>}` (columns are the collective states).
fn collective_transform() -> Array2<C64> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = Array2::zeros((DIM, DIM));
    v[[IDX_GG, 0]] = c(1.0);
    v[[IDX_GE, 1]] = c(r);
    v[[IDX_EG, 1]] = c(r);
    v[[IDX_GE, 2]] = c(-r);
    v[[IDX_EG, 2]] = c(r);
    v[[IDX_EE, 3]] = c(1.0);
    v
}

/// Express a state in the collective basis `{|gg>, |+>, |->, |ee>}`.
pub fn to_collective_basis(rho: &DensityMatrix) -> DensityMatrix {
    let v = collective_transform();
    let mat = dagger(&v).dot(rho.as_array()).dot(&v);
    DensityMatrix { mat }
}

/// Inverse of [`to_collective_basis`].
pub fn from_collective_basis(rho: &DensityMatrix) -> DensityMatrix {
    let v = collective_transform();
    let mat = v.dot(rho.as_array()).dot(&dagger(&v));
    DensityMatrix { mat }
}

/// Non-Hermitian effective Hamiltonian of the single-excitation block in
/// the `{|eg>, |ge>}` coordinates. Pure dephasing is not representable at
/// the amplitude level and is ignored here.
pub fn single_excitation_heff(sys: &SystemParams) -> Array2<C64> {
    let e1 = &sys.emitters[0];
    let e2 = &sys.emitters[1];
    let off = C64::new(sys.coherent_coupling(), -0.5 * sys.cross_decay());
    ndarray::array![
        [C64::new(e1.detuning, -0.5 * e1.total_decay), off],
        [off, C64::new(e2.detuning, -0.5 * e2.total_decay)]
    ]
}

/// Decay eigenmode of the single-excitation block.
#[derive(Debug, Clone)]
pub struct DecayMode {
    /// Amplitudes on `{|eg>, |ge>}`, normalized to unit Euclidean norm.
    pub amplitudes: Array1<C64>,
    /// Population decay rate `-2 Im(lambda)`.
    pub rate: f64,
    /// Oscillation frequency `Re(lambda)` in the rotating frame.
    pub frequency: f64,
}

/// The two decay eigenmodes of [`single_excitation_heff`], superradiant
/// (faster) first. At `Delta_12 = 0` and purely dissipative coupling these
/// are exactly `|+>` and `|->`.
pub fn collective_decay_modes(sys: &SystemParams) -> [DecayMode; 2] {
    let h = single_excitation_heff(sys);
    let (a, b, d) = (h[[0, 0]], h[[0, 1]], h[[1, 1]]);
    let mean = (a + d) * c(0.5);
    let root = (((a - d) * c(0.5)).powi(2) + b * b).sqrt();
    let lambdas = [mean + root, mean - root];
    let mut modes: Vec<DecayMode> = lambdas
        .iter()
        .map(|&lam| {
            let v = if b.norm() > 1e-300 {
                [b, lam - a]
            } else if (lam - a).norm() < (lam - d).norm() {
                [c(1.0), c(0.0)]
            } else {
                [c(0.0), c(1.0)]
            };
            let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
            DecayMode {
                amplitudes: Array1::from(vec![v[0] / c(n), v[1] / c(n)]),
                rate: -2.0 * lam.im,
                frequency: lam.re,
            }
        })
        .collect();
    modes.sort_by(|x, y| y.rate.partial_cmp(&x.rate).unwrap());
    [modes.remove(0), modes.remove(0)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::norm_max;

    fn ideal_pair() -> SystemParams {
        SystemParams::symmetric(1.0, 1.0)
    }

    #[test]
    fn hamiltonian_zero_drive_resonant_is_zero() {
        let sys = ideal_pair();
        let h = build_hamiltonian(&sys, &DriveConfig::zero(), 0.0);
        assert!(norm_max(&h) < 1e-15);
    }

    #[test]
    fn hamiltonian_single_drive_structure() {
        let sys = ideal_pair();
        let omega = 0.3;
        let drive = DriveConfig {
            amplitudes: [(omega, 0.0), (0.0, 0.0)],
            envelope: PulseEnvelope::Cw,
        };
        let h = build_hamiltonian(&sys, &drive, 0.0);
        assert!((h[[IDX_GG, IDX_EG]] - c(omega / 2.0)).norm() < 1e-15);
        assert!((h[[IDX_GE, IDX_EE]] - c(omega / 2.0)).norm() < 1e-15);
        assert!(h[[IDX_GG, IDX_GE]].norm() < 1e-15);
        assert!(h[[IDX_EG, IDX_GE]].norm() < 1e-15);
        // hermitian
        assert!(norm_max(&(&h - &dagger(&h))) < 1e-15);
    }

    #[test]
    fn out_of_phase_drive_flips_sign() {
        let sys = ideal_pair();
        let drive = DriveConfig {
            amplitudes: [(0.2, 0.0), (0.2, std::f64::consts::PI)],
            envelope: PulseEnvelope::Cw,
        };
        let h = build_hamiltonian(&sys, &drive, 0.0);
        // emitter-2 entries carry e^{i pi} = -1 relative to emitter 1
        assert!((h[[IDX_GG, IDX_GE]] + c(0.1)).norm() < 1e-15);
        assert!((h[[IDX_GG, IDX_EG]] - c(0.1)).norm() < 1e-15);
    }

    #[test]
    fn dissipators_ideal_pair_bright_and_dark() {
        let sys = ideal_pair();
        let ch = build_dissipators(&sys);
        let wg: Vec<_> = ch
            .iter()
            .filter(|k| k.kind == ChannelKind::WaveguideCollective)
            .collect();
        assert_eq!(wg.len(), 2);
        assert!((wg[0].rate - 2.0).abs() < 1e-14);
        assert!(wg[1].rate.abs() < 1e-14);
        // bright operator is (s1 + s2)/sqrt(2) up to sign
        let expect = (sigma_minus(0) + sigma_minus(1)).mapv(|z| z * c(std::f64::consts::FRAC_1_SQRT_2));
        let diff_plus = norm_max(&(&wg[0].operator - &expect));
        let diff_minus = norm_max(&(&wg[0].operator + &expect));
        assert!(diff_plus.min(diff_minus) < 1e-14);
    }

    #[test]
    fn dissipators_uncoupled_when_beta2_zero() {
        let e1 = EmitterParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let e2 = EmitterParams::new(0.8, 0.0, 0.0, 0.0).unwrap();
        let sys = SystemParams::new(e1, e2, 0.0).unwrap();
        assert_eq!(sys.cross_decay(), 0.0);
        let ch = build_dissipators(&sys);
        // loss channel of emitter 2 carries its entire decay
        let loss2 = ch
            .iter()
            .find(|k| k.kind == ChannelKind::ResidualLoss(1))
            .unwrap();
        assert!((loss2.rate - 0.8).abs() < 1e-14);
    }

    #[test]
    fn dissipators_cross_rate_paper_linewidths() {
        let e1 = EmitterParams::from_ghz(0.73, 1.0, 0.0, 0.0).unwrap();
        let e2 = EmitterParams::from_ghz(0.79, 1.0, 0.0, 0.0).unwrap();
        let sys = SystemParams::new(e1, e2, 0.0).unwrap();
        let g12_ghz = sys.cross_decay() / TAU;
        assert!((g12_ghz - (0.73f64 * 0.79).sqrt()).abs() < 1e-12);
        assert!((g12_ghz - 0.7594).abs() < 1e-3);
    }

    #[test]
    fn total_decay_recovered_per_emitter() {
        // sum of rate * L^dag L over decay channels reproduces Gamma_i on
        // each excited projector
        let e1 = EmitterParams::from_ghz(0.73, 0.93, 0.1, 0.2).unwrap();
        let e2 = EmitterParams::from_ghz(0.79, 0.88, 0.05, -0.4).unwrap();
        let sys = SystemParams::new(e1, e2, 0.3).unwrap();
        let mut total = Array2::<C64>::zeros((DIM, DIM));
        for ch in build_dissipators(&sys) {
            if matches!(ch.kind, ChannelKind::Dephasing(_)) {
                continue;
            }
            total = total + dagger(&ch.operator).dot(&ch.operator).mapv(|z| z * c(ch.rate));
        }
        let expect = excited_projector(0).mapv(|z| z * c(sys.emitters[0].total_decay))
            + excited_projector(1).mapv(|z| z * c(sys.emitters[1].total_decay))
            + (dagger(&sigma_minus(0)).dot(&sigma_minus(1))
                + dagger(&sigma_minus(1)).dot(&sigma_minus(0)))
            .mapv(|z| z * c(sys.cross_decay()));
        assert!(norm_max(&(&total - &expect)) < 1e-12);
    }

    #[test]
    fn waveguide_rates_nonnegative_for_all_phases() {
        let e1 = EmitterParams::new(1.0, 0.9, 0.0, 0.0).unwrap();
        let e2 = EmitterParams::new(1.3, 0.7, 0.0, 0.0).unwrap();
        for k in 0..64 {
            let phi = TAU * (k as f64) / 64.0;
            let sys = SystemParams::new(e1, e2, phi).unwrap();
            for ch in build_dissipators(&sys) {
                assert!(ch.rate >= 0.0, "negative rate at phi={phi}");
            }
        }
    }

    #[test]
    fn liouvillian_preserves_trace_and_hermiticity() {
        let sys = ideal_pair();
        let drive = DriveConfig::cw_ghz(0.1, 0.3, 0.05, 1.0);
        let l = build_liouvillian(&sys, &drive, 0.0);
        assert!(l.trace_defect() < 1e-12);
        // applying L to a hermitian matrix gives a traceless hermitian matrix
        let rho = DensityMatrix::maximally_mixed();
        let out = l.apply(rho.as_array());
        assert!(trace(&out).norm() < 1e-13);
        assert!(norm_max(&(&out - &dagger(&out))) < 1e-13);
    }

    #[test]
    fn liouvillian_zero_drive_has_null_eigenvalue_and_damped_spectrum() {
        let sys = ideal_pair();
        let l = build_liouvillian(&sys, &DriveConfig::zero(), 0.0);
        let eigs = linalg::eigenvalues(l.matrix()).unwrap();
        let min_abs = eigs.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        assert!(min_abs < 1e-10, "no stationary eigenvalue, min |lambda| = {min_abs}");
        for z in &eigs {
            assert!(z.re <= 1e-10, "eigenvalue with positive real part: {z}");
        }
    }

    #[test]
    fn liouvillian_single_excitation_rates_ideal_pair() {
        // ideal resonant pair at zero drive: the single-excitation block has
        // coherence rates Gamma_pm/2 and population rates Gamma_pm in the
        // collective basis; check via eigenvalues of the full generator.
        let sys = ideal_pair();
        let l = build_liouvillian(&sys, &DriveConfig::zero(), 0.0);
        let eigs = linalg::eigenvalues(l.matrix()).unwrap();
        let rates = collective_rates(&sys);
        for target in [
            -rates.gamma_plus,       // |+> population
            -rates.gamma_minus,      // |-> population (0 for beta = 1)
            -rates.gamma_plus / 2.0, // gg-|+> coherence
        ] {
            let hit = eigs
                .iter()
                .any(|z| (z.re - target).abs() < 1e-9 && z.im.abs() < 1e-9);
            assert!(hit, "expected eigenvalue {target} in Liouvillian spectrum");
        }
    }

    #[test]
    fn collective_rates_examples() {
        // Gamma_1 = Gamma_2 = Gamma_12 = 1, resonant: rates 2 and 0
        let sys = ideal_pair();
        let r = collective_rates(&sys);
        assert!((r.gamma_plus - 2.0).abs() < 1e-14);
        assert!(r.gamma_minus.abs() < 1e-14);

        // splitting formula below and above the oscillatory threshold
        let s1 = sys.with_detunings(0.3, -0.3); // Delta_12 = 0.6
        let r1 = collective_rates(&s1);
        assert!((r1.splitting.re - 0.8).abs() < 1e-12);
        assert!(r1.splitting.im.abs() < 1e-12);

        let s2 = sys.with_detunings(1.0, -1.0); // Delta_12 = 2 > Gamma_12
        let r2 = collective_rates(&s2);
        assert!(r2.splitting.re.abs() < 1e-12);
        assert!((r2.oscillation() - 3.0f64.sqrt()).abs() < 1e-12);
        assert!((r2.gamma_plus - 1.0).abs() < 1e-12);
        assert!((r2.gamma_minus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collective_rate_sum_rule() {
        let e = EmitterParams::new(1.2, 0.85, 0.0, 0.1).unwrap();
        let sys = SystemParams::new(e, e, 0.0).unwrap();
        let r = collective_rates(&sys);
        if r.splitting.im == 0.0 {
            assert!((r.gamma_plus + r.gamma_minus - 2.4).abs() < 1e-12);
        }
    }

    #[test]
    fn collective_basis_round_trip_and_examples() {
        let rho = DensityMatrix::basis_state(IDX_EG);
        let coll = to_collective_basis(&rho);
        assert!((coll.population(1) - 0.5).abs() < 1e-14);
        assert!((coll.population(2) - 0.5).abs() < 1e-14);
        assert!((coll.as_array()[[1, 2]] - c(0.5)).norm() < 1e-14);

        let plus = DensityMatrix::plus_state();
        let coll_plus = to_collective_basis(&plus);
        assert!((coll_plus.population(1) - 1.0).abs() < 1e-14);

        let mixed = DensityMatrix::maximally_mixed();
        let coll_mixed = to_collective_basis(&mixed);
        assert!(norm_max(&(coll_mixed.as_array() - mixed.as_array())) < 1e-14);

        let back = from_collective_basis(&coll);
        assert!(norm_max(&(back.as_array() - rho.as_array())) < 1e-14);
    }

    #[test]
    fn decay_modes_reduce_to_plus_minus_on_resonance() {
        let sys = SystemParams::symmetric(1.0, 0.9);
        let modes = collective_decay_modes(&sys);
        let r = collective_rates(&sys);
        assert!((modes[0].rate - r.gamma_plus).abs() < 1e-12);
        assert!((modes[1].rate - r.gamma_minus).abs() < 1e-12);
        // superradiant mode is the symmetric combination
        let v = &modes[0].amplitudes;
        assert!((v[0] - v[1]).norm() < 1e-10);
    }

    #[test]
    fn pulse_area_normalization() {
        let drive = DriveConfig {
            amplitudes: [(1.0, 0.0), (0.5, 0.0)],
            envelope: PulseEnvelope::Gaussian {
                center: 1.0,
                fwhm: 0.05,
                area: std::f64::consts::PI,
            },
        };
        // numeric integral of |Omega_1(t)|
        let n = 20000;
        let dt = 2.0 / n as f64;
        let mut areas = [0.0f64; 2];
        for k in 0..n {
            let t = k as f64 * dt;
            let a = drive.amplitudes_at(t);
            areas[0] += a[0].norm() * dt;
            areas[1] += a[1].norm() * dt;
        }
        assert!((areas[0] - std::f64::consts::PI).abs() < 1e-6);
        assert!((areas[1] - 0.5 * std::f64::consts::PI).abs() < 1e-6);
        let declared = drive.pulse_areas();
        assert!((declared[0] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn density_matrix_rejects_bad_states() {
        let mut m = eye(DIM).mapv(|z| z * c(0.25));
        m[[0, 1]] = c(0.3);
        assert!(DensityMatrix::new(m).is_err()); // not hermitian

        let mut m2 = Array2::<C64>::zeros((DIM, DIM));
        m2[[0, 0]] = c(0.9);
        assert!(DensityMatrix::new(m2).is_err()); // trace != 1

        let mut m3 = Array2::<C64>::zeros((DIM, DIM));
        m3[[0, 0]] = c(1.5);
        m3[[1, 1]] = c(-0.5);
        assert!(DensityMatrix::new(m3).is_err()); // negative eigenvalue
    }
}
