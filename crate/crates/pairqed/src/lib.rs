//! Simulation and analysis toolkit for a pair of quantum emitters coupled
//! through a shared waveguide mode.
//!
//! The crate models two driven two-level emitters with waveguide-mediated
//! dissipative (and optionally coherent) coupling. It provides:
//!
//! * [`model`] — system parameterization, Hamiltonian, jump operators, and
//!   the Liouvillian superoperator in the bare basis
//!   `{|gg>, |ge>, |eg>, |ee>}` (first letter is emitter 1).
//! * [`dynamics`] — master-equation propagation, steady states, waveguide
//!   emission intensity, and Bloch trajectories in the single-excitation
//!   subspace.
//! * [`correlations`] — intensity correlations `g2(tau)` of the waveguide
//!   output via the quantum regression theorem, plus a weak-drive
//!   closed-form route for cross-checking.
//! * [`polarization`] — Jones-calculus mapping from waveplate angles to
//!   per-emitter complex Rabi amplitudes.
//! * [`instrument`] — detector time jitter and spectral-diffusion averaging.
//! * [`analysis`] — nonlinear least-squares fits of the dip/antidip and
//!   Rabi-oscillation models.
//! * [`cli`] — experiment configs, figure subcommands, CSV/SVG emission,
//!   and deterministic run manifests (the `pairqed` binary is a thin
//!   wrapper over this module).
//!
//! Conventions used throughout: time in nanoseconds, rates and detunings as
//! angular frequencies in rad/ns (a transition quoted as `f` GHz enters as
//! `2*pi*f`). Constructors with a `_ghz` suffix do the conversion.

pub mod analysis;
pub mod cli;
pub mod correlations;
pub mod dynamics;
pub mod instrument;
pub mod linalg;
pub mod model;
pub mod polarization;
pub mod quadrature;

pub use model::{
    build_dissipators, build_hamiltonian, build_liouvillian, collective_rates,
    to_collective_basis, CollectiveRates, DensityMatrix, DriveConfig, EmitterParams, Liouvillian,
    PulseEnvelope, SystemParams,
};

/// Complex double-precision scalar used for all quantum operators.
pub type C64 = num_complex::Complex64;
