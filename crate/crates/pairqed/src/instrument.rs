//! Measurement imperfections: detector time jitter and emitter spectral
//! diffusion.
//!
//! Jitter acts as a Gaussian convolution of the coincidence histogram in
//! delay time. Spectral diffusion is treated as quasi-static: the emitter
//! detunings wander slowly compared with all decay times, so a measured
//! quantity is the ensemble average of stationary solutions over Gaussian
//! detuning offsets. The average runs over a Gauss-Hermite tensor grid,
//! which keeps results deterministic.

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::correlations::{g2_zero, CorrelationError};
use crate::model::{DriveConfig, SystemParams};
use crate::quadrature::GaussHermite;

#[derive(Debug, Error)]
pub enum InstrumentError {
    #[error("grid step {step:.4} ns too coarse for jitter sigma {sigma:.4} ns; need step <= {required:.4} ns")]
    GridTooCoarse { step: f64, sigma: f64, required: f64 },
    #[error("observable returned a non-finite value at quadrature node (d1 = {d1:.4}, d2 = {d2:.4}) rad/ns")]
    NonFiniteObservable { d1: f64, d2: f64 },
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
}

/// Detector and spectral-diffusion parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstrumentModel {
    /// FWHM of a single detector's timing jitter (ns).
    pub jitter_fwhm: f64,
    /// Spectral-diffusion standard deviation per emitter (rad/ns).
    pub sd_sigma: [f64; 2],
    /// Gauss-Hermite order per emitter for the diffusion average.
    pub quadrature_order: usize,
    /// Correlation coefficient between the emitters' detuning offsets.
    pub sd_correlation: f64,
}

impl Default for InstrumentModel {
    fn default() -> Self {
        InstrumentModel {
            jitter_fwhm: 0.35,
            sd_sigma: [0.1 * std::f64::consts::TAU, 0.1 * std::f64::consts::TAU],
            quadrature_order: 9,
            sd_correlation: 0.0,
        }
    }
}

impl InstrumentModel {
    /// No jitter, no diffusion.
    pub fn ideal() -> Self {
        InstrumentModel {
            jitter_fwhm: 0.0,
            sd_sigma: [0.0, 0.0],
            quadrature_order: 1,
            sd_correlation: 0.0,
        }
    }

    /// Standard deviation of the coincidence-time jitter for two identical
    /// detectors, `sigma = FWHM * sqrt(2) / sqrt(8 ln 2)`.
    pub fn coincidence_sigma(&self) -> f64 {
        self.jitter_fwhm * std::f64::consts::SQRT_2 / (8.0 * std::f64::consts::LN_2).sqrt()
    }

    pub fn has_diffusion(&self) -> bool {
        self.sd_sigma[0] > 0.0 || self.sd_sigma[1] > 0.0
    }
}

/// Convolve a uniformly sampled curve with a Gaussian of standard deviation
/// `sigma`, truncated at +-6 sigma with renormalized weights. The signal is
/// extended by edge replication, so constants pass through unchanged and
/// symmetric inputs stay symmetric.
pub fn jitter_convolve(values: &[f64], step: f64, sigma: f64) -> Result<Vec<f64>, InstrumentError> {
    if sigma == 0.0 {
        return Ok(values.to_vec());
    }
    let required = sigma / 4.0;
    if step > required {
        return Err(InstrumentError::GridTooCoarse {
            step,
            sigma,
            required,
        });
    }
    let half = (6.0 * sigma / step).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * half as usize + 1);
    for k in -half..=half {
        let x = k as f64 * step;
        kernel.push((-x * x / (2.0 * sigma * sigma)).exp());
    }
    let total: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= total;
    }
    let n = values.len() as isize;
    let at = |i: isize| -> f64 { values[i.clamp(0, n - 1) as usize] };
    let mut out = Vec::with_capacity(values.len());
    for i in 0..n {
        let mut acc = 0.0;
        for (j, w) in kernel.iter().enumerate() {
            acc += w * at(i + j as isize - half);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Quadrature nodes `(d1, d2, weight)` for the spectral-diffusion average.
/// Weights sum to one; for zero widths this is the single node `(0, 0, 1)`.
pub fn diffusion_nodes(model: &InstrumentModel) -> Vec<(f64, f64, f64)> {
    if !model.has_diffusion() {
        return vec![(0.0, 0.0, 1.0)];
    }
    let order = model.quadrature_order.max(1);
    let gh = GaussHermite::new(order);
    let r1 = gh.normal_rule(1.0);
    let r2 = gh.normal_rule(1.0);
    let rho = model.sd_correlation.clamp(-1.0, 1.0);
    let s1 = model.sd_sigma[0];
    let s2 = model.sd_sigma[1];
    let mut nodes = Vec::with_capacity(r1.len() * r2.len());
    for &(x1, w1) in &r1 {
        for &(x2, w2) in &r2 {
            // Cholesky factor of the correlated 2x2 covariance
            let d1 = s1 * x1;
            let d2 = s2 * (rho * x1 + (1.0 - rho * rho).sqrt() * x2);
            nodes.push((d1, d2, w1 * w2));
        }
    }
    nodes
}

/// Average a vector-valued observable of the detuning offsets over the
/// Gaussian diffusion ensemble. The observable must return *unnormalized*
/// quantities (G2, intensity) so that averaging commutes with the physics;
/// normalized ratios are formed by the caller afterwards.
pub fn spectral_diffusion_average<F>(
    model: &InstrumentModel,
    observable: F,
) -> Result<Vec<f64>, InstrumentError>
where
    F: Fn(f64, f64) -> Result<Vec<f64>, InstrumentError> + Sync,
{
    let nodes = diffusion_nodes(model);
    let evals: Vec<Result<(Vec<f64>, f64), InstrumentError>> = nodes
        .par_iter()
        .map(|&(d1, d2, w)| {
            let v = observable(d1, d2)?;
            if v.iter().any(|x| !x.is_finite()) {
                return Err(InstrumentError::NonFiniteObservable { d1, d2 });
            }
            Ok((v, w))
        })
        .collect();
    let mut acc: Option<Vec<f64>> = None;
    for e in evals {
        let (v, w) = e?;
        match &mut acc {
            None => acc = Some(v.iter().map(|x| x * w).collect()),
            Some(a) => {
                for (ai, vi) in a.iter_mut().zip(&v) {
                    *ai += w * vi;
                }
            }
        }
    }
    Ok(acc.expect("at least one quadrature node"))
}

/// Map of `g2(0)` over static laser detunings of both emitters (the
/// spectral-diffusion landscape). Cells evaluate independently; failures
/// are recorded per cell and the map completes.
pub struct G2Map {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    /// `values[[i, j]]` is `g2(0)` at `(d1[i], d2[j])`; failed cells are NaN.
    pub values: Array2<f64>,
    pub failures: Vec<(usize, usize, String)>,
}

pub fn g2_map_diffusion(
    sys: &SystemParams,
    drive: &DriveConfig,
    d1_grid: &[f64],
    d2_grid: &[f64],
) -> G2Map {
    let cells: Vec<(usize, usize)> = (0..d1_grid.len())
        .flat_map(|i| (0..d2_grid.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<((usize, usize), Result<f64, CorrelationError>)> = cells
        .par_iter()
        .map(|&(i, j)| {
            let s = sys.with_detunings(d1_grid[i], d2_grid[j]);
            ((i, j), g2_zero(&s, drive))
        })
        .collect();
    let mut values = Array2::from_elem((d1_grid.len(), d2_grid.len()), f64::NAN);
    let mut failures = Vec::new();
    for ((i, j), r) in results {
        match r {
            Ok(v) => values[[i, j]] = v,
            Err(e) => failures.push((i, j, e.to_string())),
        }
    }
    G2Map {
        d1: d1_grid.to_vec(),
        d2: d2_grid.to_vec(),
        values,
        failures,
    }
}
