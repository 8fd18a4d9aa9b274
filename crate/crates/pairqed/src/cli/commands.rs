//! The figure-reproduction subcommands. Each takes a validated
//! [`ExperimentConfig`], runs the corresponding pipeline, and emits CSV
//! (authoritative) plus SVG quick-look files together with a deterministic
//! run manifest.

use ndarray::Array2;
use rayon::prelude::*;
use std::f64::consts::TAU;
use std::path::Path;

use crate::analysis::{self, FitData, FitModel};
use crate::correlations::{
    g2_regression, apply_sweep_value, DetuningAnchor, SweepAxis, TauGrid,
};
use crate::dynamics::{bloch_trajectory, lifetime_experiment, steady_state, waveguide_intensity};
use crate::instrument::{jitter_convolve, spectral_diffusion_average, InstrumentError};
use crate::model::{DensityMatrix, DriveConfig, PulseEnvelope, SystemParams};
use crate::polarization::{build_waveplate_map, equal_amplitude_contour};

use super::config::{ExperimentConfig, SweepKind};
use super::csvout::{columns_csv, matrix_csv};
use super::manifest::RunManifest;
use super::svg;
use super::{CliError, OutputFormat};

fn want_csv(fmt: OutputFormat) -> bool {
    matches!(fmt, OutputFormat::Csv | OutputFormat::Both)
}

fn want_svg(fmt: OutputFormat) -> bool {
    matches!(fmt, OutputFormat::Svg | OutputFormat::Both)
}

/// Full g2 pipeline for one parameter point: regression, spectral-diffusion
/// average of the unnormalized numerator and intensity, normalization, then
/// jitter convolution of the normalized trace.
fn g2_pipeline(
    cfg: &ExperimentConfig,
    sys: &SystemParams,
    drive: &DriveConfig,
    grid: &TauGrid,
) -> Result<Vec<f64>, InstrumentError> {
    let n_sym = 2 * grid.n_positive() - 1;
    let averaged = spectral_diffusion_average(&cfg.instrument, |d1, d2| {
        let s = sys.with_detuning_offsets(d1, d2);
        let tr = g2_regression(&s, drive, grid)?;
        let mut v = tr.g2_raw;
        v.push(tr.intensity);
        Ok(v)
    })?;
    let intensity = averaged[n_sym];
    let mut g2: Vec<f64> = averaged[..n_sym]
        .iter()
        .map(|r| r / (intensity * intensity))
        .collect();
    let sigma = cfg.instrument.coincidence_sigma();
    if sigma > 0.0 {
        g2 = jitter_convolve(&g2, grid.tau_step_ns(), sigma)?;
    }
    Ok(g2)
}

trait TauGridExt {
    fn tau_step_ns(&self) -> f64;
}
impl TauGridExt for TauGrid {
    fn tau_step_ns(&self) -> f64 {
        self.step
    }
}

fn sweep_axis_of(cfg: &ExperimentConfig) -> Option<SweepAxis> {
    let anchor = if cfg.sweep.symmetric_anchor {
        DetuningAnchor::Symmetric
    } else {
        DetuningAnchor::PinDriven
    };
    match cfg.sweep.kind {
        SweepKind::None | SweepKind::DetuningMap => None,
        SweepKind::Detuning12 => Some(SweepAxis::DetuningSplit(anchor)),
        SweepKind::Beta2 => Some(SweepAxis::Beta2),
        SweepKind::DrivePhase => Some(SweepAxis::RelativeDrivePhase),
    }
}

/// `g2` subcommand: single trace, a one-axis sweep (matrix of traces), or
/// the two-axis `detuning_map` of `g2(0)` values.
pub fn cmd_g2(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunManifest, CliError> {
    if !cfg.drive.is_cw() {
        return Err(CliError::config(
            "the g2 command needs a CW drive ([drive] mode = cw)".into(),
        ));
    }
    let mut manifest = RunManifest::new("g2", out_dir)?;
    manifest.write("resolved_config.ini", &cfg.to_ini())?;
    let grid = TauGrid::new(cfg.grid.tau_max_ns, cfg.grid.tau_step_ns)
        .map_err(|e| CliError::config(format!("[grid]: {e}")))?;
    let taus = grid.symmetric();
    let prefix = &cfg.output_prefix;

    match cfg.sweep.kind {
        SweepKind::None => {
            let g2 = g2_pipeline(cfg, &cfg.system, &cfg.drive, &grid)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            if want_csv(format) {
                let csv = columns_csv(&[
                    ("tau_ns".to_string(), taus.clone()),
                    ("g2".to_string(), g2.clone()),
                ]);
                manifest.write(&format!("{prefix}_g2.csv"), &csv)?;
            }
            if want_svg(format) {
                let plot = svg::line_plot(
                    "two-photon correlations",
                    "tau (ns)",
                    "g2",
                    &[("g2".to_string(), taus, g2)],
                );
                manifest.write(&format!("{prefix}_g2.svg"), &plot)?;
            }
        }
        SweepKind::Detuning12 | SweepKind::Beta2 | SweepKind::DrivePhase => {
            let axis = sweep_axis_of(cfg).unwrap();
            // sweep values are given in natural units: GHz for detunings,
            // plain for beta, radians for the drive phase
            let raw_values = cfg.sweep.values();
            let scaled: Vec<f64> = raw_values
                .iter()
                .map(|v| match cfg.sweep.kind {
                    SweepKind::Detuning12 => TAU * v,
                    _ => *v,
                })
                .collect();
            let traces: Vec<(f64, Result<Vec<f64>, String>)> = scaled
                .par_iter()
                .zip(&raw_values)
                .map(|(&sv, &rv)| {
                    let (s, d) = apply_sweep_value(&cfg.system, &cfg.drive, axis, sv);
                    (
                        rv,
                        g2_pipeline(cfg, &s, &d, &grid).map_err(|e| e.to_string()),
                    )
                })
                .collect();
            let mut z = Array2::from_elem((taus.len(), raw_values.len()), f64::NAN);
            for (j, (v, res)) in traces.iter().enumerate() {
                match res {
                    Ok(g2) => {
                        for (i, g) in g2.iter().enumerate() {
                            z[[i, j]] = *g;
                        }
                    }
                    Err(e) => manifest.warn(format!("sweep value {v}: {e}")),
                }
            }
            if want_csv(format) {
                let csv = matrix_csv("tau_ns", &taus, &raw_values, &z);
                manifest.write(&format!("{prefix}_g2_sweep.csv"), &csv)?;
            }
            if want_svg(format) {
                let plot = svg::heatmap(
                    "g2(tau) sweep",
                    "sweep value",
                    "tau (ns)",
                    &raw_values,
                    &taus,
                    &z,
                );
                manifest.write(&format!("{prefix}_g2_sweep.svg"), &plot)?;
            }
        }
        SweepKind::DetuningMap => {
            let d1: Vec<f64> = cfg.sweep.values();
            let d2: Vec<f64> = cfg.sweep.values2();
            let d1_rad: Vec<f64> = d1.iter().map(|v| TAU * v).collect();
            let d2_rad: Vec<f64> = d2.iter().map(|v| TAU * v).collect();
            let map = crate::instrument::g2_map_diffusion(&cfg.system, &cfg.drive, &d1_rad, &d2_rad);
            for (i, j, e) in &map.failures {
                manifest.warn(format!("cell (d1 = {}, d2 = {}): {e}", d1[*i], d2[*j]));
            }
            if want_csv(format) {
                let csv = matrix_csv("detuning1_ghz", &d1, &d2, &map.values);
                manifest.write(&format!("{prefix}_g2zero_map.csv"), &csv)?;
            }
            if want_svg(format) {
                let plot = svg::heatmap(
                    "g2(0) vs emitter detunings",
                    "detuning2 (GHz)",
                    "detuning1 (GHz)",
                    &d2,
                    &d1,
                    &map.values,
                );
                manifest.write(&format!("{prefix}_g2zero_map.svg"), &plot)?;
            }
        }
    }
    Ok(manifest)
}

/// Lifetime pipeline for one parameter point: spectral-diffusion-averaged
/// intensity trace, then single-detector jitter smearing.
fn lifetime_pipeline(
    cfg: &ExperimentConfig,
    sys: &SystemParams,
    drive: &DriveConfig,
    t: &[f64],
) -> Result<Vec<f64>, CliError> {
    let averaged = spectral_diffusion_average(&cfg.instrument, |d1, d2| {
        let s = sys.with_detuning_offsets(d1, d2);
        let tr = lifetime_experiment(&s, drive, t)
            .map_err(|e| InstrumentError::Correlation(e.into()))?;
        Ok(tr.intensity)
    })
    .map_err(|e| CliError::Numerical(e.to_string()))?;
    // one detector observes the decay, not a coincidence pair
    let sigma = cfg.instrument.jitter_fwhm / (8.0 * std::f64::consts::LN_2).sqrt();
    if sigma > 0.0 {
        jitter_convolve(&averaged, t[1] - t[0], sigma).map_err(|e| CliError::Numerical(e.to_string()))
    } else {
        Ok(averaged)
    }
}

/// `lifetime` subcommand: time-resolved emission after pulsed excitation,
/// optionally swept over the emitter detuning, plus an optional Bloch
/// trajectory companion file.
pub fn cmd_lifetime(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunManifest, CliError> {
    if cfg.drive.is_cw() {
        return Err(CliError::config(
            "the lifetime command needs a pulsed drive ([drive] mode = pulsed)".into(),
        ));
    }
    let mut manifest = RunManifest::new("lifetime", out_dir)?;
    manifest.write("resolved_config.ini", &cfg.to_ini())?;
    let n = ((cfg.grid.t_max_ns - cfg.grid.t_min_ns) / cfg.grid.t_step_ns).round() as usize + 1;
    let t: Vec<f64> = (0..n)
        .map(|k| cfg.grid.t_min_ns + k as f64 * cfg.grid.t_step_ns)
        .collect();
    let prefix = &cfg.output_prefix;

    match cfg.sweep.kind {
        SweepKind::None => {
            let base =
                lifetime_experiment(&cfg.system, &cfg.drive, &t).map_err(CliError::numerical)?;
            let smeared = lifetime_pipeline(cfg, &cfg.system, &cfg.drive, &t)?;
            if want_csv(format) {
                let csv = columns_csv(&[
                    ("t_ns".to_string(), t.clone()),
                    ("intensity".to_string(), smeared.clone()),
                    ("pop_e1".to_string(), base.populations[0].clone()),
                    ("pop_e2".to_string(), base.populations[1].clone()),
                    ("pop_plus".to_string(), base.collective[0].clone()),
                    ("pop_minus".to_string(), base.collective[1].clone()),
                ]);
                manifest.write(&format!("{prefix}_lifetime.csv"), &csv)?;
            }
            if want_svg(format) {
                let plot = svg::line_plot(
                    "time-resolved emission",
                    "t (ns)",
                    "intensity (arb.)",
                    &[
                        ("intensity".to_string(), t.clone(), smeared),
                        ("p_+".to_string(), t.clone(), base.collective[0].clone()),
                        ("p_-".to_string(), t.clone(), base.collective[1].clone()),
                    ],
                );
                manifest.write(&format!("{prefix}_lifetime.svg"), &plot)?;
            }
            if cfg.grid.bloch {
                let b = bloch_trajectory(
                    &cfg.system,
                    &cfg.drive,
                    &DensityMatrix::ground(),
                    &t,
                    cfg.grid.weight_floor,
                )
                .map_err(CliError::numerical)?;
                let valid: Vec<f64> = b.valid.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
                let csv = columns_csv(&[
                    ("t_ns".to_string(), b.t),
                    ("x".to_string(), b.x),
                    ("y".to_string(), b.y),
                    ("z".to_string(), b.z),
                    ("w".to_string(), b.weight),
                    ("valid".to_string(), valid),
                ]);
                manifest.write(&format!("{prefix}_bloch.csv"), &csv)?;
            }
        }
        SweepKind::Detuning12 => {
            let values = cfg.sweep.values();
            let traces: Vec<(f64, Result<Vec<f64>, String>)> = values
                .par_iter()
                .map(|&v_ghz| {
                    let v = TAU * v_ghz;
                    let sys = if cfg.sweep.symmetric_anchor {
                        cfg.system.with_detunings(0.5 * v, -0.5 * v)
                    } else {
                        cfg.system.with_detunings(0.0, -v)
                    };
                    (
                        v_ghz,
                        lifetime_pipeline(cfg, &sys, &cfg.drive, &t).map_err(|e| e.to_string()),
                    )
                })
                .collect();
            let mut z = Array2::from_elem((t.len(), values.len()), f64::NAN);
            for (j, (v, res)) in traces.iter().enumerate() {
                match res {
                    Ok(trace) => {
                        for (i, x) in trace.iter().enumerate() {
                            z[[i, j]] = *x;
                        }
                    }
                    Err(e) => manifest.warn(format!("detuning {v} GHz: {e}")),
                }
            }
            if want_csv(format) {
                let csv = matrix_csv("t_ns", &t, &values, &z);
                manifest.write(&format!("{prefix}_lifetime_sweep.csv"), &csv)?;
            }
            if want_svg(format) {
                let plot = svg::heatmap(
                    "emission vs detuning",
                    "detuning12 (GHz)",
                    "t (ns)",
                    &values,
                    &t,
                    &z,
                );
                manifest.write(&format!("{prefix}_lifetime_sweep.svg"), &plot)?;
            }
        }
        _ => {
            return Err(CliError::config(
                "the lifetime command supports sweep axis `none` or `detuning12`".into(),
            ))
        }
    }
    Ok(manifest)
}

/// `steadystate-map` subcommand: CW intensity over (detuning split, laser
/// detuning). The split axis is [sweep] start/stop/steps, the laser axis
/// start2/stop2/steps2, both in GHz.
pub fn cmd_steadystate_map(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunManifest, CliError> {
    if !cfg.drive.is_cw() {
        return Err(CliError::config(
            "the steadystate-map command needs a CW drive".into(),
        ));
    }
    if cfg.sweep.steps < 2 || cfg.sweep.steps2 < 2 {
        return Err(CliError::config(
            "steadystate-map needs both sweep axes ([sweep] steps and steps2 >= 2)".into(),
        ));
    }
    let mut manifest = RunManifest::new("steadystate-map", out_dir)?;
    manifest.write("resolved_config.ini", &cfg.to_ini())?;
    let split = cfg.sweep.values();
    let laser = cfg.sweep.values2();
    let prefix = &cfg.output_prefix;

    let cells: Vec<(usize, usize)> = (0..laser.len())
        .flat_map(|i| (0..split.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<((usize, usize), Result<f64, String>)> = cells
        .par_iter()
        .map(|&(i, j)| {
            // split symmetrically about the pair center; the laser detuning
            // is measured from that center
            let d12 = TAU * split[j];
            let dl = TAU * laser[i];
            let sys = cfg
                .system
                .with_detunings(0.5 * d12 - dl, -0.5 * d12 - dl);
            let value = steady_state(&sys, &cfg.drive)
                .map(|rho| waveguide_intensity(&rho, &sys))
                .map_err(|e| e.to_string());
            ((i, j), value)
        })
        .collect();
    let mut z = Array2::from_elem((laser.len(), split.len()), f64::NAN);
    for ((i, j), r) in results {
        match r {
            Ok(v) => z[[i, j]] = v,
            Err(e) => manifest.warn(format!(
                "cell (laser = {}, split = {}): {e}",
                laser[i], split[j]
            )),
        }
    }
    if want_csv(format) {
        let csv = matrix_csv("laser_detuning_ghz", &laser, &split, &z);
        manifest.write(&format!("{prefix}_rf_map.csv"), &csv)?;
    }
    if want_svg(format) {
        let plot = svg::heatmap(
            "resonance fluorescence",
            "detuning12 (GHz)",
            "laser detuning (GHz)",
            &split,
            &laser,
            &z,
        );
        manifest.write(&format!("{prefix}_rf_map.svg"), &plot)?;
    }
    Ok(manifest)
}

/// `waveplate-map` subcommand: drive amplitudes and relative phase over the
/// waveplate angle grid, plus the extracted equal-amplitude contour.
pub fn cmd_waveplate_map(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunManifest, CliError> {
    let mut manifest = RunManifest::new("waveplate-map", out_dir)?;
    manifest.write("resolved_config.ini", &cfg.to_ini())?;
    let p = &cfg.polarization;
    let qwp: Vec<f64> = (0..p.qwp_steps)
        .map(|k| {
            p.qwp_min_deg + (p.qwp_max_deg - p.qwp_min_deg) * k as f64 / (p.qwp_steps - 1).max(1) as f64
        })
        .collect();
    let hwp: Vec<f64> = (0..p.hwp_steps)
        .map(|k| {
            p.hwp_min_deg + (p.hwp_max_deg - p.hwp_min_deg) * k as f64 / (p.hwp_steps - 1).max(1) as f64
        })
        .collect();
    let map = build_waveplate_map(&qwp, &hwp, &p.input, &p.dipoles, p.offsets);
    let prefix = &cfg.output_prefix;

    if want_csv(format) {
        manifest.write(&format!("{prefix}_waveplate_long.csv"), &map.to_csv())?;
        for (name, z) in [
            ("a1sq", &map.a1sq),
            ("a2sq", &map.a2sq),
            ("rel_a1", &map.rel_a1),
            ("phase", &map.phase),
        ] {
            let csv = matrix_csv("qwp_deg", &qwp, &hwp, z);
            manifest.write(&format!("{prefix}_{name}.csv"), &csv)?;
        }
    }
    if want_svg(format) {
        for (name, z, title) in [
            ("a1sq", &map.a1sq, "A1^2"),
            ("a2sq", &map.a2sq, "A2^2"),
            ("rel_a1", &map.rel_a1, "A1^2/(A1^2+A2^2)"),
            ("phase", &map.phase, "relative drive phase"),
        ] {
            let plot = svg::heatmap(title, "hwp (deg)", "qwp (deg)", &hwp, &qwp, z);
            manifest.write(&format!("{prefix}_{name}.svg"), &plot)?;
        }
    }
    // contour errors surface verbatim
    let contour = equal_amplitude_contour(&map).map_err(|e| CliError::Numerical(e.to_string()))?;
    if want_csv(format) {
        let csv = columns_csv(&[
            (
                "qwp_deg".to_string(),
                contour.points.iter().map(|pt| pt.qwp_deg).collect(),
            ),
            (
                "hwp_deg".to_string(),
                contour.points.iter().map(|pt| pt.hwp_deg).collect(),
            ),
            (
                "phase_rad".to_string(),
                contour.points.iter().map(|pt| pt.phase_rad).collect(),
            ),
        ]);
        manifest.write(&format!("{prefix}_contour.csv"), &csv)?;
    }
    Ok(manifest)
}

/// `rabi` subcommand: pulsed power sweep; per-emitter emitted intensity
/// `I_i = gamma_i^wg p_e,i` read out after the pulse, with a Rabi fit and
/// extracted pi-pulse powers.
pub fn cmd_rabi(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunManifest, CliError> {
    let (center, fwhm) = match cfg.drive.envelope {
        PulseEnvelope::Gaussian { center, fwhm, .. } => (center, fwhm),
        PulseEnvelope::Cw => {
            return Err(CliError::config(
                "the rabi command needs a pulsed drive ([drive] mode = pulsed)".into(),
            ))
        }
    };
    let mut manifest = RunManifest::new("rabi", out_dir)?;
    manifest.write("resolved_config.ini", &cfg.to_ini())?;
    let rb = &cfg.rabi;
    let powers: Vec<f64> = (0..rb.power_steps)
        .map(|k| {
            rb.power_min
                + (rb.power_max - rb.power_min) * k as f64 / (rb.power_steps - 1).max(1) as f64
        })
        .collect();
    let t_read = center + 3.0 * fwhm + rb.readout_pad_ns;

    let sim: Vec<Result<(f64, f64), String>> = powers
        .par_iter()
        .map(|&pw| {
            let area = rb.area_per_sqrt_power * pw.sqrt();
            if area == 0.0 {
                return Ok((0.0, 0.0));
            }
            let drive = DriveConfig {
                amplitudes: cfg.drive.amplitudes,
                envelope: PulseEnvelope::Gaussian {
                    center,
                    fwhm,
                    area,
                },
            };
            let states = crate::dynamics::propagate(
                &cfg.system,
                &drive,
                &DensityMatrix::ground(),
                &[0.0, t_read],
            )
            .map_err(|e| e.to_string())?;
            let last = &states[1];
            Ok((
                cfg.system.emitters[0].waveguide_rate() * last.emitter_population(0),
                cfg.system.emitters[1].waveguide_rate() * last.emitter_population(1),
            ))
        })
        .collect();
    let mut i1 = Vec::with_capacity(powers.len());
    let mut i2 = Vec::with_capacity(powers.len());
    for (p, r) in powers.iter().zip(sim) {
        match r {
            Ok((a, b)) => {
                i1.push(a);
                i2.push(b);
            }
            Err(e) => return Err(CliError::Numerical(format!("power {p}: {e}"))),
        }
    }
    let prefix = &cfg.output_prefix;
    if want_csv(format) {
        let csv = columns_csv(&[
            ("power".to_string(), powers.clone()),
            ("I1".to_string(), i1.clone()),
            ("I2".to_string(), i2.clone()),
        ]);
        manifest.write(&format!("{prefix}_rabi.csv"), &csv)?;
    }
    if want_svg(format) {
        let sqrtp: Vec<f64> = powers.iter().map(|p| p.sqrt()).collect();
        let plot = svg::line_plot(
            "Rabi oscillations",
            "sqrt(power)",
            "intensity (arb.)",
            &[
                ("emitter 1".to_string(), sqrtp.clone(), i1.clone()),
                ("emitter 2".to_string(), sqrtp, i2.clone()),
            ],
        );
        manifest.write(&format!("{prefix}_rabi.svg"), &plot)?;
    }

    // fit each emitter's curve and report the pi-pulse powers
    let mut report = String::from("# Rabi fit report\n");
    let mut p_pi = [f64::NAN; 2];
    for (idx, ys) in [&i1, &i2].iter().enumerate() {
        let span = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - ys.iter().cloned().fold(f64::INFINITY, f64::min);
        if span <= 0.0 {
            report.push_str(&format!("emitter {}: flat response, no fit\n", idx + 1));
            continue;
        }
        let mut model = FitModel::rabi();
        model.params[1].value = span;
        // first maximum sets the eta scale
        let peak_idx = ys
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let p_peak = powers[peak_idx].max(1e-6);
        model.params[0].value = std::f64::consts::FRAC_PI_2 / p_peak.sqrt();
        let res = analysis::fit(
            &model,
            &FitData {
                x: powers.clone(),
                y: (*ys).clone(),
                yerr: None,
            },
        )
        .map_err(|e| CliError::Numerical(e.to_string()))?;
        p_pi[idx] = analysis::rabi_pi_power(res.params[0]);
        report.push_str(&format!(
            "emitter {}: eta_exc = {:.6} +- {:.6}, amplitude = {:.6}, offset = {:.6}, P_pi = {:.6}, converged = {}\n",
            idx + 1,
            res.params[0],
            res.uncertainties[0],
            res.params[1],
            res.params[2],
            p_pi[idx],
            res.converged
        ));
    }
    if p_pi.iter().all(|v| v.is_finite()) {
        report.push_str(&format!("P_pi ratio (1/2) = {:.6}\n", p_pi[0] / p_pi[1]));
    }
    manifest.write(&format!("{prefix}_rabi_fit.txt"), &report)?;
    Ok(manifest)
}

/// Options for the `fit` subcommand.
pub struct FitOptions {
    pub model: String,
    pub jitter_fwhm_ns: f64,
    pub window_ns: f64,
    pub omega_ghz: f64,
    pub free_omega: bool,
}

/// `fit` subcommand: ingest a CSV (x, value[, error]) and fit the requested
/// model, or the dip/antidip window-split protocol.
pub fn cmd_fit(
    data_path: &Path,
    opts: &FitOptions,
    out_dir: &Path,
    format: OutputFormat,
) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(data_path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", data_path.display())))?;
    let (names, rows) = super::csvout::parse_csv(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", data_path.display())))?;
    if names.len() < 2 {
        return Err(CliError::config(
            "data must have at least two columns (x, value[, error])".into(),
        ));
    }
    let data = FitData {
        x: rows.iter().map(|r| r[0]).collect(),
        y: rows.iter().map(|r| r[1]).collect(),
        yerr: if names.len() >= 3 {
            Some(rows.iter().map(|r| r[2]).collect())
        } else {
            None
        },
    };
    let sigma = if opts.jitter_fwhm_ns > 0.0 {
        opts.jitter_fwhm_ns * std::f64::consts::SQRT_2 / (8.0 * std::f64::consts::LN_2).sqrt()
    } else {
        0.0
    };

    let mut manifest = RunManifest::new("fit", out_dir)?;
    let mut report = String::from("# fit report\n");
    report.push_str(&format!("data = {}\n", data_path.display()));
    report.push_str(&format!("model = {}\n", opts.model));
    report.push_str(&format!("instrument_sigma_ns = {sigma}\n\n"));

    let render = |report: &mut String, label: &str, model: &FitModel, res: &analysis::FitResult| {
        report.push_str(&format!(
            "[{label}] converged = {}, iterations = {}, residual = {:.6e}\n",
            res.converged, res.iterations, res.residual_norm
        ));
        for (spec, (v, u)) in model
            .params
            .iter()
            .zip(res.params.iter().zip(&res.uncertainties))
        {
            report.push_str(&format!(
                "  {} = {:.6} +- {:.6}{}\n",
                spec.name,
                v,
                u,
                if spec.fixed { " (fixed)" } else { "" }
            ));
        }
    };

    let mut overlay: Vec<(String, Vec<f64>, Vec<f64>)> =
        vec![("data".to_string(), data.x.clone(), data.y.clone())];

    match opts.model.as_str() {
        "dip-antidip" => {
            let split = analysis::fit_dip_antidip(&data, sigma, opts.window_ns, opts.omega_ghz)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            let dip_model = FitModel::broadened_dip(sigma);
            let adip_model = FitModel::two_sided_exp(sigma);
            render(&mut report, "dip |tau| >= window", &dip_model, &split.dip);
            render(&mut report, "antidip |tau| <= window", &adip_model, &split.antidip);
            report.push_str(&format!(
                "\ngamma_dip_ghz = {:.6} +- {:.6}\ngamma_adip_ghz = {:.6} +- {:.6}\n",
                split.dip.params[1],
                split.dip.uncertainties[1],
                split.antidip.params[2],
                split.antidip.uncertainties[2]
            ));
            overlay.push((
                "dip model".to_string(),
                data.x.clone(),
                dip_model.predict(&data.x, &split.dip.params),
            ));
            overlay.push((
                "antidip model".to_string(),
                data.x.clone(),
                adip_model.predict(&data.x, &split.antidip.params),
            ));
        }
        name => {
            let mut model = match name {
                "broadened-dip" => FitModel::broadened_dip(sigma),
                "two-sided-exp" => FitModel::two_sided_exp(sigma),
                "rabi" => FitModel::rabi(),
                other => {
                    return Err(CliError::config(format!(
                        "unknown model `{other}`; expected broadened-dip, two-sided-exp, rabi, or dip-antidip"
                    )))
                }
            };
            if name == "broadened-dip" {
                model.params[3].value = opts.omega_ghz;
                model.params[3].fixed = !opts.free_omega;
                let ymin = data.y.iter().cloned().fold(f64::INFINITY, f64::min);
                model.params[0].value = (1.0 - ymin).clamp(0.05, 3.0);
            }
            let res = analysis::fit(&model, &data).map_err(|e| CliError::Numerical(e.to_string()))?;
            render(&mut report, name, &model, &res);
            overlay.push((
                "model".to_string(),
                data.x.clone(),
                model.predict(&data.x, &res.params),
            ));
        }
    }

    manifest.write("fit_report.txt", &report)?;
    if want_svg(format) {
        let plot = svg::line_plot("fit overlay", &names[0], &names[1], &overlay);
        manifest.write("fit_overlay.svg", &plot)?;
    }
    Ok(manifest)
}
