//! Experiment configuration: a flat sectioned key-value format chosen for
//! language neutrality. Unknown sections or keys are rejected with the
//! offending line number; all physical parameters are validated on load.

use std::collections::BTreeMap;

use crate::instrument::InstrumentModel;
use crate::model::{DriveConfig, EmitterParams, PulseEnvelope, SystemParams};
use crate::polarization::{drive_from_polarization, waveplate_output, DipoleConfig, JonesVector};

use super::CliError;

/// Schema: allowed keys per section.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "system",
        &[
            "gamma1_ghz",
            "gamma2_ghz",
            "beta1",
            "beta2",
            "dephasing1_ghz",
            "dephasing2_ghz",
            "detuning1_ghz",
            "detuning2_ghz",
            "coupling_phase_rad",
        ],
    ),
    (
        "drive",
        &[
            "mode",
            "route",
            "omega1_ghz",
            "theta1_rad",
            "omega2_ghz",
            "theta2_rad",
            "pulse_center_ns",
            "pulse_fwhm_ns",
            "pulse_area_rad",
            "qwp_deg",
            "hwp_deg",
            "scale_ghz",
            "input_polarization",
            "dipole1",
            "dipole2",
        ],
    ),
    (
        "instrument",
        &[
            "jitter_fwhm_ns",
            "sd_sigma1_ghz",
            "sd_sigma2_ghz",
            "quadrature_order",
            "sd_correlation",
        ],
    ),
    (
        "grid",
        &[
            "tau_max_ns",
            "tau_step_ns",
            "t_min_ns",
            "t_max_ns",
            "t_step_ns",
            "bloch",
            "weight_floor",
        ],
    ),
    (
        "sweep",
        &[
            "axis", "anchor", "start", "stop", "steps", "start2", "stop2", "steps2",
        ],
    ),
    (
        "polarization",
        &[
            "input_polarization",
            "qwp_min_deg",
            "qwp_max_deg",
            "qwp_steps",
            "hwp_min_deg",
            "hwp_max_deg",
            "hwp_steps",
            "qwp_offset_deg",
            "hwp_offset_deg",
            "dipole1",
            "dipole2",
        ],
    ),
    (
        "rabi",
        &[
            "power_min",
            "power_max",
            "power_steps",
            "area_per_sqrt_power",
            "readout_pad_ns",
        ],
    ),
    ("output", &["prefix"]),
];

fn schema_keys(section: &str) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

/// One parsed `key = value` with its source line (1-based).
#[derive(Debug, Clone)]
struct RawEntry {
    value: String,
    line: usize,
}

type Sections = BTreeMap<String, BTreeMap<String, RawEntry>>;

fn parse_sections(text: &str) -> Result<Sections, CliError> {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(CliError::config(format!(
                    "line {line_no}: malformed section header `{raw_line}`"
                )));
            }
            let name = line[1..line.len() - 1].trim().to_string();
            if schema_keys(&name).is_none() {
                return Err(CliError::config(format!(
                    "line {line_no}: unknown section `[{name}]`"
                )));
            }
            sections.entry(name.clone()).or_default();
            current = Some(name);
            continue;
        }
        let section = current.as_ref().ok_or_else(|| {
            CliError::config(format!("line {line_no}: key outside of any [section]"))
        })?;
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::config(format!("line {line_no}: expected `key = value`"))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let allowed = schema_keys(section).unwrap();
        if !allowed.contains(&key.as_str()) {
            return Err(CliError::config(format!(
                "line {line_no}: unknown key `{key}` in section [{section}]"
            )));
        }
        let entry = sections.get_mut(section).unwrap();
        if entry.contains_key(&key) {
            return Err(CliError::config(format!(
                "line {line_no}: duplicate key `{key}` in section [{section}]"
            )));
        }
        entry.insert(key, RawEntry { value, line: line_no });
    }
    Ok(sections)
}

struct SectionReader<'a> {
    name: &'a str,
    entries: Option<&'a BTreeMap<String, RawEntry>>,
}

impl<'a> SectionReader<'a> {
    fn get(&self, key: &str) -> Option<&RawEntry> {
        self.entries.and_then(|m| m.get(key))
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse::<f64>().map_err(|_| {
                CliError::config(format!(
                    "line {}: key `{}` in [{}] is not a number: `{}`",
                    e.line, key, self.name, e.value
                ))
            }),
        }
    }

    fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => e.value.parse::<usize>().map_err(|_| {
                CliError::config(format!(
                    "line {}: key `{}` in [{}] is not a positive integer: `{}`",
                    e.line, key, self.name, e.value
                ))
            }),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => match e.value.as_str() {
                "true" | "yes" | "1" => Ok(true),
                "false" | "no" | "0" => Ok(false),
                _ => Err(CliError::config(format!(
                    "line {}: key `{}` must be true/false",
                    e.line, key
                ))),
            },
        }
    }

    fn string(&self, key: &str, default: &str) -> String {
        self.get(key)
            .map(|e| e.value.clone())
            .unwrap_or_else(|| default.to_string())
    }
}

/// How the drive amplitudes were specified.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveRoute {
    /// Explicit per-emitter `(omega, theta)`.
    Amplitudes,
    /// Via waveplate angles, input polarization, and dipole projection.
    Polarization { qwp_deg: f64, hwp_deg: f64, scale_ghz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    None,
    Detuning12,
    Beta2,
    DrivePhase,
    /// Two-axis map over the emitter detunings (laser-frame).
    DetuningMap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub symmetric_anchor: bool,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub start2: f64,
    pub stop2: f64,
    pub steps2: usize,
}

impl SweepSection {
    pub fn values(&self) -> Vec<f64> {
        span(self.start, self.stop, self.steps)
    }

    pub fn values2(&self) -> Vec<f64> {
        span(self.start2, self.stop2, self.steps2)
    }
}

fn span(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    if steps <= 1 {
        return vec![start];
    }
    (0..steps)
        .map(|k| start + (stop - start) * k as f64 / (steps - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSection {
    pub tau_max_ns: f64,
    pub tau_step_ns: f64,
    pub t_min_ns: f64,
    pub t_max_ns: f64,
    pub t_step_ns: f64,
    pub bloch: bool,
    pub weight_floor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarizationSection {
    pub input: JonesVector,
    pub qwp_min_deg: f64,
    pub qwp_max_deg: f64,
    pub qwp_steps: usize,
    pub hwp_min_deg: f64,
    pub hwp_max_deg: f64,
    pub hwp_steps: usize,
    pub offsets: [f64; 2],
    pub dipoles: DipoleConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiSection {
    pub power_min: f64,
    pub power_max: f64,
    pub power_steps: usize,
    /// Pulse area (rad) delivered per sqrt(power unit).
    pub area_per_sqrt_power: f64,
    /// Extra time after the pulse before the populations are read out.
    pub readout_pad_ns: f64,
}

/// A fully validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemParams,
    pub drive: DriveConfig,
    pub drive_route: DriveRoute,
    pub instrument: InstrumentModel,
    pub grid: GridSection,
    pub sweep: SweepSection,
    pub polarization: PolarizationSection,
    pub rabi: RabiSection,
    pub output_prefix: String,
}

fn parse_jones(text: &str, line: usize) -> Result<JonesVector, CliError> {
    match text {
        "h" | "horizontal" => Ok(JonesVector::horizontal()),
        "v" | "vertical" => Ok(JonesVector::vertical()),
        "d" | "diagonal" => Ok(JonesVector::diagonal()),
        "circular+" | "sigma+" => Ok(JonesVector::circular(true)),
        "circular-" | "sigma-" => Ok(JonesVector::circular(false)),
        other => {
            // free-form "h_re,h_im,v_re,v_im"
            let parts: Vec<&str> = other.split(',').map(|s| s.trim()).collect();
            if parts.len() != 4 {
                return Err(CliError::config(format!(
                    "line {line}: polarization `{other}` is neither a preset (h, v, d, circular+, circular-) nor four comma-separated numbers"
                )));
            }
            let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
            let nums = nums.map_err(|_| {
                CliError::config(format!("line {line}: polarization components must be numbers"))
            })?;
            let j = JonesVector::new(
                crate::C64::new(nums[0], nums[1]),
                crate::C64::new(nums[2], nums[3]),
            );
            if j.norm() == 0.0 {
                return Err(CliError::config(format!(
                    "line {line}: polarization vector must be nonzero"
                )));
            }
            Ok(j.normalized())
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let sections = parse_sections(text)?;
        let reader = |name: &'static str| SectionReader {
            name,
            entries: sections.get(name),
        };

        // [system]
        let sys = reader("system");
        let e1 = EmitterParams::from_ghz(
            sys.f64("gamma1_ghz", 0.73)?,
            sys.f64("beta1", 0.95)?,
            sys.f64("dephasing1_ghz", 0.0)?,
            sys.f64("detuning1_ghz", 0.0)?,
        )
        .map_err(|e| CliError::config(format!("[system] emitter 1: {e}")))?;
        let e2 = EmitterParams::from_ghz(
            sys.f64("gamma2_ghz", 0.79)?,
            sys.f64("beta2", 0.95)?,
            sys.f64("dephasing2_ghz", 0.0)?,
            sys.f64("detuning2_ghz", 0.0)?,
        )
        .map_err(|e| CliError::config(format!("[system] emitter 2: {e}")))?;
        let system = SystemParams::new(e1, e2, sys.f64("coupling_phase_rad", 0.0)?)
            .map_err(|e| CliError::config(format!("[system]: {e}")))?;

        // [polarization] (also supplies dipole defaults for the drive route)
        let pol = reader("polarization");
        let pol_input = match pol.get("input_polarization") {
            Some(e) => parse_jones(&e.value, e.line)?,
            None => JonesVector::horizontal(),
        };
        let dip1 = match pol.get("dipole1") {
            Some(e) => parse_jones(&e.value, e.line)?,
            None => JonesVector::circular(true),
        };
        let dip2 = match pol.get("dipole2") {
            Some(e) => parse_jones(&e.value, e.line)?,
            None => JonesVector::circular(false),
        };
        let polarization = PolarizationSection {
            input: pol_input,
            qwp_min_deg: pol.f64("qwp_min_deg", -45.0)?,
            qwp_max_deg: pol.f64("qwp_max_deg", 45.0)?,
            qwp_steps: pol.usize("qwp_steps", 91)?,
            hwp_min_deg: pol.f64("hwp_min_deg", 0.0)?,
            hwp_max_deg: pol.f64("hwp_max_deg", 90.0)?,
            hwp_steps: pol.usize("hwp_steps", 91)?,
            offsets: [pol.f64("qwp_offset_deg", 0.0)?, pol.f64("hwp_offset_deg", 0.0)?],
            dipoles: DipoleConfig {
                dipoles: [dip1, dip2],
            },
        };

        // [drive]
        let drv = reader("drive");
        let mode = drv.string("mode", "cw");
        let route_name = drv.string("route", "amplitudes");
        let envelope = match mode.as_str() {
            "cw" => PulseEnvelope::Cw,
            "pulsed" => PulseEnvelope::Gaussian {
                center: drv.f64("pulse_center_ns", 0.2)?,
                fwhm: drv.f64("pulse_fwhm_ns", 0.05)?,
                area: drv.f64("pulse_area_rad", std::f64::consts::FRAC_PI_4)?,
            },
            other => {
                return Err(CliError::config(format!(
                    "[drive] mode must be `cw` or `pulsed`, got `{other}`"
                )))
            }
        };
        let (amplitudes, drive_route) = match route_name.as_str() {
            "amplitudes" => {
                let tau = std::f64::consts::TAU;
                (
                    [
                        (tau * drv.f64("omega1_ghz", 0.0)?, drv.f64("theta1_rad", 0.0)?),
                        (tau * drv.f64("omega2_ghz", 0.0)?, drv.f64("theta2_rad", 0.0)?),
                    ],
                    DriveRoute::Amplitudes,
                )
            }
            "polarization" => {
                let qwp = drv.f64("qwp_deg", 0.0)?;
                let hwp = drv.f64("hwp_deg", 0.0)?;
                let scale_ghz = drv.f64("scale_ghz", 0.25)?;
                let input = match drv.get("input_polarization") {
                    Some(e) => parse_jones(&e.value, e.line)?,
                    None => polarization.input,
                };
                let dipoles = {
                    let d1 = match drv.get("dipole1") {
                        Some(e) => parse_jones(&e.value, e.line)?,
                        None => polarization.dipoles.dipoles[0],
                    };
                    let d2 = match drv.get("dipole2") {
                        Some(e) => parse_jones(&e.value, e.line)?,
                        None => polarization.dipoles.dipoles[1],
                    };
                    DipoleConfig { dipoles: [d1, d2] }
                };
                let eps = waveplate_output(
                    qwp + polarization.offsets[0],
                    hwp + polarization.offsets[1],
                    &input.normalized(),
                );
                let amps = drive_from_polarization(
                    &eps,
                    &dipoles,
                    std::f64::consts::TAU * scale_ghz,
                );
                (
                    amps,
                    DriveRoute::Polarization {
                        qwp_deg: qwp,
                        hwp_deg: hwp,
                        scale_ghz,
                    },
                )
            }
            other => {
                return Err(CliError::config(format!(
                    "[drive] route must be `amplitudes` or `polarization`, got `{other}`"
                )))
            }
        };
        let drive = DriveConfig {
            amplitudes,
            envelope,
        };
        drive
            .validate()
            .map_err(|e| CliError::config(format!("[drive]: {e}")))?;

        // [instrument]
        let ins = reader("instrument");
        let tau = std::f64::consts::TAU;
        let instrument = InstrumentModel {
            jitter_fwhm: ins.f64("jitter_fwhm_ns", 0.0)?,
            sd_sigma: [
                tau * ins.f64("sd_sigma1_ghz", 0.0)?,
                tau * ins.f64("sd_sigma2_ghz", 0.0)?,
            ],
            quadrature_order: ins.usize("quadrature_order", 9)?,
            sd_correlation: ins.f64("sd_correlation", 0.0)?,
        };
        if instrument.jitter_fwhm < 0.0 {
            return Err(CliError::config("[instrument] jitter_fwhm_ns must be >= 0".into()));
        }
        if instrument.sd_correlation.abs() > 1.0 {
            return Err(CliError::config(
                "[instrument] sd_correlation must lie in [-1, 1]".into(),
            ));
        }

        // [grid]
        let grd = reader("grid");
        let grid = GridSection {
            tau_max_ns: grd.f64("tau_max_ns", 5.0)?,
            tau_step_ns: grd.f64("tau_step_ns", 0.005)?,
            t_min_ns: grd.f64("t_min_ns", 0.0)?,
            t_max_ns: grd.f64("t_max_ns", 6.0)?,
            t_step_ns: grd.f64("t_step_ns", 0.005)?,
            bloch: grd.bool("bloch", false)?,
            weight_floor: grd.f64("weight_floor", 1e-6)?,
        };
        if grid.tau_step_ns <= 0.0 || grid.t_step_ns <= 0.0 {
            return Err(CliError::config("[grid] steps must be positive".into()));
        }

        // [sweep]
        let swp = reader("sweep");
        let axis = swp.string("axis", "none");
        let kind = match axis.as_str() {
            "none" => SweepKind::None,
            "detuning12" => SweepKind::Detuning12,
            "beta2" => SweepKind::Beta2,
            "theta" => SweepKind::DrivePhase,
            "detuning_map" => SweepKind::DetuningMap,
            other => {
                return Err(CliError::config(format!(
                    "[sweep] axis must be one of none, detuning12, beta2, theta, detuning_map; got `{other}`"
                )))
            }
        };
        let anchor = swp.string("anchor", "pin_driven");
        let symmetric_anchor = match anchor.as_str() {
            "pin_driven" => false,
            "symmetric" => true,
            other => {
                return Err(CliError::config(format!(
                    "[sweep] anchor must be pin_driven or symmetric, got `{other}`"
                )))
            }
        };
        let sweep = SweepSection {
            kind,
            symmetric_anchor,
            start: swp.f64("start", 0.0)?,
            stop: swp.f64("stop", 0.0)?,
            steps: swp.usize("steps", 1)?,
            start2: swp.f64("start2", 0.0)?,
            stop2: swp.f64("stop2", 0.0)?,
            steps2: swp.usize("steps2", 1)?,
        };

        // [rabi]
        let rb = reader("rabi");
        let rabi = RabiSection {
            power_min: rb.f64("power_min", 0.0)?,
            power_max: rb.f64("power_max", 4.0)?,
            power_steps: rb.usize("power_steps", 41)?,
            area_per_sqrt_power: rb.f64("area_per_sqrt_power", std::f64::consts::PI / 2.0)?,
            readout_pad_ns: rb.f64("readout_pad_ns", 0.2)?,
        };

        // [output]
        let out = reader("output");
        let output_prefix = out.string("prefix", "run");

        Ok(ExperimentConfig {
            system,
            drive,
            drive_route,
            instrument,
            grid,
            sweep,
            polarization,
            rabi,
            output_prefix,
        })
    }

    /// Canonical serialization; `parse(to_ini(cfg))` reproduces `cfg`.
    pub fn to_ini(&self) -> String {
        let tau = std::f64::consts::TAU;
        let mut s = String::new();
        s.push_str("[system]\n");
        for (i, label) in ["1", "2"].iter().enumerate() {
            let e = &self.system.emitters[i];
            s.push_str(&format!("gamma{label}_ghz = {}\n", e.total_decay / tau));
            s.push_str(&format!("beta{label} = {}\n", e.beta));
            s.push_str(&format!("dephasing{label}_ghz = {}\n", e.dephasing / tau));
            s.push_str(&format!("detuning{label}_ghz = {}\n", e.detuning / tau));
        }
        s.push_str(&format!("coupling_phase_rad = {}\n", self.system.coupling_phase));

        s.push_str("\n[drive]\n");
        match self.drive.envelope {
            PulseEnvelope::Cw => s.push_str("mode = cw\n"),
            PulseEnvelope::Gaussian { center, fwhm, area } => {
                s.push_str("mode = pulsed\n");
                s.push_str(&format!("pulse_center_ns = {center}\n"));
                s.push_str(&format!("pulse_fwhm_ns = {fwhm}\n"));
                s.push_str(&format!("pulse_area_rad = {area}\n"));
            }
        }
        // the resolved amplitudes are canonical regardless of the route
        s.push_str(&format!("omega1_ghz = {}\n", self.drive.amplitudes[0].0 / tau));
        s.push_str(&format!("theta1_rad = {}\n", self.drive.amplitudes[0].1));
        s.push_str(&format!("omega2_ghz = {}\n", self.drive.amplitudes[1].0 / tau));
        s.push_str(&format!("theta2_rad = {}\n", self.drive.amplitudes[1].1));

        s.push_str("\n[instrument]\n");
        s.push_str(&format!("jitter_fwhm_ns = {}\n", self.instrument.jitter_fwhm));
        s.push_str(&format!("sd_sigma1_ghz = {}\n", self.instrument.sd_sigma[0] / tau));
        s.push_str(&format!("sd_sigma2_ghz = {}\n", self.instrument.sd_sigma[1] / tau));
        s.push_str(&format!("quadrature_order = {}\n", self.instrument.quadrature_order));
        s.push_str(&format!("sd_correlation = {}\n", self.instrument.sd_correlation));

        s.push_str("\n[grid]\n");
        s.push_str(&format!("tau_max_ns = {}\n", self.grid.tau_max_ns));
        s.push_str(&format!("tau_step_ns = {}\n", self.grid.tau_step_ns));
        s.push_str(&format!("t_min_ns = {}\n", self.grid.t_min_ns));
        s.push_str(&format!("t_max_ns = {}\n", self.grid.t_max_ns));
        s.push_str(&format!("t_step_ns = {}\n", self.grid.t_step_ns));
        s.push_str(&format!("bloch = {}\n", self.grid.bloch));
        s.push_str(&format!("weight_floor = {}\n", self.grid.weight_floor));

        s.push_str("\n[sweep]\n");
        let axis = match self.sweep.kind {
            SweepKind::None => "none",
            SweepKind::Detuning12 => "detuning12",
            SweepKind::Beta2 => "beta2",
            SweepKind::DrivePhase => "theta",
            SweepKind::DetuningMap => "detuning_map",
        };
        s.push_str(&format!("axis = {axis}\n"));
        s.push_str(&format!(
            "anchor = {}\n",
            if self.sweep.symmetric_anchor { "symmetric" } else { "pin_driven" }
        ));
        s.push_str(&format!("start = {}\n", self.sweep.start));
        s.push_str(&format!("stop = {}\n", self.sweep.stop));
        s.push_str(&format!("steps = {}\n", self.sweep.steps));
        s.push_str(&format!("start2 = {}\n", self.sweep.start2));
        s.push_str(&format!("stop2 = {}\n", self.sweep.stop2));
        s.push_str(&format!("steps2 = {}\n", self.sweep.steps2));

        s.push_str("\n[polarization]\n");
        let jones = |j: &JonesVector| format!("{},{},{},{}", j.h.re, j.h.im, j.v.re, j.v.im);
        s.push_str(&format!("input_polarization = {}\n", jones(&self.polarization.input)));
        s.push_str(&format!("qwp_min_deg = {}\n", self.polarization.qwp_min_deg));
        s.push_str(&format!("qwp_max_deg = {}\n", self.polarization.qwp_max_deg));
        s.push_str(&format!("qwp_steps = {}\n", self.polarization.qwp_steps));
        s.push_str(&format!("hwp_min_deg = {}\n", self.polarization.hwp_min_deg));
        s.push_str(&format!("hwp_max_deg = {}\n", self.polarization.hwp_max_deg));
        s.push_str(&format!("hwp_steps = {}\n", self.polarization.hwp_steps));
        s.push_str(&format!("qwp_offset_deg = {}\n", self.polarization.offsets[0]));
        s.push_str(&format!("hwp_offset_deg = {}\n", self.polarization.offsets[1]));
        s.push_str(&format!("dipole1 = {}\n", jones(&self.polarization.dipoles.dipoles[0])));
        s.push_str(&format!("dipole2 = {}\n", jones(&self.polarization.dipoles.dipoles[1])));

        s.push_str("\n[rabi]\n");
        s.push_str(&format!("power_min = {}\n", self.rabi.power_min));
        s.push_str(&format!("power_max = {}\n", self.rabi.power_max));
        s.push_str(&format!("power_steps = {}\n", self.rabi.power_steps));
        s.push_str(&format!("area_per_sqrt_power = {}\n", self.rabi.area_per_sqrt_power));
        s.push_str(&format!("readout_pad_ns = {}\n", self.rabi.readout_pad_ns));

        s.push_str("\n[output]\n");
        s.push_str(&format!("prefix = {}\n", self.output_prefix));
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[system]
gamma1_ghz = 0.73
gamma2_ghz = 0.79
beta1 = 0.6
beta2 = 0.6

[drive]
mode = cw
omega1_ghz = 0.25
";

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert!((cfg.system.emitters[0].total_decay - std::f64::consts::TAU * 0.73).abs() < 1e-12);
        assert!((cfg.drive.amplitudes[0].0 - std::f64::consts::TAU * 0.25).abs() < 1e-12);
        assert_eq!(cfg.sweep.kind, SweepKind::None);
        assert_eq!(cfg.instrument.jitter_fwhm, 0.0);
    }

    #[test]
    fn unknown_key_is_rejected_with_line_number() {
        let text = format!("{MINIMAL}\n[system]\nbogus_key = 1\n");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("bogus_key"), "{err}");
        assert!(err.contains("line 12"), "{err}");
    }

    #[test]
    fn unknown_section_rejected() {
        let text = "[nonsense]\nx = 1\n";
        let err = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("unknown section"), "{err}");
    }

    #[test]
    fn invalid_physics_rejected() {
        let text = "[system]\nbeta1 = 1.5\n";
        let err = ExperimentConfig::parse(text).unwrap_err().to_string();
        assert!(err.contains("beta"), "{err}");
    }

    #[test]
    fn polarization_route_resolves_amplitudes() {
        let text = "\
[drive]
mode = pulsed
route = polarization
qwp_deg = 0
hwp_deg = 0
scale_ghz = 0.5
pulse_area_rad = 0.785
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        // horizontal input on circular dipoles: equal amplitudes, in phase
        let a = cfg.drive.amplitudes;
        assert!((a[0].0 - a[1].0).abs() < 1e-12);
        assert!((a[0].1 - a[1].1).abs() < 1e-12);
        assert!(matches!(cfg.drive_route, DriveRoute::Polarization { .. }));
    }

    #[test]
    fn canonical_round_trip() {
        let text = "\
[system]
gamma1_ghz = 0.73
gamma2_ghz = 0.79
beta1 = 0.593
beta2 = 0.593
detuning2_ghz = -4.0

[drive]
mode = pulsed
omega1_ghz = 0.25
theta2_rad = 3.14159
pulse_area_rad = 0.7853981633974483

[instrument]
jitter_fwhm_ns = 0.35
sd_sigma1_ghz = 0.1
sd_sigma2_ghz = 0.1

[sweep]
axis = detuning12
start = -4
stop = 4
steps = 9
";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let echoed = cfg.to_ini();
        let cfg2 = ExperimentConfig::parse(&echoed).unwrap();
        assert_eq!(cfg, cfg2);
    }
}
