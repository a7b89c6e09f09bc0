//! Run configuration: one TOML file, strict about unknown keys.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use strobespin::{
    AreaAnalysis, DynamicsConfig, EnsembleParams, PolarimeterConfig, StrobeWaveform, Violation,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Psd,
    SweepStrobe,
    SweepDuty,
    SweepPolarization,
    OptimizeProtocol,
}

impl Experiment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::Psd => "psd",
            Experiment::SweepStrobe => "sweep_strobe",
            Experiment::SweepDuty => "sweep_duty",
            Experiment::SweepPolarization => "sweep_polarization",
            Experiment::OptimizeProtocol => "optimize_protocol",
        }
    }

    fn simulates(&self) -> bool {
        *self != Experiment::OptimizeProtocol
    }
}

/// Grids for the simulated sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepGrids {
    /// Strobe frequencies for `sweep_strobe`, Hz.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub strobe_frequencies: Vec<f64>,
    /// Duty cycles for `sweep_duty`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub duties: Vec<f64>,
    /// Polarizations for `psd`, `sweep_strobe` and `sweep_polarization`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polarizations: Vec<f64>,
}

/// Settings for `optimize_protocol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolGrid {
    /// Total measurement time, s.
    pub total_time: f64,
    pub optical_densities: Vec<f64>,
    /// Spin-exchange rates in units of the spin-destruction rate.
    pub exchange_ratios: Vec<f64>,
    /// Multi-start grid levels per dimension.
    #[serde(default = "two")]
    pub levels: usize,
}

fn two() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Trajectories per simulated point.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    pub ensemble: EnsembleParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strobe: Option<StrobeWaveform>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarimeter: Option<PolarimeterConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AreaAnalysis>,
    #[serde(default)]
    pub sweep: SweepGrids,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<ProtocolGrid>,
}

pub const DEFAULT_TRAJECTORIES: usize = 200;
pub const FULL_TRAJECTORIES: usize = 1000;

fn default_trajectories() -> usize {
    DEFAULT_TRAJECTORIES
}

/// The simulation sections, present for every experiment but
/// `optimize_protocol`.
pub struct Simulation<'a> {
    pub dynamics: DynamicsConfig,
    pub strobe: &'a StrobeWaveform,
    pub polarimeter: &'a PolarimeterConfig,
    pub analysis: &'a AreaAnalysis,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<(Self, String), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::parse(&text)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        Ok((cfg, text))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Every violated invariant, with its field path.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.ensemble.violations("ensemble");
        if self.trajectories == 0 {
            out.push(Violation::new("trajectories", "must be at least 1"));
        }
        if self.experiment.simulates() {
            for (name, present) in [
                ("dynamics", self.dynamics.is_some()),
                ("strobe", self.strobe.is_some()),
                ("polarimeter", self.polarimeter.is_some()),
                ("analysis", self.analysis.is_some()),
            ] {
                if !present {
                    out.push(Violation::new(
                        name,
                        format!("section required by experiment `{}`", self.experiment.as_str()),
                    ));
                }
            }
            if let Some(s) = &self.strobe {
                out.extend(s.violations("strobe"));
                if let Some(d) = &self.dynamics {
                    out.extend(d.violations("dynamics", s));
                    for (i, &f) in self.sweep.strobe_frequencies.iter().enumerate() {
                        let probe = StrobeWaveform {
                            frequency: f,
                            ..s.clone()
                        };
                        if !(f > 0.0) {
                            out.push(Violation::new(
                                format!("sweep.strobe_frequencies[{i}]"),
                                "must be positive",
                            ));
                        } else if d.dt > d.max_dt(&probe) * (1.0 + 1e-12) {
                            out.push(Violation::new(
                                format!("sweep.strobe_frequencies[{i}]"),
                                format!(
                                    "step-size rule dt <= 1/(40 max(f_L, f_s)) requires dt <= {:.6e} s at {f} Hz",
                                    d.max_dt(&probe)
                                ),
                            ));
                        }
                    }
                }
            }
            if let Some(p) = &self.polarimeter {
                out.extend(p.violations("polarimeter"));
            }
            if let (Some(a), Some(d)) = (&self.analysis, &self.dynamics) {
                if a.segment_len < 2 {
                    out.push(Violation::new("analysis.segment_len", "must be at least 2"));
                } else if a.segment_len > d.samples() {
                    out.push(Violation::new(
                        "analysis.segment_len",
                        format!("exceeds the record length of {} samples", d.samples()),
                    ));
                }
                let nyquist = d.sample_rate / 2.0;
                if !(a.band.lo >= 0.0 && a.band.lo < a.band.hi && a.band.hi <= nyquist) {
                    out.push(Violation::new(
                        "analysis.band",
                        format!("must be an interval inside [0, {nyquist}] Hz"),
                    ));
                } else if !a.band.contains(d.larmor_frequency) {
                    out.push(Violation::new("analysis.band", "must contain the Larmor frequency"));
                }
            }
        }
        for (i, &d) in self.sweep.duties.iter().enumerate() {
            if !(d > 0.0 && d <= 1.0) {
                out.push(Violation::new(format!("sweep.duties[{i}]"), "must lie in (0, 1]"));
            }
        }
        for (i, &p) in self.sweep.polarizations.iter().enumerate() {
            if !(0.0..1.0).contains(&p) {
                out.push(Violation::new(
                    format!("sweep.polarizations[{i}]"),
                    "must lie in [0, 1)",
                ));
            }
        }
        let need = |out: &mut Vec<Violation>, path: &str, empty: bool| {
            if empty {
                out.push(Violation::new(
                    path,
                    format!("must be non-empty for experiment `{}`", self.experiment.as_str()),
                ));
            }
        };
        match self.experiment {
            Experiment::SweepStrobe => {
                need(&mut out, "sweep.strobe_frequencies", self.sweep.strobe_frequencies.is_empty());
                need(&mut out, "sweep.polarizations", self.sweep.polarizations.is_empty());
            }
            Experiment::SweepDuty => need(&mut out, "sweep.duties", self.sweep.duties.is_empty()),
            Experiment::SweepPolarization | Experiment::Psd => {
                need(&mut out, "sweep.polarizations", self.sweep.polarizations.is_empty())
            }
            Experiment::OptimizeProtocol => match &self.protocol {
                None => out.push(Violation::new(
                    "protocol",
                    "section required by experiment `optimize_protocol`",
                )),
                Some(p) => {
                    if !(p.total_time > 0.0) {
                        out.push(Violation::new("protocol.total_time", "must be positive"));
                    }
                    need(&mut out, "protocol.optical_densities", p.optical_densities.is_empty());
                    need(&mut out, "protocol.exchange_ratios", p.exchange_ratios.is_empty());
                    for (i, &od) in p.optical_densities.iter().enumerate() {
                        if !(od > 0.0) {
                            out.push(Violation::new(
                                format!("protocol.optical_densities[{i}]"),
                                "must be positive",
                            ));
                        }
                    }
                    for (i, &r) in p.exchange_ratios.iter().enumerate() {
                        if !(r >= 0.0) {
                            out.push(Violation::new(
                                format!("protocol.exchange_ratios[{i}]"),
                                "must be non-negative",
                            ));
                        }
                    }
                    if p.levels == 0 {
                        out.push(Violation::new("protocol.levels", "must be at least 1"));
                    }
                }
            },
        }
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(v))
        }
    }

    /// Simulation sections with the run seed applied. Call after `validate`.
    pub fn simulation(&self) -> Option<Simulation<'_>> {
        let mut dynamics = self.dynamics.clone()?;
        dynamics.seed = self.seed;
        Some(Simulation {
            dynamics,
            strobe: self.strobe.as_ref()?,
            polarimeter: self.polarimeter.as_ref()?,
            analysis: self.analysis.as_ref()?,
        })
    }
}
