//! Stochastic time-domain model of the collective spin under a
//! stroboscopic Faraday probe.
//!
//! The whole-cell transverse spin `F` precesses at the Larmor frequency and
//! relaxes at the polarization-dependent rate `R_sd + (1 - P) R_se`, driven
//! by thermal noise whose strength pins its stationary variance to the
//! spin-temperature value `N_A ⟨F_x²⟩`. The probe sees only the atoms inside
//! the beam. Their spin is written as `M = q F + D`, where `q` is the beam
//! fraction and `D` is the in-beam deviation from the proportional share.
//! Atoms diffusing in and out of the beam randomize `D` at the extra rate
//! `1/τ_D`, so the measured spectrum is a narrow line (from `F`) on top of a
//! diffusion-broadened one (from `D`), while the total measured variance
//! `q N_A ⟨F_x²⟩` does not depend on `τ_D`.
//!
//! Light-shift back-action is a white stochastic field along the probe axis
//! that rotates the in-beam longitudinal spin into `F_y` while the gate is
//! open, with variance per unit time proportional to the instantaneous flux.
//!
//! Integration uses an exact rotation for precession followed by the exact
//! Ornstein-Uhlenbeck update for relaxation and thermal noise. Within a step
//! the gate is integrated analytically, so short strobe windows are
//! resolved exactly regardless of how they fall on the step grid.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::rng::{stream_rng, StreamDomain};
use crate::spin::{variance_per_atom, AtomSpec};

/// Atomic species and relaxation constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleParams {
    pub nuclear_spin: AtomSpec,
    /// Number of atoms `N_A` in the whole ensemble.
    pub atom_number: f64,
    /// Longitudinal polarization at pump turn-off, in `[0, 1)`.
    pub initial_polarization: f64,
    /// rad s⁻¹ T⁻¹
    pub gyromagnetic_ratio: f64,
    /// `R_sd`, s⁻¹
    pub spin_destruction_rate: f64,
    /// `R_se`, s⁻¹
    pub spin_exchange_rate: f64,
    /// Resonant optical density.
    pub optical_density: f64,
}

impl EnsembleParams {
    /// Potassium vapor with rates typical of a dense, buffer-gas cell.
    pub fn potassium() -> Self {
        Self {
            nuclear_spin: AtomSpec::POTASSIUM,
            atom_number: 1.0e6,
            initial_polarization: 0.0,
            gyromagnetic_ratio: TAU * 7.0e9,
            spin_destruction_rate: 1.0,
            spin_exchange_rate: 5.0e3,
            optical_density: 1.0e2,
        }
    }

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |ok: bool, field: &str, msg: &str| {
            if !ok {
                out.push(Violation::new(format!("{prefix}.{field}"), msg));
            }
        };
        check(self.atom_number >= 1.0, "atom_number", "must be at least 1");
        check(
            (0.0..1.0).contains(&self.initial_polarization),
            "initial_polarization",
            "must lie in [0, 1)",
        );
        check(
            self.gyromagnetic_ratio > 0.0 && self.gyromagnetic_ratio.is_finite(),
            "gyromagnetic_ratio",
            "must be positive",
        );
        check(
            self.spin_destruction_rate > 0.0 && self.spin_destruction_rate.is_finite(),
            "spin_destruction_rate",
            "must be positive",
        );
        check(
            self.spin_exchange_rate >= 0.0 && self.spin_exchange_rate.is_finite(),
            "spin_exchange_rate",
            "must be non-negative",
        );
        check(
            self.optical_density > 0.0 && self.optical_density.is_finite(),
            "optical_density",
            "must be positive",
        );
        out
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations("ensemble").into_iter().next() {
            Some(v) => Err(v.into()),
            None => Ok(()),
        }
    }
}

/// Transverse relaxation rate `R_sd + (1 - P_z) R_se`.
pub fn relaxation_rate(polarization: f64, params: &EnsembleParams) -> f64 {
    params.spin_destruction_rate + (1.0 - polarization) * params.spin_exchange_rate
}

/// Stroboscopic gating of the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrobeWaveform {
    /// Strobe repetition frequency, Hz.
    pub frequency: f64,
    /// Fraction of each period the probe is on; 1 is a continuous probe.
    pub duty: f64,
    /// Phase offset of the window start, rad.
    #[serde(default)]
    pub phase: f64,
    /// Average detected photon rate, s⁻¹. The on-window flux is `average_flux / duty`.
    pub average_flux: f64,
}

/// Gate state and instantaneous photon flux at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateSample {
    pub on: bool,
    pub flux: f64,
}

impl StrobeWaveform {
    pub fn continuous(average_flux: f64) -> Self {
        Self {
            frequency: 1.0,
            duty: 1.0,
            phase: 0.0,
            average_flux,
        }
    }

    fn cycles(&self, t: f64) -> f64 {
        self.frequency * t + self.phase / TAU
    }

    pub fn is_on(&self, t: f64) -> bool {
        if self.duty >= 1.0 {
            return true;
        }
        let u = self.cycles(t);
        u - u.floor() < self.duty
    }

    /// Cumulative on-time in units of strobe periods.
    fn cumulative_on(&self, u: f64) -> f64 {
        let whole = u.floor();
        whole * self.duty + (u - whole).min(self.duty)
    }

    /// Seconds of open gate within `[t0, t1]`.
    pub fn on_time(&self, t0: f64, t1: f64) -> f64 {
        if self.duty >= 1.0 {
            return t1 - t0;
        }
        let on = self.cumulative_on(self.cycles(t1)) - self.cumulative_on(self.cycles(t0));
        (on / self.frequency).clamp(0.0, t1 - t0)
    }

    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if !(self.frequency > 0.0 && self.frequency.is_finite()) {
            out.push(Violation::new(format!("{prefix}.frequency"), "must be positive"));
        }
        if !(self.duty > 0.0 && self.duty <= 1.0) {
            out.push(Violation::new(format!("{prefix}.duty"), "must lie in (0, 1]"));
        }
        if !self.phase.is_finite() {
            out.push(Violation::new(format!("{prefix}.phase"), "must be finite"));
        }
        if !(self.average_flux > 0.0 && self.average_flux.is_finite()) {
            out.push(Violation::new(format!("{prefix}.average_flux"), "must be positive"));
        }
        out
    }
}

pub fn strobe_gate(t: f64, strobe: &StrobeWaveform) -> GateSample {
    let on = strobe.is_on(t);
    GateSample {
        on,
        flux: if on { strobe.average_flux / strobe.duty } else { 0.0 },
    }
}

/// How the transverse components are initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialTransverse {
    /// Drawn from the stationary thermal distribution at the initial polarization.
    #[default]
    Stationary,
    /// All transverse components start at zero.
    Zero,
}

/// Integrator and probe-geometry settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Larmor frequency `f_L`, Hz.
    pub larmor_frequency: f64,
    /// Integrator step, s.
    pub dt: f64,
    /// Record length, s.
    pub duration: f64,
    /// Output sample rate, Hz. Must be an integer divisor of `1/dt`.
    pub sample_rate: f64,
    /// Diffusion correlation time `τ_D`, s. Absent means no diffusion.
    #[serde(default)]
    pub diffusion_time: Option<f64>,
    /// Fraction `q` of the atoms inside the probe beam.
    #[serde(default = "one")]
    pub beam_fraction: f64,
    /// Light-shift back-action amplitude in s^-1/2 (already multiplied by
    /// the gyromagnetic ratio), at unit normalized flux.
    #[serde(default)]
    pub light_shift_strength: f64,
    #[serde(default)]
    pub init: InitialTransverse,
    #[serde(skip)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl DynamicsConfig {
    /// Largest step allowed by the `dt <= 1/(40 max(f_L, f_s))` rule.
    pub fn max_dt(&self, strobe: &StrobeWaveform) -> f64 {
        1.0 / (40.0 * self.larmor_frequency.max(strobe.frequency))
    }

    /// Integrator steps per output sample.
    pub fn steps_per_sample(&self) -> usize {
        (1.0 / (self.sample_rate * self.dt)).round().max(1.0) as usize
    }

    pub fn samples(&self) -> usize {
        (self.duration * self.sample_rate + 1e-9).floor() as usize
    }

    pub fn violations(&self, prefix: &str, strobe: &StrobeWaveform) -> Vec<Violation> {
        let mut out = Vec::new();
        let path = |f: &str| format!("{prefix}.{f}");
        if !(self.larmor_frequency > 0.0 && self.larmor_frequency.is_finite()) {
            out.push(Violation::new(path("larmor_frequency"), "must be positive"));
        }
        if !(self.dt > 0.0) {
            out.push(Violation::new(path("dt"), "must be positive"));
        } else if self.dt > self.max_dt(strobe) * (1.0 + 1e-12) {
            out.push(Violation::new(
                path("dt"),
                format!(
                    "step-size rule dt <= 1/(40 max(f_L, f_s)) requires dt <= {:.6e} s, got {:.6e} s",
                    self.max_dt(strobe),
                    self.dt
                ),
            ));
        }
        if !(self.sample_rate >= 4.0 * self.larmor_frequency) {
            out.push(Violation::new(
                path("sample_rate"),
                format!("must be at least 4 f_L = {:.6e} Hz", 4.0 * self.larmor_frequency),
            ));
        } else if self.dt > 0.0 {
            let ratio = 1.0 / (self.sample_rate * self.dt);
            if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-6 * ratio {
                out.push(Violation::new(
                    path("sample_rate"),
                    "sample interval must be an integer multiple of dt",
                ));
            }
        }
        if !(self.duration > 0.0) || (self.sample_rate > 0.0 && self.samples() < 2) {
            out.push(Violation::new(path("duration"), "must cover at least two samples"));
        }
        if let Some(tau) = self.diffusion_time {
            if !(tau > 0.0) {
                out.push(Violation::new(path("diffusion_time"), "must be positive"));
            }
        }
        if !(self.beam_fraction > 0.0 && self.beam_fraction <= 1.0) {
            out.push(Violation::new(path("beam_fraction"), "must lie in (0, 1]"));
        }
        if !(self.light_shift_strength >= 0.0 && self.light_shift_strength.is_finite()) {
            out.push(Violation::new(path("light_shift_strength"), "must be non-negative"));
        }
        out
    }
}

/// Collective spin of one trajectory.
///
/// `fx, fy, fz` are whole-ensemble components; `dx, dy` are the transverse
/// deviation of the in-beam atoms from their proportional share, so the
/// measured transverse spin is `q (fx, fy) + (dx, dy)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrajectoryState {
    pub t: f64,
    pub fx: f64,
    pub fy: f64,
    pub fz: f64,
    pub dx: f64,
    pub dy: f64,
}

impl TrajectoryState {
    pub fn measured_x(&self, beam_fraction: f64) -> f64 {
        beam_fraction * self.fx + self.dx
    }

    pub fn measured_y(&self, beam_fraction: f64) -> f64 {
        beam_fraction * self.fy + self.dy
    }
}

/// Per-step update factors at a fixed longitudinal spin.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    decay: f64,
    noise: f64,
    decay_dev: f64,
    noise_dev: f64,
    /// Back-action amplitude per sqrt(second of open gate).
    kick: f64,
}

/// Validated, precomputed integrator for one parameter set.
#[derive(Debug, Clone)]
pub struct Stepper {
    params: EnsembleParams,
    cfg: DynamicsConfig,
    strobe: StrobeWaveform,
    cos: f64,
    sin: f64,
    fz_decay: f64,
    diffusion_rate: f64,
}

impl Stepper {
    pub fn new(
        params: &EnsembleParams,
        cfg: &DynamicsConfig,
        strobe: &StrobeWaveform,
    ) -> Result<Self> {
        let mut violations = params.violations("ensemble");
        violations.extend(cfg.violations("dynamics", strobe));
        violations.extend(strobe.violations("strobe"));
        if let Some(v) = violations.into_iter().next() {
            return Err(v.into());
        }
        let diffusion_rate = cfg.diffusion_time.map_or(0.0, |tau| 1.0 / tau);
        let rate0 = relaxation_rate(params.initial_polarization, params) + diffusion_rate;
        if cfg.duration * rate0 < 10.0 {
            log::warn!(
                "record of {:.3e} s spans only {:.1} atomic correlation times",
                cfg.duration,
                cfg.duration * rate0
            );
        }
        let angle = TAU * cfg.larmor_frequency * cfg.dt;
        Ok(Self {
            params: params.clone(),
            cfg: cfg.clone(),
            strobe: strobe.clone(),
            cos: angle.cos(),
            sin: angle.sin(),
            fz_decay: (-params.spin_destruction_rate * cfg.dt).exp(),
            diffusion_rate,
        })
    }

    pub fn params(&self) -> &EnsembleParams {
        &self.params
    }

    pub fn config(&self) -> &DynamicsConfig {
        &self.cfg
    }

    pub fn strobe(&self) -> &StrobeWaveform {
        &self.strobe
    }

    /// Longitudinal polarization `2 F_z / N_A`, clamped to the physical range.
    pub fn polarization(&self, fz: f64) -> f64 {
        (2.0 * fz / self.params.atom_number).clamp(-1.0, 1.0)
    }

    /// Stationary variance of the whole-ensemble `F_x` at longitudinal spin `fz`.
    pub fn equilibrium_variance(&self, fz: f64) -> f64 {
        let p = self.polarization(fz);
        self.params.atom_number
            * variance_per_atom(self.params.nuclear_spin, p).expect("polarization is clamped")
    }

    fn coefficients(&self, fz: f64) -> Coefficients {
        let dt = self.cfg.dt;
        let q = self.cfg.beam_fraction;
        let rate = relaxation_rate(self.polarization(fz), &self.params);
        let rate_dev = rate + self.diffusion_rate;
        let var = self.equilibrium_variance(fz);
        let var_dev = q * (1.0 - q) * var;
        Coefficients {
            decay: (-rate * dt).exp(),
            noise: (var * -(-2.0 * rate * dt).exp_m1()).sqrt(),
            decay_dev: (-rate_dev * dt).exp(),
            noise_dev: (var_dev * -(-2.0 * rate_dev * dt).exp_m1()).sqrt(),
            kick: self.cfg.light_shift_strength * q * fz / self.strobe.duty.sqrt(),
        }
    }

    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> TrajectoryState {
        let fz = self.params.initial_polarization * self.params.atom_number / 2.0;
        let mut state = TrajectoryState {
            fz,
            ..Default::default()
        };
        if self.cfg.init == InitialTransverse::Stationary {
            let q = self.cfg.beam_fraction;
            let sd = self.equilibrium_variance(fz).sqrt();
            let sd_dev = (q * (1.0 - q)).sqrt() * sd;
            state.fx = sd * rng.sample::<f64, _>(StandardNormal);
            state.fy = sd * rng.sample::<f64, _>(StandardNormal);
            if sd_dev > 0.0 {
                state.dx = sd_dev * rng.sample::<f64, _>(StandardNormal);
                state.dy = sd_dev * rng.sample::<f64, _>(StandardNormal);
            }
        }
        state
    }

    fn advance<R: Rng + ?Sized>(
        &self,
        s: &mut TrajectoryState,
        c: &Coefficients,
        on_time: f64,
        kick_normal: f64,
        step_index: u64,
        rng: &mut R,
    ) {
        let q = self.cfg.beam_fraction;
        if on_time > 0.0 && c.kick != 0.0 {
            let kick = c.kick * on_time.sqrt() * kick_normal;
            s.fy += kick;
            s.dy += (1.0 - q) * kick;
        }
        let (cos, sin) = (self.cos, self.sin);
        let (fx, fy) = (s.fx * cos + s.fy * sin, s.fy * cos - s.fx * sin);
        let (dx, dy) = (s.dx * cos + s.dy * sin, s.dy * cos - s.dx * sin);
        s.fx = c.decay * fx + c.noise * rng.sample::<f64, _>(StandardNormal);
        s.fy = c.decay * fy + c.noise * rng.sample::<f64, _>(StandardNormal);
        if c.noise_dev > 0.0 {
            s.dx = c.decay_dev * dx + c.noise_dev * rng.sample::<f64, _>(StandardNormal);
            s.dy = c.decay_dev * dy + c.noise_dev * rng.sample::<f64, _>(StandardNormal);
        } else {
            s.dx = c.decay_dev * dx;
            s.dy = c.decay_dev * dy;
        }
        s.fz *= self.fz_decay;
        s.t = (step_index + 1) as f64 * self.cfg.dt;
    }

    /// Advance one integrator step from `state`.
    pub fn step<R: Rng + ?Sized>(&self, state: &TrajectoryState, rng: &mut R) -> TrajectoryState {
        let mut next = *state;
        let c = self.coefficients(state.fz);
        let on = self.strobe.on_time(state.t, state.t + self.cfg.dt);
        let index = (state.t / self.cfg.dt).round() as u64;
        let xi = if on > 0.0 && c.kick != 0.0 {
            rng.sample(StandardNormal)
        } else {
            0.0
        };
        self.advance(&mut next, &c, on, xi, index, rng);
        next
    }

    /// Simulate one trajectory on the stream numbered `index`.
    pub fn trajectory(&self, index: u64) -> Record {
        let mut rng = stream_rng(self.cfg.seed, StreamDomain::Dynamics, index);
        // kicks on their own stream, so the thermal noise is shared between
        // runs that differ only in back-action or gating
        let mut kick_rng = stream_rng(self.cfg.seed, StreamDomain::BackAction, index);
        let mut state = self.initial_state(&mut rng);
        let n = self.cfg.samples();
        let sub = self.cfg.steps_per_sample();
        let q = self.cfg.beam_fraction;
        let dt = self.cfg.dt;
        let mut rec = Record::with_capacity(self.cfg.sample_rate, n);
        let mut k: u64 = 0;
        for _ in 0..n {
            rec.fx.push(state.fx);
            rec.fy.push(state.fy);
            rec.fz.push(state.fz);
            let c = self.coefficients(state.fz);
            let (mut on_sum, mut on_m, mut m_sum) = (0.0, 0.0, 0.0);
            for _ in 0..sub {
                let t = k as f64 * dt;
                let on = self.strobe.on_time(t, t + dt);
                let m = state.measured_x(q);
                on_sum += on;
                on_m += on * m;
                m_sum += m;
                let xi = if on > 0.0 && c.kick != 0.0 {
                    kick_rng.sample(StandardNormal)
                } else {
                    0.0
                };
                self.advance(&mut state, &c, on, xi, k, &mut rng);
                k += 1;
            }
            rec.mx.push(if on_sum > 0.0 {
                on_m / on_sum
            } else {
                m_sum / sub as f64
            });
            rec.gate.push((on_sum / (sub as f64 * dt)).clamp(0.0, 1.0));
        }
        rec
    }
}

/// Advance one step with freshly validated settings; prefer [`Stepper`]
/// inside loops.
pub fn step<R: Rng + ?Sized>(
    state: &TrajectoryState,
    cfg: &DynamicsConfig,
    params: &EnsembleParams,
    strobe: &StrobeWaveform,
    rng: &mut R,
) -> Result<TrajectoryState> {
    Ok(Stepper::new(params, cfg, strobe)?.step(state, rng))
}

/// Sampled output of one trajectory.
///
/// `fx, fy, fz` are point samples at the start of each sample interval.
/// `mx` is the measured (in-beam) `x` spin averaged over the open-gate part
/// of the interval, or over the whole interval when the gate stayed shut.
/// `gate` is the open fraction of each interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub sample_rate: f64,
    pub fx: Vec<f64>,
    pub fy: Vec<f64>,
    pub fz: Vec<f64>,
    pub mx: Vec<f64>,
    pub gate: Vec<f64>,
}

impl Record {
    fn with_capacity(sample_rate: f64, n: usize) -> Self {
        Self {
            sample_rate,
            fx: Vec::with_capacity(n),
            fy: Vec::with_capacity(n),
            fz: Vec::with_capacity(n),
            mx: Vec::with_capacity(n),
            gate: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.fx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fx.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate
    }
}

/// Simulate `n_traj` independent trajectories. Output is ordered by
/// trajectory index and identical for any thread count.
pub fn simulate_record(
    cfg: &DynamicsConfig,
    params: &EnsembleParams,
    strobe: &StrobeWaveform,
    n_traj: usize,
) -> Result<Vec<Record>> {
    if n_traj == 0 {
        return Err(Error::config("trajectories", "must be at least 1"));
    }
    let stepper = Stepper::new(params, cfg, strobe)?;
    Ok((0..n_traj as u64)
        .into_par_iter()
        .map(|i| stepper.trajectory(i))
        .collect())
}
