//! Two-pulse QND magnetometry with spin-exchange relaxation.
//!
//! A spin-1/2 ensemble is pumped to polarization `P_init` along `z`, probed
//! by a first pulse of strength `ε₁`, left to precess for `t_m`, and probed
//! again with strength `ε₂`. The field estimate uses the second measurement
//! conditioned on the first, `S_x(t_m) - S_x(0) cov/var`, and the cycle
//! repeats every `t_m`. The single-pulse scheme drops the first pulse.
//!
//! Model conventions:
//! * a pulse of strength `ε` leaves a fraction `e^{-ε}` of atoms unscattered;
//!   only those keep transverse coherence and longitudinal polarization;
//! * the transverse relaxation rate is `R_sd + (1 - P_z(t)) R_se` with
//!   `P_z(t) = P_z0 e^{-R_sd t}`;
//! * the field signal decays with the same factors as the covariance.
//!
//! Variances are reported relative to `δB²_SQL = 2 R_sd / (N_A t γ²)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::EnsembleParams;
use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::rng::{stream_rng, StreamDomain};

/// Returned in place of a variance whose signal slope vanishes.
pub const DEGENERATE_VARIANCE: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsePlan {
    /// First-pulse strength (photons scattered per atom). Zero means no
    /// first pulse, which is the single-pulse scheme.
    pub eps1: f64,
    pub eps2: f64,
    /// Time between pulses, s.
    pub t_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    OnePulse,
    TwoPulse,
}

impl Scheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            Scheme::OnePulse => "one_pulse",
            Scheme::TwoPulse => "two_pulse",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one_pulse" => Ok(Scheme::OnePulse),
            "two_pulse" => Ok(Scheme::TwoPulse),
            other => Err(Error::Domain(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub field_variance_rel_sql: f64,
    pub plan: PulsePlan,
    pub scheme: Scheme,
}

/// Transverse relaxation with spin-exchange suppressed by polarization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationModel {
    pub spin_destruction_rate: f64,
    pub spin_exchange_rate: f64,
    /// Longitudinal polarization right after the first pulse.
    pub polarization: f64,
}

impl RelaxationModel {
    pub fn new(params: &EnsembleParams, polarization: f64) -> Self {
        Self {
            spin_destruction_rate: params.spin_destruction_rate,
            spin_exchange_rate: params.spin_exchange_rate,
            polarization,
        }
    }

    /// Instantaneous rate `R(t)`.
    pub fn rate(&self, t: f64) -> f64 {
        let pz = self.polarization * (-self.spin_destruction_rate * t).exp();
        self.spin_destruction_rate + (1.0 - pz) * self.spin_exchange_rate
    }
}

/// `(1 - (1 - e^{-x})/x)`, accurate for small `x`.
fn one_minus_relative_loss(x: f64) -> f64 {
    if x < 1e-2 {
        x / 2.0 - x * x / 6.0 + x * x * x / 24.0 - x.powi(4) / 120.0
    } else {
        1.0 + (-x).exp_m1() / x
    }
}

/// `var[S_x] = (1 + 1/(ε OD)) N_A / 4`.
pub fn measurement_variance(eps: f64, optical_density: f64, atom_number: f64) -> Result<f64> {
    if !(eps > 0.0) || !(optical_density > 0.0) {
        return Err(Error::Domain(format!(
            "pulse strength and optical density must be positive (eps = {eps}, OD = {optical_density})"
        )));
    }
    Ok((1.0 + 1.0 / (eps * optical_density)) * atom_number / 4.0)
}

/// `∫₀^{t_m} R(t) dt = R_sd t_m + R_se [t_m - P_z0 (1 - e^{-R_sd t_m}) / R_sd]`.
pub fn integrated_rate(t_m: f64, model: &RelaxationModel) -> f64 {
    if t_m <= 0.0 {
        return 0.0;
    }
    let r_sd = model.spin_destruction_rate;
    let x = r_sd * t_m;
    // t_m - P (1 - e^{-x})/R_sd = t_m [(1 - P) + P (1 - (1 - e^{-x})/x)]
    let exchange_time = t_m
        * ((1.0 - model.polarization) + model.polarization * one_minus_relative_loss(x));
    x + model.spin_exchange_rate * exchange_time
}

/// `cov[S_x(0), S_x(t_m)] = (N_A/4) e^{-ε₁} exp[-∫ R]`.
pub fn covariance(t_m: f64, atom_number: f64, model: &RelaxationModel, eps1: f64) -> f64 {
    atom_number / 4.0 * (-eps1 - integrated_rate(t_m, model)).exp()
}

/// `δB²_SQL = 2 R_sd / (N_A t γ²)`, T².
pub fn sql_variance(params: &EnsembleParams, total_time: f64) -> Result<f64> {
    if !(total_time > 0.0) {
        return Err(Error::Domain(format!("total time must be positive, got {total_time}")));
    }
    Ok(2.0 * params.spin_destruction_rate
        / (params.atom_number * total_time * params.gyromagnetic_ratio.powi(2)))
}

/// Everything the protocol model needs about one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Magnetometer {
    pub params: EnsembleParams,
    pub total_time: f64,
    /// Polarization before the first pulse; the pump is assumed instantaneous.
    pub initial_polarization: f64,
}

impl Magnetometer {
    pub fn new(params: &EnsembleParams, total_time: f64) -> Self {
        Self {
            params: params.clone(),
            total_time,
            initial_polarization: 1.0,
        }
    }

    fn relative(&self, conditional_var: f64, slope: f64, t_m: f64) -> f64 {
        let sql = match sql_variance(&self.params, self.total_time) {
            Ok(v) => v,
            Err(_) => return DEGENERATE_VARIANCE,
        };
        // t_m repetitions of length t_m fill the total time
        let var = conditional_var / (slope * slope) * t_m / self.total_time;
        let rel = var / sql;
        if rel.is_finite() && slope != 0.0 {
            rel
        } else {
            DEGENERATE_VARIANCE
        }
    }

    fn slope(&self, t_m: f64, decay: f64) -> f64 {
        self.params.gyromagnetic_ratio
            * t_m
            * self.params.atom_number
            / 2.0
            * self.initial_polarization
            * decay
    }

    /// Field variance of the conditioned two-pulse estimate, relative to SQL.
    /// A first pulse of zero strength carries no information, so `eps1 = 0`
    /// gives the single-pulse value.
    pub fn two_pulse(&self, plan: &PulsePlan) -> f64 {
        if plan.eps1 == 0.0 {
            return self.one_pulse(plan.t_m, plan.eps2);
        }
        let p = &self.params;
        let (Ok(var1), Ok(var2)) = (
            measurement_variance(plan.eps1, p.optical_density, p.atom_number),
            measurement_variance(plan.eps2, p.optical_density, p.atom_number),
        ) else {
            return DEGENERATE_VARIANCE;
        };
        if !(plan.t_m > 0.0) {
            return DEGENERATE_VARIANCE;
        }
        let model = RelaxationModel::new(p, self.initial_polarization * (-plan.eps1).exp());
        let gamma = integrated_rate(plan.t_m, &model);
        let cov = covariance(plan.t_m, p.atom_number, &model, plan.eps1);
        let conditional = var2 - cov * cov / var1;
        let slope = self.slope(plan.t_m, (-gamma - plan.eps1).exp());
        self.relative(conditional, slope, plan.t_m)
    }

    /// Field variance of a single pulse after `t_m`, relative to SQL.
    pub fn one_pulse(&self, t_m: f64, eps2: f64) -> f64 {
        let p = &self.params;
        // spin-1/2 atomic variance stays N/4: thermalized part plus the
        // surviving projection noise
        let Ok(var) = measurement_variance(eps2, p.optical_density, p.atom_number) else {
            return DEGENERATE_VARIANCE;
        };
        if !(t_m > 0.0) {
            return DEGENERATE_VARIANCE;
        }
        let model = RelaxationModel::new(p, self.initial_polarization);
        let gamma = integrated_rate(t_m, &model);
        let slope = self.slope(t_m, (-gamma).exp());
        self.relative(var, slope, t_m)
    }
}

pub fn two_pulse_field_variance(plan: &PulsePlan, params: &EnsembleParams, total_time: f64) -> f64 {
    Magnetometer::new(params, total_time).two_pulse(plan)
}

pub fn one_pulse_field_variance(
    t_m: f64,
    eps2: f64,
    params: &EnsembleParams,
    total_time: f64,
) -> f64 {
    Magnetometer::new(params, total_time).one_pulse(t_m, eps2)
}

/// Multi-start settings for [`optimize_protocol`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerSettings {
    /// Grid levels per dimension; the two-pulse search starts from
    /// `levels³` points.
    pub levels: usize,
    pub seed: u64,
    /// Start grid for pulse strengths.
    pub eps_span: (f64, f64),
    /// Start grid for `R_sd t_m`.
    pub time_span: (f64, f64),
    /// Hard limits on pulse strengths and `R_sd t_m`.
    pub eps_bounds: (f64, f64),
    pub time_bounds: (f64, f64),
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            levels: 2,
            seed: 0,
            eps_span: (1e-3, 10.0),
            time_span: (1e-2, 10.0),
            eps_bounds: (1e-6, 1e2),
            time_bounds: (1e-6, 1e2),
        }
    }
}

fn log_grid(span: (f64, f64), levels: usize) -> Vec<f64> {
    let (a, b) = (span.0.ln(), span.1.ln());
    if levels <= 1 {
        return vec![0.5 * (a + b)];
    }
    (0..levels)
        .map(|i| a + (b - a) * i as f64 / (levels - 1) as f64)
        .collect()
}

/// Minimize the field variance over the free pulse parameters of `scheme`.
/// The two-pulse search includes its `eps1 = 0` edge, so it never does
/// worse than the single-pulse optimum.
pub fn optimize_protocol(
    params: &EnsembleParams,
    total_time: f64,
    scheme: Scheme,
    settings: &OptimizerSettings,
) -> Result<ProtocolResult> {
    params.validate()?;
    if !(total_time > 0.0) {
        return Err(Error::Domain(format!("total time must be positive, got {total_time}")));
    }
    let mag = Magnetometer::new(params, total_time);
    let r_sd = params.spin_destruction_rate;
    let eps_b = (settings.eps_bounds.0.ln(), settings.eps_bounds.1.ln());
    let time_b = (settings.time_bounds.0.ln(), settings.time_bounds.1.ln());
    // log-parameters: [ln eps1,] ln eps2, ln(R_sd t_m)
    let bounds: Vec<(f64, f64)> = match scheme {
        Scheme::TwoPulse => vec![eps_b, eps_b, time_b],
        Scheme::OnePulse => vec![eps_b, time_b],
    };
    let decode = |y: &[f64]| -> (PulsePlan, f64) {
        let mut penalty = 0.0;
        let x: Vec<f64> = y
            .iter()
            .zip(&bounds)
            .map(|(&v, &(lo, hi))| {
                let c = v.clamp(lo, hi);
                penalty += (v - c) * (v - c);
                c.exp()
            })
            .collect();
        let plan = match scheme {
            Scheme::TwoPulse => PulsePlan {
                eps1: x[0],
                eps2: x[1],
                t_m: x[2] / r_sd,
            },
            Scheme::OnePulse => PulsePlan {
                eps1: 0.0,
                eps2: x[0],
                t_m: x[1] / r_sd,
            },
        };
        (plan, penalty)
    };
    let evaluate = |plan: &PulsePlan| match scheme {
        Scheme::TwoPulse => mag.two_pulse(plan),
        Scheme::OnePulse => mag.one_pulse(plan.t_m, plan.eps2),
    };
    let objective = |y: &[f64]| {
        let (plan, penalty) = decode(y);
        evaluate(&plan).ln() + penalty
    };

    let eps_grid = log_grid(settings.eps_span, settings.levels);
    let time_grid = log_grid(settings.time_span, settings.levels);
    let mut starts: Vec<Vec<f64>> = match scheme {
        Scheme::TwoPulse => eps_grid
            .iter()
            .flat_map(|&a| {
                let time_grid = &time_grid;
                eps_grid
                    .iter()
                    .flat_map(move |&b| time_grid.iter().map(move |&c| vec![a, b, c]))
            })
            .collect(),
        Scheme::OnePulse => eps_grid
            .iter()
            .flat_map(|&a| time_grid.iter().map(move |&c| vec![a, c]))
            .collect(),
    };
    let mut rng = stream_rng(settings.seed, StreamDomain::Optimizer, 0);
    for s in &mut starts {
        for v in s.iter_mut() {
            *v += rand::Rng::gen_range(&mut rng, -0.25..0.25);
        }
    }

    let opts = NelderMeadOptions::default();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut diagnostics = Vec::new();
    for s in &starts {
        let m = nelder_mead(objective, s, &[1.0; 3][..s.len()], &opts);
        diagnostics.push(format!("start {:?} -> {:e}", s, m.value));
        if m.value.is_finite() && best.as_ref().is_none_or(|b| m.value < b.0) {
            best = Some((m.value, m.point));
        }
    }
    let Some((_, y)) = best else {
        return Err(Error::Optimization(format!(
            "{} scheme: no start produced a finite variance; {}",
            scheme.as_str(),
            diagnostics.join("; ")
        )));
    };
    let (mut plan, _) = decode(&y);
    let mut value = evaluate(&plan);
    if scheme == Scheme::TwoPulse {
        // the single-pulse optimum is the eps1 -> 0 edge of the two-pulse domain
        let edge = optimize_protocol(params, total_time, Scheme::OnePulse, settings)?;
        if edge.field_variance_rel_sql <= value {
            plan = PulsePlan {
                eps1: 0.0,
                ..edge.plan
            };
            value = edge.field_variance_rel_sql;
        }
    }
    if !(value.is_finite() && value < DEGENERATE_VARIANCE) {
        return Err(Error::Optimization(format!(
            "{} scheme converged to a degenerate plan {plan:?}",
            scheme.as_str()
        )));
    }
    Ok(ProtocolResult {
        field_variance_rel_sql: value,
        plan,
        scheme,
    })
}

/// Both schemes optimized at one `(OD, R_se/R_sd)` grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub optical_density: f64,
    pub exchange_ratio: f64,
    pub one_pulse: ProtocolResult,
    pub two_pulse: ProtocolResult,
}

/// Optimize both schemes over an optical-density grid for each ratio
/// `R_se / R_sd`. Rows are ordered ratio-major, then by OD as given.
pub fn sweep_od(
    template: &EnsembleParams,
    optical_densities: &[f64],
    exchange_ratios: &[f64],
    total_time: f64,
    settings: &OptimizerSettings,
) -> Result<Vec<SweepPoint>> {
    if optical_densities.is_empty() || exchange_ratios.is_empty() {
        return Err(Error::Domain("sweep grids must be non-empty".into()));
    }
    let grid: Vec<(f64, f64)> = exchange_ratios
        .iter()
        .flat_map(|&r| optical_densities.iter().map(move |&od| (od, r)))
        .collect();
    grid.par_iter()
        .map(|&(od, ratio)| {
            let mut params = template.clone();
            params.optical_density = od;
            params.spin_exchange_rate = ratio * params.spin_destruction_rate;
            Ok(SweepPoint {
                optical_density: od,
                exchange_ratio: ratio,
                one_pulse: optimize_protocol(&params, total_time, Scheme::OnePulse, settings)?,
                two_pulse: optimize_protocol(&params, total_time, Scheme::TwoPulse, settings)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::E;

    fn params(r_se: f64, od: f64) -> EnsembleParams {
        EnsembleParams {
            spin_destruction_rate: 1.0,
            spin_exchange_rate: r_se,
            optical_density: od,
            ..EnsembleParams::potassium()
        }
    }

    fn model(r_sd: f64, r_se: f64, pz: f64) -> RelaxationModel {
        RelaxationModel {
            spin_destruction_rate: r_sd,
            spin_exchange_rate: r_se,
            polarization: pz,
        }
    }

    #[test]
    fn measurement_variance_examples() {
        assert_eq!(measurement_variance(0.01, 100.0, 4.0).unwrap(), 2.0);
        assert_eq!(measurement_variance(1.0, 1.0, 8.0).unwrap(), 4.0);
        assert_relative_eq!(measurement_variance(1e6, 1e6, 4.0).unwrap(), 1.0, epsilon = 1e-11);
        assert!(measurement_variance(0.0, 1.0, 1.0).is_err());
        assert!(measurement_variance(1.0, -1.0, 1.0).is_err());
    }

    fn quadrature(m: &RelaxationModel, t: f64) -> f64 {
        // composite Simpson
        let n = 2000;
        let h = t / n as f64;
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * m.rate(i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0
    }

    #[test]
    fn integrated_rate_matches_quadrature() {
        for &(r_sd, r_se, pz, t) in &[
            (10.0, 1000.0, 1.0, 0.003),
            (10.0, 1000.0, 0.4, 0.2),
            (2.0, 0.0, 0.9, 1.0),
            (1.0, 100.0, 1.0, 1e-4),
        ] {
            let m = model(r_sd, r_se, pz);
            assert_relative_eq!(integrated_rate(t, &m), quadrature(&m, t), max_relative = 1e-10);
        }
    }

    #[test]
    fn integrated_rate_limits() {
        let m = model(10.0, 1000.0, 0.0);
        assert_eq!(integrated_rate(0.0, &m), 0.0);
        assert_relative_eq!(integrated_rate(0.01, &m), 10.1, max_relative = 1e-12);
        // early-time suppression of spin exchange at full polarization
        let m = model(10.0, 1000.0, 1.0);
        let t = 1e-5;
        let series = 10.0 * t + 1000.0 * 10.0 * t * t / 2.0;
        assert_relative_eq!(integrated_rate(t, &m), series, max_relative = 1e-4);
    }

    #[test]
    fn covariance_limits() {
        let m = model(1.0, 0.0, 1.0);
        assert_relative_eq!(covariance(1e-12, 8.0, &m, 0.0), 2.0, max_relative = 1e-9);
        assert_relative_eq!(
            covariance(0.7, 8.0, &m, 0.0),
            2.0 * (-0.7f64).exp(),
            max_relative = 1e-12
        );
        assert_relative_eq!(covariance(1e-12, 8.0, &m, 1.0), 2.0 / E, max_relative = 1e-9);
    }

    #[test]
    fn sql_scaling() {
        let p = params(0.0, 1e4);
        let base = sql_variance(&p, 1.0).unwrap();
        let mut doubled = p.clone();
        doubled.atom_number *= 2.0;
        assert_relative_eq!(sql_variance(&doubled, 1.0).unwrap(), base / 2.0);
        assert_relative_eq!(sql_variance(&p, 2.0).unwrap(), base / 2.0);
        let big = EnsembleParams {
            atom_number: 1e10,
            gyromagnetic_ratio: std::f64::consts::TAU * 7e9,
            ..p
        };
        let v = sql_variance(&big, 1.0).unwrap();
        assert!(v.is_finite() && v > 0.0);
        assert!(sql_variance(&big, 0.0).is_err());
    }

    #[test]
    fn one_pulse_analytic_optimum() {
        let p = params(0.0, 1e12);
        // relative variance is e^{2x}/(2x); minimum e at x = 1/2
        assert_relative_eq!(one_pulse_field_variance(0.5, 1e3, &p, 1.0), E, max_relative = 1e-9);
        for &x in &[0.1, 0.3, 0.7, 2.0] {
            assert!(one_pulse_field_variance(x, 1e3, &p, 1.0) > E);
        }
    }

    #[test]
    fn doubling_destruction_rate_keeps_relative_curve() {
        for &od in &[10.0, 1e3] {
            for &eps in &[0.01, 1.0] {
                for &x in &[0.05, 0.5, 3.0] {
                    let p1 = params(0.0, od);
                    let mut p2 = p1.clone();
                    p2.spin_destruction_rate = 2.0;
                    let a = one_pulse_field_variance(x, eps, &p1, 1.0);
                    let b = one_pulse_field_variance(x / 2.0, eps, &p2, 1.0);
                    assert_relative_eq!(a, b, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn weak_second_pulse_diverges() {
        let p = params(0.0, 1e4);
        let plan = |eps2| PulsePlan {
            eps1: 0.01,
            eps2,
            t_m: 0.1,
        };
        let a = two_pulse_field_variance(&plan(1e-3), &p, 1.0);
        let b = two_pulse_field_variance(&plan(1e-6), &p, 1.0);
        let c = two_pulse_field_variance(&plan(1e-9), &p, 1.0);
        assert!(b > 100.0 * a && c > 100.0 * b);
        assert_eq!(two_pulse_field_variance(&plan(0.0), &p, 1.0), DEGENERATE_VARIANCE);
        let zero_time = PulsePlan { t_m: 0.0, ..plan(1.0) };
        assert_eq!(two_pulse_field_variance(&zero_time, &p, 1.0), DEGENERATE_VARIANCE);
    }

    #[test]
    fn correlation_coefficient_is_bounded() {
        for &od in &[1.0, 1e2, 1e5] {
            for &r_se in &[0.0, 10.0, 100.0] {
                for &eps in &[1e-4f64, 0.1, 5.0] {
                    for &t in &[1e-4, 0.1, 3.0] {
                        let p = params(r_se, od);
                        let m = RelaxationModel::new(&p, (-eps).exp());
                        let c = covariance(t, p.atom_number, &m, eps);
                        let v1 = measurement_variance(eps, od, p.atom_number).unwrap();
                        let v2 = measurement_variance(1.0, od, p.atom_number).unwrap();
                        let rho = c / (v1 * v2).sqrt();
                        assert!((0.0..=1.0).contains(&rho), "{rho}");
                    }
                }
            }
        }
    }

    #[test]
    fn optimizer_is_reproducible_and_converged() {
        let p = params(10.0, 1e3);
        let s = OptimizerSettings::default();
        let a = optimize_protocol(&p, 1.0, Scheme::TwoPulse, &s).unwrap();
        let b = optimize_protocol(&p, 1.0, Scheme::TwoPulse, &s).unwrap();
        assert_eq!(a, b);
        let dense = OptimizerSettings { levels: 4, ..s.clone() };
        let c = optimize_protocol(&p, 1.0, Scheme::TwoPulse, &dense).unwrap();
        assert_relative_eq!(a.field_variance_rel_sql, c.field_variance_rel_sql, max_relative = 5e-3);
        let one = optimize_protocol(&p, 1.0, Scheme::OnePulse, &s).unwrap();
        assert!(a.field_variance_rel_sql <= one.field_variance_rel_sql);
    }

    #[test]
    fn one_pulse_optimum_location() {
        let p = params(0.0, 1e4);
        let r = optimize_protocol(&p, 1.0, Scheme::OnePulse, &OptimizerSettings::default()).unwrap();
        assert_relative_eq!(r.plan.t_m, 0.5, max_relative = 0.02);
        assert_relative_eq!(r.field_variance_rel_sql, E, max_relative = 0.01);
        let mut slow = p.clone();
        slow.spin_exchange_rate = 5.0;
        let worse = optimize_protocol(&slow, 1.0, Scheme::OnePulse, &OptimizerSettings::default())
            .unwrap();
        assert!(worse.field_variance_rel_sql > E);
    }

    #[test]
    fn sweep_orders_rows() {
        let rows = sweep_od(&params(0.0, 1.0), &[10.0, 100.0], &[0.0, 10.0], 1.0, &OptimizerSettings::default())
            .unwrap();
        let keys: Vec<(f64, f64)> = rows.iter().map(|r| (r.exchange_ratio, r.optical_density)).collect();
        assert_eq!(keys, vec![(0.0, 10.0), (0.0, 100.0), (10.0, 10.0), (10.0, 100.0)]);
        assert!(sweep_od(&params(0.0, 1.0), &[], &[0.0], 1.0, &OptimizerSettings::default()).is_err());
    }
}
