//! Trajectories to noise area: simulate, detect, average the PSD, subtract
//! the shot-noise floor and integrate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DynamicsConfig, EnsembleParams, Stepper, StrobeWaveform};
use crate::error::{Error, Result};
use crate::polarimeter::{
    atomic_noise_area, auto_exclusion_band, estimate_psn_floor_excluding, strobe_images,
    synthesize_signal, Band, NoiseArea, PolarimeterConfig, PsdEstimate, WelchAccumulator, Window,
};
use crate::rng::{stream_rng, StreamDomain};

/// Spectral-analysis settings for a noise-area measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AreaAnalysis {
    /// Integration band, Hz.
    pub band: Band,
    pub segment_len: usize,
    #[serde(default)]
    pub window: Window,
    /// Also exclude the strobe images of the atomic line when estimating
    /// the floor.
    #[serde(default = "yes")]
    pub exclude_images: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct AreaMeasurement {
    pub psd: PsdEstimate,
    pub area: NoiseArea,
    /// Bands left out of the floor estimate.
    pub exclusions: Vec<Band>,
}

/// Run `n_traj` trajectories through the polarimeter and return the averaged
/// PSD with its atomic noise area.
pub fn measure_noise_area(
    params: &EnsembleParams,
    cfg: &DynamicsConfig,
    strobe: &StrobeWaveform,
    polarimeter: &PolarimeterConfig,
    analysis: &AreaAnalysis,
    n_traj: usize,
) -> Result<AreaMeasurement> {
    let psd = averaged_psd(params, cfg, strobe, polarimeter, analysis, n_traj)?;
    analyze(&psd, cfg.larmor_frequency, strobe, analysis)
}

/// Averaged PSD of the detected rotation signal over `n_traj` trajectories.
pub fn averaged_psd(
    params: &EnsembleParams,
    cfg: &DynamicsConfig,
    strobe: &StrobeWaveform,
    polarimeter: &PolarimeterConfig,
    analysis: &AreaAnalysis,
    n_traj: usize,
) -> Result<PsdEstimate> {
    if n_traj == 0 {
        return Err(Error::config("trajectories", "must be at least 1"));
    }
    if let Some(v) = polarimeter.violations("polarimeter").into_iter().next() {
        return Err(v.into());
    }
    let stepper = Stepper::new(params, cfg, strobe)?;
    if analysis.segment_len > cfg.samples() {
        return Err(Error::config(
            "analysis.segment_len",
            format!(
                "{} exceeds the record length of {} samples",
                analysis.segment_len,
                cfg.samples()
            ),
        ));
    }
    let template = WelchAccumulator::new(analysis.segment_len, cfg.sample_rate, analysis.window)?;
    let parts: Vec<Result<WelchAccumulator>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            let rec = stepper.trajectory(i);
            let mut rng = stream_rng(cfg.seed, StreamDomain::ShotNoise, i);
            let phi = synthesize_signal(
                &rec.mx,
                &rec.gate,
                strobe.duty,
                cfg.sample_rate,
                polarimeter,
                &mut rng,
            )?;
            let mut acc = template.clone();
            acc.add(&phi)?;
            Ok(acc)
        })
        .collect();
    let mut total = template;
    for part in parts {
        total.merge(&part?);
    }
    Ok(total.finish())
}

/// Floor and area of an already averaged PSD.
pub fn analyze(
    psd: &PsdEstimate,
    larmor_frequency: f64,
    strobe: &StrobeWaveform,
    analysis: &AreaAnalysis,
) -> Result<AreaMeasurement> {
    let main = auto_exclusion_band(psd, larmor_frequency)?;
    let half = 0.5 * (main.hi - main.lo);
    let exclusions: Vec<Band> = if analysis.exclude_images {
        strobe_images(larmor_frequency, strobe.frequency, strobe.duty, psd.nyquist())
            .into_iter()
            .map(|f| Band::around(f, half))
            .collect()
    } else {
        vec![main]
    };
    let floor = estimate_psn_floor_excluding(psd, &exclusions)?;
    let area = atomic_noise_area(psd, floor, analysis.band)?;
    Ok(AreaMeasurement {
        psd: psd.clone(),
        area,
        exclusions,
    })
}
