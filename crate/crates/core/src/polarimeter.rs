//! Balanced-polarimeter signal synthesis and spectral analysis.
//!
//! The recorded optical rotation is the gated atomic Faraday rotation plus
//! photon shot noise. The PSD of that record is a flat shot-noise floor with
//! an atomic peak at the Larmor frequency (and its strobe images). The atomic
//! noise is the area under the PSD after removing the floor.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::optimize::{nelder_mead, NelderMeadOptions};

/// Calibration of the polarimeter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarimeterConfig {
    /// Optical rotation (rad) per unit of measured `F_x`.
    pub rotation_gain: f64,
    /// One-sided shot-noise PSD of the rotation signal, rad²/Hz, at any duty
    /// cycle for a fixed average photon flux.
    pub psn_floor: f64,
}

impl PolarimeterConfig {
    pub fn violations(&self, prefix: &str) -> Vec<Violation> {
        let mut out = Vec::new();
        if !self.rotation_gain.is_finite() {
            out.push(Violation::new(format!("{prefix}.rotation_gain"), "must be finite"));
        }
        if !(self.psn_floor >= 0.0 && self.psn_floor.is_finite()) {
            out.push(Violation::new(format!("{prefix}.psn_floor"), "must be non-negative"));
        }
        out
    }
}

/// Closed frequency interval `[lo, hi]` in Hz. Serialized as a two-element
/// array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn around(center: f64, half_width: f64) -> Self {
        Self::new(center - half_width, center + half_width)
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.lo && f <= self.hi
    }
}

impl From<[f64; 2]> for Band {
    fn from(v: [f64; 2]) -> Self {
        Band::new(v[0], v[1])
    }
}

impl From<Band> for [f64; 2] {
    fn from(b: Band) -> Self {
        [b.lo, b.hi]
    }
}

/// Produce the rotation record `φ = gate·[gain·M_x + PSN]`.
///
/// Shot noise in an open sample has one-sided density `psn_floor / duty`
/// (the on-window flux is `1/duty` times the average). A sample whose gate
/// is open for a fraction `w` collects `w` times the photons of a fully open
/// one, so its noise variance scales with `w`. Averaged over a strobe period
/// the floor equals `psn_floor` for every duty cycle.
pub fn synthesize_signal<R: Rng + ?Sized>(
    measured_x: &[f64],
    gate: &[f64],
    duty: f64,
    sample_rate: f64,
    cfg: &PolarimeterConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if measured_x.len() != gate.len() {
        return Err(Error::GridMismatch(format!(
            "trajectory has {} samples but gate has {}",
            measured_x.len(),
            gate.len()
        )));
    }
    if !(duty > 0.0 && duty <= 1.0) {
        return Err(Error::Domain(format!("duty must lie in (0, 1], got {duty}")));
    }
    let open_sd = (cfg.psn_floor / duty * sample_rate / 2.0).sqrt();
    Ok(measured_x
        .iter()
        .zip(gate)
        .map(|(&m, &w)| {
            if w <= 0.0 {
                return 0.0;
            }
            let mut phi = w * cfg.rotation_gain * m;
            if open_sd > 0.0 {
                phi += open_sd * w.sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            phi
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            // periodic Hann, exact for 50% overlap
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; n],
        }
    }
}

/// Averaged one-sided power spectral density.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdEstimate {
    pub freqs: Vec<f64>,
    /// rad²/Hz
    pub power: Vec<f64>,
    /// Number of periodogram segments averaged.
    pub n_avg: usize,
    /// Bin spacing, Hz.
    pub resolution: f64,
}

impl PsdEstimate {
    pub fn nyquist(&self) -> f64 {
        *self.freqs.last().unwrap_or(&0.0)
    }

    /// Integral of the PSD over all frequencies (rectangle rule over bins).
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum::<f64>() * self.resolution
    }
}

/// Welch averaging over any number of records, with 50% segment overlap.
#[derive(Clone)]
pub struct WelchAccumulator {
    segment_len: usize,
    sample_rate: f64,
    window: Vec<f64>,
    window_power: f64,
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex64>,
    sum: Vec<f64>,
    segments: usize,
}

impl WelchAccumulator {
    pub fn new(segment_len: usize, sample_rate: f64, window: Window) -> Result<Self> {
        if segment_len < 2 {
            return Err(Error::Spectrum("segment length must be at least 2".into()));
        }
        if !(sample_rate > 0.0) {
            return Err(Error::Spectrum("sample rate must be positive".into()));
        }
        let w = window.coefficients(segment_len);
        let window_power = w.iter().map(|x| x * x).sum();
        let fft = FftPlanner::new().plan_fft_forward(segment_len);
        Ok(Self {
            segment_len,
            sample_rate,
            window: w,
            window_power,
            fft,
            buffer: vec![Complex64::default(); segment_len],
            sum: vec![0.0; segment_len / 2 + 1],
            segments: 0,
        })
    }

    pub fn add(&mut self, signal: &[f64]) -> Result<()> {
        let n = self.segment_len;
        if signal.len() < n {
            return Err(Error::Spectrum(format!(
                "segment length {n} exceeds record length {}",
                signal.len()
            )));
        }
        let hop = (n / 2).max(1);
        let mut start = 0;
        while start + n <= signal.len() {
            for ((b, &x), &w) in self.buffer.iter_mut().zip(&signal[start..start + n]).zip(&self.window) {
                *b = Complex64::new(x * w, 0.0);
            }
            self.fft.process(&mut self.buffer);
            for (s, b) in self.sum.iter_mut().zip(&self.buffer) {
                *s += b.norm_sqr();
            }
            self.segments += 1;
            start += hop;
        }
        Ok(())
    }

    /// Merge another accumulator with identical settings.
    pub fn merge(&mut self, other: &WelchAccumulator) {
        debug_assert_eq!(self.segment_len, other.segment_len);
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        self.segments += other.segments;
    }

    pub fn segments(&self) -> usize {
        self.segments
    }

    pub fn finish(&self) -> PsdEstimate {
        let n = self.segment_len;
        let scale = 1.0 / (self.sample_rate * self.window_power * self.segments.max(1) as f64);
        let last = n / 2;
        let power = self
            .sum
            .iter()
            .enumerate()
            .map(|(k, &s)| {
                let one_sided = if k == 0 || (n.is_multiple_of(2) && k == last) { 1.0 } else { 2.0 };
                one_sided * s * scale
            })
            .collect();
        let resolution = self.sample_rate / n as f64;
        PsdEstimate {
            freqs: (0..=last).map(|k| k as f64 * resolution).collect(),
            power,
            n_avg: self.segments,
            resolution,
        }
    }
}

/// One-sided averaged periodogram of a single record.
pub fn welch_psd(
    signal: &[f64],
    sample_rate: f64,
    segment_len: usize,
    window: Window,
) -> Result<PsdEstimate> {
    let mut acc = WelchAccumulator::new(segment_len, sample_rate, window)?;
    acc.add(signal)?;
    Ok(acc.finish())
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median of the interior bins lying outside every exclusion band.
pub fn estimate_psn_floor_excluding(psd: &PsdEstimate, exclusions: &[Band]) -> Result<f64> {
    let last = psd.freqs.len().saturating_sub(1);
    let mut kept: Vec<f64> = psd
        .freqs
        .iter()
        .zip(&psd.power)
        .enumerate()
        .filter(|&(k, (f, _))| k != 0 && k != last && !exclusions.iter().any(|b| b.contains(*f)))
        .map(|(_, (_, &p))| p)
        .collect();
    if kept.is_empty() {
        return Err(Error::Spectrum(
            "exclusion bands cover the whole spectrum; no bins left for the floor".into(),
        ));
    }
    Ok(median(&mut kept))
}

/// Photon-shot-noise floor: median of the PSD outside `exclusion`.
pub fn estimate_psn_floor(psd: &PsdEstimate, exclusion: Band) -> Result<f64> {
    if exclusion.hi < 0.0 || exclusion.lo > psd.nyquist() {
        return Err(Error::Spectrum(format!(
            "exclusion band [{}, {}] Hz lies outside the spectrum",
            exclusion.lo, exclusion.hi
        )));
    }
    estimate_psn_floor_excluding(psd, &[exclusion])
}

/// Full width at half maximum of the peak nearest `center`, measured above
/// `floor`. Never narrower than one bin.
pub fn peak_fwhm(psd: &PsdEstimate, center: f64, floor: f64) -> Result<f64> {
    if psd.freqs.len() < 3 || !(center > 0.0 && center < psd.nyquist()) {
        return Err(Error::Spectrum(format!("peak center {center} Hz outside spectrum")));
    }
    let res = psd.resolution;
    let c = (center / res).round() as usize;
    let reach = ((0.02 * center / res).ceil() as usize).max(2);
    let lo = c.saturating_sub(reach).max(1);
    let hi = (c + reach).min(psd.power.len() - 2);
    let peak = (lo..=hi)
        .max_by(|&a, &b| psd.power[a].total_cmp(&psd.power[b]))
        .unwrap_or(c);
    let half = floor + 0.5 * (psd.power[peak] - floor);
    if psd.power[peak] <= floor {
        return Ok(res);
    }
    let mut left = peak;
    while left > 1 && psd.power[left - 1] > half {
        left -= 1;
    }
    let mut right = peak;
    while right + 2 < psd.power.len() && psd.power[right + 1] > half {
        right += 1;
    }
    Ok(((right - left + 1) as f64 * res).max(res))
}

/// Exclusion band of ±10 linewidths around the atomic peak at `center`, with
/// the linewidth read off the peak's half maximum above a rough floor.
pub fn auto_exclusion_band(psd: &PsdEstimate, center: f64) -> Result<Band> {
    let rough = estimate_psn_floor_excluding(psd, &[])?;
    let width = peak_fwhm(psd, center, rough)?;
    Ok(Band::around(center, 10.0 * width))
}

/// Frequencies at which the gated atomic signal appears: `|±f_L + k f_s|`
/// for every strobe harmonic up to Nyquist.
pub fn strobe_images(larmor: f64, strobe: f64, duty: f64, nyquist: f64) -> Vec<f64> {
    let mut out = vec![larmor];
    if duty < 1.0 {
        let kmax = ((nyquist + larmor) / strobe).ceil() as i64;
        for k in 1..=kmax {
            for f in [k as f64 * strobe - larmor, k as f64 * strobe + larmor] {
                if f > 0.0 && f <= nyquist && !out.iter().any(|&g: &f64| (g - f).abs() < 1e-6) {
                    out.push(f);
                }
            }
        }
    }
    out.sort_by(|a, b| a.total_cmp(b));
    out
}

/// Integrated atomic noise above the shot-noise floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseArea {
    /// Area above the floor, clamped at zero, rad².
    pub atomic_variance: f64,
    /// Unclamped area, rad².
    pub raw_variance: f64,
    /// Floor that was subtracted, rad²/Hz.
    pub psn_level: f64,
    pub band: Band,
}

/// Trapezoidal integral of `power - floor` over the bins inside `band`.
pub fn atomic_noise_area(psd: &PsdEstimate, floor: f64, band: Band) -> Result<NoiseArea> {
    if !(band.lo >= 0.0 && band.hi <= psd.nyquist() && band.lo < band.hi) {
        return Err(Error::Spectrum(format!(
            "band [{}, {}] Hz is not inside [0, {}] Hz",
            band.lo,
            band.hi,
            psd.nyquist()
        )));
    }
    let inside: Vec<f64> = psd
        .freqs
        .iter()
        .zip(&psd.power)
        .filter(|(f, _)| band.contains(**f))
        .map(|(_, p)| p - floor)
        .collect();
    if inside.len() < 2 {
        return Err(Error::Spectrum("band narrower than two PSD bins".into()));
    }
    let raw = inside.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum::<f64>() * psd.resolution;
    Ok(NoiseArea {
        atomic_variance: raw.max(0.0),
        raw_variance: raw,
        psn_level: floor,
        band,
    })
}

/// Least-squares single-Lorentzian description of a peak. Diagnostic only;
/// the noise area never comes from the fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub center: f64,
    pub hwhm: f64,
    /// Integrated area of the fitted line, rad².
    pub area: f64,
    /// RMS residual relative to the peak height.
    pub relative_residual: f64,
}

pub fn fit_lorentzian(psd: &PsdEstimate, floor: f64, band: Band) -> Result<LorentzianFit> {
    let pts: Vec<(f64, f64)> = psd
        .freqs
        .iter()
        .zip(&psd.power)
        .filter(|(f, _)| band.contains(**f))
        .map(|(&f, &p)| (f, p - floor))
        .collect();
    if pts.len() < 4 {
        return Err(Error::Spectrum("too few bins for a Lorentzian fit".into()));
    }
    let (f_peak, height) = pts
        .iter()
        .copied()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty");
    if height <= 0.0 {
        return Err(Error::Spectrum("no peak above the floor".into()));
    }
    let line = |x: &[f64], f: f64| {
        let (c, g, a) = (x[0], x[1].exp(), x[2].exp());
        a / PI * g / ((f - c) * (f - c) + g * g)
    };
    let cost = |x: &[f64]| -> f64 {
        pts.iter()
            .map(|&(f, p)| {
                let r = (line(x, f) - p) / height;
                r * r
            })
            .sum()
    };
    let area0: f64 = pts.iter().map(|p| p.1.max(0.0)).sum::<f64>() * psd.resolution;
    let start = [f_peak, (2.0 * psd.resolution).ln(), area0.max(1e-300).ln()];
    let best = nelder_mead(cost, &start, &[psd.resolution, 0.5, 0.5], &NelderMeadOptions::default());
    let x = best.point;
    Ok(LorentzianFit {
        center: x[0],
        hwhm: x[1].exp(),
        area: x[2].exp(),
        relative_residual: (best.value / pts.len() as f64).sqrt(),
    })
}
