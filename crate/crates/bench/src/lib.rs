//! Shared fixtures for the criterion benches.

use rand::{rngs::StdRng, Rng, SeedableRng};
use strobespin::{
    DynamicsConfig, EnsembleParams, InitialTransverse, PolarimeterConfig, StrobeWaveform,
};

/// Desk-scale strobed experiment: 150 kHz Larmor, 300 kHz strobe, 10% duty.
pub fn strobed_setup(duration: f64) -> (EnsembleParams, DynamicsConfig, StrobeWaveform, PolarimeterConfig) {
    let params = EnsembleParams {
        initial_polarization: 0.85,
        ..EnsembleParams::potassium()
    };
    let cfg = DynamicsConfig {
        larmor_frequency: 150e3,
        dt: 6.25e-8,
        duration,
        sample_rate: 2e6,
        diffusion_time: Some(5e-4),
        beam_fraction: 0.25,
        light_shift_strength: 0.4,
        init: InitialTransverse::Stationary,
        seed: 1,
    };
    let strobe = StrobeWaveform {
        frequency: 300e3,
        duty: 0.1,
        phase: 0.0,
        average_flux: 1e12,
    };
    let pol = PolarimeterConfig {
        rotation_gain: 1e-6,
        psn_floor: 5e-14,
    };
    (params, cfg, strobe, pol)
}

pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
