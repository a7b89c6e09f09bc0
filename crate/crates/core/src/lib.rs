//! Spin-noise simulation for stroboscopic back-action evasion in alkali
//! vapor, and a two-pulse QND magnetometry model.
//!
//! * [`spin`]: spin-temperature statistics of the collective spin.
//! * [`dynamics`]: stochastic collective-spin trajectories under a strobed probe.
//! * [`polarimeter`]: Faraday-rotation synthesis and spectral analysis.
//! * [`pipeline`]: trajectories to noise areas.
//! * [`protocol`]: one- and two-pulse field-variance models and their optimization.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod io;
pub mod optimize;
pub mod pipeline;
pub mod polarimeter;
pub mod protocol;
pub mod rng;
pub mod spin;

pub use dynamics::{
    relaxation_rate, simulate_record, strobe_gate, DynamicsConfig, EnsembleParams, GateSample,
    InitialTransverse, Record, Stepper, StrobeWaveform, TrajectoryState,
};
pub use error::{Error, Result, Violation};
pub use pipeline::{measure_noise_area, AreaAnalysis, AreaMeasurement};
pub use polarimeter::{
    atomic_noise_area, estimate_psn_floor, synthesize_signal, welch_psd, Band, NoiseArea,
    PolarimeterConfig, PsdEstimate, Window,
};
pub use protocol::{
    optimize_protocol, sweep_od, OptimizerSettings, ProtocolResult, PulsePlan, RelaxationModel,
    Scheme, SweepPoint,
};
pub use rng::{stream_rng, StreamDomain};
pub use spin::{noise_ratio, variance_per_atom, AtomSpec, NoiseStatistics, SpinTemperature};
