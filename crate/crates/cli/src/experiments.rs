//! The five canonical experiments. Each writes its CSVs into the output
//! directory and returns the paths in write order.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use strobespin::io::{csv_writer, format_f64, write_psd_csv, write_timeseries_csv, write_trajectory_csv};
use strobespin::pipeline::{analyze, averaged_psd};
use strobespin::protocol::{sweep_od, OptimizerSettings};
use strobespin::{
    noise_ratio, synthesize_signal, stream_rng, AreaMeasurement, EnsembleParams, Stepper,
    StreamDomain, StrobeWaveform,
};

use crate::config::{Experiment, RunConfig, Simulation};
use crate::CliError;

pub const STROBE_COLUMNS: [&str; 5] =
    ["polarization", "strobe_hz", "area_rad2", "raw_area_rad2", "psn_rad2_per_hz"];
pub const DUTY_COLUMNS: [&str; 4] =
    ["duty", "area_polarized_rad2", "area_unpolarized_rad2", "ratio"];
pub const POLARIZATION_COLUMNS: [&str; 4] =
    ["polarization", "area_rad2", "ratio_simulated", "ratio_model"];
pub const AREA_COLUMNS: [&str; 4] =
    ["polarization", "area_rad2", "raw_area_rad2", "psn_rad2_per_hz"];
pub const PROTOCOL_COLUMNS: [&str; 7] =
    ["od", "r_se_over_r_sd", "scheme", "eps1", "eps2", "t_m_s", "var_rel_sql"];

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    let path = dir.join(name);
    let file = File::create(&path)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn write_rows<S: AsRef<str>>(
    dir: &Path,
    name: &str,
    header: &[&str],
    rows: &[Vec<S>],
) -> Result<PathBuf, CliError> {
    let (path, file) = create(dir, name)?;
    let mut w = csv_writer(file);
    let io = |e: csv::Error| CliError::Io(format!("writing {name}: {e}"));
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row.iter().map(|s| s.as_ref())).map_err(io)?;
    }
    w.flush()
        .map_err(|e| CliError::Io(format!("writing {name}: {e}")))?;
    Ok(path)
}

fn numbers(values: &[f64]) -> Vec<String> {
    values.iter().map(|&x| format_f64(x)).collect()
}

fn polarization_tag(p: f64) -> String {
    format!("p{p:.3}")
}

struct Sim<'a> {
    cfg: &'a RunConfig,
    sim: Simulation<'a>,
}

impl Sim<'_> {
    fn params(&self, polarization: f64) -> EnsembleParams {
        EnsembleParams {
            initial_polarization: polarization,
            ..self.cfg.ensemble.clone()
        }
    }

    fn measure(&self, polarization: f64, strobe: &StrobeWaveform) -> Result<AreaMeasurement, CliError> {
        log::info!(
            "P = {polarization}, f_s = {} Hz, duty = {}: {} trajectories",
            strobe.frequency,
            strobe.duty,
            self.cfg.trajectories
        );
        let s = &self.sim;
        let psd = averaged_psd(
            &self.params(polarization),
            &s.dynamics,
            strobe,
            s.polarimeter,
            s.analysis,
            self.cfg.trajectories,
        )
        .map_err(CliError::from_core)?;
        analyze(&psd, s.dynamics.larmor_frequency, strobe, s.analysis).map_err(CliError::from_core)
    }
}

/// Run the configured experiment. `cfg` must already be validated.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    if cfg.experiment == Experiment::OptimizeProtocol {
        return optimize_protocol(cfg, out_dir);
    }
    let sim = Sim {
        cfg,
        sim: cfg.simulation().ok_or_else(|| {
            CliError::Invalid(vec![strobespin::Violation::new(
                "dynamics",
                "simulation sections missing",
            )])
        })?,
    };
    match cfg.experiment {
        Experiment::Psd => psd(&sim, out_dir),
        Experiment::SweepStrobe => sweep_strobe(&sim, out_dir),
        Experiment::SweepDuty => sweep_duty(&sim, out_dir),
        Experiment::SweepPolarization => sweep_polarization(&sim, out_dir),
        Experiment::OptimizeProtocol => unreachable!(),
    }
}

fn psd(sim: &Sim, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let s = &sim.sim;
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for &p in &sim.cfg.sweep.polarizations {
        let m = sim.measure(p, s.strobe)?;
        let tag = polarization_tag(p);
        let (path, mut w) = create(dir, &format!("psd_{tag}.csv"))?;
        write_psd_csv(&mut w, &m.psd).map_err(CliError::from_core)?;
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        files.push(path);

        // first trajectory and its detected rotation, as examples of the raw data
        let stepper = Stepper::new(&sim.params(p), &s.dynamics, s.strobe).map_err(CliError::from_core)?;
        let rec = stepper.trajectory(0);
        let (path, mut w) = create(dir, &format!("trajectory_{tag}.csv"))?;
        write_trajectory_csv(&mut w, &rec).map_err(CliError::from_core)?;
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        files.push(path);
        let mut rng = stream_rng(s.dynamics.seed, StreamDomain::ShotNoise, 0);
        let phi = synthesize_signal(
            &rec.mx,
            &rec.gate,
            s.strobe.duty,
            s.dynamics.sample_rate,
            s.polarimeter,
            &mut rng,
        )
        .map_err(CliError::from_core)?;
        let (path, mut w) = create(dir, &format!("rotation_{tag}.csv"))?;
        write_timeseries_csv(&mut w, s.dynamics.sample_rate, &phi).map_err(CliError::from_core)?;
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        files.push(path);

        rows.push(numbers(&[p, m.area.atomic_variance, m.area.raw_variance, m.area.psn_level]));
    }
    files.push(write_rows(dir, "areas.csv", &AREA_COLUMNS, &rows)?);
    Ok(files)
}

fn sweep_strobe(sim: &Sim, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut rows = Vec::new();
    for &p in &sim.cfg.sweep.polarizations {
        for &f in &sim.cfg.sweep.strobe_frequencies {
            let strobe = StrobeWaveform {
                frequency: f,
                ..sim.sim.strobe.clone()
            };
            let m = sim.measure(p, &strobe)?;
            rows.push(numbers(&[p, f, m.area.atomic_variance, m.area.raw_variance, m.area.psn_level]));
        }
    }
    Ok(vec![write_rows(dir, "strobe_sweep.csv", &STROBE_COLUMNS, &rows)?])
}

fn sweep_duty(sim: &Sim, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let polarized = sim.cfg.ensemble.initial_polarization;
    let mut rows = Vec::new();
    for &duty in &sim.cfg.sweep.duties {
        let strobe = StrobeWaveform {
            duty,
            ..sim.sim.strobe.clone()
        };
        let pol = sim.measure(polarized, &strobe)?.area.atomic_variance;
        let unpol = sim.measure(0.0, &strobe)?.area.atomic_variance;
        rows.push(numbers(&[duty, pol, unpol, pol / unpol]));
    }
    Ok(vec![write_rows(dir, "duty_sweep.csv", &DUTY_COLUMNS, &rows)?])
}

fn sweep_polarization(sim: &Sim, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let atom = sim.cfg.ensemble.nuclear_spin;
    let grid = &sim.cfg.sweep.polarizations;
    let mut areas = Vec::with_capacity(grid.len());
    for &p in grid {
        areas.push(sim.measure(p, sim.sim.strobe)?.area.atomic_variance);
    }
    let baseline = match grid.iter().position(|&p| p == 0.0) {
        Some(i) => areas[i],
        None => sim.measure(0.0, sim.sim.strobe)?.area.atomic_variance,
    };
    let mut rows = Vec::new();
    for (&p, &a) in grid.iter().zip(&areas) {
        let model = noise_ratio(atom, p).map_err(CliError::from_core)?;
        rows.push(numbers(&[p, a, a / baseline, model]));
    }
    Ok(vec![write_rows(dir, "polarization_sweep.csv", &POLARIZATION_COLUMNS, &rows)?])
}

fn optimize_protocol(cfg: &RunConfig, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let grid = cfg.protocol.as_ref().ok_or_else(|| {
        CliError::Invalid(vec![strobespin::Violation::new("protocol", "section missing")])
    })?;
    let settings = OptimizerSettings {
        levels: grid.levels,
        seed: cfg.seed,
        ..OptimizerSettings::default()
    };
    log::info!(
        "optimizing {} grid points",
        grid.optical_densities.len() * grid.exchange_ratios.len()
    );
    let points = sweep_od(
        &cfg.ensemble,
        &grid.optical_densities,
        &grid.exchange_ratios,
        grid.total_time,
        &settings,
    )
    .map_err(CliError::from_core)?;
    let mut rows = Vec::new();
    for pt in &points {
        for r in [&pt.one_pulse, &pt.two_pulse] {
            rows.push(vec![
                format_f64(pt.optical_density),
                format_f64(pt.exchange_ratio),
                r.scheme.as_str().to_string(),
                format_f64(r.plan.eps1),
                format_f64(r.plan.eps2),
                format_f64(r.plan.t_m),
                format_f64(r.field_variance_rel_sql),
            ]);
        }
    }
    Ok(vec![write_rows(dir, "fig4b.csv", &PROTOCOL_COLUMNS, &rows)?])
}
