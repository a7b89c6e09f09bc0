//! CSV text for records and spectra: header row, comma separated, nine
//! significant digits, LF line endings.

use std::io::{Read, Write};

use crate::dynamics::Record;
use crate::error::{Error, Result};
use crate::polarimeter::PsdEstimate;

pub const TRAJECTORY_COLUMNS: [&str; 4] = ["t_s", "F_x", "F_y", "F_z"];
pub const TIMESERIES_COLUMNS: [&str; 2] = ["t_s", "phi_rad"];
pub const PSD_COLUMNS: [&str; 2] = ["freq_hz", "psd_rad2_per_hz"];

/// Nine significant digits in scientific notation.
pub fn format_f64(x: f64) -> String {
    format!("{x:.8e}")
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Spectrum(format!("csv i/o: {e}"))
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Write a header plus numeric rows.
pub fn write_numeric_csv<W: Write, I>(w: W, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut out = csv_writer(w);
    out.write_record(header).map_err(io_err)?;
    for row in rows {
        out.write_record(row.iter().map(|&x| format_f64(x)))
            .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_trajectory_csv<W: Write>(w: W, rec: &Record) -> Result<()> {
    write_numeric_csv(
        w,
        &TRAJECTORY_COLUMNS,
        (0..rec.len()).map(|i| vec![rec.time(i), rec.fx[i], rec.fy[i], rec.fz[i]]),
    )
}

pub fn write_timeseries_csv<W: Write>(w: W, sample_rate: f64, phi: &[f64]) -> Result<()> {
    write_numeric_csv(
        w,
        &TIMESERIES_COLUMNS,
        phi.iter()
            .enumerate()
            .map(|(i, &p)| vec![i as f64 / sample_rate, p]),
    )
}

pub fn write_psd_csv<W: Write>(w: W, psd: &PsdEstimate) -> Result<()> {
    write_numeric_csv(
        w,
        &PSD_COLUMNS,
        psd.freqs
            .iter()
            .zip(&psd.power)
            .map(|(&f, &p)| vec![f, p]),
    )
}

/// Read a numeric CSV whose header must equal `expected`. Returns one vector
/// per column.
pub fn read_numeric_csv<R: Read>(r: R, expected: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(io_err)?.clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::GridMismatch(format!(
            "expected columns [{}], found [{}]",
            expected.join(", "),
            header.iter().collect::<Vec<_>>().join(", ")
        )));
    }
    let mut cols = vec![Vec::new(); expected.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(io_err)?;
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::GridMismatch(format!(
                    "row {}: column `{}` is not a number: `{field}`",
                    line + 2,
                    expected[c]
                ))
            })?;
            cols[c].push(v);
        }
    }
    Ok(cols)
}

/// Parse a PSD written by [`write_psd_csv`].
pub fn read_psd_csv<R: Read>(r: R) -> Result<PsdEstimate> {
    let mut cols = read_numeric_csv(r, &PSD_COLUMNS)?;
    let power = cols.pop().unwrap_or_default();
    let freqs = cols.pop().unwrap_or_default();
    if freqs.len() < 2 {
        return Err(Error::Spectrum("PSD file needs at least two rows".into()));
    }
    Ok(PsdEstimate {
        resolution: freqs[1] - freqs[0],
        freqs,
        power,
        n_avg: 0,
    })
}
