//! Plot-ready data files: whitespace-separated columns with a `#` header,
//! plus a `.labels` sidecar naming the axes and line styles.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use strobespin::io::{format_f64, PSD_COLUMNS, TIMESERIES_COLUMNS, TRAJECTORY_COLUMNS};

use crate::experiments::{
    AREA_COLUMNS, DUTY_COLUMNS, POLARIZATION_COLUMNS, PROTOCOL_COLUMNS, STROBE_COLUMNS,
};
use crate::CliError;

const SCHEMAS: [&[&str]; 8] = [
    &PSD_COLUMNS,
    &TIMESERIES_COLUMNS,
    &TRAJECTORY_COLUMNS,
    &STROBE_COLUMNS,
    &DUTY_COLUMNS,
    &POLARIZATION_COLUMNS,
    &AREA_COLUMNS,
    &PROTOCOL_COLUMNS,
];

/// od, two-pulse, one-pulse
type CurvePoint = (f64, Option<f64>, Option<f64>);

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let c = self.header.iter().position(|h| h == name).expect("schema checked");
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r[c].trim().parse::<f64>().map_err(|_| {
                    CliError::Schema(format!("row {}: `{name}` is not a number: `{}`", i + 2, r[c]))
                })
            })
            .collect()
    }
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let rows = rdr
        .records()
        .map(|r| {
            r.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| CliError::Schema(format!("{}: {e}", path.display())))
        })
        .collect::<Result<Vec<Vec<String>>, _>>()?;
    Ok(Table { header, rows })
}

struct PlotFile {
    name: String,
    columns: Vec<&'static str>,
    data: Vec<Vec<f64>>,
    labels: Vec<(&'static str, String)>,
}

impl PlotFile {
    fn render(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(" "));
        let n = self.data.first().map_or(0, Vec::len);
        for i in 0..n {
            let line: Vec<String> = self.data.iter().map(|c| format_f64(c[i])).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    fn sidecar(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.labels {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

fn labels(pairs: &[(&'static str, &str)]) -> Vec<(&'static str, String)> {
    pairs.iter().map(|&(k, v)| (k, v.to_string())).collect()
}

fn plan(stem: &str, t: &Table) -> Result<Vec<PlotFile>, CliError> {
    let h: Vec<&str> = t.header.iter().map(String::as_str).collect();
    let files = if h == PSD_COLUMNS {
        vec![PlotFile {
            name: stem.to_string(),
            columns: vec!["freq_hz", "psd_rad2_per_hz"],
            data: vec![t.column("freq_hz")?, t.column("psd_rad2_per_hz")?],
            labels: labels(&[
                ("title", "Optical rotation noise spectrum"),
                ("xlabel", "frequency (Hz)"),
                ("ylabel", "PSD (rad^2/Hz)"),
                ("logscale", "y"),
            ]),
        }]
    } else if h == TIMESERIES_COLUMNS {
        vec![PlotFile {
            name: stem.to_string(),
            columns: vec!["t_s", "phi_rad"],
            data: vec![t.column("t_s")?, t.column("phi_rad")?],
            labels: labels(&[("xlabel", "time (s)"), ("ylabel", "rotation (rad)")]),
        }]
    } else if h == TRAJECTORY_COLUMNS {
        vec![PlotFile {
            name: stem.to_string(),
            columns: vec!["t_s", "F_x", "F_y"],
            data: vec![t.column("t_s")?, t.column("F_x")?, t.column("F_y")?],
            labels: labels(&[("xlabel", "time (s)"), ("ylabel", "collective spin")]),
        }]
    } else if h == STROBE_COLUMNS {
        let p = t.column("polarization")?;
        let f = t.column("strobe_hz")?;
        let a = t.column("area_rad2")?;
        let mut groups: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for i in 0..p.len() {
            let g = groups.entry(format!("p{:.3}", p[i])).or_default();
            g.0.push(f[i] / 1e3);
            g.1.push(a[i]);
        }
        groups
            .into_iter()
            .map(|(tag, (x, y))| PlotFile {
                name: format!("{stem}_{tag}"),
                columns: vec!["strobe_khz", "area_rad2"],
                data: vec![x, y],
                labels: labels(&[
                    ("title", &format!("Atomic noise area vs strobe frequency, {tag}")),
                    ("xlabel", "strobe frequency (kHz)"),
                    ("ylabel", "noise area (rad^2)"),
                ]),
            })
            .collect()
    } else if h == DUTY_COLUMNS {
        vec![PlotFile {
            name: stem.to_string(),
            columns: vec!["duty", "ratio"],
            data: vec![t.column("duty")?, t.column("ratio")?],
            labels: labels(&[
                ("xlabel", "duty cycle"),
                ("ylabel", "polarized / unpolarized noise"),
            ]),
        }]
    } else if h == POLARIZATION_COLUMNS {
        vec![PlotFile {
            name: stem.to_string(),
            columns: vec!["polarization", "ratio_simulated", "ratio_model"],
            data: vec![
                t.column("polarization")?,
                t.column("ratio_simulated")?,
                t.column("ratio_model")?,
            ],
            labels: labels(&[
                ("xlabel", "longitudinal polarization"),
                ("ylabel", "polarized / unpolarized noise"),
                ("style.ratio_simulated", "points"),
                ("style.ratio_model", "lines"),
            ]),
        }]
    } else if h == AREA_COLUMNS {
        vec![PlotFile {
            name: stem.to_string(),
            columns: vec!["polarization", "area_rad2"],
            data: vec![t.column("polarization")?, t.column("area_rad2")?],
            labels: labels(&[("xlabel", "polarization"), ("ylabel", "noise area (rad^2)")]),
        }]
    } else if h == PROTOCOL_COLUMNS {
        protocol_files(stem, t)?
    } else {
        let expected: Vec<String> = SCHEMAS.iter().map(|s| format!("[{}]", s.join(", "))).collect();
        return Err(CliError::Schema(format!(
            "unrecognized columns [{}]; expected one of {}",
            h.join(", "),
            expected.join(" ")
        )));
    };
    Ok(files)
}

fn protocol_files(stem: &str, t: &Table) -> Result<Vec<PlotFile>, CliError> {
    let od = t.column("od")?;
    let ratio = t.column("r_se_over_r_sd")?;
    let var = t.column("var_rel_sql")?;
    let c = t.header.iter().position(|h| h == "scheme").expect("schema checked");
    // ratio -> od -> (two-pulse, one-pulse)
    let mut groups: BTreeMap<String, Vec<CurvePoint>> = BTreeMap::new();
    for (i, row) in t.rows.iter().enumerate() {
        let g = groups.entry(format_f64(ratio[i])).or_default();
        let slot = match g.iter().position(|e| e.0 == od[i]) {
            Some(k) => k,
            None => {
                g.push((od[i], None, None));
                g.len() - 1
            }
        };
        match row[c].as_str() {
            "two_pulse" => g[slot].1 = Some(var[i]),
            "one_pulse" => g[slot].2 = Some(var[i]),
            other => {
                return Err(CliError::Schema(format!(
                    "row {}: scheme must be one_pulse or two_pulse, got `{other}`",
                    i + 2
                )))
            }
        }
    }
    groups
        .into_iter()
        .map(|(tag, pts)| {
            let mut cols = vec![Vec::new(), Vec::new(), Vec::new()];
            for (od, two, one) in pts {
                let (Some(two), Some(one)) = (two, one) else {
                    return Err(CliError::Schema(format!(
                        "OD {od} at R_se/R_sd = {tag} lacks one of the two schemes"
                    )));
                };
                cols[0].push(od);
                cols[1].push(two);
                cols[2].push(one);
            }
            Ok(PlotFile {
                name: format!("{stem}_rse{tag}"),
                columns: vec!["od", "two_pulse", "one_pulse"],
                data: cols,
                labels: vec![
                    ("title", format!("Field variance relative to SQL, R_se/R_sd = {tag}")),
                    ("xlabel", "optical density".into()),
                    ("ylabel", "field variance / SQL".into()),
                    ("logscale", "xy".into()),
                    ("style.two_pulse", "solid".into()),
                    ("style.one_pulse", "dashed".into()),
                ],
            })
        })
        .collect()
}

/// Convert `input` into plot files inside `out_dir`. Nothing is written
/// unless the whole input parses.
pub fn emit(input: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let table = read_table(input)?;
    if table.rows.is_empty() {
        return Err(CliError::Schema(format!("{} has no data rows", input.display())));
    }
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "plot".into());
    let files = plan(&stem, &table)?;
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut written = Vec::new();
    for f in files {
        for (ext, text) in [("dat", f.render()), ("labels", f.sidecar())] {
            let path = out_dir.join(format!("{}.{ext}", f.name));
            std::fs::write(&path, text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
        }
    }
    Ok(written)
}
