//! Run reports and their CSV / JSON encodings.
//!
//! CSV columns follow the field order of [`RunReport`]. Reals are printed
//! with six significant digits, optional fields are left empty and the
//! per-rank depth list is `;`-separated. JSON output is one object per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 13] = [
    "policy",
    "workload",
    "n",
    "m",
    "seed",
    "access_total",
    "adjust_total",
    "cost_total",
    "ws_bound",
    "ratio_cost_over_ws",
    "mru_violations",
    "mean_depth_by_rank",
    "opt_cost",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub policy: String,
    pub workload: String,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub access_total: u64,
    pub adjust_total: u64,
    pub cost_total: u64,
    pub ws_bound: f64,
    pub ratio_cost_over_ws: f64,
    pub mru_violations: Option<u64>,
    pub mean_depth_by_rank: Option<Vec<f64>>,
    pub opt_cost: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format '{other}'"))),
        }
    }
}

/// Formats a real like C's `%.6g`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_to_string<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("bad {name} '{s}'"))
}

fn parse_opt<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<Option<T>, String> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_field(s, name).map(Some)
    }
}

impl RunReport {
    pub fn to_record(&self) -> Vec<String> {
        vec![
            self.policy.clone(),
            self.workload.clone(),
            self.n.to_string(),
            self.m.to_string(),
            self.seed.to_string(),
            self.access_total.to_string(),
            self.adjust_total.to_string(),
            self.cost_total.to_string(),
            format_real(self.ws_bound),
            format_real(self.ratio_cost_over_ws),
            opt_to_string(&self.mru_violations),
            self.mean_depth_by_rank
                .as_ref()
                .map(|v| v.iter().map(|&x| format_real(x)).collect::<Vec<_>>().join(";"))
                .unwrap_or_default(),
            opt_to_string(&self.opt_cost),
        ]
    }

    pub fn from_record(rec: &csv::StringRecord) -> std::result::Result<Self, String> {
        if rec.len() != CSV_HEADER.len() {
            return Err(format!("expected {} columns, found {}", CSV_HEADER.len(), rec.len()));
        }
        let depths = if rec[11].is_empty() {
            None
        } else {
            Some(
                rec[11]
                    .split(';')
                    .map(|x| parse_field(x, "mean_depth_by_rank"))
                    .collect::<std::result::Result<Vec<f64>, _>>()?,
            )
        };
        Ok(Self {
            policy: rec[0].to_string(),
            workload: rec[1].to_string(),
            n: parse_field(&rec[2], "n")?,
            m: parse_field(&rec[3], "m")?,
            seed: parse_field(&rec[4], "seed")?,
            access_total: parse_field(&rec[5], "access_total")?,
            adjust_total: parse_field(&rec[6], "adjust_total")?,
            cost_total: parse_field(&rec[7], "cost_total")?,
            ws_bound: parse_field(&rec[8], "ws_bound")?,
            ratio_cost_over_ws: parse_field(&rec[9], "ratio_cost_over_ws")?,
            mru_violations: parse_opt(&rec[10], "mru_violations")?,
            mean_depth_by_rank: depths,
            opt_cost: parse_opt(&rec[12], "opt_cost")?,
        })
    }
}

/// Writes reports as CSV (header plus one row each) to any sink.
pub fn write_csv<W: Write>(out: W, reports: &[RunReport], header: bool) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if header {
        w.write_record(CSV_HEADER)?;
    }
    for r in reports {
        w.write_record(r.to_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Writes reports as JSON lines to any sink.
pub fn write_json<W: Write>(mut out: W, reports: &[RunReport]) -> std::io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_to(path: &Path, file: File, reports: &[RunReport], format: Format, header: bool) -> Result<()> {
    match format {
        Format::Csv => write_csv(file, reports, header).map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        }),
        Format::Json => write_json(std::io::BufWriter::new(file), reports).map_err(io_err(path)),
    }
}

/// Writes `reports` to a fresh file at `path`.
pub fn emit(reports: &[RunReport], format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    write_to(path, file, reports, format, true)
}

/// Appends to `path`; a CSV header is written only when the file is new
/// or empty.
pub fn append(reports: &[RunReport], format: Format, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let fresh = std::fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    write_to(path, file, reports, format, fresh)
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<RunReport>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let report = RunReport::from_record(&rec).map_err(|message| Error::Trace {
            path: path.to_path_buf(),
            line: i + 2,
            message,
        })?;
        out.push(report);
    }
    Ok(out)
}

pub fn read_json(path: impl AsRef<Path>) -> Result<Vec<RunReport>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?);
    }
    Ok(out)
}
