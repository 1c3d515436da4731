//! Signal CSV format: a `t_s,value` header and one row per sample on a
//! uniform time grid.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};
use crate::signal::SampledSignal;

/// Relative tolerance on sample spacing when loading.
pub const SPACING_TOLERANCE: f64 = 1e-6;

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub(crate) fn parse_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

/// Reads a signal CSV. `fs_hz` overrides the rate inferred from the time
/// column and is required for single-sample files.
pub fn read_signal_csv(path: &Path, fs_hz: Option<f64>) -> Result<SampledSignal> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_signal_csv(file, &path.display().to_string(), fs_hz)
}

pub fn parse_signal_csv<R: Read>(reader: R, name: &str, fs_hz: Option<f64>) -> Result<SampledSignal> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| parse_err(name, 1, e.to_string()))?
        .clone();
    if headers.len() != 2 || &headers[0] != "t_s" || &headers[1] != "value" {
        return Err(parse_err(name, 1, "expected header `t_s,value`"));
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(name, line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.len() != 2 {
            return Err(parse_err(name, line, "expected 2 fields"));
        }
        let t: f64 = record[0]
            .parse()
            .map_err(|_| parse_err(name, line, format!("bad time `{}`", &record[0])))?;
        let v: f64 = record[1]
            .parse()
            .map_err(|_| parse_err(name, line, format!("bad value `{}`", &record[1])))?;
        if !t.is_finite() || !v.is_finite() {
            return Err(parse_err(name, line, "non-finite number"));
        }
        times.push((t, line));
        values.push(v);
    }
    if values.is_empty() {
        return Err(parse_err(name, 1, "no samples"));
    }

    let t0 = times[0].0;
    let fs = match fs_hz {
        Some(fs) => fs,
        None if times.len() >= 2 => {
            let dt = times[1].0 - times[0].0;
            if !(dt > 0.0) {
                return Err(parse_err(name, times[1].1, "time column must increase"));
            }
            1.0 / dt
        }
        None => {
            return Err(invalid(format!(
                "{name}: a single-sample signal needs an explicit sampling rate"
            )))
        }
    };
    let dt = 1.0 / fs;
    for (k, &(t, line)) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (t - expected).abs() > SPACING_TOLERANCE * dt.max(expected.abs()) {
            return Err(parse_err(
                name,
                line,
                format!("non-uniform time grid: t_s = {t}, expected {expected}"),
            ));
        }
    }
    SampledSignal::with_start(fs, t0, values)
}

pub fn write_signal_csv(path: &Path, signal: &SampledSignal) -> Result<()> {
    let mut file = File::create(path).map_err(|e| io_err(path, e))?;
    file.write_all(format_signal_csv(signal).as_bytes())
        .map_err(|e| io_err(path, e))
}

/// Renders a signal in the CSV format. Floats use the shortest
/// round-tripping representation so re-reading is lossless.
pub fn format_signal_csv(signal: &SampledSignal) -> String {
    let mut out = String::with_capacity(signal.len() * 24 + 16);
    out.push_str("t_s,value\n");
    for (k, v) in signal.samples().iter().enumerate() {
        out.push_str(&format!("{},{}\n", signal.time_at(k), v));
    }
    out
}
