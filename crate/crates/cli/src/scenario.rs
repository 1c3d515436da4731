//! On-disk layout of a generated scenario:
//!
//! ```text
//! scenario_00/
//!   raw.csv clean.csv drift.csv noise.csv gaze.csv
//!   events.csv blinks.csv meta.json
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fgd_core::benchmark::EvalScenario;
use fgd_core::io::{format_signal_csv, read_signal_csv};
use fgd_core::simulate::{DriftSpec, GroundTruth, SynthParams, TrueBlink, TrueSaccade};
use fgd_core::SampledSignal;

use crate::error::{CliError, CliResult};

pub const SIGNALS: [&str; 5] = ["raw", "clean", "drift", "noise", "gaze"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub scenario: String,
    pub fs_hz: f64,
    pub n_samples: usize,
    pub n_saccades: usize,
    pub synth: SynthParams,
    pub drift: DriftSpec,
    /// Human-readable name of the drift model used.
    pub drift_model: String,
}

pub const DRIFT_MODEL: &str = "linear ramp plus sinusoid mixture (stand-in for nonlinear drift)";

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::write(path, e))
}

pub fn write_signal(path: &Path, s: &SampledSignal) -> CliResult<()> {
    write_text(path, &format_signal_csv(s))
}

fn to_csv<T: Serialize>(rows: &[T], header: &[&str]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

fn from_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                CliError::Usage(format!("{}: line {line}: {e}", path.display()))
            })
        })
        .collect()
}

pub fn format_truth_events(events: &[TrueSaccade]) -> String {
    to_csv(
        events,
        &["start_idx", "end_idx", "from_deg", "to_deg", "from_target", "to_target"],
    )
}

pub fn read_truth_events(path: &Path) -> CliResult<Vec<TrueSaccade>> {
    from_csv(path)
}

pub fn write_ground_truth(dir: &Path, truth: &GroundTruth, meta: &ScenarioMeta) -> CliResult<()> {
    create_dir(dir)?;
    for (name, sig) in SIGNALS.iter().zip([&truth.raw, &truth.clean, &truth.drift, &truth.noise, &truth.gaze]) {
        write_signal(&dir.join(format!("{name}.csv")), sig)?;
    }
    write_text(&dir.join("events.csv"), &format_truth_events(&truth.events))?;
    write_text(&dir.join("blinks.csv"), &to_csv(&truth.blinks, &["start_idx", "end_idx"]))?;
    let mut json = serde_json::to_string_pretty(meta).expect("meta serializes");
    json.push('\n');
    write_text(&dir.join("meta.json"), &json)
}

pub fn read_meta(dir: &Path) -> CliResult<ScenarioMeta> {
    let path = dir.join("meta.json");
    let text = fs::read_to_string(&path).map_err(|e| CliError::read(&path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn require(dir: &Path, file: &str) -> CliResult<PathBuf> {
    let p = dir.join(file);
    if p.is_file() {
        Ok(p)
    } else {
        Err(CliError::Usage(format!("{}: missing {file}", dir.display())))
    }
}

pub fn read_ground_truth(dir: &Path, fs_hz: Option<f64>) -> CliResult<GroundTruth> {
    let mut sigs = Vec::with_capacity(SIGNALS.len());
    for name in SIGNALS {
        sigs.push(read_signal_csv(&require(dir, &format!("{name}.csv"))?, fs_hz)?);
    }
    let events = read_truth_events(&require(dir, "events.csv")?)?;
    let blinks: Vec<TrueBlink> = from_csv(&require(dir, "blinks.csv")?)?;
    let mut it = sigs.into_iter();
    let mut next = || it.next().expect("five signals");
    Ok(GroundTruth {
        raw: next(),
        clean: next(),
        drift: next(),
        noise: next(),
        gaze: next(),
        events,
        blinks,
    })
}

/// Loads what scoring needs: raw, gaze and the true events.
pub fn read_eval_scenario(dir: &Path, fs_hz: Option<f64>) -> CliResult<EvalScenario> {
    let raw = read_signal_csv(&require(dir, "raw.csv")?, fs_hz)?;
    let gaze = read_signal_csv(&require(dir, "gaze.csv")?, fs_hz)?;
    let events = read_truth_events(&require(dir, "events.csv")?)?;
    if raw.len() != gaze.len() {
        return Err(CliError::Usage(format!("{}: raw.csv and gaze.csv differ in length", dir.display())));
    }
    if let Some(e) = events.iter().find(|e| e.end_idx >= raw.len() || e.start_idx >= e.end_idx) {
        return Err(CliError::Usage(format!(
            "{}: event [{}, {}] is out of range",
            dir.display(),
            e.start_idx,
            e.end_idx
        )));
    }
    Ok(EvalScenario {
        name: dir.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
        raw,
        gaze,
        events,
    })
}

/// Scenario directories of a corpus, sorted by name.
pub fn list_corpus(corpus: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = fs::read_dir(corpus).map_err(|e| CliError::read(corpus, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::read(corpus, e))?;
        let p = entry.path();
        if p.is_dir() {
            dirs.push(p);
        }
    }
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Usage(format!("{}: no scenario directories", corpus.display())));
    }
    Ok(dirs)
}
