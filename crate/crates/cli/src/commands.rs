use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use fgd_core::benchmark::{build_corpus, dedrift_cell, evaluate_method, ComparisonReport, EvalScenario};
use fgd_core::blink::{detect_blinks, remove_blinks};
use fgd_core::eval::{build_report, events_from_truth, fit_regression, format_table, predict_gaze, saccade_errors};
use fgd_core::io::read_signal_csv;
use fgd_core::methods::{run_method, MethodId};
use fgd_core::reconstruct::format_segments_csv;
use fgd_core::saccade::{detect_saccades, format_events_csv};
use fgd_core::signal::differentiate;
use fgd_core::simulate::{inject_drift, DriftSpec};

use crate::config::ToolkitConfig;
use crate::error::{CliError, CliResult};
use crate::scenario::{
    create_dir, list_corpus, read_eval_scenario, read_ground_truth, read_meta, write_ground_truth, write_signal,
    write_text, ScenarioMeta, DRIFT_MODEL,
};

#[derive(Debug, Parser)]
#[command(name = "fgd", version, about = "Saccade-guided drift removal for horizontal EOG")]
pub struct Cli {
    /// JSON configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for synthetic data.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sampling rate for generated data, and forced onto loaded signals.
    #[arg(long = "fs-hz", global = true)]
    pub fs_hz: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a corpus of drift scenarios with ground truth.
    Synth(SynthArgs),
    /// Replace the drift of a scenario directory.
    InjectDrift(InjectArgs),
    /// Detect blink pulses and interpolate across them.
    BlinkRemove(BlinkArgs),
    /// Detect saccades and write their windows.
    Detect(DetectArgs),
    /// De-drift a signal with one method.
    Dedrift(DedriftArgs),
    /// Run several methods over a corpus and report gaze errors.
    Compare(CompareArgs),
    /// Score one de-drifted signal against a scenario's reference gaze.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub out_dir: PathBuf,
    #[arg(long)]
    pub n_scenarios: Option<usize>,
    #[arg(long)]
    pub noise_std: Option<f64>,
    #[arg(long)]
    pub blink_rate: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    pub scenario_dir: PathBuf,
    /// DriftSpec JSON.
    pub drift: PathBuf,
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct BlinkArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long)]
    pub k_blink: Option<f64>,
    #[arg(long)]
    pub bipolar: bool,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long)]
    pub k_peak: Option<f64>,
    #[arg(long)]
    pub k_window: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DedriftArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    #[arg(long)]
    pub method: Option<MethodId>,
    #[arg(long)]
    pub poly_order: Option<usize>,
    #[arg(long)]
    pub cutoff_hz: Option<f64>,
    /// Wavelet level for both wavelet-based methods.
    #[arg(long)]
    pub level: Option<usize>,
    /// Also write trend, baseline, events and segments here.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub corpus_dir: PathBuf,
    pub out_dir: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<MethodId>>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    pub dedrifted: PathBuf,
    pub scenario_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Fit the regression on this de-drifted signal instead of the evaluated one.
    #[arg(long, requires = "fit_reference")]
    pub fit_signal: Option<PathBuf>,
    /// Reference gaze for `--fit-signal`.
    #[arg(long, requires = "fit_signal")]
    pub fit_reference: Option<PathBuf>,
    #[arg(long)]
    pub include_center: bool,
}

/// Builds the effective configuration: defaults, then the file, then flags.
pub fn effective_config(cli: &Cli) -> CliResult<ToolkitConfig> {
    let mut c = match &cli.config {
        Some(p) => ToolkitConfig::load(p)?,
        None => ToolkitConfig::default(),
    };
    if let Some(seed) = cli.seed {
        c.sim.synth.seed = seed;
    }
    if let Some(fs) = cli.fs_hz {
        c.sim.synth.fs_hz = fs;
        c.io.fs_hz = Some(fs);
    }
    match &cli.command {
        Command::Synth(a) => {
            set(&mut c.sim.n_scenarios, a.n_scenarios);
            set(&mut c.sim.synth.noise_std_v, a.noise_std);
            set(&mut c.sim.synth.blink_rate_hz, a.blink_rate);
        }
        Command::InjectDrift(_) => {}
        Command::BlinkRemove(a) => {
            set(&mut c.blink.k_blink, a.k_blink);
            c.blink.bipolar |= a.bipolar;
        }
        Command::Detect(a) => {
            set(&mut c.detect.k_peak, a.k_peak);
            set(&mut c.detect.k_window, a.k_window);
        }
        Command::Dedrift(a) => {
            set(&mut c.run.method, a.method);
            set(&mut c.methods.poly_order, a.poly_order);
            set(&mut c.methods.cutoff_hz, a.cutoff_hz);
            if let Some(level) = a.level {
                c.fgd.level = level;
                c.methods.wavelet.level = level;
            }
            if a.diagnostics.is_some() {
                c.io.diagnostics_dir = a.diagnostics.clone();
            }
        }
        Command::Compare(a) => {
            if let Some(m) = &a.methods {
                c.run.compare_methods = m.clone();
            }
        }
        Command::Evaluate(a) => {
            if a.fit_signal.is_some() {
                c.io.fit_signal = a.fit_signal.clone();
                c.io.fit_reference = a.fit_reference.clone();
            }
            c.eval.include_center |= a.include_center;
        }
    }
    c.validate()?;
    Ok(c)
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn write_config(dir: &Path, cfg: &ToolkitConfig) -> CliResult<()> {
    write_text(&dir.join("effective_config.json"), &cfg.to_json())
}

/// Directory holding an output file, created if needed.
fn output_dir(file: &Path) -> CliResult<PathBuf> {
    let dir = match file.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    create_dir(&dir)?;
    Ok(dir)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let cfg = effective_config(cli)?;
    match &cli.command {
        Command::Synth(a) => synth(a, &cfg),
        Command::InjectDrift(a) => inject(a, &cfg),
        Command::BlinkRemove(a) => blink_remove(a, &cfg),
        Command::Detect(a) => detect(a, &cfg),
        Command::Dedrift(a) => dedrift(a, &cfg),
        Command::Compare(a) => compare(a, &cfg),
        Command::Evaluate(a) => evaluate(a, &cfg),
    }
}

fn synth(a: &SynthArgs, cfg: &ToolkitConfig) -> CliResult<()> {
    let corpus = build_corpus(&cfg.sim)?;
    create_dir(&a.out_dir)?;
    write_config(&a.out_dir, cfg)?;
    let mut total = 0;
    for s in &corpus {
        let name = format!("scenario_{:02}", s.id);
        let dir = a.out_dir.join(&name);
        let meta = ScenarioMeta {
            scenario: name,
            fs_hz: cfg.sim.synth.fs_hz,
            n_samples: s.truth.raw.len(),
            n_saccades: s.truth.events.len(),
            synth: cfg.sim.synth,
            drift: s.drift_spec.clone(),
            drift_model: DRIFT_MODEL.into(),
        };
        write_ground_truth(&dir, &s.truth, &meta)?;
        write_config(&dir, cfg)?;
        total += s.truth.events.len();
    }
    eprintln!(
        "wrote {} scenarios with {total} saccades to {}",
        corpus.len(),
        a.out_dir.display()
    );
    Ok(())
}

fn inject(a: &InjectArgs, cfg: &ToolkitConfig) -> CliResult<()> {
    let truth = read_ground_truth(&a.scenario_dir, cfg.io.fs_hz)?;
    let mut meta = read_meta(&a.scenario_dir)?;
    let text = std::fs::read_to_string(&a.drift).map_err(|e| CliError::read(&a.drift, e))?;
    let spec: DriftSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", a.drift.display())))?;
    let out = inject_drift(&truth, &spec)?;
    meta.drift = spec;
    meta.scenario = a
        .out_dir
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    write_ground_truth(&a.out_dir, &out, &meta)?;
    write_config(&a.out_dir, cfg)
}

fn blink_remove(a: &BlinkArgs, cfg: &ToolkitConfig) -> CliResult<()> {
    let raw = read_signal_csv(&a.input, cfg.io.fs_hz)?;
    let blinks = detect_blinks(&raw, &cfg.blink)?;
    let cleaned = remove_blinks(&raw, &blinks)?;
    let dir = output_dir(&a.output)?;
    write_signal(&a.output, &cleaned)?;
    let mut csv = String::from("start_idx,peak_idx,end_idx\n");
    for b in &blinks {
        csv.push_str(&format!("{},{},{}\n", b.start_idx, b.peak_idx, b.end_idx));
    }
    let stem = a.output.file_stem().map_or_else(|| "output".into(), |s| s.to_string_lossy().into_owned());
    write_text(&dir.join(format!("{stem}.blinks.csv")), &csv)?;
    write_config(&dir, cfg)?;
    eprintln!("removed {} blinks", blinks.len());
    Ok(())
}

fn detect(a: &DetectArgs, cfg: &ToolkitConfig) -> CliResult<()> {
    let raw = read_signal_csv(&a.input, cfg.io.fs_hz)?;
    let deriv = differentiate(&raw, cfg.detect.lag_n)?;
    let events = detect_saccades(&deriv, &cfg.detect)?;
    let dir = output_dir(&a.output)?;
    write_text(&a.output, &format_events_csv(&events))?;
    write_config(&dir, cfg)?;
    eprintln!("detected {} saccades", events.len());
    Ok(())
}

fn dedrift(a: &DedriftArgs, cfg: &ToolkitConfig) -> CliResult<()> {
    let raw = read_signal_csv(&a.input, cfg.io.fs_hz)?;
    let run = run_method(&raw, cfg.run.method, &cfg.methods, &cfg.fgd_config())?;
    let dir = output_dir(&a.output)?;
    write_signal(&a.output, &run.result.dedrifted)?;
    write_config(&dir, cfg)?;
    if let Some(diag) = &cfg.io.diagnostics_dir {
        create_dir(diag)?;
        write_signal(&diag.join("trend.csv"), &run.result.trend)?;
        if let Some(f) = &run.fgd {
            write_signal(&diag.join("baseline.csv"), &f.baseline)?;
            write_text(&diag.join("events.csv"), &format_events_csv(&f.events))?;
            write_text(&diag.join("segments.csv"), &format_segments_csv(&f.segments))?;
            for w in &f.warnings {
                eprintln!("warning: {w}");
            }
        }
        write_config(diag, cfg)?;
    }
    Ok(())
}

fn compare(a: &CompareArgs, cfg: &ToolkitConfig) -> CliResult<()> {
    let dirs = list_corpus(&a.corpus_dir)?;
    let scenarios: Vec<EvalScenario> = dirs
        .iter()
        .map(|d| read_eval_scenario(d, cfg.io.fs_hz))
        .collect::<CliResult<_>>()?;
    let methods = &cfg.run.compare_methods;
    let fgd = cfg.fgd_config();

    // Every (method, scenario) cell is independent; collect keeps the order.
    let cells: Vec<(MethodId, usize)> = methods
        .iter()
        .flat_map(|&m| (0..scenarios.len()).map(move |i| (m, i)))
        .collect();
    let outputs = cells
        .par_iter()
        .map(|&(m, i)| dedrift_cell(&scenarios[i].raw, m, &cfg.methods, &fgd))
        .collect::<Result<Vec<_>, _>>()?;
    let evals = methods
        .iter()
        .zip(outputs.chunks(scenarios.len()))
        .map(|(&m, outs)| evaluate_method(&scenarios, outs, m, &cfg.eval))
        .collect::<Result<Vec<_>, _>>()?;
    let report = ComparisonReport::new(evals);

    create_dir(&a.out_dir)?;
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    write_text(&a.out_dir.join("report.json"), &json)?;
    let text = report.to_text();
    write_text(&a.out_dir.join("report.txt"), &text)?;
    write_config(&a.out_dir, cfg)?;
    print!("{text}");
    Ok(())
}

fn evaluate(a: &EvaluateArgs, cfg: &ToolkitConfig) -> CliResult<()> {
    let dedrifted = read_signal_csv(&a.dedrifted, cfg.io.fs_hz)?;
    let scenario = read_eval_scenario(&a.scenario_dir, cfg.io.fs_hz)?;
    let reg = match (&cfg.io.fit_signal, &cfg.io.fit_reference) {
        (Some(s), Some(r)) => fit_regression(&read_signal_csv(s, cfg.io.fs_hz)?, &read_signal_csv(r, cfg.io.fs_hz)?)?,
        _ => fit_regression(&dedrifted, &scenario.gaze)?,
    };
    let pred = predict_gaze(&dedrifted, &reg)?;
    let errs = saccade_errors(&pred, &scenario.gaze, &events_from_truth(&scenario.events), &cfg.eval)?;
    let targets = scenario
        .events
        .iter()
        .enumerate()
        .map(|(i, e)| (i, e.to_target.clone()))
        .collect();
    let label = a
        .dedrifted
        .file_stem()
        .map_or_else(|| "signal".into(), |s| s.to_string_lossy().into_owned());
    let report = build_report(&errs, &targets, &label, cfg.eval.include_center)?;

    create_dir(&a.out_dir)?;
    let out = serde_json::json!({ "regression": reg, "report": report, "errors": errs });
    let mut json = serde_json::to_string_pretty(&out).expect("report serializes");
    json.push('\n');
    write_text(&a.out_dir.join("report.json"), &json)?;
    let text = format_table(std::slice::from_ref(&report));
    write_text(&a.out_dir.join("report.txt"), &text)?;
    write_config(&a.out_dir, cfg)?;
    print!("{text}");
    Ok(())
}
