//! The synthetic comparison benchmark: one base trial with several injected
//! drift scenarios, each de-drifted by every method and scored by gaze error.
//!
//! The gaze regression for scenario `i` is fitted on scenario `i + 1`
//! (cyclically) with the same method, so every saccade is scored out of
//! sample.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::eval::{
    build_report, events_from_truth, fit_regression, format_table, predict_gaze, saccade_errors, EvalConfig,
    EvalReport, GazeRegression, SaccadeError,
};
use crate::methods::{run_method, MethodId, MethodSettings};
use crate::pipeline::FgdConfig;
use crate::signal::SampledSignal;
use crate::simulate::{
    default_trial_script, inject_drift, random_drift_scenarios, synthesize, DriftRanges, DriftSpec, GroundTruth,
    SynthParams, TrialScript, TrueSaccade,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub n_scenarios: usize,
    /// Noise, blinks and sampling of the base trial; its seed also derives
    /// the drift scenarios.
    pub synth: SynthParams,
    pub script: TrialScript,
    /// `None` derives the ranges from the script.
    pub drift_ranges: Option<DriftRanges>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            n_scenarios: 10,
            synth: SynthParams::default(),
            script: default_trial_script(),
            drift_ranges: None,
        }
    }
}

impl BenchmarkConfig {
    pub fn ranges(&self) -> DriftRanges {
        self.drift_ranges.unwrap_or_else(|| DriftRanges::for_script(&self.script))
    }

    /// Seed of the drift scenario generator, kept apart from the noise seed.
    pub fn drift_seed(&self) -> u64 {
        self.synth.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: usize,
    pub drift_spec: DriftSpec,
    pub truth: GroundTruth,
}

/// Synthesizes the base trial once and injects one drift per scenario.
pub fn build_corpus(cfg: &BenchmarkConfig) -> Result<Vec<Scenario>> {
    let base = synthesize(&cfg.script, &cfg.synth)?;
    let specs = random_drift_scenarios(cfg.n_scenarios, cfg.drift_seed(), &cfg.ranges())?;
    specs
        .into_iter()
        .enumerate()
        .map(|(id, drift_spec)| {
            let truth = inject_drift(&base, &drift_spec)?;
            Ok(Scenario { id, drift_spec, truth })
        })
        .collect()
}

/// What scoring needs from a scenario; also loadable from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalScenario {
    pub name: String,
    pub raw: SampledSignal,
    pub gaze: SampledSignal,
    pub events: Vec<TrueSaccade>,
}

impl From<&Scenario> for EvalScenario {
    fn from(s: &Scenario) -> Self {
        Self {
            name: format!("scenario_{:02}", s.id),
            raw: s.truth.raw.clone(),
            gaze: s.truth.gaze.clone(),
            events: s.truth.events.clone(),
        }
    }
}

/// Scores of one method across a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodEvaluation {
    pub method: MethodId,
    pub report: EvalReport,
    /// Regression fitted on each scenario's own output.
    pub regressions: Vec<GazeRegression>,
    /// Per scenario, per ground-truth saccade.
    pub errors: Vec<Vec<SaccadeError>>,
}

/// Index of the scenario whose regression scores scenario `i`.
pub fn fit_partner(i: usize, n: usize) -> usize {
    (i + 1) % n
}

pub fn dedrift_cell(
    raw: &SampledSignal,
    method: MethodId,
    settings: &MethodSettings,
    fgd: &FgdConfig,
) -> Result<SampledSignal> {
    Ok(run_method(raw, method, settings, fgd)?.result.dedrifted)
}

/// Fits, predicts and scores a method's de-drifted outputs.
pub fn evaluate_method(
    scenarios: &[EvalScenario],
    dedrifted: &[SampledSignal],
    method: MethodId,
    eval: &EvalConfig,
) -> Result<MethodEvaluation> {
    if scenarios.is_empty() || scenarios.len() != dedrifted.len() {
        return Err(invalid("need one de-drifted signal per scenario, and at least one scenario"));
    }
    let regressions = scenarios
        .iter()
        .zip(dedrifted)
        .map(|(s, d)| fit_regression(d, &s.gaze))
        .collect::<Result<Vec<_>>>()?;
    let n = scenarios.len();
    let mut all_errors = Vec::new();
    let mut per_scenario = Vec::with_capacity(n);
    let mut targets = BTreeMap::new();
    for (i, (s, d)) in scenarios.iter().zip(dedrifted).enumerate() {
        let pred = predict_gaze(d, &regressions[fit_partner(i, n)])?;
        let errs = saccade_errors(&pred, &s.gaze, &events_from_truth(&s.events), eval)?;
        let offset = all_errors.len();
        for (e, truth) in errs.iter().zip(&s.events) {
            targets.insert(offset + e.event_idx, truth.to_target.clone());
            all_errors.push(SaccadeError {
                event_idx: offset + e.event_idx,
                ..*e
            });
        }
        per_scenario.push(errs);
    }
    let report = build_report(&all_errors, &targets, method.name(), eval.include_center)?;
    Ok(MethodEvaluation {
        method,
        report,
        regressions,
        errors: per_scenario,
    })
}

/// Runs and scores every listed method, sequentially.
pub fn run_comparison(
    scenarios: &[EvalScenario],
    methods: &[MethodId],
    settings: &MethodSettings,
    fgd: &FgdConfig,
    eval: &EvalConfig,
) -> Result<ComparisonReport> {
    let evals = methods
        .iter()
        .map(|&m| {
            let out = scenarios
                .iter()
                .map(|s| dedrift_cell(&s.raw, m, settings, fgd))
                .collect::<Result<Vec<_>>>()?;
            evaluate_method(scenarios, &out, m, eval)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport::new(evals))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub methods: Vec<MethodEvaluation>,
    /// Relative reduction of the feature-guided overall mean error against
    /// the best other method, in percent.
    pub fgd_reduction_pct: Option<f64>,
    pub best_alternative: Option<MethodId>,
}

impl ComparisonReport {
    pub fn new(methods: Vec<MethodEvaluation>) -> Self {
        let fgd = methods.iter().find(|m| m.method == MethodId::Fgd);
        let best = methods
            .iter()
            .filter(|m| m.method != MethodId::Fgd)
            .min_by(|a, b| a.report.overall_mean_deg.total_cmp(&b.report.overall_mean_deg));
        let (fgd_reduction_pct, best_alternative) = match (fgd, best) {
            (Some(f), Some(b)) if b.report.overall_mean_deg > 0.0 => (
                Some(100.0 * (1.0 - f.report.overall_mean_deg / b.report.overall_mean_deg)),
                Some(b.method),
            ),
            _ => (None, None),
        };
        Self {
            methods,
            fgd_reduction_pct,
            best_alternative,
        }
    }

    pub fn get(&self, method: MethodId) -> Option<&MethodEvaluation> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn to_text(&self) -> String {
        let reports: Vec<EvalReport> = self.methods.iter().map(|m| m.report.clone()).collect();
        let mut out = format_table(&reports);
        out.push_str("\nMean absolute gaze error in degrees; Average is over saccades, Target average over rows.\n");
        if let (Some(pct), Some(best)) = (self.fgd_reduction_pct, self.best_alternative) {
            let _ = writeln!(out, "fgd reduction against {best}: {pct:.2}%");
        }
        out
    }
}
