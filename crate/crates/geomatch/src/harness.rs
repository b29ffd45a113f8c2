//! Monte Carlo sweeps over `(n, d, σ-multiple)` grids.
//!
//! Noise is given as a multiple of [`threshold_sigma`]. The seed of every
//! trial is `derive_seed(master_seed, [n, d, multiple.to_bits(), kind, trial])`
//! (see [`geomatch_core::seeding`]), so records do not depend on grid order,
//! scheduling or thread count.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use geomatch_core::seeding::derive_seed;
use geomatch_core::{
    match_distance_with, observe, sample_instance, score, threshold_sigma, umeyama_match_with,
    MatchOptions, ModelKind, SignMatrix, ThresholdMode, TruthMode,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_trials() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub d_values: Vec<usize>,
    pub sigma_multipliers: Vec<f64>,
    pub threshold_mode: ThresholdMode,
    pub model_kind: ModelKind,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub keep_trace: bool,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_owned()));
        if self.n_values.is_empty() || self.d_values.is_empty() || self.sigma_multipliers.is_empty()
        {
            return fail("n_values, d_values and sigma_multipliers must be non-empty");
        }
        if self.trials == 0 {
            return fail("trials must be at least 1");
        }
        let n_min = *self.n_values.iter().min().unwrap();
        if n_min < 2 {
            return fail("every n must be at least 2");
        }
        for &d in &self.d_values {
            if d == 0 || d > geomatch_core::matcher::MAX_SIGN_DIM || d > n_min {
                return fail("every d must satisfy 1 <= d <= min(20, min(n_values))");
            }
        }
        if self
            .sigma_multipliers
            .iter()
            .any(|m| !m.is_finite() || *m < 0.0)
        {
            return fail("sigma multipliers must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub d: usize,
    pub sigma: f64,
    pub sigma_multiple: f64,
    pub model_kind: ModelKind,
    pub trial_index: usize,
    pub seed: u64,
    pub exact: bool,
    pub mismatched_vertices: usize,
    pub hamming_entries: usize,
    pub within_bound: bool,
    pub objective: f64,
    pub runtime_ms: f64,
}

impl TrialRecord {
    /// Equality on everything except wall-clock time.
    pub fn same_outcome(&self, other: &Self) -> bool {
        Self {
            runtime_ms: 0.0,
            ..self.clone()
        } == Self {
            runtime_ms: 0.0,
            ..other.clone()
        }
    }
}

fn kind_code(kind: ModelKind) -> u64 {
    match kind {
        ModelKind::DotProduct => 0,
        ModelKind::Distance => 1,
    }
}

pub fn trial_seed(
    master_seed: u64,
    n: usize,
    d: usize,
    sigma_multiple: f64,
    kind: ModelKind,
    trial: usize,
) -> u64 {
    derive_seed(
        master_seed,
        &[
            n as u64,
            d as u64,
            sigma_multiple.to_bits(),
            kind_code(kind),
            trial as u64,
        ],
    )
}

/// Sample, observe, match and score one instance. `sigma_multiple` is
/// reported against the exact-recovery scale; sweeps overwrite it with the
/// configured multiple.
pub fn run_trial(
    n: usize,
    d: usize,
    sigma: f64,
    model_kind: ModelKind,
    seed: u64,
) -> Result<TrialRecord> {
    run_trial_traced(n, d, sigma, model_kind, seed, false).map(|(r, _)| r)
}

/// Per-sign objectives `MAX(Ψ)` of one trial.
pub type SignTrace = Vec<(SignMatrix, f64)>;

/// As [`run_trial`], optionally keeping the per-sign objectives.
pub fn run_trial_traced(
    n: usize,
    d: usize,
    sigma: f64,
    model_kind: ModelKind,
    seed: u64,
    keep_trace: bool,
) -> Result<(TrialRecord, Option<SignTrace>)> {
    let start = Instant::now();
    let inst = sample_instance(n, d, sigma, seed, TruthMode::UniformRandom)?;
    let obs = observe(&inst, model_kind);
    let options = MatchOptions { keep_trace };
    let result = match model_kind {
        ModelKind::DotProduct => umeyama_match_with(&obs.a, &obs.b, d, options)?,
        ModelKind::Distance => match_distance_with(&obs.a, &obs.b, d, options)?,
    };
    let s = score(&result.pi_hat, inst.truth(), n, d, sigma)?;
    let record = TrialRecord {
        n,
        d,
        sigma,
        sigma_multiple: sigma / threshold_sigma(n, d, ThresholdMode::Exact),
        model_kind,
        trial_index: 0,
        seed,
        exact: s.exact,
        mismatched_vertices: s.mismatched_vertices,
        hamming_entries: s.hamming_entries,
        within_bound: s.within_bound,
        objective: result.objective,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((record, result.trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub d: usize,
    pub sigma_multiple: f64,
    pub model_kind: ModelKind,
    pub sigma: f64,
    pub trials: usize,
    pub exact_rate: f64,
    pub mean_mismatched_vertices: f64,
    pub bound_rate: f64,
}

impl CellSummary {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let first = &records[0];
        let k = records.len() as f64;
        let rate = |f: fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / k;
        CellSummary {
            n: first.n,
            d: first.d,
            sigma_multiple: first.sigma_multiple,
            model_kind: first.model_kind,
            sigma: first.sigma,
            trials: records.len(),
            exact_rate: rate(|r| r.exact),
            mean_mismatched_vertices: records
                .iter()
                .map(|r| r.mismatched_vertices as f64)
                .sum::<f64>()
                / k,
            bound_rate: rate(|r| r.within_bound),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub n: usize,
    pub d: usize,
    pub sigma_multiple: f64,
    pub trial_index: usize,
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub psi: SignMatrix,
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
    /// Present only when the config asks for traces.
    pub traces: Vec<TrialTrace>,
}

impl SweepResult {
    /// Cell aggregates keyed by `(n, d, σ-multiple bits, kind)`.
    pub fn cell_map(&self) -> BTreeMap<(usize, usize, u64, ModelKind), &CellSummary> {
        self.cells
            .iter()
            .map(|c| ((c.n, c.d, c.sigma_multiple.to_bits(), c.model_kind), c))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

/// Runs the full grid, cell by cell in `n → d → multiple` order. `on_cell`
/// sees each finished cell before the next starts, which lets callers
/// persist partial results.
pub fn run_sweep_with<F>(
    config: &SweepConfig,
    execution: Execution,
    mut on_cell: F,
) -> Result<SweepResult>
where
    F: FnMut(&CellSummary, &[TrialRecord]) -> Result<()>,
{
    config.validate()?;
    let mut result = SweepResult::default();
    for &n in &config.n_values {
        for &d in &config.d_values {
            let base = threshold_sigma(n, d, config.threshold_mode);
            for &multiple in &config.sigma_multipliers {
                let sigma = multiple * base;
                let job = |t: usize| {
                    let seed = trial_seed(config.master_seed, n, d, multiple, config.model_kind, t);
                    run_trial_traced(n, d, sigma, config.model_kind, seed, config.keep_trace).map(
                        |(r, trace)| {
                            (
                                TrialRecord {
                                    sigma_multiple: multiple,
                                    trial_index: t,
                                    ..r
                                },
                                trace,
                            )
                        },
                    )
                };
                let outputs = match execution {
                    Execution::Serial => (0..config.trials).map(job).collect::<Result<Vec<_>>>()?,
                    Execution::Parallel => (0..config.trials)
                        .into_par_iter()
                        .map(job)
                        .collect::<Result<Vec<_>>>()?,
                };
                let mut records = Vec::with_capacity(outputs.len());
                for (record, trace) in outputs {
                    if let Some(trace) = trace {
                        result.traces.push(TrialTrace {
                            n,
                            d,
                            sigma_multiple: multiple,
                            trial_index: record.trial_index,
                            trace: trace
                                .into_iter()
                                .map(|(psi, objective)| TraceEntry { psi, objective })
                                .collect(),
                        });
                    }
                    records.push(record);
                }
                let cell = CellSummary::from_records(&records);
                on_cell(&cell, &records)?;
                result.records.extend(records);
                result.cells.push(cell);
            }
        }
    }
    Ok(result)
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    run_sweep_with(config, Execution::Parallel, |_, _| Ok(()))
}

pub const TRIALS_FILE: &str = "trials.csv";
pub const AGGREGATES_FILE: &str = "aggregates.csv";

/// Streams trial rows and cell aggregates to two CSV writers.
pub struct CsvSink<W: Write> {
    trials: csv::Writer<W>,
    aggregates: csv::Writer<W>,
}

impl<W: Write> CsvSink<W> {
    pub fn new(trials: W, aggregates: W) -> Self {
        Self {
            trials: csv::Writer::from_writer(trials),
            aggregates: csv::Writer::from_writer(aggregates),
        }
    }

    pub fn write_cell(&mut self, cell: &CellSummary, records: &[TrialRecord]) -> Result<()> {
        for r in records {
            self.trials.serialize(r)?;
        }
        self.aggregates.serialize(cell)?;
        self.trials.flush().map_err(|e| Error::io(TRIALS_FILE, e))?;
        self.aggregates
            .flush()
            .map_err(|e| Error::io(AGGREGATES_FILE, e))?;
        Ok(())
    }
}

pub fn records_to_csv(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
