//! Monte-Carlo experiment runner: every algorithm in a cell sees the same
//! sample stream, and the hindsight relaxation is solved on that stream.

mod output;
mod report;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use output::{format_sig9, write_aggregate_csv, write_failures_csv, write_raw_csv, write_trace_csv};
pub use report::{aggregate, power_fit, sqrt_t_fit, CellSummary, PowerFit, RegretReport, BENCHMARK_KIND};

use crate::lp::solve_hindsight_relaxation;
use crate::model::{InputModel, OrderSample};
use crate::policies::{simulate, Algorithm, ConstantsLedger, PolicyConfig, PolicyError, TrialResult};
use crate::rng::{stable_hash, trial_seed};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("inventory trace was not recorded for this run")]
    TraceDisabled,
    #[error("resource {resource} out of range for m = {m}")]
    NoSuchResource { resource: usize, m: usize },
    #[error("power fit needs positive values at {needed}+ distinct horizons")]
    DegenerateData { needed: usize },
    #[error("algorithm `{0}` is not part of the experiment")]
    UnknownAlgorithm(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// A request to record one trial's inventory trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRequest {
    pub algorithm: Algorithm,
    pub horizon: usize,
    #[serde(default)]
    pub trial: usize,
    #[serde(default)]
    pub resource: usize,
    #[serde(default = "default_downsample")]
    pub downsample: usize,
}

fn default_downsample() -> usize {
    500
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub id: String,
    pub model: InputModel,
    pub algorithms: Vec<PolicyConfig>,
    pub horizons: Vec<usize>,
    pub trials: usize,
    pub master_seed: u64,
    /// Worker count; `None` uses the available parallelism.
    pub threads: Option<usize>,
    /// Where CSVs go; `None` keeps results in memory only.
    pub output_dir: Option<PathBuf>,
    pub trace: Option<TraceRequest>,
}

impl ExperimentSpec {
    pub fn new(id: impl Into<String>, model: InputModel, algorithms: Vec<PolicyConfig>) -> Self {
        ExperimentSpec {
            id: id.into(),
            model,
            algorithms,
            horizons: Vec::new(),
            trials: 1,
            master_seed: 0,
            threads: None,
            output_dir: None,
            trace: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::InvalidSpec(m.into()));
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if self.horizons.is_empty() {
            return bad("no horizons given");
        }
        if self.horizons.windows(2).any(|w| w[0] >= w[1]) {
            return bad("horizons must be strictly ascending");
        }
        if self.algorithms.is_empty() {
            return bad("no policies given");
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1");
        }
        for cfg in &self.algorithms {
            cfg.validate()?;
        }
        if let Some(t) = &self.trace {
            if !self.algorithms.iter().any(|c| c.algorithm == t.algorithm) {
                return Err(HarnessError::UnknownAlgorithm(t.algorithm.label().into()));
            }
            if t.resource >= self.model.m {
                return Err(HarnessError::NoSuchResource {
                    resource: t.resource,
                    m: self.model.m,
                });
            }
            if t.downsample == 0 {
                return bad("trace downsample must be at least 1");
            }
        }
        Ok(())
    }

    /// Seed of trial `trial` at horizon `horizon`, shared by all algorithms.
    pub fn seed_for(&self, horizon: usize, trial: usize) -> u64 {
        let cell = stable_hash(&format!("{}/T={}", self.model.name, horizon));
        trial_seed(self.master_seed, cell, trial as u64)
    }

    pub fn samples_for(&self, horizon: usize, trial: usize) -> Vec<OrderSample> {
        self.model
            .sampler(self.seed_for(horizon, trial))
            .take(horizon)
            .collect()
    }
}

/// One raw-CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub experiment_id: String,
    pub algorithm: String,
    pub model: String,
    pub horizon: usize,
    pub trial: usize,
    pub seed: u64,
    pub reward: f64,
    pub hindsight: f64,
    pub regret: f64,
    pub stockouts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialFailure {
    pub algorithm: String,
    pub horizon: usize,
    pub trial: usize,
    pub seed: u64,
    pub error: String,
}

/// Per-`(algorithm, T)` constants, logged next to the CSVs.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsRecord {
    pub algorithm: String,
    pub horizon: usize,
    pub ledger: ConstantsLedger,
}

/// A downsampled inventory trajectory of one resource.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryTrace {
    pub algorithm: String,
    pub horizon: usize,
    pub trial: usize,
    pub resource: usize,
    /// `(t, ℓ_{j,t})` with `t` running from 1 to `T + 1`.
    pub points: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: RegretReport,
    pub records: Vec<TrialRecord>,
    pub failures: Vec<TrialFailure>,
    pub constants: Vec<ConstantsRecord>,
    pub trace: Option<InventoryTrace>,
}

impl ExperimentOutput {
    /// Cells where every trial failed.
    pub fn dead_cells(&self) -> Vec<&CellSummary> {
        self.report
            .cells
            .iter()
            .filter(|c| c.trials == 0 && c.failures > 0)
            .collect()
    }
}

/// Relative slack allowed when comparing a reward with the relaxation value.
pub const DOMINANCE_TOL: f64 = 1e-8;

fn run_trial(
    spec: &ExperimentSpec,
    horizon: usize,
    trial: usize,
) -> Vec<Result<TrialRecord, TrialFailure>> {
    let seed = spec.seed_for(horizon, trial);
    let samples = spec.samples_for(horizon, trial);
    let fail = |cfg: &PolicyConfig, error: String| TrialFailure {
        algorithm: cfg.algorithm.label().into(),
        horizon,
        trial,
        seed,
        error,
    };
    let hindsight = match solve_hindsight_relaxation(&samples) {
        Ok(h) => h.value,
        Err(e) => {
            return spec
                .algorithms
                .iter()
                .map(|c| Err(fail(c, format!("hindsight: {e}"))))
                .collect()
        }
    };
    spec.algorithms
        .iter()
        .map(|cfg| {
            let r = simulate(&spec.model, &samples, cfg).map_err(|e| fail(cfg, e.to_string()))?;
            if r.reward > hindsight + DOMINANCE_TOL * hindsight.abs().max(1.0) {
                return Err(fail(
                    cfg,
                    format!("reward {} exceeds hindsight {}", r.reward, hindsight),
                ));
            }
            Ok(TrialRecord {
                experiment_id: spec.id.clone(),
                algorithm: r.algorithm,
                model: spec.model.name.clone(),
                horizon,
                trial,
                seed,
                reward: r.reward,
                hindsight,
                regret: hindsight - r.reward,
                stockouts: r.stockouts,
            })
        })
        .collect()
}

/// Runs every `(algorithm, T, trial)` of `spec`. CSVs are rewritten after
/// each horizon so an interrupted run leaves the finished cells on disk.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput, HarnessError> {
    spec.validate()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = spec.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut constants = Vec::new();
    for &horizon in &spec.horizons {
        for cfg in &spec.algorithms {
            constants.push(ConstantsRecord {
                algorithm: cfg.algorithm.label().into(),
                horizon,
                ledger: ConstantsLedger::compute(&spec.model, horizon, &cfg.overrides)?,
            });
        }
        let per_trial: Vec<_> = pool.install(|| {
            (0..spec.trials)
                .into_par_iter()
                .map(|trial| run_trial(spec, horizon, trial))
                .collect()
        });
        // Order rows by algorithm, then trial.
        for a in 0..spec.algorithms.len() {
            for row in &per_trial {
                match &row[a] {
                    Ok(r) => records.push(r.clone()),
                    Err(f) => failures.push(f.clone()),
                }
            }
        }
        if let Some(dir) = &spec.output_dir {
            write_outputs(spec, dir, &records, &failures, &constants)?;
        }
    }

    let report = aggregate(spec, &records, &failures);
    let trace = match &spec.trace {
        Some(req) => Some(trace_cell(spec, req)?),
        None => None,
    };
    if let Some(dir) = &spec.output_dir {
        output::write_atomic(&dir.join(format!("{}_aggregate.csv", spec.id)), |w| {
            write_aggregate_csv(&report, w)
        })?;
        if let Some(t) = &trace {
            output::write_atomic(&dir.join(format!("{}_trace.csv", spec.id)), |w| {
                write_trace_csv(&spec.id, &spec.model.name, t, w)
            })?;
        }
    }
    Ok(ExperimentOutput {
        report,
        records,
        failures,
        constants,
        trace,
    })
}

fn write_outputs(
    spec: &ExperimentSpec,
    dir: &std::path::Path,
    records: &[TrialRecord],
    failures: &[TrialFailure],
    constants: &[ConstantsRecord],
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    output::write_atomic(&dir.join(format!("{}_raw.csv", spec.id)), |w| {
        write_raw_csv(records, w)
    })?;
    output::write_atomic(&dir.join(format!("{}_failures.csv", spec.id)), |w| {
        write_failures_csv(&spec.id, failures, w)
    })?;
    output::write_atomic(&dir.join(format!("{}_constants.jsonl", spec.id)), |w| {
        for c in constants {
            let line = serde_json::to_string(c)
                .map_err(|e| HarnessError::InvalidSpec(format!("constants ledger: {e}")))?;
            w.extend_from_slice(line.as_bytes());
            w.push(b'\n');
        }
        Ok(())
    })?;
    Ok(())
}

/// Replays one trial with trace recording on and downsamples the trajectory.
pub fn trace_cell(spec: &ExperimentSpec, req: &TraceRequest) -> Result<InventoryTrace, HarnessError> {
    let cfg = spec
        .algorithms
        .iter()
        .find(|c| c.algorithm == req.algorithm)
        .ok_or_else(|| HarnessError::UnknownAlgorithm(req.algorithm.label().into()))?
        .clone()
        .with_trace(true);
    let samples = spec.samples_for(req.horizon, req.trial);
    let result = simulate(&spec.model, &samples, &cfg)?;
    Ok(InventoryTrace {
        algorithm: result.algorithm.clone(),
        horizon: req.horizon,
        trial: req.trial,
        resource: req.resource,
        points: inventory_trace(&result, req.resource, req.downsample)?,
    })
}

/// `ℓ_{j,t}` for `t = 1..=T+1`, downsampled to at most `downsample` evenly
/// spaced points that always include both ends.
pub fn inventory_trace(
    result: &TrialResult,
    resource: usize,
    downsample: usize,
) -> Result<Vec<(usize, f64)>, HarnessError> {
    let trace = result
        .inventory_trace
        .as_ref()
        .ok_or(HarnessError::TraceDisabled)?;
    let m = trace.first().map_or(0, |l| l.len());
    if resource >= m {
        return Err(HarnessError::NoSuchResource { resource, m });
    }
    let len = trace.len();
    let keep = downsample.max(1).min(len);
    let indices: Vec<usize> = if keep == len {
        (0..len).collect()
    } else if keep == 1 {
        vec![0]
    } else {
        let mut v: Vec<usize> = (0..keep)
            .map(|k| ((k as f64) * (len - 1) as f64 / (keep - 1) as f64).round() as usize)
            .collect();
        v.dedup();
        v
    };
    Ok(indices
        .into_iter()
        .map(|i| (i + 1, trace[i][resource]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hard_instance;

    fn reject_all_spec() -> ExperimentSpec {
        ExperimentSpec {
            horizons: vec![1],
            trials: 1,
            ..ExperimentSpec::new(
                "unit",
                build_hard_instance(),
                vec![PolicyConfig::new(Algorithm::RejectAll)],
            )
        }
    }

    #[test]
    fn reject_all_regret_is_single_sample_hindsight() {
        let spec = reject_all_spec();
        let out = run_experiment(&spec).unwrap();
        let r = &out.records[0];
        let s = &spec.samples_for(1, 0)[0];
        let expected = solve_hindsight_relaxation(std::slice::from_ref(s)).unwrap().value;
        assert_eq!(r.reward, 0.0);
        assert_eq!(r.regret, expected);
        assert!(expected > 0.0);
    }

    #[test]
    fn validation_catches_bad_specs() {
        let mut spec = reject_all_spec();
        spec.trials = 0;
        assert!(spec.validate().is_err());
        let mut spec = reject_all_spec();
        spec.horizons = vec![10, 5];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn downsample_keeps_ends() {
        let mut state = crate::policies::SimState::new(1).record_trace(true);
        let s = OrderSample::new(1.0, vec![1.0], vec![1.0]);
        for _ in 0..99 {
            state.skip(&s);
        }
        let r = state.into_result("reject-all");
        let pts = inventory_trace(&r, 0, 10).unwrap();
        assert_eq!(pts.len(), 10);
        assert_eq!(pts[0], (1, 0.0));
        assert_eq!(pts[9], (100, 99.0));
        assert!(inventory_trace(&r, 1, 10).is_err());
    }

    #[test]
    fn trace_disabled_reported() {
        let r = crate::policies::SimState::new(1).into_result("x");
        assert!(matches!(
            inventory_trace(&r, 0, 10),
            Err(HarnessError::TraceDisabled)
        ));
    }
}
