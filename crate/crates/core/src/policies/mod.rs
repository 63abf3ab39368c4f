//! Online accept/reject policies.

mod baseline;
mod bounded;
pub mod constants;
mod finite;
pub mod framework;
mod nondegenerate;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use baseline::{run_baseline_olp, simulate_baseline, BaselineState, ResolveSchedule};
pub use bounded::{run_bounded, simulate_bounded};
pub use constants::{ConstantsLedger, PolicyOverrides};
pub use finite::{run_finite_support, simulate_finite_support};
pub use framework::{
    run_dual_price_framework, simulate_framework, ConstantPrice, Feasibility, PriceProvider,
    SimState,
};
pub use nondegenerate::{
    run_accumulation, run_conversion, run_detection, run_main_nondegenerate,
    simulate_main_nondegenerate, Estimates,
};

use crate::dual::{DualError, SolverOpts};
use crate::lp::LpError;
use crate::model::{InputModel, OrderSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("override `{name}` must be finite and strictly positive (got {value})")]
    BadOverride { name: &'static str, value: f64 },
    #[error("constant `{0}` is unavailable: the model declares no non-degeneracy parameters and no override is set")]
    MissingConstant(&'static str),
    #[error("policy requires a finite-support model")]
    NeedsFiniteSupport,
    #[error("sample {0} carries no type index")]
    MissingTypeIndex(usize),
    #[error("initial inventory must be nonnegative")]
    NegativeInventory,
    #[error("detection needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("dual solve failed: {0}")]
    Dual(#[from] DualError),
    #[error("LP solve failed: {0}")]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Bounded,
    FiniteSupport,
    NonDegenerate,
    BaselineOlp,
    RejectAll,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Bounded,
        Algorithm::FiniteSupport,
        Algorithm::NonDegenerate,
        Algorithm::BaselineOlp,
        Algorithm::RejectAll,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Bounded => "bounded",
            Algorithm::FiniteSupport => "finite-support",
            Algorithm::NonDegenerate => "non-degenerate",
            Algorithm::BaselineOlp => "baseline-olp",
            Algorithm::RejectAll => "reject-all",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.label() == s)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyConfig {
    pub algorithm: Algorithm,
    pub overrides: PolicyOverrides,
    /// Set from the experiment-wide solver section.
    #[serde(skip)]
    pub solver: SolverOpts,
    pub resolve: ResolveSchedule,
    /// Restrict every computed price to `Σ p ≤ r̄/b̲`.
    pub price_cap: bool,
    pub record_trace: bool,
    pub record_decisions: bool,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            algorithm: Algorithm::NonDegenerate,
            overrides: PolicyOverrides::default(),
            solver: SolverOpts::default(),
            resolve: ResolveSchedule::Geometric,
            price_cap: true,
            record_trace: false,
            record_decisions: false,
        }
    }
}

impl PolicyConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        PolicyConfig {
            algorithm,
            ..Default::default()
        }
    }

    pub fn with_overrides(mut self, overrides: PolicyOverrides) -> Self {
        self.overrides = overrides;
        self
    }

    pub fn with_trace(mut self, on: bool) -> Self {
        self.record_trace = on;
        self
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        self.overrides.validate()
    }

    /// Solver options with the price cap resolved against `model`.
    pub(crate) fn solver_for(&self, model: &InputModel) -> SolverOpts {
        let mut opts = self.solver;
        if self.price_cap {
            opts.price_cap = Some(model.bounds.price_cap());
        }
        opts
    }

    fn state(&self, m: usize) -> SimState {
        SimState::new(m)
            .record_trace(self.record_trace)
            .record_decisions(self.record_decisions)
    }
}

/// Non-fatal conditions seen during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RunWarning {
    WarmupExceedsHorizon { warmup: usize, horizon: usize },
    DegenerateBatchLp { batches: usize },
    ScheduleDegenerate { phase: &'static str },
    DetectionSkipped { samples: usize },
}

impl fmt::Display for RunWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunWarning::WarmupExceedsHorizon { warmup, horizon } => {
                write!(f, "warm-up {warmup} >= horizon {horizon}; run rejects everything")
            }
            RunWarning::DegenerateBatchLp { batches } => {
                write!(f, "{batches} batch LP(s) were degenerate")
            }
            RunWarning::ScheduleDegenerate { phase } => {
                write!(f, "{phase} schedule has fewer than one batch; using a single batch")
            }
            RunWarning::DetectionSkipped { samples } => {
                write!(f, "detection skipped with {samples} sample(s); no resource marked binding")
            }
        }
    }
}

/// Outcome of one policy on one sample stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub algorithm: String,
    pub periods: usize,
    pub reward: f64,
    pub stockouts: usize,
    pub accepted: usize,
    pub final_inventory: Vec<f64>,
    /// `ℓ_1, …, ℓ_{T+1}` when recording is on.
    pub inventory_trace: Option<Vec<Vec<f64>>>,
    pub decisions: Option<Vec<bool>>,
    pub warnings: Vec<RunWarning>,
    /// Last period of the accumulation phase, for the two-phase policy.
    pub phase_boundary: Option<usize>,
    /// Hindsight relaxation value on the same stream, once attached.
    pub hindsight: Option<f64>,
}

impl TrialResult {
    /// `hindsight − reward`.
    pub fn regret(&self) -> Option<f64> {
        self.hindsight.map(|h| h - self.reward)
    }
}

/// Runs `cfg.algorithm` on a materialized stream.
pub fn simulate(
    model: &InputModel,
    samples: &[OrderSample],
    cfg: &PolicyConfig,
) -> Result<TrialResult, PolicyError> {
    cfg.validate()?;
    match cfg.algorithm {
        Algorithm::Bounded => simulate_bounded(model, samples, cfg),
        Algorithm::FiniteSupport => simulate_finite_support(model, samples, cfg),
        Algorithm::NonDegenerate => simulate_main_nondegenerate(model, samples, cfg),
        Algorithm::BaselineOlp => simulate_baseline(model, samples, cfg),
        Algorithm::RejectAll => Ok(simulate_reject_all(model, samples, cfg)),
    }
}

/// Draws `horizon` samples from `seed` and runs `cfg.algorithm`.
pub fn run_policy(
    model: &InputModel,
    horizon: usize,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<TrialResult, PolicyError> {
    let samples: Vec<_> = model.sampler(seed).take(horizon).collect();
    simulate(model, &samples, cfg)
}

pub fn simulate_reject_all(
    model: &InputModel,
    samples: &[OrderSample],
    cfg: &PolicyConfig,
) -> TrialResult {
    let mut state = cfg.state(model.m);
    for s in samples {
        state.skip(s);
    }
    state.into_result(Algorithm::RejectAll.label())
}
