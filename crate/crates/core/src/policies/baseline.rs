//! Classical online-LP resolving policy adapted to replenishment: the budget
//! is current inventory plus expected future deliveries, spread over the
//! remaining periods.

use serde::{Deserialize, Serialize};

use super::framework::{dual_price, run_dual_price_framework};
use super::{Algorithm, PolicyConfig, PolicyError, PriceProvider, SimState, TrialResult};
use crate::dual::SolverOpts;
use crate::model::{InputModel, OrderSample};

/// When the baseline re-solves its price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ResolveSchedule {
    /// Periods `1, 2, 4, 8, …`.
    Geometric,
    /// Periods `1, 1 + every, 1 + 2·every, …`.
    Periodic { every: usize },
}

impl ResolveSchedule {
    pub fn resolves_at(&self, t: usize) -> bool {
        match *self {
            ResolveSchedule::Geometric => t.is_power_of_two(),
            ResolveSchedule::Periodic { every } => (t - 1).is_multiple_of(every.max(1)),
        }
    }
}

/// Price provider of the baseline for a run of `horizon` periods.
#[derive(Debug, Clone)]
pub struct BaselineState {
    horizon: usize,
    expected_b: Vec<f64>,
    schedule: ResolveSchedule,
    opts: SolverOpts,
    price: Vec<f64>,
}

impl BaselineState {
    pub fn new(model: &InputModel, horizon: usize, cfg: &PolicyConfig) -> Self {
        BaselineState {
            horizon,
            expected_b: model.mean_replenishment(),
            schedule: cfg.resolve,
            opts: cfg.solver_for(model),
            price: vec![0.0; model.m],
        }
    }

    /// `(ℓ_t + (T − t + 1)·E[b]) / (T − t + 1)`.
    pub fn effective_budget(&self, t: usize, inventory: &[f64]) -> Vec<f64> {
        let remaining = (self.horizon + 1).saturating_sub(t).max(1) as f64;
        inventory
            .iter()
            .zip(&self.expected_b)
            .map(|(l, eb)| (l + remaining * eb) / remaining)
            .collect()
    }
}

impl PriceProvider for BaselineState {
    fn price(
        &mut self,
        t: usize,
        history: &[OrderSample],
        state: &SimState,
    ) -> Result<Vec<f64>, PolicyError> {
        if self.schedule.resolves_at(t) {
            self.price = if history.is_empty() {
                vec![0.0; self.price.len()]
            } else {
                let budget = self.effective_budget(t, &state.inventory);
                dual_price(&budget, history, &self.opts)?
            };
        }
        Ok(self.price.clone())
    }
}

pub fn simulate_baseline(
    model: &InputModel,
    samples: &[OrderSample],
    cfg: &PolicyConfig,
) -> Result<TrialResult, PolicyError> {
    cfg.validate()?;
    let mut provider = BaselineState::new(model, samples.len(), cfg);
    let mut state = cfg.state(model.m);
    run_dual_price_framework(&mut provider, samples, 0..samples.len(), &mut state)?;
    Ok(state.into_result(Algorithm::BaselineOlp.label()))
}

pub fn run_baseline_olp(
    model: &InputModel,
    horizon: usize,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<TrialResult, PolicyError> {
    let samples: Vec<_> = model.sampler(seed).take(horizon).collect();
    simulate_baseline(model, &samples, cfg)
}
