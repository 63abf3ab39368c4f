//! Per-trial state machine shared by every policy, and the generic
//! dual-price loop.

use super::{PolicyError, TrialResult};
use crate::dual::{minimize_f, DualError, DualObjective, SolverOpts};
use crate::model::{InputModel, OrderSample};

/// Which inventory level the feasibility indicator inspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    /// `ℓ_t ≥ a_t` (bounded and finite-support algorithms).
    BeforeReplenishment,
    /// `ℓ_t + b_t ≥ a_t` (dual-price framework).
    AfterReplenishment,
}

/// Mutable per-trial state.
#[derive(Debug, Clone)]
pub struct SimState {
    /// Number of periods processed so far.
    pub t: usize,
    pub inventory: Vec<f64>,
    pub price: Vec<f64>,
    pub reward: f64,
    pub stockouts: usize,
    pub accepted: usize,
    trace: Option<Vec<Vec<f64>>>,
    decisions: Option<Vec<bool>>,
}

impl SimState {
    pub fn new(m: usize) -> Self {
        SimState {
            t: 0,
            inventory: vec![0.0; m],
            price: vec![0.0; m],
            reward: 0.0,
            stockouts: 0,
            accepted: 0,
            trace: None,
            decisions: None,
        }
    }

    /// Starts from a nonnegative inventory instead of zero.
    pub fn with_inventory(inventory: Vec<f64>) -> Result<Self, PolicyError> {
        if inventory.iter().any(|v| !(*v >= 0.0)) {
            return Err(PolicyError::NegativeInventory);
        }
        let m = inventory.len();
        Ok(SimState {
            inventory,
            ..SimState::new(m)
        })
    }

    pub fn record_trace(mut self, on: bool) -> Self {
        self.trace = on.then(|| vec![self.inventory.clone()]);
        self
    }

    pub fn record_decisions(mut self, on: bool) -> Self {
        self.decisions = on.then(Vec::new);
        self
    }

    /// Processes one period. `rule_accepts` is the policy's own accept signal;
    /// the order is taken only if the inventory check also passes. A rule
    /// accept that fails the check counts as a stockout.
    pub fn step(&mut self, s: &OrderSample, rule_accepts: bool, check: Feasibility) -> bool {
        let available: Vec<f64> = self
            .inventory
            .iter()
            .zip(&s.replenishment)
            .map(|(l, b)| l + b)
            .collect();
        let feasible = if rule_accepts {
            let base = match check {
                Feasibility::BeforeReplenishment => &self.inventory,
                Feasibility::AfterReplenishment => &available,
            };
            base.iter().zip(&s.requirement).all(|(l, a)| l >= a)
        } else {
            false
        };
        let take = rule_accepts && feasible;
        if rule_accepts && !feasible {
            self.stockouts += 1;
        }
        // available ≥ a whenever the order is taken, so the difference is
        // nonnegative in floating point as well.
        self.inventory = if take {
            available
                .iter()
                .zip(&s.requirement)
                .map(|(l, a)| l - a)
                .collect()
        } else {
            available
        };
        if take {
            self.reward += s.reward;
            self.accepted += 1;
        }
        self.finish_period(take);
        take
    }

    /// A period rejected outright (warm-up); never a stockout.
    pub fn skip(&mut self, s: &OrderSample) {
        for (l, b) in self.inventory.iter_mut().zip(&s.replenishment) {
            *l += b;
        }
        self.finish_period(false);
    }

    fn finish_period(&mut self, took: bool) {
        self.t += 1;
        if let Some(tr) = self.trace.as_mut() {
            tr.push(self.inventory.clone());
        }
        if let Some(d) = self.decisions.as_mut() {
            d.push(took);
        }
    }

    pub fn into_result(self, algorithm: &str) -> TrialResult {
        TrialResult {
            algorithm: algorithm.to_string(),
            periods: self.t,
            reward: self.reward,
            stockouts: self.stockouts,
            accepted: self.accepted,
            final_inventory: self.inventory,
            inventory_trace: self.trace,
            decisions: self.decisions,
            warnings: Vec::new(),
            phase_boundary: None,
            hindsight: None,
        }
    }
}

/// Supplies `p^t` from history up to `t − 1`.
pub trait PriceProvider {
    /// `t` is the 1-based period within the run; `history` holds exactly the
    /// samples observed before it.
    fn price(
        &mut self,
        t: usize,
        history: &[OrderSample],
        state: &SimState,
    ) -> Result<Vec<f64>, PolicyError>;
}

/// A fixed price vector.
#[derive(Debug, Clone)]
pub struct ConstantPrice(pub Vec<f64>);

impl PriceProvider for ConstantPrice {
    fn price(&mut self, _: usize, _: &[OrderSample], _: &SimState) -> Result<Vec<f64>, PolicyError> {
        Ok(self.0.clone())
    }
}

/// A minimizer of `f(·; budget, samples)`. A subgradient run that misses its
/// tolerance still yields its best iterate.
pub(crate) fn dual_price(
    budget: &[f64],
    samples: &[OrderSample],
    opts: &SolverOpts,
) -> Result<Vec<f64>, PolicyError> {
    let obj = DualObjective::new(budget, samples)?;
    match minimize_f(&obj, opts) {
        Ok(sol) => Ok(sol.price),
        Err(DualError::NonConvergence { best, .. }) => Ok(best.price),
        Err(e) => Err(e.into()),
    }
}

/// Coordinate-wise mean of `b` over `samples`.
pub(crate) fn mean_replenishment(samples: &[OrderSample], m: usize) -> Vec<f64> {
    let mut acc = vec![0.0; m];
    for s in samples {
        for (a, b) in acc.iter_mut().zip(&s.replenishment) {
            *a += b;
        }
    }
    let n = samples.len().max(1) as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

/// Runs the generic loop on `samples[range]`, where the provider sees
/// `samples[..t−1]` (global indexing) before each decision.
pub fn run_dual_price_framework(
    provider: &mut dyn PriceProvider,
    samples: &[OrderSample],
    range: std::ops::Range<usize>,
    state: &mut SimState,
) -> Result<(), PolicyError> {
    let start = range.start;
    for idx in range {
        let p = provider.price(idx - start + 1, &samples[..idx], state)?;
        state.price.clone_from(&p);
        let s = &samples[idx];
        let accepts = s.price_accepts(&p);
        state.step(s, accepts, Feasibility::AfterReplenishment);
    }
    Ok(())
}

/// Draws `horizon` samples and runs the generic loop over them from `init_inventory`.
pub fn simulate_framework(
    provider: &mut dyn PriceProvider,
    model: &InputModel,
    horizon: usize,
    init_inventory: Vec<f64>,
    seed: u64,
) -> Result<TrialResult, PolicyError> {
    let samples: Vec<_> = model.sampler(seed).take(horizon).collect();
    let mut state = SimState::with_inventory(init_inventory)?.record_trace(true);
    run_dual_price_framework(provider, &samples, 0..horizon, &mut state)?;
    Ok(state.into_result("framework"))
}
