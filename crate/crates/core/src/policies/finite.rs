//! Batch-resolving policy for finite-support distributions: induced LPs on
//! the previous batch's raw counts set acceptance budgets and an
//! always-accept set.

use super::constants::FiniteParams;
use super::framework::Feasibility;
use super::{Algorithm, PolicyConfig, PolicyError, RunWarning, TrialResult};
use crate::lp::{solve_induced, InducedLpInstance};
use crate::model::{InputModel, OrderSample};

pub fn run_finite_support(
    model: &InputModel,
    horizon: usize,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<TrialResult, PolicyError> {
    let samples: Vec<_> = model.sampler(seed).take(horizon).collect();
    simulate_finite_support(model, &samples, cfg)
}

pub fn simulate_finite_support(
    model: &InputModel,
    samples: &[OrderSample],
    cfg: &PolicyConfig,
) -> Result<TrialResult, PolicyError> {
    cfg.validate()?;
    let spec = model.finite_spec().ok_or(PolicyError::NeedsFiniteSupport)?;
    let horizon = samples.len();
    let params = FiniteParams::active(model, horizon, &cfg.overrides)?;
    let (n, m) = (spec.n(), spec.m());
    let kappa = params.kappa;
    let warmup = params.warmup();

    let mut state = cfg.state(m);
    let mut budgets = vec![0.0; n];
    let mut always = vec![false; n];
    let mut degenerate_batches = 0usize;

    for (idx, s) in samples.iter().enumerate() {
        let t = idx + 1;
        let theta = s.type_index.ok_or(PolicyError::MissingTypeIndex(idx))?;
        if theta >= n {
            return Err(PolicyError::MissingTypeIndex(idx));
        }
        if t <= warmup {
            state.skip(s);
        } else if always[theta] {
            state.step(s, true, Feasibility::BeforeReplenishment);
        } else {
            let rule = budgets[theta] >= 1.0;
            if state.step(s, rule, Feasibility::BeforeReplenishment) {
                budgets[theta] -= 1.0;
            }
        }

        if t >= warmup && t % kappa == 0 {
            let window = &samples[t - kappa..t];
            let mut b_hat = vec![0.0; m];
            let mut mu_hat = vec![0.0; n];
            for w in window {
                for (acc, b) in b_hat.iter_mut().zip(&w.replenishment) {
                    *acc += b;
                }
                if let Some(i) = w.type_index {
                    mu_hat[i] += 1.0;
                }
            }
            let inst = InducedLpInstance::from_spec_scaled(spec, &b_hat, &mu_hat);
            let sol = solve_induced(&inst)?;
            if sol.degenerate {
                degenerate_batches += 1;
            }
            for (phi, x) in budgets.iter_mut().zip(&sol.x) {
                *phi += x;
            }
            always.iter_mut().for_each(|a| *a = false);
            for i in sol.exhausted_types() {
                always[i] = true;
            }
        }
    }

    let mut result = state.into_result(Algorithm::FiniteSupport.label());
    if warmup >= horizon {
        result.warnings.push(RunWarning::WarmupExceedsHorizon { warmup, horizon });
    }
    if degenerate_batches > 0 {
        result.warnings.push(RunWarning::DegenerateBatchLp {
            batches: degenerate_batches,
        });
    }
    Ok(result)
}
