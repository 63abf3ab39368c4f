//! LP-free policy for general bounded distributions: warm-up, then projected
//! dual-subgradient updates of the price.

use super::constants::BoundedParams;
use super::framework::Feasibility;
use super::{Algorithm, PolicyConfig, PolicyError, RunWarning, TrialResult};
use crate::model::{InputModel, OrderSample};

pub fn run_bounded(
    model: &InputModel,
    horizon: usize,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<TrialResult, PolicyError> {
    let samples: Vec<_> = model.sampler(seed).take(horizon).collect();
    simulate_bounded(model, &samples, cfg)
}

pub fn simulate_bounded(
    model: &InputModel,
    samples: &[OrderSample],
    cfg: &PolicyConfig,
) -> Result<TrialResult, PolicyError> {
    cfg.validate()?;
    let horizon = samples.len();
    let params = BoundedParams::active(model.m, &model.bounds, horizon, &cfg.overrides);
    let mut state = cfg.state(model.m);
    let mut price = vec![0.0; model.m];

    for (idx, s) in samples.iter().enumerate() {
        let t = idx + 1;
        if t <= params.kappa {
            state.skip(s);
            price.iter_mut().for_each(|p| *p = 0.0);
            continue;
        }
        state.price.clone_from(&price);
        let accepts = s.price_accepts(&price);
        state.step(s, accepts, Feasibility::BeforeReplenishment);
        let used = if accepts { 1.0 } else { 0.0 };
        for ((p, b), a) in price.iter_mut().zip(&s.replenishment).zip(&s.requirement) {
            *p = (*p - params.step * (b - a * used)).max(0.0);
        }
    }
    state.price = price;

    let mut result = state.into_result(Algorithm::Bounded.label());
    if params.kappa >= horizon {
        result.warnings.push(RunWarning::WarmupExceedsHorizon {
            warmup: params.kappa,
            horizon,
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{BoundsParams, InputModel};
    use crate::policies::PolicyOverrides;

    fn tiny_warmup() -> PolicyConfig {
        PolicyConfig::new(Algorithm::Bounded).with_overrides(PolicyOverrides {
            w: Some(1.0),
            warmup_scale: Some(0.02),
            ..Default::default()
        })
    }

    #[test]
    fn formula_warmup_covers_short_horizon() {
        let model = InputModel::random_input_i(2).unwrap();
        let r = run_bounded(&model, 500, &PolicyConfig::new(Algorithm::Bounded), 1).unwrap();
        assert_eq!(r.accepted, 0);
        assert_eq!(r.stockouts, 0);
        assert!(matches!(
            r.warnings[0],
            RunWarning::WarmupExceedsHorizon { .. }
        ));
    }

    #[test]
    fn warmup_rejects_then_trades() {
        let model = InputModel::random_input_i(2).unwrap();
        let cfg = tiny_warmup();
        let cfg = PolicyConfig {
            record_decisions: true,
            ..cfg
        };
        let horizon = 5000;
        let kappa = BoundedParams::active(2, &model.bounds, horizon, &cfg.overrides).kappa;
        assert!(kappa > 0 && kappa < horizon);
        let r = run_bounded(&model, horizon, &cfg, 2).unwrap();
        let d = r.decisions.unwrap();
        assert!(d[..kappa].iter().all(|x| !x));
        assert!(d[kappa..].iter().any(|x| *x));
        assert!(r.final_inventory.iter().all(|l| *l >= 0.0));
    }

    #[test]
    fn infeasible_order_rejected_regardless_of_reward() {
        let model = InputModel::random_input_i(1)
            .unwrap()
            .with_bounds(BoundsParams::new(1000.0, 2.0, 0.6, 0.2).unwrap())
            .unwrap();
        // Period 1 is the warm-up; period 2 sees ℓ = 0.1 < a even though b covers it.
        let samples = vec![
            OrderSample::new(1.0, vec![0.5], vec![0.1]),
            OrderSample::new(999.0, vec![0.5], vec![0.5]),
        ];
        let cfg = PolicyConfig::new(Algorithm::Bounded).with_overrides(PolicyOverrides {
            warmup_scale: Some(1e-12),
            ..Default::default()
        });
        let r = simulate_bounded(&model, &samples, &cfg).unwrap();
        assert_eq!(r.accepted, 0);
        assert_eq!(r.stockouts, 1);
    }
}
