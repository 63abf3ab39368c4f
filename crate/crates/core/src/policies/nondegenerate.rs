//! Accumulate-then-convert policy for non-degenerate distributions: inflate
//! prices to bank inventory over the first half, detect which resources are
//! binding, then release the bank through surplus-inflated budgets.

use super::constants::{
    accumulation_schedule, conversion_schedule, ln_horizon, NondegParams,
};
use super::framework::{dual_price, mean_replenishment, run_dual_price_framework};
use super::{Algorithm, PolicyConfig, PolicyError, PriceProvider, RunWarning, SimState, TrialResult};
use crate::dual::SolverOpts;
use crate::model::{InputModel, OrderSample};

/// Output of the detection step.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimates {
    /// `Î_B`: resources whose estimated surplus is within the threshold.
    pub binding: Vec<bool>,
    /// Full-sample replenishment mean.
    pub b_hat: Vec<f64>,
    /// Price fitted on the first half.
    pub p_hat: Vec<f64>,
    /// Estimated surplus `ℓ̂_j` on the second half.
    pub l_hat: Vec<f64>,
    pub threshold: f64,
    /// Samples defining the empirical objective `f̂`.
    pub samples: Vec<OrderSample>,
    pub skipped: bool,
}

impl Estimates {
    /// Budget `B̃` for a conversion batch of `batch_len` periods that starts
    /// with inventory `inventory`; `remaining` is the `3^k` factor of the
    /// safety margin.
    pub fn conversion_budget(
        &self,
        inventory: &[f64],
        batch_len: usize,
        remaining: f64,
        c4: f64,
        ln_h: f64,
    ) -> Vec<f64> {
        let margin = c4 * (remaining * ln_h).sqrt();
        let len = batch_len.max(1) as f64;
        self.b_hat
            .iter()
            .zip(inventory)
            .zip(&self.binding)
            .map(|((b, l), bind)| if *bind { b + (l - margin) / len } else { *b })
            .collect()
    }
}

/// Price per accumulation batch: the empirical objective on all history, with
/// the replenishment mean lowered by a bias that shrinks with batch length.
struct AccumulationPrices {
    v: Vec<usize>,
    c2: f64,
    ln_h: f64,
    opts: SolverOpts,
    batch: Option<usize>,
    price: Vec<f64>,
}

impl PriceProvider for AccumulationPrices {
    fn price(
        &mut self,
        _t: usize,
        history: &[OrderSample],
        state: &SimState,
    ) -> Result<Vec<f64>, PolicyError> {
        let period = history.len() + 1;
        let w = self.v.partition_point(|&start| start <= period).saturating_sub(1);
        if self.batch != Some(w) {
            self.batch = Some(w);
            let m = state.inventory.len();
            self.price = if history.is_empty() {
                vec![0.0; m]
            } else {
                let len = (self.v[w + 1] - self.v[w]) as f64;
                let bias = self.c2 * (self.ln_h / len).sqrt();
                let budget: Vec<f64> = mean_replenishment(history, m)
                    .into_iter()
                    .map(|b| b - bias)
                    .collect();
                dual_price(&budget, history, &self.opts)?
            };
        }
        Ok(self.price.clone())
    }
}

/// Price per conversion batch from the detection estimates and the inventory
/// held when the batch starts.
struct ConversionPrices<'e> {
    u: Vec<usize>,
    n_u: usize,
    est: &'e Estimates,
    c4: f64,
    ln_h: f64,
    opts: SolverOpts,
    batch: Option<usize>,
    price: Vec<f64>,
}

impl PriceProvider for ConversionPrices<'_> {
    fn price(
        &mut self,
        t: usize,
        _history: &[OrderSample],
        state: &SimState,
    ) -> Result<Vec<f64>, PolicyError> {
        let w = self.u.partition_point(|&start| start <= t).saturating_sub(1);
        if self.batch != Some(w) {
            self.batch = Some(w);
            self.price = if self.est.samples.is_empty() {
                vec![0.0; state.inventory.len()]
            } else {
                let len = self.u[w + 1] - self.u[w];
                let remaining = 3f64.powi((self.n_u - w.min(self.n_u)) as i32);
                let budget = self.est.conversion_budget(
                    &state.inventory,
                    len,
                    remaining,
                    self.c4,
                    self.ln_h,
                );
                dual_price(&budget, &self.est.samples, &self.opts)?
            };
        }
        Ok(self.price.clone())
    }
}

/// Runs accumulation over `samples` (its length is the horizon `H`).
fn accumulate(
    model: &InputModel,
    samples: &[OrderSample],
    cfg: &PolicyConfig,
    state: &mut SimState,
) -> Result<Vec<RunWarning>, PolicyError> {
    let h = samples.len();
    let params = NondegParams::active(model, h, &cfg.overrides)?;
    let kappa = params.accumulation_kappa(h).min(h);
    let sched = accumulation_schedule(h, kappa, params.c1_ln_h(h));
    let mut warnings = Vec::new();
    for s in &samples[..kappa] {
        state.skip(s);
    }
    if kappa >= h && h > 0 {
        warnings.push(RunWarning::WarmupExceedsHorizon {
            warmup: kappa,
            horizon: h,
        });
    }
    if sched.fallback && kappa < h {
        warnings.push(RunWarning::ScheduleDegenerate {
            phase: "accumulation",
        });
    }
    if sched.v.len() >= 2 {
        let mut provider = AccumulationPrices {
            v: sched.v,
            c2: params.c2,
            ln_h: ln_horizon(h),
            opts: cfg.solver_for(model),
            batch: None,
            price: Vec::new(),
        };
        run_dual_price_framework(&mut provider, samples, kappa..h, state)?;
    }
    Ok(warnings)
}

/// Runs conversion on `samples[range]` with a schedule built for horizon `h`.
fn convert(
    model: &InputModel,
    samples: &[OrderSample],
    range: std::ops::Range<usize>,
    h: usize,
    est: &Estimates,
    cfg: &PolicyConfig,
    state: &mut SimState,
) -> Result<Vec<RunWarning>, PolicyError> {
    let params = NondegParams::active(model, h, &cfg.overrides)?;
    let sched = conversion_schedule(h);
    let mut warnings = Vec::new();
    if sched.fallback && !range.is_empty() {
        warnings.push(RunWarning::ScheduleDegenerate { phase: "conversion" });
    }
    let mut provider = ConversionPrices {
        u: sched.u,
        n_u: sched.n_u,
        est,
        c4: params.c4,
        ln_h: ln_horizon(h),
        opts: cfg.solver_for(model),
        batch: None,
        price: Vec::new(),
    };
    run_dual_price_framework(&mut provider, samples, range, state)?;
    Ok(warnings)
}

/// Draws `h` samples and runs accumulation; returns the result and the samples.
pub fn run_accumulation(
    model: &InputModel,
    h: usize,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<(TrialResult, Vec<OrderSample>), PolicyError> {
    cfg.validate()?;
    let samples: Vec<_> = model.sampler(seed).take(h).collect();
    let mut state = cfg.state(model.m);
    let warnings = accumulate(model, &samples, cfg, &mut state)?;
    let mut result = state.into_result("accumulation");
    result.warnings = warnings;
    Ok((result, samples))
}

/// Split-half detection of the binding resources on `history`.
pub fn run_detection(
    model: &InputModel,
    history: &[OrderSample],
    cfg: &PolicyConfig,
) -> Result<Estimates, PolicyError> {
    let h = history.len();
    let m = model.m;
    let b_hat = mean_replenishment(history, m);
    if h < 2 {
        return Ok(Estimates {
            binding: vec![false; m],
            b_hat,
            p_hat: vec![0.0; m],
            l_hat: vec![0.0; m],
            threshold: 0.0,
            samples: history.to_vec(),
            skipped: true,
        });
    }
    let params = NondegParams::active(model, h, &cfg.overrides)?;
    let (first, second) = history.split_at(h / 2);
    let p_hat = dual_price(&mean_replenishment(first, m), first, &cfg.solver_for(model))?;
    let mut l_hat = vec![0.0; m];
    for s in second {
        let used = if s.price_accepts(&p_hat) { 1.0 } else { 0.0 };
        for ((l, b), a) in l_hat.iter_mut().zip(&s.replenishment).zip(&s.requirement) {
            *l += b - a * used;
        }
    }
    let threshold = params.c3 * (h as f64 * ln_horizon(h)).sqrt();
    Ok(Estimates {
        binding: l_hat.iter().map(|l| *l <= threshold).collect(),
        b_hat,
        p_hat,
        l_hat,
        threshold,
        samples: history.to_vec(),
        skipped: false,
    })
}

/// Draws `h` samples and runs conversion from `init_inventory`.
pub fn run_conversion(
    model: &InputModel,
    h: usize,
    init_inventory: Vec<f64>,
    estimates: &Estimates,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<TrialResult, PolicyError> {
    cfg.validate()?;
    let samples: Vec<_> = model.sampler(seed).take(h).collect();
    let mut state = SimState::with_inventory(init_inventory)?
        .record_trace(cfg.record_trace)
        .record_decisions(cfg.record_decisions);
    let warnings = convert(model, &samples, 0..h, h, estimates, cfg, &mut state)?;
    let mut result = state.into_result("conversion");
    result.warnings = warnings;
    Ok(result)
}

/// Accumulation on the first `⌈T/2⌉` periods, detection on them, conversion
/// on the rest with the carried-over inventory.
pub fn simulate_main_nondegenerate(
    model: &InputModel,
    samples: &[OrderSample],
    cfg: &PolicyConfig,
) -> Result<TrialResult, PolicyError> {
    cfg.validate()?;
    let horizon = samples.len();
    let h = horizon.div_ceil(2);
    let mut state = cfg.state(model.m);
    let mut warnings = accumulate(model, &samples[..h], cfg, &mut state)?;
    let est = run_detection(model, &samples[..h], cfg)?;
    if est.skipped {
        warnings.push(RunWarning::DetectionSkipped { samples: h });
    }
    warnings.extend(convert(model, samples, h..horizon, h, &est, cfg, &mut state)?);
    let mut result = state.into_result(Algorithm::NonDegenerate.label());
    result.warnings = warnings;
    result.phase_boundary = Some(h);
    Ok(result)
}

pub fn run_main_nondegenerate(
    model: &InputModel,
    horizon: usize,
    cfg: &PolicyConfig,
    seed: u64,
) -> Result<TrialResult, PolicyError> {
    let samples: Vec<_> = model.sampler(seed).take(horizon).collect();
    simulate_main_nondegenerate(model, &samples, cfg)
}
