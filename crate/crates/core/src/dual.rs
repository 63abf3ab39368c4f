//! The piecewise-linear dual objective
//! `f(p; B', S) = ⟨p, B'⟩ + mean_S [r − ⟨a, p⟩]⁺` and its minimization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{group_columns, BoundedLp, LpError};
use crate::model::{BoundsParams, InputModel, OrderSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empirical objective needs at least one sample")]
    NoSamples,
    #[error("budget must be finite")]
    NonFiniteBudget,
    #[error("subgradient method did not reach tol {tol} (gap estimate {gap}); best value {}", best.value)]
    NonConvergence {
        best: DualSolution,
        tol: f64,
        gap: f64,
    },
    #[error("objective is unbounded below without a price cap")]
    Unbounded,
    #[error("grid oracle refuses m = {0} > 3")]
    RefusesHighDim(usize),
    #[error("grid resolution must be at least 2")]
    Resolution,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Empirical objective over a borrowed sample set.
#[derive(Debug, Clone, Copy)]
pub struct DualObjective<'a> {
    pub budget: &'a [f64],
    pub samples: &'a [OrderSample],
}

impl<'a> DualObjective<'a> {
    pub fn new(budget: &'a [f64], samples: &'a [OrderSample]) -> Result<Self, DualError> {
        if samples.is_empty() {
            return Err(DualError::NoSamples);
        }
        if budget.iter().any(|b| !b.is_finite()) {
            return Err(DualError::NonFiniteBudget);
        }
        for s in samples {
            if s.m() != budget.len() {
                return Err(DualError::Dimension {
                    expected: budget.len(),
                    got: s.m(),
                });
            }
        }
        Ok(DualObjective { budget, samples })
    }

    pub fn m(&self) -> usize {
        self.budget.len()
    }

    fn check(&self, p: &[f64]) -> Result<(), DualError> {
        if p.len() != self.m() {
            return Err(DualError::Dimension {
                expected: self.m(),
                got: p.len(),
            });
        }
        Ok(())
    }

    /// `f(p)`.
    pub fn eval(&self, p: &[f64]) -> Result<f64, DualError> {
        self.check(p)?;
        Ok(self.eval_unchecked(p))
    }

    fn eval_unchecked(&self, p: &[f64]) -> f64 {
        let linear: f64 = p.iter().zip(self.budget).map(|(p, b)| p * b).sum();
        let surplus: f64 = self
            .samples
            .iter()
            .map(|s| (s.reward - s.priced_cost(p)).max(0.0))
            .sum();
        linear + surplus / self.samples.len() as f64
    }

    /// `B' − mean a·I(r > ⟨a, p⟩)`; ties count as rejected.
    pub fn subgradient(&self, p: &[f64]) -> Result<Vec<f64>, DualError> {
        self.check(p)?;
        Ok(self.subgradient_unchecked(p))
    }

    fn subgradient_unchecked(&self, p: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.m()];
        for s in self.samples {
            if s.price_accepts(p) {
                for (gj, a) in g.iter_mut().zip(&s.requirement) {
                    *gj += a;
                }
            }
        }
        let n = self.samples.len() as f64;
        g.iter_mut()
            .zip(self.budget)
            .for_each(|(gj, b)| *gj = b - *gj / n);
        g
    }
}

/// `f(p)` over an explicit sample set.
pub fn f_eval(budget: &[f64], samples: &[OrderSample], p: &[f64]) -> Result<f64, DualError> {
    DualObjective::new(budget, samples)?.eval(p)
}

/// Subgradient of `f` at `p`.
pub fn f_subgradient(
    budget: &[f64],
    samples: &[OrderSample],
    p: &[f64],
) -> Result<Vec<f64>, DualError> {
    DualObjective::new(budget, samples)?.subgradient(p)
}

/// Monte-Carlo estimate of the expectation-form objective at `p`.
pub fn f_expected(
    model: &InputModel,
    budget: &[f64],
    p: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<f64, DualError> {
    let samples: Vec<_> = model.sampler(seed).take(n_samples.max(1)).collect();
    f_eval(budget, &samples, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DualMethod {
    /// Solve the LP form of the objective with the bounded dual simplex.
    #[default]
    Exact,
    /// Projected subgradient descent with suffix averaging.
    Subgradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOpts {
    pub method: DualMethod,
    pub max_iters: usize,
    /// Relative tolerance of the subgradient method.
    pub tol: f64,
    /// Multiplier `c` in the step `c/√k`.
    pub step_scale: f64,
    pub grid_resolution: usize,
    /// Optional cap on `Σ p_j`; `None` minimizes over `p ≥ 0`.
    pub price_cap: Option<f64>,
}

impl Default for SolverOpts {
    fn default() -> Self {
        SolverOpts {
            method: DualMethod::Exact,
            max_iters: 5000,
            tol: 1e-6,
            step_scale: 1.0,
            grid_resolution: 101,
            price_cap: None,
        }
    }
}

impl SolverOpts {
    pub fn with_cap(mut self, cap: f64) -> Self {
        self.price_cap = Some(cap);
        self
    }

    pub fn with_method(mut self, method: DualMethod) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub price: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
}

/// Minimizes `f` over `p ≥ 0` (and `Σ p ≤ cap` when a cap is set).
pub fn minimize_f(obj: &DualObjective<'_>, opts: &SolverOpts) -> Result<DualSolution, DualError> {
    match opts.method {
        DualMethod::Exact => minimize_exact(obj, opts.price_cap),
        DualMethod::Subgradient => minimize_subgradient(obj, opts),
    }
}

// LP form: max Σ r x − N·cap·z  s.t.  Σ a x − N z·1 ≤ N B',  0 ≤ x ≤ 1, z ≥ 0.
// Its row duals are the minimizing prices and its value is N·min f.
fn minimize_exact(obj: &DualObjective<'_>, cap: Option<f64>) -> Result<DualSolution, DualError> {
    let m = obj.m();
    let n = obj.samples.len() as f64;
    let mut lp = BoundedLp::new(obj.budget.iter().map(|b| n * b).collect());
    let (_, members) = group_columns(obj.samples);
    for g in &members {
        let s = &obj.samples[g[0]];
        lp.push_column(s.reward, s.requirement.clone(), g.len() as f64);
    }
    if let Some(cap) = cap {
        lp.push_column(-n * cap, vec![-n; m], f64::INFINITY);
    }
    let sol = match lp.solve() {
        Ok(s) => s,
        Err(LpError::Infeasible) => return Err(DualError::Unbounded),
        Err(e) => return Err(e.into()),
    };
    let mut price = sol.y;
    if let Some(cap) = cap {
        price = project_capped(&price, cap);
    }
    let value = obj.eval_unchecked(&price);
    Ok(DualSolution {
        price,
        value,
        iterations: sol.iterations,
    })
}

fn minimize_subgradient(
    obj: &DualObjective<'_>,
    opts: &SolverOpts,
) -> Result<DualSolution, DualError> {
    let m = obj.m();
    let iters = opts.max_iters.max(2);
    let project = |p: &[f64]| match opts.price_cap {
        Some(cap) => project_capped(p, cap),
        None => p.iter().map(|v| v.max(0.0)).collect(),
    };
    let mut p = vec![0.0; m];
    let mut best = DualSolution {
        value: obj.eval_unchecked(&p),
        price: p.clone(),
        iterations: 0,
    };
    let mut avg = vec![0.0; m];
    let mut avg_count = 0usize;
    let mut mid_value = f64::INFINITY;
    let suffix_start = iters / 2;
    for k in 1..=iters {
        let g = obj.subgradient_unchecked(&p);
        let step = opts.step_scale / (k as f64).sqrt();
        let next: Vec<f64> = p.iter().zip(&g).map(|(p, g)| p - step * g).collect();
        p = project(&next);
        let v = obj.eval_unchecked(&p);
        if v < best.value {
            best = DualSolution {
                price: p.clone(),
                value: v,
                iterations: k,
            };
        }
        if k > suffix_start {
            avg_count += 1;
            for (a, pj) in avg.iter_mut().zip(&p) {
                *a += (pj - *a) / avg_count as f64;
            }
        }
        if k == suffix_start + (iters - suffix_start) / 2 {
            mid_value = obj.eval_unchecked(&avg);
        }
    }
    let avg_value = obj.eval_unchecked(&avg);
    let out = if avg_value <= best.value {
        DualSolution {
            price: avg.clone(),
            value: avg_value,
            iterations: iters,
        }
    } else {
        best
    };
    // Stagnation between the half-suffix and full-suffix averages estimates the gap.
    let gap = (mid_value - avg_value).abs() / avg_value.abs().max(1.0);
    if gap > opts.tol {
        return Err(DualError::NonConvergence {
            best: out,
            tol: opts.tol,
            gap,
        });
    }
    Ok(out)
}

/// Exhaustive search over the grid `{0, h, …, box}^m` with `resolution` points per axis.
pub fn grid_oracle(
    obj: &DualObjective<'_>,
    box_size: f64,
    resolution: usize,
) -> Result<(Vec<f64>, f64), DualError> {
    let m = obj.m();
    if m > 3 {
        return Err(DualError::RefusesHighDim(m));
    }
    if resolution < 2 {
        return Err(DualError::Resolution);
    }
    let h = box_size / (resolution - 1) as f64;
    let total = resolution.pow(m as u32);
    let mut best = (vec![0.0; m], f64::INFINITY);
    let mut p = vec![0.0; m];
    for flat in 0..total {
        let mut rest = flat;
        for pj in p.iter_mut() {
            *pj = (rest % resolution) as f64 * h;
            rest /= resolution;
        }
        let v = obj.eval_unchecked(&p);
        if v < best.1 {
            best = (p.clone(), v);
        }
    }
    Ok(best)
}

/// Euclidean projection onto `{p ≥ 0 : Σ p ≤ cap}`.
pub fn project_capped(p: &[f64], cap: f64) -> Vec<f64> {
    let pos: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    if pos.iter().sum::<f64>() <= cap {
        return pos;
    }
    // Find τ with Σ (p_j − τ)⁺ = cap by bisection on [0, max p].
    let mut lo = 0.0;
    let mut hi = pos.iter().copied().fold(0.0, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s: f64 = pos.iter().map(|v| (v - mid).max(0.0)).sum();
        if s > cap {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi.max(1.0) {
            break;
        }
    }
    pos.iter().map(|v| (v - hi).max(0.0)).collect()
}

/// Projection onto `Ω_p = {p ≥ 0 : Σ p ≤ r̄/b̲}`.
pub fn project_omega_p(p: &[f64], bounds: &BoundsParams) -> Vec<f64> {
    project_capped(p, bounds.price_cap())
}
