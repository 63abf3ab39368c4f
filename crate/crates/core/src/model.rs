//! Problem data: order samples, input models and seeded sampling.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{trial_rng, TrialRng};

/// Tolerance on `Σ μ_i = 1` for finite-support models.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("bounds must be strictly positive with b_lower < b_bar (got {0:?})")]
    InvalidBounds(BoundsParams),
    #[error("non-degeneracy constants must be positive with lambda <= mu (got {0:?})")]
    InvalidNonDegeneracy(NonDegeneracyParams),
    #[error("resource count must be at least 1")]
    NoResources,
    #[error("dimension mismatch: expected {expected}, got {got} ({what})")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("type {index} has probability {prob} below mu_lower {mu_lower}")]
    ProbabilityBelowFloor { index: usize, prob: f64, mu_lower: f64 },
    #[error("mean replenishment {mean} of resource {resource} is not above b_lower {b_lower}")]
    ReplenishmentBelowFloor {
        resource: usize,
        mean: f64,
        b_lower: f64,
    },
    #[error("invalid replenishment distribution: {0}")]
    Replenishment(String),
    #[error("finite-support model needs at least one type")]
    EmptySupport,
    #[error("parameter `{0}` must be strictly positive")]
    NonPositive(&'static str),
}

/// One period's realized tuple `(r_t, a_t, b_t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSample {
    pub reward: f64,
    /// Resource consumption if accepted; negative entries restock.
    pub requirement: Vec<f64>,
    /// Exogenous replenishment, always nonnegative.
    pub replenishment: Vec<f64>,
    /// Drawn type index for finite-support models.
    pub type_index: Option<usize>,
}

impl OrderSample {
    pub fn new(reward: f64, requirement: Vec<f64>, replenishment: Vec<f64>) -> Self {
        OrderSample {
            reward,
            requirement,
            replenishment,
            type_index: None,
        }
    }

    pub fn with_type(mut self, index: usize) -> Self {
        self.type_index = Some(index);
        self
    }

    pub fn m(&self) -> usize {
        self.requirement.len()
    }

    /// `⟨a, p⟩`.
    pub fn priced_cost(&self, price: &[f64]) -> f64 {
        self.requirement.iter().zip(price).map(|(a, p)| a * p).sum()
    }

    /// The dual-price rule `r > ⟨a, p⟩`; ties reject.
    pub fn price_accepts(&self, price: &[f64]) -> bool {
        self.reward > self.priced_cost(price)
    }
}

/// Declared boundedness constants `r̄, ā, b̄, b̲`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsParams {
    pub r_bar: f64,
    pub a_bar: f64,
    pub b_bar: f64,
    pub b_lower: f64,
}

impl BoundsParams {
    pub fn new(r_bar: f64, a_bar: f64, b_bar: f64, b_lower: f64) -> Result<Self, ModelError> {
        let b = BoundsParams {
            r_bar,
            a_bar,
            b_bar,
            b_lower,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all_pos = [self.r_bar, self.a_bar, self.b_bar, self.b_lower]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_pos || self.b_lower >= self.b_bar {
            return Err(ModelError::InvalidBounds(*self));
        }
        Ok(())
    }

    /// Cap `r̄ / b̲` on `Σ_j p_j` defining the dual feasible set.
    pub fn price_cap(&self) -> f64 {
        self.r_bar / self.b_lower
    }
}

/// Constants of a non-degenerate continuous model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonDegeneracyParams {
    pub lambda_min: f64,
    pub lambda: f64,
    pub mu: f64,
    pub delta_b: f64,
}

impl NonDegeneracyParams {
    pub fn new(lambda_min: f64, lambda: f64, mu: f64, delta_b: f64) -> Result<Self, ModelError> {
        let p = NonDegeneracyParams {
            lambda_min,
            lambda,
            mu,
            delta_b,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let all_pos = [self.lambda_min, self.lambda, self.mu, self.delta_b]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !all_pos || self.lambda > self.mu {
            return Err(ModelError::InvalidNonDegeneracy(*self));
        }
        Ok(())
    }
}

/// Distribution of the replenishment vector `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReplenishmentDist {
    Deterministic { value: Vec<f64> },
    /// Independent `Uniform[low_j, high_j]` per resource.
    Uniform { low: Vec<f64>, high: Vec<f64> },
}

impl ReplenishmentDist {
    pub fn m(&self) -> usize {
        match self {
            ReplenishmentDist::Deterministic { value } => value.len(),
            ReplenishmentDist::Uniform { low, .. } => low.len(),
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            ReplenishmentDist::Deterministic { value } => value.clone(),
            ReplenishmentDist::Uniform { low, high } => {
                low.iter().zip(high).map(|(l, h)| 0.5 * (l + h)).collect()
            }
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        match self {
            ReplenishmentDist::Deterministic { value } => {
                if value.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return Err(ModelError::Replenishment(
                        "deterministic replenishment must be finite and nonnegative".into(),
                    ));
                }
            }
            ReplenishmentDist::Uniform { low, high } => {
                if low.len() != high.len() {
                    return Err(ModelError::Dimension {
                        what: "uniform replenishment high",
                        expected: low.len(),
                        got: high.len(),
                    });
                }
                for (l, h) in low.iter().zip(high) {
                    if !(l.is_finite() && h.is_finite() && *l >= 0.0 && l <= h) {
                        return Err(ModelError::Replenishment(format!(
                            "need 0 <= low <= high, got [{l}, {h}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn draw(&self, rng: &mut TrialRng) -> Vec<f64> {
        match self {
            ReplenishmentDist::Deterministic { value } => value.clone(),
            ReplenishmentDist::Uniform { low, high } => low
                .iter()
                .zip(high)
                .map(|(l, h)| l + (h - l) * rng.random::<f64>())
                .collect(),
        }
    }
}

/// One support point `(R_i, A_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderType {
    pub reward: f64,
    pub requirement: Vec<f64>,
}

/// A finite-support distribution over order types with independent replenishment.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSupportSpec {
    types: Vec<OrderType>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    replenishment: ReplenishmentDist,
    repl_mean: Vec<f64>,
    mu_lower: f64,
    stability_radius: f64,
}

impl FiniteSupportSpec {
    pub fn new(
        types: Vec<OrderType>,
        probs: Vec<f64>,
        replenishment: ReplenishmentDist,
        mu_lower: f64,
        stability_radius: f64,
    ) -> Result<Self, ModelError> {
        if types.is_empty() {
            return Err(ModelError::EmptySupport);
        }
        if probs.len() != types.len() {
            return Err(ModelError::Dimension {
                what: "type probabilities",
                expected: types.len(),
                got: probs.len(),
            });
        }
        let m = replenishment.m();
        if m == 0 {
            return Err(ModelError::NoResources);
        }
        for t in &types {
            if t.requirement.len() != m {
                return Err(ModelError::Dimension {
                    what: "type requirement",
                    expected: m,
                    got: t.requirement.len(),
                });
            }
        }
        if !(mu_lower > 0.0) {
            return Err(ModelError::NonPositive("mu_lower"));
        }
        if !(stability_radius > 0.0) {
            return Err(ModelError::NonPositive("stability_radius"));
        }
        for (index, &prob) in probs.iter().enumerate() {
            if prob < mu_lower {
                return Err(ModelError::ProbabilityBelowFloor {
                    index,
                    prob,
                    mu_lower,
                });
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(ModelError::ProbabilitySum(total));
        }
        replenishment.validate()?;
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        let repl_mean = replenishment.mean();
        Ok(FiniteSupportSpec {
            types,
            probs,
            cumulative,
            replenishment,
            repl_mean,
            mu_lower,
            stability_radius,
        })
    }

    pub fn n(&self) -> usize {
        self.types.len()
    }

    pub fn m(&self) -> usize {
        self.repl_mean.len()
    }

    pub fn types(&self) -> &[OrderType] {
        &self.types
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn replenishment(&self) -> &ReplenishmentDist {
        &self.replenishment
    }

    /// `B_j = E[b_j]`.
    pub fn repl_mean(&self) -> &[f64] {
        &self.repl_mean
    }

    pub fn mu_lower(&self) -> f64 {
        self.mu_lower
    }

    /// Basis-stability radius `L` of the induced LP.
    pub fn stability_radius(&self) -> f64 {
        self.stability_radius
    }

    pub fn max_abs_requirement(&self) -> f64 {
        self.types
            .iter()
            .flat_map(|t| t.requirement.iter())
            .fold(0.0_f64, |acc, a| acc.max(a.abs()))
    }

    fn draw(&self, rng: &mut TrialRng) -> OrderSample {
        let u: f64 = rng.random();
        let index = self
            .cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(self.types.len() - 1);
        let t = &self.types[index];
        OrderSample {
            reward: t.reward,
            requirement: t.requirement.clone(),
            replenishment: self.replenishment.draw(rng),
            type_index: Some(index),
        }
    }
}

/// User-supplied distribution.
pub trait SampleSource: Send + Sync + fmt::Debug {
    fn m(&self) -> usize;
    fn draw(&self, rng: &mut TrialRng) -> OrderSample;
    /// `E[b]`, when known.
    fn mean_replenishment(&self) -> Vec<f64>;
}

#[derive(Debug, Clone)]
pub enum ModelKind {
    /// `a_j ~ U[0,1]`, `r ~ U[0,10]`, `b_j ~ U[0,0.5]`.
    RandomInputI,
    /// `a_j ~ N(0.5, 1)`, `r = ε + Σ_j a_j` with `ε ~ N(0, 5)` (variance 5), `b_j ~ U[0,0.5]`.
    /// With `truncate`, normal draws are clamped to six standard deviations.
    RandomInputII { truncate: bool },
    FiniteSupport(FiniteSupportSpec),
    /// The six-type, two-resource degenerate instance.
    FiniteHard(FiniteSupportSpec),
    Custom(Arc<dyn SampleSource>),
}

impl ModelKind {
    pub fn label(&self) -> &'static str {
        match self {
            ModelKind::RandomInputI => "random-input-i",
            ModelKind::RandomInputII { .. } => "random-input-ii",
            ModelKind::FiniteSupport(_) => "finite-support",
            ModelKind::FiniteHard(_) => "finite-hard",
            ModelKind::Custom(_) => "custom",
        }
    }
}

const RII_A_MEAN: f64 = 0.5;
const RII_A_SD: f64 = 1.0;
const RII_NOISE_VAR: f64 = 5.0;
const SIGMA_CUT: f64 = 6.0;
const TABLE_B_HIGH: f64 = 0.5;

/// A sampleable input distribution plus its declared metadata.
#[derive(Debug, Clone)]
pub struct InputModel {
    pub name: String,
    pub kind: ModelKind,
    pub m: usize,
    pub bounds: BoundsParams,
    pub nondeg: Option<NonDegeneracyParams>,
}

/// Nominal non-degeneracy parameters of Random Input I: uniform rewards and
/// requirements give a requirement covariance of `I/12`.
const RANDOM_I_NONDEG: NonDegeneracyParams = NonDegeneracyParams {
    lambda_min: 1.0 / 12.0,
    lambda: 0.1,
    mu: 0.1,
    delta_b: 0.05,
};

/// Nominal non-degeneracy parameters of Random Input II (unit-variance requirements).
const RANDOM_II_NONDEG: NonDegeneracyParams = NonDegeneracyParams {
    lambda_min: 1.0,
    lambda: 0.01,
    mu: 0.18,
    delta_b: 0.05,
};

impl InputModel {
    /// Random Input I with default declared bounds.
    pub fn random_input_i(m: usize) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::NoResources);
        }
        let bounds = BoundsParams::new(10.5, (m as f64).sqrt() + 0.01, TABLE_B_HIGH + 0.01, 0.2)?;
        Ok(InputModel {
            name: format!("random-input-i-m{m}"),
            kind: ModelKind::RandomInputI,
            m,
            bounds,
            nondeg: Some(RANDOM_I_NONDEG),
        })
    }

    /// Random Input II with declared bounds at six standard deviations.
    pub fn random_input_ii(m: usize, truncate: bool) -> Result<Self, ModelError> {
        if m == 0 {
            return Err(ModelError::NoResources);
        }
        let a_hi = RII_A_MEAN.abs() + SIGMA_CUT * RII_A_SD;
        let r_hi = SIGMA_CUT * RII_NOISE_VAR.sqrt() + m as f64 * a_hi;
        let bounds = BoundsParams::new(
            r_hi + 0.01,
            (m as f64).sqrt() * a_hi + 0.01,
            TABLE_B_HIGH + 0.01,
            0.2,
        )?;
        Ok(InputModel {
            name: format!("random-input-ii-m{m}"),
            kind: ModelKind::RandomInputII { truncate },
            m,
            bounds,
            nondeg: Some(RANDOM_II_NONDEG),
        })
    }

    pub fn finite_support(
        name: impl Into<String>,
        spec: FiniteSupportSpec,
        bounds: BoundsParams,
    ) -> Result<Self, ModelError> {
        bounds.validate()?;
        for (resource, &mean) in spec.repl_mean().iter().enumerate() {
            if mean <= bounds.b_lower {
                return Err(ModelError::ReplenishmentBelowFloor {
                    resource,
                    mean,
                    b_lower: bounds.b_lower,
                });
            }
        }
        Ok(InputModel {
            name: name.into(),
            m: spec.m(),
            kind: ModelKind::FiniteSupport(spec),
            bounds,
            nondeg: None,
        })
    }

    pub fn custom(
        name: impl Into<String>,
        source: Arc<dyn SampleSource>,
        bounds: BoundsParams,
    ) -> Result<Self, ModelError> {
        bounds.validate()?;
        let m = source.m();
        if m == 0 {
            return Err(ModelError::NoResources);
        }
        Ok(InputModel {
            name: name.into(),
            kind: ModelKind::Custom(source),
            m,
            bounds,
            nondeg: None,
        })
    }

    pub fn with_bounds(mut self, bounds: BoundsParams) -> Result<Self, ModelError> {
        bounds.validate()?;
        self.bounds = bounds;
        Ok(self)
    }

    pub fn with_nondeg(mut self, nondeg: NonDegeneracyParams) -> Result<Self, ModelError> {
        nondeg.validate()?;
        self.nondeg = Some(nondeg);
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn finite_spec(&self) -> Option<&FiniteSupportSpec> {
        match &self.kind {
            ModelKind::FiniteSupport(s) | ModelKind::FiniteHard(s) => Some(s),
            _ => None,
        }
    }

    /// `E[b]`.
    pub fn mean_replenishment(&self) -> Vec<f64> {
        match &self.kind {
            ModelKind::RandomInputI | ModelKind::RandomInputII { .. } => {
                vec![0.5 * TABLE_B_HIGH; self.m]
            }
            ModelKind::FiniteSupport(s) | ModelKind::FiniteHard(s) => s.repl_mean().to_vec(),
            ModelKind::Custom(src) => src.mean_replenishment(),
        }
    }

    /// Draws one sample.
    pub fn draw(&self, rng: &mut TrialRng) -> OrderSample {
        match &self.kind {
            ModelKind::RandomInputI => {
                let requirement = (0..self.m).map(|_| rng.random::<f64>()).collect();
                let reward = 10.0 * rng.random::<f64>();
                let replenishment = (0..self.m)
                    .map(|_| TABLE_B_HIGH * rng.random::<f64>())
                    .collect();
                OrderSample::new(reward, requirement, replenishment)
            }
            ModelKind::RandomInputII { truncate } => {
                let clamp = |z: f64| {
                    if *truncate {
                        z.clamp(-SIGMA_CUT, SIGMA_CUT)
                    } else {
                        z
                    }
                };
                let requirement: Vec<f64> = (0..self.m)
                    .map(|_| RII_A_MEAN + RII_A_SD * clamp(rng.sample(StandardNormal)))
                    .collect();
                let noise = RII_NOISE_VAR.sqrt() * clamp(rng.sample(StandardNormal));
                let reward = noise + requirement.iter().sum::<f64>();
                let replenishment = (0..self.m)
                    .map(|_| TABLE_B_HIGH * rng.random::<f64>())
                    .collect();
                OrderSample::new(reward, requirement, replenishment)
            }
            ModelKind::FiniteSupport(s) | ModelKind::FiniteHard(s) => s.draw(rng),
            ModelKind::Custom(src) => src.draw(rng),
        }
    }

    /// Lazy, infinite sample stream for one trial seed.
    pub fn sampler(&self, seed: u64) -> Sampler<'_> {
        Sampler {
            model: self,
            rng: trial_rng(seed),
        }
    }
}

/// Per-trial stream of i.i.d. samples.
pub struct Sampler<'a> {
    model: &'a InputModel,
    rng: TrialRng,
}

impl Iterator for Sampler<'_> {
    type Item = OrderSample;

    fn next(&mut self) -> Option<OrderSample> {
        Some(self.model.draw(&mut self.rng))
    }
}

/// Draws one sample from `model` (free-function form of [`InputModel::draw`]).
pub fn sample(model: &InputModel, rng: &mut TrialRng) -> OrderSample {
    model.draw(rng)
}

/// The degenerate two-resource, six-type instance with `b ≡ (1, 1)`.
pub fn build_hard_instance() -> InputModel {
    let t = |reward: f64, a: [f64; 2]| OrderType {
        reward,
        requirement: a.to_vec(),
    };
    let types = vec![
        t(5.0, [2.0, 2.0]),
        t(3.0, [2.0, 0.0]),
        t(3.0, [0.0, 2.0]),
        t(4.0, [2.0, 0.0]),
        t(4.0, [0.0, 2.0]),
        t(0.0, [0.0, 0.0]),
    ];
    let probs = vec![0.25, 0.125, 0.125, 0.125, 0.125, 0.25];
    // The instance is degenerate, so the stability radius is nominal.
    let spec = FiniteSupportSpec::new(
        types,
        probs,
        ReplenishmentDist::Deterministic {
            value: vec![1.0, 1.0],
        },
        0.125,
        0.05,
    )
    .expect("hard instance is well-formed");
    // r̄ > 5, ā > |(2,2)| = 2.83, b̄ > 1, b̲ < 1.
    let bounds = BoundsParams {
        r_bar: 5.5,
        a_bar: 3.0,
        b_bar: 1.1,
        b_lower: 0.9,
    };
    InputModel {
        name: "finite-hard".into(),
        kind: ModelKind::FiniteHard(spec),
        m: 2,
        bounds,
        nondeg: None,
    }
}

/// A declared-bound violation seen while probing a model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub draw: usize,
    pub kind: ViolationKind,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// `|r| ≥ r̄`.
    Reward,
    /// `‖a‖₂ ≥ ā`.
    Requirement,
    /// `‖b‖_∞ ≥ b̄`.
    Replenishment,
    /// Some `b_j < 0`.
    NegativeReplenishment,
    /// Empirical `E[b_j] ≤ b̲`; `draw` holds the resource index.
    MeanReplenishmentFloor,
}

/// Outcome of [`validate_model`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub model: String,
    pub n_probe: usize,
    pub violation_count: usize,
    /// The first [`ValidationReport::KEPT`] violations.
    pub violations: Vec<Violation>,
    pub empirical_b_mean: Vec<f64>,
    pub empirical_type_freq: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub const KEPT: usize = 64;

    pub fn is_clean(&self) -> bool {
        self.violation_count == 0
    }

    fn push(&mut self, v: Violation) {
        self.violation_count += 1;
        if self.violations.len() < Self::KEPT {
            self.violations.push(v);
        }
    }
}

/// Probes `n_probe` draws and checks them against the declared bounds.
///
/// Never fails: problems are reported as violations.
pub fn validate_model(model: &InputModel, n_probe: usize, seed: u64) -> ValidationReport {
    let n_probe = n_probe.max(1);
    let b = model.bounds;
    let mut report = ValidationReport {
        model: model.name.clone(),
        n_probe,
        violation_count: 0,
        violations: Vec::new(),
        empirical_b_mean: vec![0.0; model.m],
        empirical_type_freq: model.finite_spec().map(|s| vec![0.0; s.n()]),
        notes: Vec::new(),
    };
    if let ModelKind::RandomInputII { truncate } = model.kind {
        report.notes.push(if truncate {
            "normal draws truncated at 6 sigma; declared bounds hold surely".into()
        } else {
            "declared bounds are effective 6-sigma bounds; normal tails may exceed them".into()
        });
    }
    for (draw, s) in model.sampler(seed).take(n_probe).enumerate() {
        if s.reward.abs() >= b.r_bar {
            report.push(Violation {
                draw,
                kind: ViolationKind::Reward,
                value: s.reward,
                bound: b.r_bar,
            });
        }
        let a_norm = s.requirement.iter().map(|a| a * a).sum::<f64>().sqrt();
        if a_norm >= b.a_bar {
            report.push(Violation {
                draw,
                kind: ViolationKind::Requirement,
                value: a_norm,
                bound: b.a_bar,
            });
        }
        let b_inf = s.replenishment.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
        if b_inf >= b.b_bar {
            report.push(Violation {
                draw,
                kind: ViolationKind::Replenishment,
                value: b_inf,
                bound: b.b_bar,
            });
        }
        if let Some(&neg) = s.replenishment.iter().find(|v| **v < 0.0) {
            report.push(Violation {
                draw,
                kind: ViolationKind::NegativeReplenishment,
                value: neg,
                bound: 0.0,
            });
        }
        for (acc, v) in report.empirical_b_mean.iter_mut().zip(&s.replenishment) {
            *acc += v;
        }
        if let (Some(freq), Some(i)) = (report.empirical_type_freq.as_mut(), s.type_index) {
            freq[i] += 1.0;
        }
    }
    let n = n_probe as f64;
    report.empirical_b_mean.iter_mut().for_each(|v| *v /= n);
    if let Some(freq) = report.empirical_type_freq.as_mut() {
        freq.iter_mut().for_each(|v| *v /= n);
    }
    for j in 0..model.m {
        let mean = report.empirical_b_mean[j];
        if mean <= b.b_lower {
            report.push(Violation {
                draw: j,
                kind: ViolationKind::MeanReplenishmentFloor,
                value: mean,
                bound: b.b_lower,
            });
        }
    }
    report
}
