//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use olpr::lp::InducedLpInstance;
use olpr::model::{
    BoundsParams, FiniteSupportSpec, InputModel, OrderSample, OrderType, ReplenishmentDist,
    SampleSource,
};
use olpr::policies::{Algorithm, PolicyConfig, PolicyOverrides, ResolveSchedule};
use olpr::rng::TrialRng;
use rand::Rng;

/// Best basic feasible solution of `max c·x  s.t.  A x = b, x ≥ 0` by trying
/// every square column subset. `None` if no vertex is feasible.
pub fn best_vertex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let k = a.len();
    let n = c.len();
    let mut best: Option<f64> = None;
    for cols in combinations(n, k) {
        let basis = DMatrix::from_fn(k, k, |i, j| a[i][cols[j]]);
        let Some(x) = basis.lu().solve(&DVector::from_column_slice(b)) else {
            continue;
        };
        let max_x = x.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        if x.iter().any(|v| *v < -1e-9 * max_x) {
            continue;
        }
        let check: f64 = (0..k)
            .map(|i| {
                let row: f64 = (0..k).map(|j| a[i][cols[j]] * x[j]).sum();
                (row - b[i]).abs()
            })
            .fold(0.0, f64::max);
        if check > 1e-8 * (1.0 + max_x) {
            continue;
        }
        let value: f64 = (0..k).map(|j| c[cols[j]] * x[j]).sum();
        best = Some(best.map_or(value, |v: f64| v.max(value)));
    }
    best
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Vertex-enumeration value of `max R·X  s.t.  A X ≤ B, 0 ≤ X ≤ μ`.
pub fn induced_oracle(inst: &InducedLpInstance) -> f64 {
    let (m, n) = (inst.budget.len(), inst.rewards.len());
    // Columns: X (n), V (n), S (m). Rows: resources (m), caps (n).
    let width = 2 * n + m;
    let mut a = vec![vec![0.0; width]; m + n];
    for j in 0..m {
        a[j][..n].copy_from_slice(&inst.requirements[j]);
        a[j][2 * n + j] = 1.0;
    }
    for i in 0..n {
        a[m + i][i] = 1.0;
        a[m + i][n + i] = 1.0;
    }
    let mut rhs = inst.budget.clone();
    rhs.extend_from_slice(&inst.caps);
    let mut c = inst.rewards.clone();
    c.resize(width, 0.0);
    best_vertex(&a, &rhs, &c).expect("X = 0 is always a vertex")
}

/// Hindsight relaxation value by merging equal orders and enumerating vertices.
pub fn hindsight_oracle(samples: &[OrderSample]) -> f64 {
    let m = samples[0].m();
    let mut types: Vec<(f64, Vec<f64>, f64)> = Vec::new();
    for s in samples {
        match types
            .iter_mut()
            .find(|(r, a, _)| *r == s.reward && *a == s.requirement)
        {
            Some(t) => t.2 += 1.0,
            None => types.push((s.reward, s.requirement.clone(), 1.0)),
        }
    }
    let mut budget = vec![0.0; m];
    for s in samples {
        for (acc, b) in budget.iter_mut().zip(&s.replenishment) {
            *acc += b;
        }
    }
    let inst = InducedLpInstance {
        rewards: types.iter().map(|t| t.0).collect(),
        requirements: (0..m).map(|j| types.iter().map(|t| t.1[j]).collect()).collect(),
        budget,
        caps: types.iter().map(|t| t.2).collect(),
    };
    induced_oracle(&inst)
}

/// Random induced LP with `R ∈ [−1,3]`, `A ∈ [−0.5,2]`, `B ∈ [0.1,2]`, `μ ∈ [0.1,1]`.
pub fn random_instance(rng: &mut TrialRng, n: usize, m: usize) -> InducedLpInstance {
    InducedLpInstance::new(
        (0..n).map(|_| rng.random_range(-1.0..3.0)).collect(),
        (0..m)
            .map(|_| (0..n).map(|_| rng.random_range(-0.5..2.0)).collect())
            .collect(),
        (0..m).map(|_| rng.random_range(0.1..2.0)).collect(),
        (0..n).map(|_| rng.random_range(0.1..1.0)).collect(),
    )
    .expect("well-formed")
}

/// `f(p)` summed sample by sample.
pub fn f_oracle(budget: &[f64], samples: &[OrderSample], p: &[f64]) -> f64 {
    let mut linear = 0.0;
    for j in 0..budget.len() {
        linear += p[j] * budget[j];
    }
    let mut hinge = 0.0;
    for s in samples {
        let mut priced = 0.0;
        for j in 0..p.len() {
            priced += s.requirement[j] * p[j];
        }
        let margin = s.reward - priced;
        if margin > 0.0 {
            hinge += margin;
        }
    }
    linear + hinge / samples.len() as f64
}

/// Projection onto `{p ≥ 0 : Σ p ≤ cap}` by sorting.
pub fn project_sorted(p: &[f64], cap: f64) -> Vec<f64> {
    let pos: Vec<f64> = p.iter().map(|v| v.max(0.0)).collect();
    if pos.iter().sum::<f64>() <= cap {
        return pos;
    }
    let mut u = p.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, v) in u.iter().enumerate() {
        acc += v;
        let t = (acc - cap) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    p.iter().map(|v| (v - theta).max(0.0)).collect()
}

/// `(h/2) Σ_j (B'_j + mean |a_j|)`: how far the best grid point can sit above
/// the true minimum for grid spacing `h`.
pub fn grid_slack(budget: &[f64], samples: &[OrderSample], h: f64) -> f64 {
    let n = samples.len() as f64;
    (0..budget.len())
        .map(|j| budget[j].abs() + samples.iter().map(|s| s.requirement[j].abs()).sum::<f64>() / n)
        .sum::<f64>()
        * h
        / 2.0
}

/// A three-type, two-resource model whose fluid LP has a unique,
/// non-degenerate optimum with resource 0 binding.
pub fn nondegenerate_finite_model() -> InputModel {
    let t = |reward: f64, a: [f64; 2]| OrderType {
        reward,
        requirement: a.to_vec(),
    };
    let spec = FiniteSupportSpec::new(
        vec![t(4.0, [1.0, 0.5]), t(3.0, [0.5, 1.0]), t(1.0, [0.6, 0.4])],
        vec![0.3, 0.3, 0.4],
        ReplenishmentDist::Uniform {
            low: vec![0.4, 0.4],
            high: vec![0.6, 0.6],
        },
        0.3,
        0.02,
    )
    .expect("well-formed");
    let bounds = BoundsParams::new(4.5, 1.2, 0.7, 0.3).expect("valid bounds");
    InputModel::finite_support("finite-nondegenerate", spec, bounds).expect("valid model")
}

/// Two resources; resource 1 is consumed so little that it always piles up.
#[derive(Debug)]
pub struct OneSlackResource;

impl SampleSource for OneSlackResource {
    fn m(&self) -> usize {
        2
    }

    fn draw(&self, rng: &mut TrialRng) -> OrderSample {
        OrderSample::new(
            rng.random_range(0.0..10.0),
            vec![rng.random_range(0.0..1.0), rng.random_range(0.0..0.2)],
            vec![rng.random_range(0.0..0.5), rng.random_range(0.0..0.5)],
        )
    }

    fn mean_replenishment(&self) -> Vec<f64> {
        vec![0.25, 0.25]
    }
}

pub fn one_slack_model() -> InputModel {
    let bounds = BoundsParams::new(10.5, 1.1, 0.51, 0.2).expect("valid bounds");
    InputModel::custom("one-slack", Arc::new(OneSlackResource), bounds).expect("valid model")
}

/// Constants used by the shipped configs for the two-phase policy.
pub fn two_phase_overrides() -> PolicyOverrides {
    PolicyOverrides {
        c0: Some(0.1),
        c1: Some(2.0),
        c2: Some(0.2),
        c3: Some(5.0),
        c4: Some(0.5),
        ..Default::default()
    }
}

/// Every policy that applies to `model`, with constants small enough that the
/// rules actually fire at a few thousand periods.
pub fn scaled_policies(model: &InputModel) -> Vec<PolicyConfig> {
    let mut out = vec![
        PolicyConfig::new(Algorithm::Bounded).with_overrides(PolicyOverrides {
            w: Some(1.0),
            warmup_scale: Some(0.01),
            ..Default::default()
        }),
        PolicyConfig::new(Algorithm::NonDegenerate).with_overrides(two_phase_overrides()),
        PolicyConfig::new(Algorithm::BaselineOlp),
        PolicyConfig {
            resolve: ResolveSchedule::Periodic { every: 50 },
            ..PolicyConfig::new(Algorithm::BaselineOlp)
        },
        PolicyConfig::new(Algorithm::RejectAll),
    ];
    if model.finite_spec().is_some() {
        out.push(
            PolicyConfig::new(Algorithm::FiniteSupport).with_overrides(PolicyOverrides {
                c_finite: Some(1.0),
                w_finite: Some(1.0),
                ..Default::default()
            }),
        );
    }
    for cfg in &mut out {
        cfg.record_trace = true;
    }
    out
}

pub fn test_models() -> Vec<InputModel> {
    vec![
        InputModel::random_input_i(2).unwrap(),
        InputModel::random_input_ii(2, false).unwrap(),
        olpr::model::build_hard_instance(),
        nondegenerate_finite_model(),
    ]
}
