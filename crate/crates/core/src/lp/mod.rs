//! Small dense LP solvers: the induced fluid LP, the hindsight relaxation and
//! basis-stability checks.

mod bounded;
mod hindsight;
mod simplex;

pub use bounded::{BoundedLp, BoundedSolution};
pub(crate) use hindsight::group_columns;
pub use hindsight::{solve_hindsight_relaxation, HindsightSolution};
pub use simplex::{solve_standard, StandardLp, StandardSolution};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::FiniteSupportSpec;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-9;
/// Reduced-cost tolerance.
pub const OPT_TOL: f64 = 1e-7;
/// Smallest admissible pivot in ratio tests.
pub const PIVOT_TOL: f64 = 1e-10;

/// Objective perturbation used to probe uniqueness.
const PERTURB: f64 = 1e-7;
/// Two solutions are the same vertex if they agree to this tolerance.
const SAME_VERTEX_TOL: f64 = 1e-6;
/// A variable counts toward the support when above this value.
const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("LP is infeasible")]
    Infeasible,
    #[error("LP is unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("malformed LP: {0}")]
    Malformed(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("base instance is degenerate")]
    DegenerateBase,
}

/// `max Σ R_i X_i  s.t.  A X + S = B,  X + V = μ,  X, V, S ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InducedLpInstance {
    pub rewards: Vec<f64>,
    /// Row-major `m × n`.
    pub requirements: Vec<Vec<f64>>,
    pub budget: Vec<f64>,
    pub caps: Vec<f64>,
}

impl InducedLpInstance {
    pub fn new(
        rewards: Vec<f64>,
        requirements: Vec<Vec<f64>>,
        budget: Vec<f64>,
        caps: Vec<f64>,
    ) -> Result<Self, LpError> {
        let inst = InducedLpInstance {
            rewards,
            requirements,
            budget,
            caps,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Fluid LP of a finite-support model at per-period scale.
    pub fn from_spec(spec: &FiniteSupportSpec) -> Self {
        Self::from_spec_scaled(spec, spec.repl_mean(), spec.probs())
    }

    /// Induced LP with the spec's types and the given budget and caps.
    pub fn from_spec_scaled(spec: &FiniteSupportSpec, budget: &[f64], caps: &[f64]) -> Self {
        let m = spec.m();
        let rewards = spec.types().iter().map(|t| t.reward).collect();
        let requirements = (0..m)
            .map(|j| spec.types().iter().map(|t| t.requirement[j]).collect())
            .collect();
        InducedLpInstance {
            rewards,
            requirements,
            budget: budget.to_vec(),
            caps: caps.to_vec(),
        }
    }

    pub fn n(&self) -> usize {
        self.rewards.len()
    }

    pub fn m(&self) -> usize {
        self.budget.len()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let (m, n) = (self.m(), self.n());
        if n == 0 || m == 0 {
            return Err(LpError::Malformed("empty instance".into()));
        }
        if self.caps.len() != n || self.requirements.len() != m {
            return Err(LpError::Malformed("dimension mismatch".into()));
        }
        if self.requirements.iter().any(|row| row.len() != n) {
            return Err(LpError::Malformed("requirement row length".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.rewards)
            || !finite(&self.budget)
            || !finite(&self.caps)
            || self.requirements.iter().any(|r| !finite(r))
        {
            return Err(LpError::Malformed("non-finite entry".into()));
        }
        if self.caps.iter().any(|&c| c < 0.0) {
            return Err(LpError::Malformed("negative cap".into()));
        }
        Ok(())
    }

    /// Copy with `(B, μ)` scaled by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut s = self.clone();
        s.budget.iter_mut().for_each(|b| *b *= alpha);
        s.caps.iter_mut().for_each(|c| *c *= alpha);
        s
    }

    fn standard_form(&self, cost_noise: Option<&[f64]>) -> StandardLp {
        let (m, n) = (self.m(), self.n());
        let nv = 2 * n + m;
        let mut a = vec![vec![0.0; nv]; m + n];
        for j in 0..m {
            a[j][..n].copy_from_slice(&self.requirements[j]);
            a[j][2 * n + j] = 1.0;
        }
        for i in 0..n {
            a[m + i][i] = 1.0;
            a[m + i][n + i] = 1.0;
        }
        let mut c = vec![0.0; nv];
        c[..n].copy_from_slice(&self.rewards);
        if let Some(noise) = cost_noise {
            for (ci, e) in c.iter_mut().zip(noise) {
                *ci += e;
            }
        }
        let mut b = self.budget.clone();
        b.extend_from_slice(&self.caps);
        StandardLp { a, b, c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VarClass {
    X,
    V,
    S,
}

/// One basic variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisVar {
    pub class: VarClass,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub s: Vec<f64>,
    pub objective: f64,
    /// Sorted basic variables of the final tableau.
    pub basis: Vec<BasisVar>,
    /// Duals of the resource rows `A X + S = B`.
    pub resource_duals: Vec<f64>,
    /// Duals of the cap rows `X + V = μ`.
    pub cap_duals: Vec<f64>,
    pub unique: bool,
    pub degenerate: bool,
}

impl LpSolution {
    /// Number of strictly positive variables among `X, V, S`.
    pub fn support_size(&self) -> usize {
        self.x
            .iter()
            .chain(&self.v)
            .chain(&self.s)
            .filter(|v| **v > SUPPORT_TOL)
            .count()
    }

    /// Types whose cap is exhausted (`V_i = 0`).
    pub fn exhausted_types(&self) -> Vec<usize> {
        self.v
            .iter()
            .enumerate()
            .filter(|(_, v)| **v <= SUPPORT_TOL)
            .map(|(i, _)| i)
            .collect()
    }

    fn flat(&self) -> impl Iterator<Item = f64> + '_ {
        self.x.iter().chain(&self.v).chain(&self.s).copied()
    }
}

fn unpack(inst: &InducedLpInstance, sol: &StandardSolution) -> LpSolution {
    let (m, n) = (inst.m(), inst.n());
    let clamp = |v: f64| if v.abs() < SUPPORT_TOL { 0.0 } else { v };
    let x: Vec<f64> = sol.x[..n].iter().map(|v| clamp(*v)).collect();
    let v: Vec<f64> = sol.x[n..2 * n].iter().map(|v| clamp(*v)).collect();
    let s: Vec<f64> = sol.x[2 * n..].iter().map(|v| clamp(*v)).collect();
    let objective = x.iter().zip(&inst.rewards).map(|(x, r)| x * r).sum();
    let mut basis: Vec<BasisVar> = sol
        .basis
        .iter()
        .map(|&k| {
            if k < n {
                BasisVar {
                    class: VarClass::X,
                    index: k,
                }
            } else if k < 2 * n {
                BasisVar {
                    class: VarClass::V,
                    index: k - n,
                }
            } else {
                BasisVar {
                    class: VarClass::S,
                    index: k - 2 * n,
                }
            }
        })
        .collect();
    basis.sort();
    LpSolution {
        x,
        v,
        s,
        objective,
        basis,
        // `+ 0.0` turns negative zeros from sign flips into plain zeros.
        resource_duals: sol.y[..m].iter().map(|y| y + 0.0).collect(),
        cap_duals: sol.y[m..].iter().map(|y| y + 0.0).collect(),
        unique: true,
        degenerate: false,
    }
}

/// Solves the induced LP and classifies the optimum.
///
/// The optimum is flagged degenerate when fewer than `m + n` variables are
/// positive, or when a small objective perturbation moves the solution.
pub fn solve_induced(inst: &InducedLpInstance) -> Result<LpSolution, LpError> {
    inst.validate()?;
    let base = solve_standard(&inst.standard_form(None))?;
    let mut sol = unpack(inst, &base);

    let nv = 2 * inst.n() + inst.m();
    let scale = inst.rewards.iter().fold(1.0_f64, |a, r| a.max(r.abs()));
    let mut rng = ChaCha8Rng::seed_from_u64(0x00c0_ffee);
    let noise: Vec<f64> = (0..nv)
        .map(|_| PERTURB * scale * (rng.random::<f64>() - 0.5))
        .collect();
    let neg: Vec<f64> = noise.iter().map(|v| -v).collect();
    let moved = |noise: &[f64]| -> Result<bool, LpError> {
        let p = unpack(inst, &solve_standard(&inst.standard_form(Some(noise)))?);
        let moved = p.flat().zip(sol.flat()).any(|(a, b)| (a - b).abs() > SAME_VERTEX_TOL);
        Ok(moved)
    };
    sol.unique = !(moved(&noise)? || moved(&neg)?);
    sol.degenerate = !sol.unique || sol.support_size() != inst.m() + inst.n();
    Ok(sol)
}

/// Result of a basis-stability probe.
#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub base: LpSolution,
    pub perturbed: LpSolution,
    pub midpoint: LpSolution,
    pub basis_unchanged: bool,
    /// `‖X*(mid) − (X*(base) + X*(perturbed))/2‖_∞`.
    pub linearity_gap: f64,
}

/// Solves the instance shifted by `(ΔB, Δμ)` and its midpoint, comparing bases
/// and the linear response of `X*`.
pub fn check_stability(
    inst: &InducedLpInstance,
    delta_budget: &[f64],
    delta_caps: &[f64],
) -> Result<StabilityReport, LpError> {
    if delta_budget.len() != inst.m() || delta_caps.len() != inst.n() {
        return Err(LpError::Malformed("perturbation dimension".into()));
    }
    let base = solve_induced(inst)?;
    if base.degenerate {
        return Err(LpError::DegenerateBase);
    }
    let shift = |w: f64| {
        let mut p = inst.clone();
        for (b, d) in p.budget.iter_mut().zip(delta_budget) {
            *b += w * d;
        }
        for (c, d) in p.caps.iter_mut().zip(delta_caps) {
            *c += w * d;
        }
        p
    };
    let perturbed = solve_induced(&shift(1.0))?;
    let midpoint = solve_induced(&shift(0.5))?;
    let linearity_gap = midpoint
        .x
        .iter()
        .zip(base.x.iter().zip(&perturbed.x))
        .map(|(mid, (a, b))| (mid - 0.5 * (a + b)).abs())
        .fold(0.0, f64::max);
    Ok(StabilityReport {
        basis_unchanged: base.basis == perturbed.basis,
        base,
        perturbed,
        midpoint,
        linearity_gap,
    })
}
