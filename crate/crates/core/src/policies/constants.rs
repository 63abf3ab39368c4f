//! Parameter formulas of every policy, with optional overrides.
//!
//! Each `*Params` value is computed twice: once from the formulas alone
//! ("formula") and once after overrides are applied ("active"). Desk-scale
//! horizons need the overrides because the exact warm-ups exceed `T`.

use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::model::{BoundsParams, InputModel, NonDegeneracyParams};

/// `ln T`, clamped at `ln 2` so that `T = 1` stays well-defined.
pub fn ln_horizon(t: usize) -> f64 {
    (t.max(2) as f64).ln()
}

/// Absolute replacements and multipliers for the formula constants.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyOverrides {
    /// `W` of the bounded algorithm.
    pub w: Option<f64>,
    /// `C` of the bounded algorithm.
    pub c: Option<f64>,
    /// `C` of the finite-support algorithm.
    pub c_finite: Option<f64>,
    /// `W` of the finite-support algorithm.
    pub w_finite: Option<f64>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    /// Multiplies warm-up lengths.
    pub warmup_scale: Option<f64>,
    /// Multiplies batch lengths.
    pub batch_scale: Option<f64>,
    /// Multiplies the bounded algorithm's dual step size.
    pub step_scale: Option<f64>,
}

impl PolicyOverrides {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let fields = [
            ("w", self.w),
            ("c", self.c),
            ("c_finite", self.c_finite),
            ("w_finite", self.w_finite),
            ("c0", self.c0),
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c4", self.c4),
            ("warmup_scale", self.warmup_scale),
            ("batch_scale", self.batch_scale),
            ("step_scale", self.step_scale),
        ];
        for (name, v) in fields {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(PolicyError::BadOverride { name, value: v });
                }
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        *self == PolicyOverrides::default()
    }

    /// Fields set in `self`, falling back to `base`.
    pub fn or(&self, base: &PolicyOverrides) -> PolicyOverrides {
        PolicyOverrides {
            w: self.w.or(base.w),
            c: self.c.or(base.c),
            c_finite: self.c_finite.or(base.c_finite),
            w_finite: self.w_finite.or(base.w_finite),
            c0: self.c0.or(base.c0),
            c1: self.c1.or(base.c1),
            c2: self.c2.or(base.c2),
            c3: self.c3.or(base.c3),
            c4: self.c4.or(base.c4),
            warmup_scale: self.warmup_scale.or(base.warmup_scale),
            batch_scale: self.batch_scale.or(base.batch_scale),
            step_scale: self.step_scale.or(base.step_scale),
        }
    }

    fn warmup(&self) -> f64 {
        self.warmup_scale.unwrap_or(1.0)
    }

    fn batch(&self) -> f64 {
        self.batch_scale.unwrap_or(1.0)
    }
}

/// Parameters of the bounded-distribution algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundedParams {
    pub w: f64,
    pub c: f64,
    pub kappa: usize,
    /// Dual step `1/√(C T ln T)`.
    pub step: f64,
}

impl BoundedParams {
    pub fn formula_w(m: usize, b: &BoundsParams) -> f64 {
        let sm = (m as f64).sqrt();
        let t1 = 8.0 * sm * b.r_bar / b.b_lower;
        let t2 = 24.0 * sm * (b.b_bar + b.a_bar) * b.b_bar.powi(2) / b.b_lower.powi(2);
        let t3 = (b.r_bar + 2.0 * m as f64 * (b.b_bar.powi(2) + b.a_bar.powi(2)))
            / (sm * (b.b_bar + b.a_bar));
        2.0 + t1.max(t2).max(t3).ceil()
    }

    pub fn formula(m: usize, b: &BoundsParams, horizon: usize) -> Self {
        Self::build(Self::formula_w(m, b), 9.0, b, horizon, 1.0, 1.0)
    }

    pub fn active(m: usize, b: &BoundsParams, horizon: usize, ov: &PolicyOverrides) -> Self {
        let w = ov.w.unwrap_or_else(|| Self::formula_w(m, b));
        let c = ov.c.unwrap_or(9.0);
        Self::build(w, c, b, horizon, ov.warmup(), ov.step_scale.unwrap_or(1.0))
    }

    fn build(w: f64, c: f64, b: &BoundsParams, horizon: usize, warm: f64, step_mult: f64) -> Self {
        let root = (c * horizon as f64 * ln_horizon(horizon)).sqrt();
        let kappa = (warm * 4.0 * w * root / b.b_lower).ceil();
        BoundedParams {
            w,
            c,
            kappa: saturating_count(kappa),
            step: step_mult / root,
        }
    }
}

/// Parameters of the finite-support algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteParams {
    pub c: f64,
    /// Batch length `⌈C ln T⌉`.
    pub kappa: usize,
    pub w: usize,
}

impl FiniteParams {
    pub fn warmup(&self) -> usize {
        self.w.saturating_mul(self.kappa)
    }

    pub fn formula_c(b: &BoundsParams, mu_lower: f64, radius: f64) -> f64 {
        let floor = radius.min(b.b_lower).min(mu_lower);
        2.0 * (1.0 + (8.0 + 8.0 * b.b_bar) / floor).powi(2)
    }

    pub fn formula_w(n: usize, max_abs_a: f64, b: &BoundsParams) -> f64 {
        (4.0 * n as f64 * max_abs_a / b.b_lower).ceil()
    }

    pub fn formula(model: &InputModel, horizon: usize) -> Result<Self, PolicyError> {
        Self::active(model, horizon, &PolicyOverrides::default())
    }

    pub fn active(
        model: &InputModel,
        horizon: usize,
        ov: &PolicyOverrides,
    ) -> Result<Self, PolicyError> {
        let spec = model.finite_spec().ok_or(PolicyError::NeedsFiniteSupport)?;
        let b = &model.bounds;
        let c = ov
            .c_finite
            .unwrap_or_else(|| Self::formula_c(b, spec.mu_lower(), spec.stability_radius()));
        let w = ov
            .w_finite
            .unwrap_or_else(|| Self::formula_w(spec.n(), spec.max_abs_requirement(), b));
        let kappa = (ov.batch() * c * ln_horizon(horizon)).ceil().max(1.0);
        let w = (ov.warmup() * w).ceil().max(1.0);
        Ok(FiniteParams {
            c,
            kappa: saturating_count(kappa),
            w: saturating_count(w),
        })
    }
}

/// `C_0 … C_11` together with the auxiliary `q`, `N` and `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NondegConstants {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub c5: f64,
    pub c6: f64,
    pub c7: f64,
    pub c8: f64,
    pub c9: f64,
    pub c10: f64,
    pub c11: f64,
    pub q: f64,
    pub n: f64,
    pub epsilon: f64,
}

impl NondegConstants {
    /// Evaluates the constant definitions. `epsilon` enters only through `N`.
    pub fn formula(m: usize, b: &BoundsParams, nd: &NonDegeneracyParams, epsilon: f64) -> Self {
        let mf = m as f64;
        let (ab, bb, bl, rb) = (b.a_bar, b.b_bar, b.b_lower, b.r_bar);
        let (lam, lmin, mu, db) = (nd.lambda, nd.lambda_min, nd.mu, nd.delta_b);
        let ll = lam * lmin;

        let q_arg = (1.0 + 1.0 / mf.sqrt())
            .min(1.0 + (1.0 / mf.sqrt()) * (ll / (8.0 * mu * ab * ab)).cbrt());
        let q = 1.0 / q_arg;
        let n = ((bl * epsilon * epsilon / (ab * rb * mf.sqrt())).ln() / q.ln()).floor() + 1.0;
        let n = n.max(1.0);

        let c5 = {
            let lead = (2.0 * ab + 1.0 + ((2.0 * ab + 1.0).powi(2) + ll / 8.0).sqrt()) / (ll / 16.0);
            let root = (2.0 * mf * (2.0 * n).ln() + 10.0 + 10.0 * mf * ab).sqrt();
            (lead * root).max((5.0 * mf).sqrt() * bb / ll)
        };
        let c7 = 2.0 * (bb + 2.0 * ab);
        let c2 = (32.0 * (bb + 2.0 * ab)).max(4.0 * c5 * mu * ab * ab + 12.0 * bb);
        let c9 = (16.0 * 2f64.sqrt() * bb + 8.0 * 2f64.sqrt() * c2 * ab * ab * mu)
            .max(9.0 * bb + 18.0 * ab);
        let c3 = (2.0 * 3f64.sqrt() * c5 * mu * ab * ab).max(3.0 * (bb + 2.0 * ab));
        let c4 = (3.0 * c9).max(16.0 * c5 * mu * ab * ab);
        let c1 = 4.0 * c2 * c2 / (db * db);
        let c6 = (16.0 * c5).max(8.0 / ll * (2.0 * mf * (c2 * c2 + 5.0 * bb * bb)).sqrt());
        let c0 = (10.0 * bb * bb / (db * db))
            .max(20.0 * ab / lmin + 10.0)
            .max(2.0 * c1)
            .max(c1.sqrt() * c7 / bl)
            .max(10.0 * bb * bb / (bl * bl));
        let c8 = 1.0 + (18.0 * c2).max(c4).max(5.0 * 6f64.sqrt() * bb * c0);
        let c10 = (6.0 * c5 * c5
            + mf / (lam * lam * lmin * lmin) * (20.0 * bb * bb + 18.0 * (c8 + c9).powi(2)))
        .sqrt();

        let tail = [
            20.0 * bb * bb,
            40.0 * ab * db * db / lmin,
            63.0 * (bb + 2.0 * ab).powi(2),
            400.0 * c3 * c3,
            24.0 * c5 * c5 * ab.powi(4) * mu * mu + 2.0 * db * db,
            10.0 * bb * bb + 2.0 * db * db,
        ]
        .into_iter()
        .fold(0.0, f64::max);
        let c11 = min_horizon(|h| {
            let lh = h.ln();
            h > 3.0 + 2.0 * c0 * lh * lh && h > 22.0 + lh / (db * db) * tail
        });

        NondegConstants {
            c0,
            c1,
            c2,
            c3,
            c4,
            c5,
            c6,
            c7,
            c8,
            c9,
            c10,
            c11,
            q,
            n,
            epsilon,
        }
    }

    /// `N_U^♭`, the last conversion batch covered by the analysis.
    pub fn n_u_flat(&self, b: &BoundsParams, nd: &NonDegeneracyParams, horizon: usize) -> i64 {
        let (ab, bb, db, mu) = (b.a_bar, b.b_bar, nd.delta_b, nd.mu);
        let inner = (4.0 * self.c10 * self.c10 * ab.powi(4) * mu * mu / (3.0 * db * db))
            .max(5.0 * (bb + 2.0 * ab).powi(2) / (db * db))
            .max(12.0 * (self.c8 + self.c9).powi(2) / (db * db));
        let shift = (inner * ln_horizon(horizon)).log(3.0).ceil();
        conversion_schedule(horizon).n_u as i64 - shift as i64
    }
}

/// Smallest integer `H ≥ 1` from which `pred` holds for every larger `H`.
///
/// Both conditions in use are of the form `H > a + b·g(ln H)` with `g`
/// increasing slower than linear, so the predicate is monotone past its last
/// failure; a doubling search plus bisection finds the threshold.
fn min_horizon(pred: impl Fn(f64) -> bool) -> f64 {
    let mut hi = 2.0_f64;
    while !pred(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut lo = hi / 2.0;
    while hi - lo > 1.0 {
        let mid = ((lo + hi) / 2.0).floor();
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Active constants of the accumulate-then-convert policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NondegParams {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub warmup_scale: f64,
    pub batch_scale: f64,
}

impl NondegParams {
    pub fn active(
        model: &InputModel,
        horizon: usize,
        ov: &PolicyOverrides,
    ) -> Result<Self, PolicyError> {
        let formula = model
            .nondeg
            .map(|nd| NondegConstants::formula(model.m, &model.bounds, &nd, epsilon_for(horizon)));
        let pick = |name: &'static str, o: Option<f64>, p: Option<f64>| {
            o.or(p).ok_or(PolicyError::MissingConstant(name))
        };
        Ok(NondegParams {
            c0: pick("c0", ov.c0, formula.map(|p| p.c0))?,
            c1: pick("c1", ov.c1, formula.map(|p| p.c1))?,
            c2: pick("c2", ov.c2, formula.map(|p| p.c2))?,
            c3: pick("c3", ov.c3, formula.map(|p| p.c3))?,
            c4: pick("c4", ov.c4, formula.map(|p| p.c4))?,
            warmup_scale: ov.warmup(),
            batch_scale: ov.batch(),
        })
    }

    /// Warm-up length `⌈C_0 ln² H⌉` of the accumulation phase.
    pub fn accumulation_kappa(&self, h: usize) -> usize {
        let lh = ln_horizon(h);
        saturating_count((self.warmup_scale * self.c0 * lh * lh).ceil())
    }

    /// `C_1 ln H`, the base batch length of the accumulation phase.
    pub fn c1_ln_h(&self, h: usize) -> f64 {
        self.batch_scale * self.c1 * ln_horizon(h)
    }
}

/// `ε` fed to `N`; chosen as `ln H / H`.
pub fn epsilon_for(horizon: usize) -> f64 {
    ln_horizon(horizon) / horizon.max(2) as f64
}

fn saturating_count(v: f64) -> usize {
    if v >= usize::MAX as f64 {
        usize::MAX
    } else {
        v.max(0.0) as usize
    }
}

/// Batch starts `V_1 < … < V_{N_V+1} = H+1` of the accumulation phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AccumulationSchedule {
    pub kappa: usize,
    pub n_v: usize,
    pub v: Vec<usize>,
    /// `N_V < 1`; `v` then holds a single batch `(κ, H]` when `κ < H`.
    pub fallback: bool,
}

pub fn accumulation_schedule(h: usize, kappa: usize, c1_ln_h: f64) -> AccumulationSchedule {
    let kappa = kappa.min(h);
    let span = (h - kappa) as f64;
    let n_v = if span > 0.0 && c1_ln_h > 0.0 {
        let r = (span / c1_ln_h).log2().floor();
        if r >= 1.0 {
            r as usize
        } else {
            0
        }
    } else {
        0
    };
    if n_v == 0 {
        let v = if kappa < h {
            vec![kappa + 1, h + 1]
        } else {
            Vec::new()
        };
        return AccumulationSchedule {
            kappa,
            n_v,
            v,
            fallback: true,
        };
    }
    let mut v = Vec::with_capacity(n_v + 1);
    v.push(kappa + 1);
    for w in 2..=n_v {
        let start = kappa + (c1_ln_h * 2f64.powi(w as i32 - 1)).ceil() as usize;
        let prev = *v.last().expect("nonempty");
        v.push(start.clamp(prev + 1, h));
    }
    v.push(h + 1);
    AccumulationSchedule {
        kappa,
        n_v,
        v,
        fallback: false,
    }
}

/// Batch starts `U_1 = 1 < … < U_{N_U+1} = H+1` of the conversion phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConversionSchedule {
    pub n_u: usize,
    pub u: Vec<usize>,
    /// `N_U < 1`; `u` is then the single batch `[1, H]`.
    pub fallback: bool,
}

pub fn conversion_schedule(h: usize) -> ConversionSchedule {
    let mut n_u = 0usize;
    let mut p = 3usize;
    while p <= h {
        n_u += 1;
        p = p.saturating_mul(3);
    }
    if n_u == 0 {
        return ConversionSchedule {
            n_u,
            u: vec![1, h + 1],
            fallback: true,
        };
    }
    let mut u = Vec::with_capacity(n_u + 1);
    u.push(1);
    for s in 2..=n_u {
        u.push(h + 2 - 3usize.pow((n_u + 1 - s) as u32));
    }
    u.push(h + 1);
    ConversionSchedule {
        n_u,
        u,
        fallback: false,
    }
}

/// Formula and active values for one model and horizon.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsLedger {
    pub horizon: usize,
    pub bounded_formula: BoundedParams,
    pub bounded_active: BoundedParams,
    pub finite_formula: Option<FiniteParams>,
    pub finite_active: Option<FiniteParams>,
    pub nondeg_formula: Option<NondegConstants>,
    pub nondeg_active: Option<NondegParams>,
    pub n_u_flat: Option<i64>,
    pub accumulation: Option<AccumulationSchedule>,
    pub conversion: ConversionSchedule,
}

impl ConstantsLedger {
    pub fn compute(
        model: &InputModel,
        horizon: usize,
        ov: &PolicyOverrides,
    ) -> Result<Self, PolicyError> {
        ov.validate()?;
        let b = &model.bounds;
        let h = horizon.div_ceil(2).max(1);
        let nondeg_formula = model
            .nondeg
            .map(|nd| NondegConstants::formula(model.m, b, &nd, epsilon_for(h)));
        let nondeg_active = NondegParams::active(model, h, ov).ok();
        let n_u_flat = match (nondeg_formula, model.nondeg) {
            (Some(c), Some(nd)) => Some(c.n_u_flat(b, &nd, h)),
            _ => None,
        };
        let accumulation = nondeg_active
            .map(|p| accumulation_schedule(h, p.accumulation_kappa(h), p.c1_ln_h(h)));
        Ok(ConstantsLedger {
            horizon,
            bounded_formula: BoundedParams::formula(model.m, b, horizon),
            bounded_active: BoundedParams::active(model.m, b, horizon, ov),
            finite_formula: FiniteParams::formula(model, horizon).ok(),
            finite_active: FiniteParams::active(model, horizon, ov).ok(),
            nondeg_formula,
            nondeg_active,
            n_u_flat,
            accumulation,
            conversion: conversion_schedule(h),
        })
    }
}
