//! Hindsight LP relaxation `max Σ r_t x_t  s.t.  Σ a_t x_t ≤ Σ b_t,  x ∈ [0,1]^T`.

use std::collections::HashMap;

use super::{BoundedLp, LpError};
use crate::model::OrderSample;

#[derive(Debug, Clone, PartialEq)]
pub struct HindsightSolution {
    pub value: f64,
    /// Per-period fractional acceptance.
    pub x: Vec<f64>,
    /// Resource prices of the relaxation.
    pub prices: Vec<f64>,
}

/// Groups periods with bitwise-identical `(r, a)`.
pub(crate) fn group_columns(samples: &[OrderSample]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut index: HashMap<(u64, Vec<u64>), usize> = HashMap::new();
    let mut group_of = Vec::with_capacity(samples.len());
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (t, s) in samples.iter().enumerate() {
        let key = (
            s.reward.to_bits(),
            s.requirement.iter().map(|a| a.to_bits()).collect(),
        );
        let g = *index.entry(key).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[g].push(t);
        group_of.push(g);
    }
    (group_of, members)
}

/// Solves the relaxation. Identical orders are merged into one column whose
/// upper bound is their multiplicity.
pub fn solve_hindsight_relaxation(samples: &[OrderSample]) -> Result<HindsightSolution, LpError> {
    let Some(first) = samples.first() else {
        return Err(LpError::Malformed("hindsight instance needs T >= 1".into()));
    };
    let m = first.m();
    if samples
        .iter()
        .any(|s| s.requirement.len() != m || s.replenishment.len() != m)
    {
        return Err(LpError::Malformed("inconsistent resource count".into()));
    }
    let mut total_b = vec![0.0; m];
    for s in samples {
        for (acc, b) in total_b.iter_mut().zip(&s.replenishment) {
            *acc += b;
        }
    }
    let (_, members) = group_columns(samples);
    let mut lp = BoundedLp::new(total_b);
    for g in &members {
        let s = &samples[g[0]];
        lp.push_column(s.reward, s.requirement.clone(), g.len() as f64);
    }
    let sol = lp.solve()?;
    let mut x = vec![0.0; samples.len()];
    for (g, periods) in members.iter().enumerate() {
        let mut left = sol.x[g];
        for &t in periods {
            let take = left.clamp(0.0, 1.0);
            x[t] = take;
            left -= take;
        }
    }
    let value = samples.iter().zip(&x).map(|(s, x)| s.reward * x).sum();
    Ok(HindsightSolution {
        value,
        x,
        prices: sol.y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_period_half_accept() {
        let s = OrderSample::new(5.0, vec![2.0, 2.0], vec![1.0, 1.0]);
        let sol = solve_hindsight_relaxation(&[s]).unwrap();
        assert!((sol.value - 2.5).abs() < 1e-12);
        assert!((sol.x[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn negative_rewards_value_zero() {
        let samples: Vec<_> = (0..5)
            .map(|k| OrderSample::new(-1.0 - k as f64, vec![0.5], vec![1.0]))
            .collect();
        let sol = solve_hindsight_relaxation(&samples).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.x.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn grouped_columns_split_back() {
        let s = OrderSample::new(1.0, vec![1.0], vec![0.75]);
        let samples = vec![s.clone(), s.clone(), s];
        let sol = solve_hindsight_relaxation(&samples).unwrap();
        assert!((sol.value - 2.25).abs() < 1e-12);
        assert_eq!(sol.x, vec![1.0, 1.0, 0.25]);
    }

    #[test]
    fn empty_rejected() {
        assert!(solve_hindsight_relaxation(&[]).is_err());
    }
}
