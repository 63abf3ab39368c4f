//! Randomized invariants of the policies and solvers.

mod common;

use common::*;
use olpr::dual::{f_eval, f_subgradient, project_omega_p};
use olpr::harness::format_sig9;
use olpr::lp::{solve_hindsight_relaxation, solve_induced};
use olpr::model::{BoundsParams, OrderSample};
use olpr::policies::{simulate, PolicyConfig};
use olpr::rng::trial_rng;
use proptest::prelude::*;

fn stream(model_idx: usize, seed: u64, t: usize) -> (olpr::model::InputModel, Vec<OrderSample>) {
    let model = test_models().swap_remove(model_idx);
    let samples = model.sampler(seed).take(t).collect();
    (model, samples)
}

fn sample_set(seed: u64, n: usize, m: usize) -> Vec<OrderSample> {
    olpr::model::InputModel::random_input_ii(m, true)
        .unwrap()
        .sampler(seed)
        .take(n)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inventory_never_negative(model_idx in 0..4usize, seed in any::<u64>(), t in 20..600usize) {
        let (model, samples) = stream(model_idx, seed, t);
        for cfg in scaled_policies(&model) {
            let res = simulate(&model, &samples, &cfg).unwrap();
            let trace = res.inventory_trace.as_ref().unwrap();
            prop_assert_eq!(trace.len(), t + 1);
            for (k, level) in trace.iter().enumerate() {
                prop_assert!(level.iter().all(|l| *l >= 0.0), "{} period {}: {:?}", res.algorithm, k, level);
            }
        }
    }

    #[test]
    fn reward_within_hindsight(model_idx in 0..4usize, seed in any::<u64>(), t in 20..600usize) {
        let (model, samples) = stream(model_idx, seed, t);
        let bound = solve_hindsight_relaxation(&samples).unwrap().value;
        for cfg in scaled_policies(&model) {
            let res = simulate(&model, &samples, &cfg).unwrap();
            prop_assert!(res.reward <= bound + 1e-8, "{}: {} > {}", res.algorithm, res.reward, bound);
        }
    }

    #[test]
    fn reruns_are_identical(model_idx in 0..4usize, seed in any::<u64>(), t in 20..300usize) {
        let (model, samples) = stream(model_idx, seed, t);
        for cfg in scaled_policies(&model) {
            let a = simulate(&model, &samples, &cfg).unwrap();
            let b = simulate(&model, &samples, &cfg).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn decisions_ignore_the_future(
        model_idx in 0..4usize,
        seed in any::<u64>(),
        t in 40..300usize,
        cut_frac in 0.1..0.9f64,
    ) {
        let (model, samples) = stream(model_idx, seed, t);
        let cut = ((t as f64) * cut_frac) as usize;
        let mut altered = samples.clone();
        let tail: Vec<_> = model.sampler(seed ^ 0xdead_beef).take(t - cut).collect();
        altered[cut..].clone_from_slice(&tail);
        for cfg in scaled_policies(&model) {
            let cfg = PolicyConfig { record_decisions: true, ..cfg };
            let a = simulate(&model, &samples, &cfg).unwrap();
            let b = simulate(&model, &altered, &cfg).unwrap();
            let (da, db) = (a.decisions.unwrap(), b.decisions.unwrap());
            prop_assert_eq!(&da[..cut], &db[..cut], "{}", a.algorithm);
        }
    }

    #[test]
    fn reward_is_sum_of_accepted(model_idx in 0..4usize, seed in any::<u64>(), t in 20..400usize) {
        let (model, samples) = stream(model_idx, seed, t);
        for cfg in scaled_policies(&model) {
            let cfg = PolicyConfig { record_decisions: true, ..cfg };
            let res = simulate(&model, &samples, &cfg).unwrap();
            let d = res.decisions.as_ref().unwrap();
            let sum: f64 = samples.iter().zip(d).filter(|(_, k)| **k).map(|(s, _)| s.reward).sum();
            prop_assert!((sum - res.reward).abs() <= 1e-9 * (1.0 + sum.abs()));
            prop_assert_eq!(d.iter().filter(|k| **k).count(), res.accepted);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn f_is_convex(seed in any::<u64>(), m in 1..4usize, lambda in 0.0..1.0f64) {
        let samples = sample_set(seed, 25, m);
        let mut rng = trial_rng(seed);
        use rand::Rng;
        let budget: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let p: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
        let q: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
        let mid: Vec<f64> = p.iter().zip(&q).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let f = |x: &[f64]| f_eval(&budget, &samples, x).unwrap();
        prop_assert!(f(&mid) <= lambda * f(&p) + (1.0 - lambda) * f(&q) + 1e-9);
    }

    #[test]
    fn subgradient_supports_f(seed in any::<u64>(), m in 1..4usize) {
        let samples = sample_set(seed, 25, m);
        let mut rng = trial_rng(seed.wrapping_add(1));
        use rand::Rng;
        let budget: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..1.0)).collect();
        let p: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
        let q: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..10.0)).collect();
        let g = f_subgradient(&budget, &samples, &p).unwrap();
        let lin: f64 = g.iter().zip(q.iter().zip(&p)).map(|(g, (q, p))| g * (q - p)).sum();
        let f = |x: &[f64]| f_eval(&budget, &samples, x).unwrap();
        prop_assert!(f(&q) >= f(&p) + lin - 1e-9);
    }

    #[test]
    fn induced_value_scales_linearly(seed in any::<u64>(), n in 1..5usize, m in 1..3usize, alpha in 0.1..20.0f64) {
        let inst = random_instance(&mut trial_rng(seed), n, m);
        let base = solve_induced(&inst).unwrap().objective;
        let scaled = solve_induced(&inst.scaled(alpha)).unwrap().objective;
        prop_assert!((scaled - alpha * base).abs() <= 1e-9 * (1.0 + (alpha * base).abs()));
    }

    #[test]
    fn price_projection_lands_in_box(p in proptest::collection::vec(-20.0..60.0f64, 1..6)) {
        let bounds = BoundsParams::new(10.0, 1.0, 0.5, 0.2).unwrap();
        let out = project_omega_p(&p, &bounds);
        prop_assert!(out.iter().all(|v| *v >= 0.0));
        prop_assert!(out.iter().sum::<f64>() <= bounds.price_cap() * (1.0 + 1e-12));
        let again = project_omega_p(&out, &bounds);
        for (a, b) in out.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn sig9_round_trips(x in -1e9..1e9f64) {
        let back: f64 = format_sig9(x).parse().unwrap();
        prop_assert!((back - x).abs() <= 5e-9 * x.abs().max(1e-8) + 5e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Replays the acceptance budgets from the recorded decisions: a
    /// non-always-accept order is only ever taken with at least one unit left.
    #[test]
    fn acceptance_budgets_cover_every_rationed_acceptance(hard in any::<bool>(), seed in any::<u64>(), t in 50..1500usize) {
        let (model, samples) = stream(if hard { 2 } else { 3 }, seed, t);
        let cfg = scaled_policies(&model)
            .into_iter()
            .find(|c| c.algorithm == olpr::policies::Algorithm::FiniteSupport)
            .unwrap();
        let cfg = PolicyConfig { record_decisions: true, ..cfg };
        let params = olpr::policies::constants::FiniteParams::active(&model, t, &cfg.overrides).unwrap();
        let (kappa, warmup) = (params.kappa, params.warmup());
        let res = simulate(&model, &samples, &cfg).unwrap();
        let decisions = res.decisions.unwrap();
        let spec = model.finite_spec().unwrap();
        let mut phi = vec![0.0; spec.n()];
        let mut always = vec![false; spec.n()];
        for (idx, (s, took)) in samples.iter().zip(&decisions).enumerate() {
            let period = idx + 1;
            let ty = s.type_index.unwrap();
            if period <= warmup {
                prop_assert!(!took);
            } else if *took && !always[ty] {
                prop_assert!(phi[ty] >= 1.0, "period {}: type {} taken with budget {}", period, ty, phi[ty]);
                phi[ty] -= 1.0;
            }
            if period >= warmup && period % kappa == 0 {
                let window = &samples[period - kappa..period];
                let mut b_hat = vec![0.0; spec.m()];
                let mut mu_hat = vec![0.0; spec.n()];
                for w in window {
                    for (acc, b) in b_hat.iter_mut().zip(&w.replenishment) {
                        *acc += b;
                    }
                    mu_hat[w.type_index.unwrap()] += 1.0;
                }
                let sol = solve_induced(&olpr::lp::InducedLpInstance::from_spec_scaled(spec, &b_hat, &mu_hat)).unwrap();
                for (p, x) in phi.iter_mut().zip(&sol.x) {
                    prop_assert!(*x >= 0.0);
                    *p += x;
                }
                always = vec![false; spec.n()];
                for i in sol.exhausted_types() {
                    always[i] = true;
                }
            }
        }
    }
}

#[test]
fn idle_policy_trace_is_cumulative_replenishment() {
    let (model, samples) = stream(0, 3, 200);
    let cfg = PolicyConfig::new(olpr::policies::Algorithm::RejectAll).with_trace(true);
    let res = simulate(&model, &samples, &cfg).unwrap();
    let trace = res.inventory_trace.unwrap();
    let mut acc = vec![0.0; model.m];
    for (k, s) in samples.iter().enumerate() {
        for (a, b) in acc.iter_mut().zip(&s.replenishment) {
            *a += b;
        }
        assert_eq!(trace[k + 1], acc);
    }
    assert_eq!(res.stockouts, 0);
}
