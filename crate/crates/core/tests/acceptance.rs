//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass a substring to run only matching criteria:
//! `cargo test -p olpr --test acceptance -- dual`.

mod common;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use olpr::config::ExperimentConfig;
use olpr::dual::{grid_oracle, minimize_f, DualObjective, SolverOpts};
use olpr::harness::{run_experiment, sqrt_t_fit, ExperimentOutput, ExperimentSpec};
use olpr::lp::{solve_hindsight_relaxation, solve_induced, InducedLpInstance};
use olpr::model::{build_hard_instance, InputModel, OrderSample};
use olpr::policies::constants::{accumulation_schedule, conversion_schedule};
use olpr::policies::{simulate, Algorithm, PolicyConfig, PolicyOverrides};
use olpr::rng::trial_rng;
use rand::Rng;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn load_suite(name: &str, out: &Path) -> ExperimentSpec {
    let cfg = ExperimentConfig::load(&config_path(name)).expect("shipped config loads");
    let mut spec = cfg.to_spec().expect("shipped config is valid");
    spec.output_dir = Some(out.to_path_buf());
    spec
}

/// Per-trial outcomes of the feasibility sweep.
struct SweepRow {
    label: String,
    negative_periods: usize,
    reward: f64,
    hindsight: f64,
}

const SWEEP_T: usize = 10_000;
const SWEEP_SEEDS: u64 = 50;

fn feasibility_sweep() -> Vec<SweepRow> {
    let mut rows = Vec::new();
    for model in test_models() {
        let policies = scaled_policies(&model);
        for seed in 0..SWEEP_SEEDS {
            let samples: Vec<_> = model.sampler(1000 + seed).take(SWEEP_T).collect();
            let hindsight = solve_hindsight_relaxation(&samples).expect("relaxation solves").value;
            for cfg in &policies {
                let res = simulate(&model, &samples, cfg).expect("policy runs");
                let trace = res.inventory_trace.as_ref().expect("trace recorded");
                let negative_periods = trace
                    .iter()
                    .filter(|level| level.iter().any(|l| *l < 0.0))
                    .count();
                rows.push(SweepRow {
                    label: format!("{}/{}/{}", model.name, res.algorithm, seed),
                    negative_periods,
                    reward: res.reward,
                    hindsight,
                });
            }
        }
    }
    rows
}

fn feasibility(rows: &[SweepRow]) -> Verdict {
    let bad: Vec<_> = rows.iter().filter(|r| r.negative_periods > 0).collect();
    let detail = format!(
        "{} trials (4 models, T = {SWEEP_T}, {SWEEP_SEEDS} seeds), {} with a negative inventory{}",
        rows.len(),
        bad.len(),
        bad.first().map(|r| format!(", first {}", r.label)).unwrap_or_default()
    );
    check(bad.is_empty(), detail)
}

fn dominance(rows: &[SweepRow]) -> Verdict {
    let worst = rows
        .iter()
        .map(|r| (r.hindsight - r.reward, &r.label))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .expect("sweep is nonempty");
    check(
        worst.0 >= -1e-8,
        format!("min(hindsight − reward) = {:.3e} at {}", worst.0, worst.1),
    )
}

fn lp_oracle() -> Verdict {
    let mut rng = trial_rng(2024);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let m = 1 + k % 3;
        let n = 1 + (k / 3) % (6 - m);
        let inst = random_instance(&mut rng, n, m);
        let got = solve_induced(&inst).map_err(|e| format!("instance {k}: {e}"))?;
        worst = worst.max((got.objective - induced_oracle(&inst)).abs());
    }
    let hard = build_hard_instance();
    let sol = solve_induced(&InducedLpInstance::from_spec(hard.finite_spec().unwrap()))
        .map_err(|e| e.to_string())?;
    check(
        worst <= 1e-7 && (sol.objective - 3.0).abs() <= 1e-7 && sol.degenerate,
        format!(
            "max |Δ| = {worst:.2e} over 200 instances; hard instance {:.9} degenerate={}",
            sol.objective, sol.degenerate
        ),
    )
}

fn dual_solver() -> Verdict {
    let models = [
        InputModel::random_input_i(1).unwrap(),
        InputModel::random_input_i(2).unwrap(),
        nondegenerate_finite_model(),
    ];
    let mut rng = trial_rng(77);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_norm_ratio = 0.0f64;
    for k in 0..100u64 {
        let model = &models[k as usize % 3];
        let b = model.bounds;
        let samples: Vec<_> = model.sampler(500 + k).take(50).collect();
        let budget: Vec<f64> = (0..model.m)
            .map(|_| rng.random_range(b.b_lower..b.b_bar))
            .collect();
        let obj = DualObjective::new(&budget, &samples).map_err(|e| e.to_string())?;
        let sol = minimize_f(&obj, &SolverOpts::default()).map_err(|e| format!("objective {k}: {e}"))?;
        // Every minimizer has ⟨p, B'⟩ ≤ f(0), so the box below contains one.
        let f0 = f_oracle(&budget, &samples, &vec![0.0; model.m]);
        let box_size = f0 / budget.iter().copied().fold(f64::INFINITY, f64::min);
        let res = if model.m == 1 { 20001 } else { 301 };
        let (_, grid) = grid_oracle(&obj, box_size, res).map_err(|e| e.to_string())?;
        let slack = grid_slack(&budget, &samples, box_size / (res - 1) as f64);
        if sol.value > grid + 1e-9 || grid - sol.value > slack + 1e-9 {
            return Err(format!(
                "objective {k}: solver {} grid {grid} slack {slack}",
                sol.value
            ));
        }
        worst_excess = worst_excess.max(sol.value - grid);
        let norm: f64 = sol.price.iter().sum();
        worst_norm_ratio = worst_norm_ratio.max(norm / b.price_cap());
    }
    let single = vec![OrderSample::new(5.0, vec![2.0, 2.0], vec![1.0, 1.0])];
    let budget = [1.0, 1.0];
    let analytic = minimize_f(
        &DualObjective::new(&budget, &single).unwrap(),
        &SolverOpts::default(),
    )
    .map_err(|e| e.to_string())?;
    check(
        (analytic.value - 2.5).abs() <= 1e-4 && worst_norm_ratio < 1.0,
        format!(
            "100 objectives within grid discretization (max solver − grid = {worst_excess:.2e}); \
             single-sample f* = {:.6}; max ‖p*‖₁ / (r̄/b̲) = {worst_norm_ratio:.3}",
            analytic.value
        ),
    )
}

fn scaling() -> Verdict {
    let mut rng = trial_rng(99);
    let mut found = 0;
    let mut worst = 0.0f64;
    while found < 50 {
        let n = rng.random_range(2..5);
        let m = rng.random_range(1..3);
        let inst = random_instance(&mut rng, n, m);
        let base = solve_induced(&inst).map_err(|e| e.to_string())?;
        if base.degenerate {
            continue;
        }
        found += 1;
        for alpha in [0.5, 2.0, 10.0] {
            let scaled = solve_induced(&inst.scaled(alpha)).map_err(|e| e.to_string())?;
            let want = alpha * base.objective;
            worst = worst.max((scaled.objective - want).abs() / want.abs().max(1e-300));
        }
    }
    check(worst <= 1e-9, format!("max relative error {worst:.2e} over 50 instances"))
}

fn schedules() -> Verdict {
    let acc = accumulation_schedule(100, 10, 8.0);
    let conv = conversion_schedule(81);
    check(
        acc.v == [11, 26, 42, 101] && conv.u == [1, 56, 74, 80, 82],
        format!("V = {:?}, U = {:?}", acc.v, conv.u),
    )
}

fn reproduction(out: &Path) -> Verdict {
    let spec = load_suite("random-input-i.toml", out);
    let res = run_experiment(&spec).map_err(|e| e.to_string())?;
    let (main, base) = (
        Algorithm::NonDegenerate.label(),
        Algorithm::BaselineOlp.label(),
    );
    let last = *spec.horizons.iter().max().unwrap();
    let cell = |a: &str, t: usize| res.report.cell(a, t).expect("cell present");
    let regret_ok = cell(main, last).mean_regret < cell(base, last).mean_regret;
    let base_stock: Vec<f64> = res.report.series(base).iter().map(|c| c.mean_stockouts).collect();
    let increasing = base_stock.windows(2).all(|w| w[1] > w[0]);
    let stock_ok = 2.0 * cell(main, last).mean_stockouts <= cell(base, last).mean_stockouts;
    let (shape_ok, shape) = rises_then_falls(&res);
    check(
        regret_ok && increasing && stock_ok && shape_ok && res.failures.is_empty(),
        format!(
            "(a) regret at T={last}: {:.1} vs {:.1}; (b) baseline stockouts {:?}, main {:.2}; (c) {shape}",
            cell(main, last).mean_regret,
            cell(base, last).mean_regret,
            base_stock.iter().map(|s| (s * 100.0).round() / 100.0).collect::<Vec<_>>(),
            cell(main, last).mean_stockouts,
        ),
    )
}

/// Peak strictly inside the horizon, above the start, and the end at most half of it.
fn rises_then_falls(res: &ExperimentOutput) -> (bool, String) {
    let Some(trace) = &res.trace else {
        return (false, "no trace recorded".into());
    };
    let pts = &trace.points;
    let (peak_idx, peak) = pts
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.1))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let first = pts[0].1;
    let last = pts[pts.len() - 1].1;
    let interior = peak_idx > pts.len() / 20 && peak_idx < pts.len() - pts.len() / 20;
    let ok = peak > first && interior && last <= 0.5 * peak;
    (
        ok,
        format!(
            "trace starts {first:.1}, peaks {peak:.1} at t={}, ends {last:.1}",
            pts[peak_idx].0
        ),
    )
}

fn growth_exponent(out: &Path) -> Verdict {
    let spec = load_suite("finite-hard.toml", out);
    let res = run_experiment(&spec).map_err(|e| e.to_string())?;
    let fit = sqrt_t_fit(&res.report, Algorithm::Bounded.label()).map_err(|e| e.to_string())?;
    let regrets: Vec<_> = res
        .report
        .series(Algorithm::Bounded.label())
        .iter()
        .map(|c| (c.horizon, (c.mean_regret * 10.0).round() / 10.0))
        .collect();
    check(
        (0.35..=0.65).contains(&fit.exponent) && spec.trials >= 200,
        format!(
            "slope {:.3} (R² {:.3}) from {regrets:?}, {} trials",
            fit.exponent, fit.r_squared, spec.trials
        ),
    )
}

fn determinism(out: &Path) -> Verdict {
    let build = |threads: usize, model: InputModel, algos: Vec<PolicyConfig>, dir: &str| {
        let mut spec = ExperimentSpec::new("determinism", model, algos);
        spec.horizons = vec![300, 1000];
        spec.trials = 6;
        spec.master_seed = 5;
        spec.threads = Some(threads);
        spec.output_dir = Some(out.join(dir));
        spec
    };
    let continuous = || {
        vec![
            PolicyConfig::new(Algorithm::NonDegenerate).with_overrides(two_phase_overrides()),
            PolicyConfig::new(Algorithm::BaselineOlp),
            PolicyConfig::new(Algorithm::Bounded).with_overrides(PolicyOverrides {
                w: Some(1.0),
                warmup_scale: Some(0.01),
                ..Default::default()
            }),
        ]
    };
    let finite = || scaled_policies(&build_hard_instance());
    let mut compared = 0;
    for (name, model, algos) in [
        ("ri", InputModel::random_input_i(3).unwrap(), continuous()),
        ("hard", build_hard_instance(), finite()),
    ] {
        let mut bodies = Vec::new();
        for (k, threads) in [1, 2, 1].into_iter().enumerate() {
            let dir = format!("{name}-{k}");
            run_experiment(&build(threads, model.clone(), algos.clone(), &dir))
                .map_err(|e| e.to_string())?;
            let raw = out.join(&dir).join("determinism_raw.csv");
            bodies.push(std::fs::read(&raw).map_err(|e| format!("{}: {e}", raw.display()))?);
        }
        if bodies.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("{name}: raw CSVs differ between reruns"));
        }
        compared += bodies.len();
    }
    Ok(format!("{compared} raw CSVs across 1 and 2 worker threads are byte-identical"))
}

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |name: &str| filter.is_empty() || filter.iter().any(|f| name.contains(f.as_str()));
    let scratch = tempfile::tempdir().expect("temp dir");
    let out = scratch.path();

    let mut sweep: Option<Vec<SweepRow>> = None;
    let mut failed = 0;
    let mut run = |name: &str, f: &mut dyn FnMut() -> Verdict| {
        if !wanted(name) {
            return;
        }
        let start = Instant::now();
        let verdict = f();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(d) => println!("PASS  {name:<22} {d} [{secs:.1}s]"),
            Err(d) => {
                failed += 1;
                println!("FAIL  {name:<22} {d} [{secs:.1}s]");
            }
        }
    };

    // Both criteria read the same sweep; it runs once, timed under the first.
    run("feasibility", &mut || feasibility(sweep.get_or_insert_with(feasibility_sweep)));
    run("hindsight-dominance", &mut || dominance(sweep.get_or_insert_with(feasibility_sweep)));
    run("lp-oracle", &mut lp_oracle);
    run("dual-solver", &mut dual_solver);
    run("scaling", &mut scaling);
    run("schedules", &mut schedules);
    run("reproduction", &mut || reproduction(&out.join("reproduction")));
    run("growth-exponent", &mut || growth_exponent(&out.join("growth")));
    run("determinism", &mut || determinism(&out.join("determinism")));

    if failed > 0 {
        println!("acceptance: {failed} criterion(s) failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
