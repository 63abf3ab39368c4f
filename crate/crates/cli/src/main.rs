use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use olpr::config::{ConfigError, ExperimentConfig};
use olpr::dual::{minimize_f, DualMethod, DualObjective, SolverOpts};
use olpr::harness::{
    format_sig9, run_experiment, trace_cell, write_trace_csv, ExperimentSpec, TraceRequest,
};
use olpr::lp::{solve_induced, InducedLpInstance};
use olpr::model::{build_hard_instance, validate_model, BoundsParams, InputModel, OrderSample};
use olpr::policies::{Algorithm, ConstantsLedger, PolicyOverrides};

#[derive(Parser)]
#[command(name = "olpr", version, about = "Online LP with replenishment: experiments and solvers")]
struct Cli {
    /// Print machine-readable JSON lines instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment grid of a config file and write CSVs.
    Run(RunArgs),
    /// Check a config file and probe its model's declared bounds.
    Validate(ValidateArgs),
    /// Print formula constants for a model and horizon.
    Constants(ConstantsArgs),
    /// Solve the induced LP of a finite-support model.
    SolveInduced(SolveInducedArgs),
    /// Minimize the empirical dual objective.
    SolveDual(SolveDualArgs),
    /// Write one trial's inventory trajectory as CSV.
    Trace(TraceArgs),
}

#[derive(Args, Default)]
struct OverrideArgs {
    /// W of the bounded algorithm.
    #[arg(long)]
    w: Option<f64>,
    /// C of the bounded algorithm.
    #[arg(long)]
    c: Option<f64>,
    /// C of the finite-support algorithm.
    #[arg(long)]
    c_finite: Option<f64>,
    /// W of the finite-support algorithm.
    #[arg(long)]
    w_finite: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long)]
    c1: Option<f64>,
    #[arg(long)]
    c2: Option<f64>,
    #[arg(long)]
    c3: Option<f64>,
    #[arg(long)]
    c4: Option<f64>,
    /// Multiplier on warm-up lengths.
    #[arg(long)]
    warmup_scale: Option<f64>,
    /// Multiplier on batch lengths.
    #[arg(long)]
    batch_scale: Option<f64>,
    /// Multiplier on the bounded algorithm's step size.
    #[arg(long)]
    step_scale: Option<f64>,
}

impl OverrideArgs {
    fn overrides(&self) -> PolicyOverrides {
        PolicyOverrides {
            w: self.w,
            c: self.c,
            c_finite: self.c_finite,
            w_finite: self.w_finite,
            c0: self.c0,
            c1: self.c1,
            c2: self.c2,
            c3: self.c3,
            c4: self.c4,
            warmup_scale: self.warmup_scale,
            batch_scale: self.batch_scale,
            step_scale: self.step_scale,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for the CSV outputs; overrides the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Trials per cell; overrides the config.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated horizons; overrides the config.
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<usize>>,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    threads: Option<usize>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    config: PathBuf,
    /// Draws used to probe the declared bounds.
    #[arg(long, default_value_t = 100_000)]
    probe: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelChoice {
    RandomInputI,
    RandomInputIi,
    FiniteHard,
}

/// A model from a config file or from flags; bound flags override either.
#[derive(Args)]
struct ModelArgs {
    /// Take the model from this experiment config.
    #[arg(long, conflicts_with = "model")]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelChoice>,
    /// Number of resources for the random models.
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long)]
    r_bar: Option<f64>,
    #[arg(long)]
    a_bar: Option<f64>,
    #[arg(long)]
    b_bar: Option<f64>,
    #[arg(long)]
    b_lower: Option<f64>,
}

#[derive(Args)]
struct ConstantsArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 10_000)]
    horizon: usize,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Args)]
struct SolveInducedArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// A TOML induced-LP instance instead of a model.
    #[arg(long, conflicts_with_all = ["config", "model"])]
    instance: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodChoice {
    Exact,
    Subgradient,
}

#[derive(Args)]
struct SolveDualArgs {
    /// CSV with columns `reward`, `a*` and optionally `b*`.
    #[arg(long, conflicts_with_all = ["config", "model"])]
    samples: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    /// Samples drawn from the model when no CSV is given.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated budget; defaults to the sample mean of `b`.
    #[arg(long, value_delimiter = ',')]
    budget: Option<Vec<f64>>,
    /// Cap on the sum of prices.
    #[arg(long)]
    cap: Option<f64>,
    #[arg(long, value_enum, default_value = "exact")]
    method: MethodChoice,
    #[arg(long, default_value_t = 5000)]
    max_iters: usize,
}

#[derive(Args)]
struct TraceArgs {
    #[arg(long)]
    config: PathBuf,
    /// Policy label, e.g. `non-degenerate`.
    #[arg(long)]
    algorithm: String,
    #[arg(long)]
    horizon: usize,
    #[arg(long, default_value_t = 0)]
    trial: usize,
    #[arg(long, default_value_t = 0)]
    resource: usize,
    #[arg(long, default_value_t = 500)]
    downsample: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: OverrideArgs,
}

enum Failure {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Config(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Config(m) | Failure::Runtime(m) => m,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let json = cli.json;
    let result = match cli.command {
        Command::Run(a) => cmd_run(a, json),
        Command::Validate(a) => cmd_validate(a, json),
        Command::Constants(a) => cmd_constants(a, json),
        Command::SolveInduced(a) => cmd_solve_induced(a, json),
        Command::SolveDual(a) => cmd_solve_dual(a, json),
        Command::Trace(a) => cmd_trace(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// Loads a config and applies the flag overrides to every policy.
fn load_spec(path: &Path, overrides: &OverrideArgs) -> Result<ExperimentSpec, Failure> {
    let mut cfg = ExperimentConfig::load(path)?;
    let flags = overrides.overrides();
    for p in &mut cfg.policies {
        p.overrides = flags.or(&p.overrides);
    }
    Ok(cfg.to_spec()?)
}

fn cmd_run(a: RunArgs, json: bool) -> Result<(), Failure> {
    let mut spec = load_spec(&a.config, &a.overrides)?;
    if let Some(d) = a.output_dir {
        spec.output_dir = Some(d);
    }
    if let Some(t) = a.trials {
        spec.trials = t;
    }
    if let Some(h) = a.horizons {
        spec.horizons = h;
    }
    if let Some(s) = a.seed {
        spec.master_seed = s;
    }
    if a.threads.is_some() {
        spec.threads = a.threads;
    }
    spec.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let out = run_experiment(&spec).map_err(runtime)?;
    for c in &out.report.cells {
        if json {
            println!("{}", serde_json::to_string(c).map_err(runtime)?);
        } else {
            println!(
                "{:<16} T={:<7} regret {} ± {}  stockouts {}  reward {}  hindsight {}  ({} ok, {} failed)",
                c.algorithm,
                c.horizon,
                format_sig9(c.mean_regret),
                format_sig9(c.std_err),
                format_sig9(c.mean_stockouts),
                format_sig9(c.mean_reward),
                format_sig9(c.mean_hindsight),
                c.trials,
                c.failures,
            );
        }
    }
    if let Some(dir) = &spec.output_dir {
        if !json {
            println!("wrote {}/{}_{{raw,aggregate,failures}}.csv", dir.display(), spec.id);
        }
    }
    let dead = out.dead_cells();
    if !dead.is_empty() {
        let first = &out.failures[0];
        return Err(Failure::Runtime(format!(
            "{} cell(s) had every trial fail; first error: {} (T={}, trial {})",
            dead.len(),
            first.error,
            first.horizon,
            first.trial
        )));
    }
    Ok(())
}

fn cmd_validate(a: ValidateArgs, json: bool) -> Result<(), Failure> {
    let spec = load_spec(&a.config, &OverrideArgs::default())?;
    let report = validate_model(&spec.model, a.probe, a.seed);
    if json {
        println!("{}", serde_json::to_string(&report).map_err(runtime)?);
    } else {
        println!(
            "config ok: {} policies, horizons {:?}, {} trials",
            spec.algorithms.len(),
            spec.horizons,
            spec.trials
        );
        println!(
            "model {}: {} draws, {} bound violations",
            report.model, report.n_probe, report.violation_count
        );
        for v in &report.violations {
            println!("  draw {}: {:?} value {} bound {}", v.draw, v.kind, v.value, v.bound);
        }
        for n in &report.notes {
            println!("  note: {n}");
        }
    }
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Runtime(format!(
            "model {} violates its declared bounds",
            report.model
        )))
    }
}

impl ModelArgs {
    fn resolve(&self) -> Result<InputModel, Failure> {
        let mut model = match (&self.config, self.model) {
            (Some(path), _) => ExperimentConfig::load(path)?.model.build()?,
            (None, Some(ModelChoice::RandomInputI)) => {
                InputModel::random_input_i(self.m).map_err(|e| Failure::Usage(e.to_string()))?
            }
            (None, Some(ModelChoice::RandomInputIi)) => InputModel::random_input_ii(self.m, false)
                .map_err(|e| Failure::Usage(e.to_string()))?,
            (None, Some(ModelChoice::FiniteHard)) => build_hard_instance(),
            (None, None) => {
                return Err(Failure::Usage("give --config or --model".into()));
            }
        };
        if self.r_bar.or(self.a_bar).or(self.b_bar).or(self.b_lower).is_some() {
            let b = model.bounds;
            let bounds = BoundsParams::new(
                self.r_bar.unwrap_or(b.r_bar),
                self.a_bar.unwrap_or(b.a_bar),
                self.b_bar.unwrap_or(b.b_bar),
                self.b_lower.unwrap_or(b.b_lower),
            )
            .map_err(|e| Failure::Usage(e.to_string()))?;
            model = model
                .with_bounds(bounds)
                .map_err(|e| Failure::Usage(e.to_string()))?;
        }
        Ok(model)
    }
}

fn cmd_constants(a: ConstantsArgs, json: bool) -> Result<(), Failure> {
    let model = a.model.resolve()?;
    let ov = a.overrides.overrides();
    let ledger =
        ConstantsLedger::compute(&model, a.horizon, &ov).map_err(|e| Failure::Usage(e.to_string()))?;
    if json {
        let line = json!({ "model": model.name, "overrides": ov, "ledger": ledger });
        println!("{line}");
        return Ok(());
    }
    println!("model {} (m = {}), T = {}", model.name, model.m, a.horizon);
    for (tag, p) in [("formula", &ledger.bounded_formula), ("active", &ledger.bounded_active)] {
        println!(
            "bounded ({tag}): W = {}  C = {}  kappa = {}  step = {}",
            p.w,
            p.c,
            p.kappa,
            format_sig9(p.step)
        );
    }
    for (tag, p) in [("formula", &ledger.finite_formula), ("active", &ledger.finite_active)] {
        match p {
            Some(p) => println!(
                "finite-support ({tag}): C = {}  kappa = {}  W = {}  warm-up = {}",
                format_sig9(p.c),
                p.kappa,
                p.w,
                p.warmup()
            ),
            None => println!("finite-support ({tag}): n/a (model is not finite-support)"),
        }
    }
    match &ledger.nondeg_formula {
        Some(c) => {
            let vals = [
                c.c0, c.c1, c.c2, c.c3, c.c4, c.c5, c.c6, c.c7, c.c8, c.c9, c.c10, c.c11,
            ];
            let text: Vec<String> = vals
                .iter()
                .enumerate()
                .map(|(i, v)| format!("C{i} = {}", format_sig9(*v)))
                .collect();
            println!("non-degenerate (formula): {}", text.join("  "));
            println!(
                "non-degenerate (formula): q = {}  N = {}  epsilon = {}",
                format_sig9(c.q),
                c.n,
                format_sig9(c.epsilon)
            );
        }
        None => println!("non-degenerate (formula): n/a (model declares no non-degeneracy parameters)"),
    }
    match &ledger.nondeg_active {
        Some(p) => println!(
            "non-degenerate (active): C0 = {}  C1 = {}  C2 = {}  C3 = {}  C4 = {}",
            format_sig9(p.c0),
            format_sig9(p.c1),
            format_sig9(p.c2),
            format_sig9(p.c3),
            format_sig9(p.c4)
        ),
        None => println!("non-degenerate (active): n/a (no constants available)"),
    }
    if let Some(f) = ledger.n_u_flat {
        println!("conversion batches covered by the analysis: N_U_flat = {f}");
    }
    if let Some(s) = &ledger.accumulation {
        println!(
            "accumulation schedule: kappa = {}  N_V = {}  V = {:?}{}",
            s.kappa,
            s.n_v,
            s.v,
            if s.fallback { "  (single-batch fallback)" } else { "" }
        );
    }
    let s = &ledger.conversion;
    println!(
        "conversion schedule: N_U = {}  U = {:?}{}",
        s.n_u,
        s.u,
        if s.fallback { "  (single-batch fallback)" } else { "" }
    );
    Ok(())
}

fn cmd_solve_induced(a: SolveInducedArgs, json: bool) -> Result<(), Failure> {
    let inst = match &a.instance {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str::<InducedLpInstance>(&text)
                .map_err(|e| Failure::Config(format!("cannot parse {}: {e}", path.display())))?
        }
        None => {
            let model = a.model.resolve()?;
            let spec = model.finite_spec().ok_or_else(|| {
                Failure::Usage(format!("model {} is not finite-support", model.name))
            })?;
            InducedLpInstance::from_spec(spec)
        }
    };
    let sol = solve_induced(&inst).map_err(runtime)?;
    if json {
        println!("{}", serde_json::to_string(&sol).map_err(runtime)?);
        return Ok(());
    }
    println!("objective {:.9}", sol.objective);
    println!("degenerate={} unique={}", sol.degenerate, sol.unique);
    println!("x = {:?}", sol.x);
    println!("v = {:?}", sol.v);
    println!("s = {:?}", sol.s);
    println!("resource duals = {:?}", sol.resource_duals);
    println!("cap duals = {:?}", sol.cap_duals);
    let basis: Vec<String> = sol
        .basis
        .iter()
        .map(|b| format!("{:?}{}", b.class, b.index))
        .collect();
    println!("basis = [{}]", basis.join(", "));
    Ok(())
}

fn read_samples_csv(path: &Path) -> Result<Vec<OrderSample>, Failure> {
    let bad = |m: String| Failure::Config(format!("{}: {m}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |prefix: char| -> Vec<usize> {
        headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(prefix) && h[1..].chars().all(|c| c.is_ascii_digit()) && h.len() > 1)
            .map(|(i, _)| i)
            .collect()
    };
    let reward = headers
        .iter()
        .position(|h| h == "reward")
        .ok_or_else(|| bad("missing `reward` column".into()))?;
    let (a_cols, b_cols) = (col('a'), col('b'));
    if a_cols.is_empty() || (!b_cols.is_empty() && b_cols.len() != a_cols.len()) {
        return Err(bad("need columns a0..a{m-1} and optionally b0..b{m-1}".into()));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64, Failure> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", line + 1, i + 1)))
        };
        let a = a_cols.iter().map(|&i| num(i)).collect::<Result<Vec<_>, _>>()?;
        let b = if b_cols.is_empty() {
            vec![0.0; a.len()]
        } else {
            b_cols.iter().map(|&i| num(i)).collect::<Result<Vec<_>, _>>()?
        };
        out.push(OrderSample::new(num(reward)?, a, b));
    }
    Ok(out)
}

fn cmd_solve_dual(a: SolveDualArgs, json: bool) -> Result<(), Failure> {
    let samples = match &a.samples {
        Some(path) => read_samples_csv(path)?,
        None => a.model.resolve()?.sampler(a.seed).take(a.n).collect(),
    };
    if samples.is_empty() {
        return Err(Failure::Usage("no samples".into()));
    }
    let m = samples[0].m();
    let budget = match a.budget {
        Some(b) => b,
        None => {
            let mut acc = vec![0.0; m];
            for s in &samples {
                for (x, b) in acc.iter_mut().zip(&s.replenishment) {
                    *x += b / samples.len() as f64;
                }
            }
            acc
        }
    };
    let obj = DualObjective::new(&budget, &samples).map_err(|e| Failure::Usage(e.to_string()))?;
    let opts = SolverOpts {
        method: match a.method {
            MethodChoice::Exact => DualMethod::Exact,
            MethodChoice::Subgradient => DualMethod::Subgradient,
        },
        max_iters: a.max_iters,
        price_cap: a.cap,
        ..SolverOpts::default()
    };
    let sol = minimize_f(&obj, &opts).map_err(runtime)?;
    if json {
        let line = json!({
            "price": sol.price,
            "value": sol.value,
            "iterations": sol.iterations,
            "budget": budget,
            "samples": samples.len(),
        });
        println!("{line}");
    } else {
        println!("value {}", format_sig9(sol.value));
        let p: Vec<String> = sol.price.iter().map(|v| format_sig9(*v)).collect();
        println!("price [{}]", p.join(", "));
        println!("iterations {}", sol.iterations);
    }
    Ok(())
}

fn cmd_trace(a: TraceArgs) -> Result<(), Failure> {
    let mut spec = load_spec(&a.config, &a.overrides)?;
    if let Some(s) = a.seed {
        spec.master_seed = s;
    }
    let algorithm = Algorithm::parse(&a.algorithm).ok_or_else(|| {
        let known: Vec<_> = Algorithm::ALL.iter().map(|x| x.label()).collect();
        Failure::Usage(format!(
            "unknown algorithm `{}` (expected one of {})",
            a.algorithm,
            known.join(", ")
        ))
    })?;
    let req = TraceRequest {
        algorithm,
        horizon: a.horizon,
        trial: a.trial,
        resource: a.resource,
        downsample: a.downsample,
    };
    let trace = trace_cell(&spec, &req).map_err(|e| Failure::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    write_trace_csv(&spec.id, &spec.model.name, &trace, &mut buf).map_err(runtime)?;
    match &a.out {
        Some(path) => std::fs::write(path, &buf)
            .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{}", String::from_utf8_lossy(&buf)),
    }
    Ok(())
}
