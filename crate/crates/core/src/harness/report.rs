//! Per-cell aggregation and log-log growth fits.

use serde::Serialize;

use super::{ExperimentSpec, HarnessError, TrialFailure, TrialRecord};

pub const BENCHMARK_KIND: &str = "LP-relaxation upper bound";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub algorithm: String,
    pub model: String,
    pub horizon: usize,
    /// Successful trials.
    pub trials: usize,
    pub failures: usize,
    pub mean_reward: f64,
    pub mean_hindsight: f64,
    pub mean_regret: f64,
    /// Sample standard deviation of the regret over `√trials`.
    pub std_err: f64,
    pub mean_stockouts: f64,
    pub stockouts_std_err: f64,
    pub benchmark_kind: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub experiment_id: String,
    pub cells: Vec<CellSummary>,
}

impl RegretReport {
    pub fn cell(&self, algorithm: &str, horizon: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.algorithm == algorithm && c.horizon == horizon)
    }

    /// Cells of `algorithm` in ascending horizon order.
    pub fn series(&self, algorithm: &str) -> Vec<&CellSummary> {
        let mut v: Vec<_> = self.cells.iter().filter(|c| c.algorithm == algorithm).collect();
        v.sort_by_key(|c| c.horizon);
        v
    }
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregates raw rows in the order horizons × algorithms of `spec`.
pub fn aggregate(
    spec: &ExperimentSpec,
    records: &[TrialRecord],
    failures: &[TrialFailure],
) -> RegretReport {
    let mut cells = Vec::new();
    for &horizon in &spec.horizons {
        for cfg in &spec.algorithms {
            let label = cfg.algorithm.label();
            let rows: Vec<_> = records
                .iter()
                .filter(|r| r.horizon == horizon && r.algorithm == label)
                .collect();
            let col = |f: fn(&TrialRecord) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (mean_regret, std_err) = mean_and_se(&col(|r| r.regret));
            let (mean_stockouts, stockouts_std_err) = mean_and_se(&col(|r| r.stockouts as f64));
            cells.push(CellSummary {
                algorithm: label.into(),
                model: spec.model.name.clone(),
                horizon,
                trials: rows.len(),
                failures: failures
                    .iter()
                    .filter(|f| f.horizon == horizon && f.algorithm == label)
                    .count(),
                mean_reward: mean_and_se(&col(|r| r.reward)).0,
                mean_hindsight: mean_and_se(&col(|r| r.hindsight)).0,
                mean_regret,
                std_err,
                mean_stockouts,
                stockouts_std_err,
                benchmark_kind: BENCHMARK_KIND,
            });
        }
    }
    RegretReport {
        experiment_id: spec.id.clone(),
        cells,
    }
}

/// Least-squares line through `(ln T, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerFit {
    pub exponent: f64,
    pub log_intercept: f64,
    pub r_squared: f64,
}

pub fn power_fit(points: &[(f64, f64)]) -> Result<PowerFit, HarnessError> {
    const NEEDED: usize = 3;
    if points.len() < NEEDED || points.iter().any(|(t, y)| !(*t > 0.0) || !(*y > 0.0)) {
        return Err(HarnessError::DegenerateData { needed: NEEDED });
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(t, y)| (t.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::DegenerateData { needed: NEEDED });
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(PowerFit {
        exponent: slope,
        log_intercept: intercept,
        r_squared,
    })
}

/// Fits `mean_regret ∝ T^k` over the horizons of `algorithm` in `report`.
pub fn sqrt_t_fit(report: &RegretReport, algorithm: &str) -> Result<PowerFit, HarnessError> {
    let series = report.series(algorithm);
    if series.is_empty() {
        return Err(HarnessError::UnknownAlgorithm(algorithm.into()));
    }
    let points: Vec<_> = series
        .iter()
        .map(|c| (c.horizon as f64, c.mean_regret))
        .collect();
    power_fit(&points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_square_root_law() {
        let pts: Vec<_> = [1e3, 4e3, 1.6e4, 6.4e4]
            .iter()
            .map(|t: &f64| (*t, 3.0 * t.sqrt()))
            .collect();
        let fit = power_fit(&pts).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-6);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_squared_grows_slowly() {
        let pts: Vec<_> = [1e3, 1e4, 1e5]
            .iter()
            .map(|t: &f64| (*t, 2.0 * t.ln().powi(2)))
            .collect();
        assert!(power_fit(&pts).unwrap().exponent < 0.35);
    }

    #[test]
    fn nonpositive_regret_is_degenerate() {
        let pts = [(10.0, 1.0), (100.0, 0.0), (1000.0, 3.0)];
        assert!(matches!(
            power_fit(&pts),
            Err(HarnessError::DegenerateData { .. })
        ));
        assert!(power_fit(&pts[..2]).is_err());
    }

    #[test]
    fn standard_error() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }
}
