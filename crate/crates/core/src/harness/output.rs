//! CSV writers. Floats are printed in fixed notation with nine significant
//! digits.

use std::io::Write;
use std::path::Path;

use super::{HarnessError, InventoryTrace, RegretReport, TrialFailure, TrialRecord};

pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    // The exponent of the rounded scientific form already accounts for carries.
    let sci = format!("{x:.8e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let decimals = (8 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_raw_csv<W: Write>(records: &[TrialRecord], w: W) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "experiment_id",
        "algorithm",
        "model",
        "T",
        "trial",
        "seed",
        "reward",
        "hindsight",
        "regret",
        "stockouts",
    ])?;
    for r in records {
        out.write_record([
            r.experiment_id.clone(),
            r.algorithm.clone(),
            r.model.clone(),
            r.horizon.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            format_sig9(r.reward),
            format_sig9(r.hindsight),
            format_sig9(r.regret),
            r.stockouts.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(report: &RegretReport, w: W) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "experiment_id",
        "algorithm",
        "model",
        "T",
        "trials",
        "failures",
        "mean_reward",
        "mean_hindsight",
        "mean_regret",
        "std_err",
        "mean_stockouts",
        "stockouts_std_err",
        "benchmark_kind",
    ])?;
    for c in &report.cells {
        out.write_record([
            report.experiment_id.clone(),
            c.algorithm.clone(),
            c.model.clone(),
            c.horizon.to_string(),
            c.trials.to_string(),
            c.failures.to_string(),
            format_sig9(c.mean_reward),
            format_sig9(c.mean_hindsight),
            format_sig9(c.mean_regret),
            format_sig9(c.std_err),
            format_sig9(c.mean_stockouts),
            format_sig9(c.stockouts_std_err),
            c.benchmark_kind.to_string(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_failures_csv<W: Write>(
    experiment_id: &str,
    failures: &[TrialFailure],
    w: W,
) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["experiment_id", "algorithm", "T", "trial", "seed", "error"])?;
    for f in failures {
        out.write_record([
            experiment_id.to_string(),
            f.algorithm.clone(),
            f.horizon.to_string(),
            f.trial.to_string(),
            f.seed.to_string(),
            f.error.clone(),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(
    experiment_id: &str,
    model: &str,
    trace: &InventoryTrace,
    w: W,
) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "experiment_id",
        "algorithm",
        "model",
        "T",
        "trial",
        "resource",
        "t",
        "inventory",
    ])?;
    for (t, l) in &trace.points {
        out.write_record([
            experiment_id.to_string(),
            trace.algorithm.clone(),
            model.to_string(),
            trace.horizon.to_string(),
            trace.trial.to_string(),
            trace.resource.to_string(),
            t.to_string(),
            format_sig9(*l),
        ])?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Writes through a temporary sibling and renames it into place.
pub(crate) fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut Vec<u8>) -> Result<(), HarnessError>,
) -> Result<(), HarnessError> {
    let io = |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut buf = Vec::new();
    body(&mut buf)?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, &buf).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_sig9(191575.6), "191575.600");
        assert_eq!(format_sig9(1.0), "1.00000000");
        assert_eq!(format_sig9(-0.00123), "-0.00123000000");
        assert_eq!(format_sig9(0.0), "0.00000000");
        assert_eq!(format_sig9(9.9999999999), "10.0000000");
        assert_eq!(format_sig9(1.5e12), "1500000000000");
    }
}
