//! CSV layouts for plotting tools.

use std::io::Write;

use crate::metrics::{Direction, MetricId, MetricVector};
use crate::scalar::Real;

use super::ConvergenceRow;

/// One `(x, y)` column pair, written as `<label>_x, <label>_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve<T> {
    pub label: String,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

/// Side-by-side curves; shorter curves leave their cells empty.
pub fn write_curves<T: Real, W: Write>(writer: W, curves: &[Curve<T>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = curves
        .iter()
        .flat_map(|c| [format!("{}_x", c.label), format!("{}_y", c.label)])
        .collect();
    w.write_record(&header)?;
    let rows = curves.iter().map(|c| c.x.len()).max().unwrap_or(0);
    for i in 0..rows {
        let rec: Vec<String> = curves
            .iter()
            .flat_map(|c| match (c.x.get(i), c.y.get(i)) {
                (Some(x), Some(y)) => [x.to_string(), y.to_string()],
                _ => [String::new(), String::new()],
            })
            .collect();
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdRow<T> {
    pub table: usize,
    pub metric: MetricId,
    pub threshold: T,
    pub n_samples: usize,
    pub missing: usize,
    /// Counted on the raw samples.
    pub fraction: T,
    /// Read off the smoothed cumulative curve.
    pub cdf_fraction: T,
}

pub fn write_thresholds<T: Real, W: Write>(writer: W, rows: &[ThresholdRow<T>]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "table",
        "metric",
        "threshold",
        "critical_side",
        "n_samples",
        "missing",
        "fraction",
        "cdf_fraction",
    ])?;
    for r in rows {
        let side = match r.metric.direction() {
            Direction::LowerIsCritical => "below",
            Direction::HigherIsCritical => "above",
        };
        w.write_record([
            r.table.to_string(),
            r.metric.to_string(),
            r.threshold.to_string(),
            side.to_owned(),
            r.n_samples.to_string(),
            r.missing.to_string(),
            r.fraction.to_string(),
            r.cdf_fraction.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_convergence<T: Real, W: Write>(writer: W, rows: &[(usize, MetricId, ConvergenceRow<T>)]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["table", "metric", "size", "resamples", "mean_l1", "std_l1"])?;
    for (table, metric, r) in rows {
        w.write_record([
            table.to_string(),
            metric.to_string(),
            r.size.to_string(),
            r.resamples.to_string(),
            r.mean_l1.to_string(),
            r.std_l1.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per metric; undefined metrics keep empty value cells.
pub fn write_ground_truth<T: Real, W: Write>(writer: W, metrics: &[MetricId], vector: &MetricVector<T>) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["metric", "worst", "mean", "defined_frames"])?;
    for m in metrics {
        match vector.get(*m) {
            Some(a) => w.write_record([
                m.to_string(),
                a.worst.to_string(),
                a.mean_of_extrema.to_string(),
                a.defined_frames.to_string(),
            ])?,
            None => w.write_record([m.to_string(), String::new(), String::new(), "0".to_owned()])?,
        }
    }
    w.flush()?;
    Ok(())
}
