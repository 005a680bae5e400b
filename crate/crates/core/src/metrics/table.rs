//! One row per child-scenario: `run_index, run_seed, <m>_worst, <m>_mean, <m>_defined_frames`.

use std::io::{Read, Write};

use thiserror::Error;

use crate::scalar::Real;

use super::{Aggregate, MetricId, MetricVector};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("metric table: {0}")]
    Csv(#[from] csv::Error),
    #[error("metric table: {0}")]
    Io(#[from] std::io::Error),
    #[error("metric table line {line}: {message}")]
    Field { line: u64, message: String },
    #[error("metric table header: {0}")]
    Header(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricRow<T> {
    pub run_index: usize,
    pub run_seed: u64,
    pub vector: MetricVector<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricTable<T> {
    pub metrics: Vec<MetricId>,
    pub rows: Vec<MetricRow<T>>,
}

impl<T: Real> MetricTable<T> {
    /// Worst values of `id` over the rows where it is defined.
    pub fn worst_values(&self, id: MetricId) -> Vec<T> {
        self.rows
            .iter()
            .filter_map(|r| r.vector.get(id).map(|a| a.worst))
            .collect()
    }

    /// Rows where `id` is undefined.
    pub fn missing(&self, id: MetricId) -> usize {
        self.rows.iter().filter(|r| r.vector.get(id).is_none()).count()
    }
}

fn header(metrics: &[MetricId]) -> Vec<String> {
    let mut h = vec!["run_index".to_owned(), "run_seed".to_owned()];
    for m in metrics {
        h.push(format!("{m}_worst"));
        h.push(format!("{m}_mean"));
        h.push(format!("{m}_defined_frames"));
    }
    h
}

pub fn write_metric_table<T: Real, W: Write>(writer: W, table: &MetricTable<T>) -> Result<(), TableError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header(&table.metrics))?;
    for row in &table.rows {
        let mut rec = vec![row.run_index.to_string(), row.run_seed.to_string()];
        for m in &table.metrics {
            match row.vector.get(*m) {
                Some(a) => {
                    rec.push(a.worst.to_string());
                    rec.push(a.mean_of_extrema.to_string());
                    rec.push(a.defined_frames.to_string());
                }
                None => rec.extend([String::new(), String::new(), "0".to_owned()]),
            }
        }
        w.write_record(rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metric_table<T: Real, R: Read>(reader: R) -> Result<MetricTable<T>, TableError> {
    let mut r = csv::Reader::from_reader(reader);
    let head = r.headers()?.clone();
    if head.get(0) != Some("run_index") || head.get(1) != Some("run_seed") || (head.len() - 2) % 3 != 0 {
        return Err(TableError::Header("expected run_index, run_seed and three columns per metric".into()));
    }
    let mut metrics = Vec::new();
    for k in (2..head.len()).step_by(3) {
        let name = head[k]
            .strip_suffix("_worst")
            .ok_or_else(|| TableError::Header(format!("column `{}` should end in _worst", &head[k])))?;
        let m = MetricId::from_name(name).ok_or_else(|| TableError::Header(format!("unknown metric `{name}`")))?;
        if head[k + 1] != format!("{name}_mean") || head[k + 2] != format!("{name}_defined_frames") {
            return Err(TableError::Header(format!("columns for `{name}` out of order")));
        }
        metrics.push(m);
    }

    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |message: String| TableError::Field { line, message };
        let int = |k: usize| -> Result<u64, TableError> {
            rec[k].trim().parse().map_err(|_| bad(format!("`{}` is not an integer in `{}`", &rec[k], &head[k])))
        };
        let real = |k: usize| -> Result<T, TableError> {
            rec[k]
                .trim()
                .parse::<f64>()
                .map(T::lit)
                .map_err(|_| bad(format!("`{}` is not a number in `{}`", &rec[k], &head[k])))
        };
        let mut vector = MetricVector::default();
        for (i, m) in metrics.iter().enumerate() {
            let k = 2 + 3 * i;
            if rec[k].trim().is_empty() {
                continue;
            }
            vector.values.insert(
                *m,
                Aggregate {
                    worst: real(k)?,
                    mean_of_extrema: real(k + 1)?,
                    defined_frames: int(k + 2)? as usize,
                },
            );
        }
        rows.push(MetricRow {
            run_index: int(0)? as usize,
            run_seed: int(1)?,
            vector,
        });
    }
    Ok(MetricTable { metrics, rows })
}
