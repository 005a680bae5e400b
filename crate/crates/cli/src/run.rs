use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use extrap_core::config::RunConfig;
use extrap_core::metrics::{aggregate_scenario, write_metric_table, MetricRow, MetricTable};
use extrap_core::scene::write_log;
use extrap_core::sim::{AssignmentOrigin, ChildFailure, Simulator};
use extrap_core::Real;

use crate::error::CliError;
use crate::RunArgs;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Sample,
    Enumerate,
}

pub const LOG_DIR: &str = "logs";
pub const MANIFEST: &str = "manifest.json";
pub const METRIC_TABLE: &str = "metric_table.csv";

pub fn load_config(args: &RunArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(n) = args.n_runs {
        cfg.n_runs = n;
    }
    if let Some(s) = args.seed {
        cfg.rng_seed = s;
    }
    if let Some(k) = args.replan_interval {
        cfg.replan_interval = k;
    }
    if let Some(c) = args.cap {
        cfg.enumeration_cap = c;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct RosterEntry {
    name: String,
    weight: f64,
}

#[derive(Serialize)]
struct RunEntry {
    run_index: usize,
    run_seed: u64,
    origin: AssignmentOrigin,
    log: String,
    /// Track id to model name.
    assignment: BTreeMap<u32, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    config_path: String,
    config: &'a RunConfig,
    participants: Vec<u32>,
    roster: Vec<RosterEntry>,
    plan_steps: usize,
    requested_runs: u64,
    succeeded: usize,
    failed: usize,
    metrics: Vec<String>,
    runs: Vec<RunEntry>,
    failures: &'a [ChildFailure],
}

fn log_name(run_index: usize) -> String {
    format!("{LOG_DIR}/run_{run_index:06}.csv")
}

/// Removes logs left by an earlier, larger run so reruns leave identical trees.
fn clear_old_logs(dir: &Path) -> Result<(), CliError> {
    let Ok(entries) = fs::read_dir(dir) else { return Ok(()) };
    for entry in entries.flatten() {
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if name.starts_with("run_") && name.ends_with(".csv") {
            fs::remove_file(entry.path()).map_err(|e| CliError::io(&entry.path(), e))?;
        }
    }
    Ok(())
}

pub fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), CliError>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn simulate(args: &RunArgs, mode: Mode) -> Result<(), CliError> {
    let cfg = load_config(args)?;
    let out: PathBuf = args.out.clone().unwrap_or_else(|| cfg.output_path());
    let inputs = cfg.load_inputs::<f64>()?;
    let sim = Simulator::new(inputs.seed, inputs.roster, inputs.recorded, cfg.sim_config())?;

    let (requested, batch) = match mode {
        Mode::Sample => (cfg.n_runs as u64, sim.run_batch(cfg.n_runs)?),
        Mode::Enumerate => {
            let n = extrap_core::sim::enumeration_count(
                sim.seed().participants().len(),
                sim.roster().len(),
                cfg.enumeration_cap,
            )?;
            (n, sim.run_enumeration(cfg.enumeration_cap)?)
        }
    };
    for f in &batch.failures {
        eprintln!("warning: run {} (seed {}) failed: {}", f.run_index, f.run_seed, f.message);
    }

    let log_dir = out.join(LOG_DIR);
    fs::create_dir_all(&log_dir).map_err(|e| CliError::io(&log_dir, e))?;
    clear_old_logs(&log_dir)?;
    batch
        .logs
        .par_iter()
        .try_for_each(|log| write_log(log, &out.join(log_name(log.run_index))))?;

    let params = cfg.metric_params::<f64>();
    let rows: Vec<MetricRow<f64>> = batch
        .logs
        .par_iter()
        .map(|log| MetricRow {
            run_index: log.run_index,
            run_seed: log.run_seed,
            vector: aggregate_scenario(log, &params),
        })
        .collect();
    let table = MetricTable {
        metrics: params.metrics(),
        rows,
    };
    let table_path = out.join(METRIC_TABLE);
    write_file(&table_path, |w| Ok(write_metric_table(w, &table)?))?;

    let manifest = Manifest {
        command: match mode {
            Mode::Sample => "simulate",
            Mode::Enumerate => "enumerate",
        },
        config_path: args.config.display().to_string(),
        config: &cfg,
        participants: sim.seed().participants().iter().map(|t| t.0).collect(),
        roster: sim
            .roster()
            .models()
            .iter()
            .map(|m| RosterEntry {
                name: m.name.clone(),
                weight: m.weight.as_f64(),
            })
            .collect(),
        plan_steps: sim.plan_steps(),
        requested_runs: requested,
        succeeded: batch.logs.len(),
        failed: batch.failures.len(),
        metrics: table.metrics.iter().map(|m| m.to_string()).collect(),
        runs: batch
            .logs
            .iter()
            .map(|log| RunEntry {
                run_index: log.run_index,
                run_seed: log.run_seed,
                origin: log.assignment.origin,
                log: log_name(log.run_index),
                assignment: log
                    .assignment
                    .model_names()
                    .into_iter()
                    .map(|(t, n)| (t.0, n.to_owned()))
                    .collect(),
            })
            .collect(),
        failures: &batch.failures,
    };
    let manifest_path = out.join(MANIFEST);
    write_file(&manifest_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest).map_err(|e| CliError::io(&manifest_path, e))?;
        w.write_all(b"\n").map_err(|e| CliError::io(&manifest_path, e))
    })?;
    eprintln!(
        "{} of {} child-scenarios written to {}",
        batch.logs.len(),
        requested,
        out.display()
    );
    Ok(())
}
