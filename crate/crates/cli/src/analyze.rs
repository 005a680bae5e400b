use std::fs;
use std::path::PathBuf;

use clap::Args;

use extrap_core::analysis::{
    convergence_study, cumulative, default_threshold, ground_truth_overlay, kde, threshold_fraction,
    threshold_fraction_from_cdf, write_convergence, write_curves, write_ground_truth, write_thresholds, Curve,
    Grid, ThresholdRow, DEFAULT_BANDWIDTH, DEFAULT_GRID_POINTS, DEFAULT_RESAMPLES,
};
use extrap_core::config::RunConfig;
use extrap_core::metrics::{read_metric_table, MetricId, MetricTable};

use crate::error::CliError;
use crate::run::write_file;

pub const DENSITY: &str = "density.csv";
pub const CUMULATIVE: &str = "cumulative.csv";
pub const THRESHOLDS: &str = "thresholds.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const GROUND_TRUTH: &str = "ground_truth.csv";

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Metric tables written by `simulate` or `enumerate`; one per seed-scene.
    #[arg(long = "table", required = true)]
    tables: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Run config of the seed-scene; enables the ground-truth CSV and
    /// supplies the default bandwidth and metric parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bandwidth: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_GRID_POINTS)]
    grid_points: usize,
    /// Subset sizes for the convergence study, e.g. `10,100,385,1000`.
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES)]
    resamples: usize,
    /// Seed of the subset sampling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restricts the analysis to these metrics.
    #[arg(long, value_delimiter = ',')]
    metrics: Vec<String>,
}

fn read_table(path: &PathBuf) -> Result<MetricTable<f64>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_metric_table(std::io::BufReader::new(file))
        .map_err(|e| match CliError::from(e) {
            CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
            other => other,
        })
}

pub fn analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let config = args.config.as_deref().map(RunConfig::load).transpose()?;
    let bandwidth = args
        .bandwidth
        .or(config.as_ref().map(|c| c.kde_bandwidth))
        .unwrap_or(DEFAULT_BANDWIDTH);
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(CliError::Validation(format!("--bandwidth must be finite and > 0, got {bandwidth}")));
    }
    if args.grid_points < 2 {
        return Err(CliError::Validation("--grid-points must be >= 2".into()));
    }
    let only: Vec<MetricId> = args
        .metrics
        .iter()
        .map(|n| MetricId::from_name(n).ok_or_else(|| CliError::Validation(format!("unknown metric `{n}`"))))
        .collect::<Result<_, _>>()?;
    let tables: Vec<MetricTable<f64>> = args.tables.iter().map(read_table).collect::<Result<_, _>>()?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;

    let multi = tables.len() > 1;
    let label = |t: usize, m: MetricId| if multi { format!("{t}_{m}") } else { m.to_string() };
    let grid = Grid::Auto {
        points: args.grid_points,
    };
    let mut densities = Vec::new();
    let mut cumulatives = Vec::new();
    let mut thresholds = Vec::new();
    let mut convergence = Vec::new();
    for (t, table) in tables.iter().enumerate() {
        for &m in table.metrics.iter().filter(|m| only.is_empty() || only.contains(m)) {
            let values = table.worst_values(m);
            if values.is_empty() {
                eprintln!("warning: table {t}: metric {m} is undefined in every run; skipped");
                continue;
            }
            let d = kde(&values, bandwidth, &grid)?.for_metric(m);
            let cdf = cumulative(&d);
            if let Some(th) = default_threshold::<f64>(m) {
                thresholds.push(ThresholdRow {
                    table: t,
                    metric: m,
                    threshold: th,
                    n_samples: values.len(),
                    missing: table.missing(m),
                    fraction: threshold_fraction(&values, m, Some(th))?,
                    cdf_fraction: threshold_fraction_from_cdf(&d, m, th),
                });
            }
            if !args.sizes.is_empty() {
                let sizes: Vec<usize> = args.sizes.iter().copied().filter(|s| *s <= values.len()).collect();
                if sizes.len() < args.sizes.len() {
                    eprintln!(
                        "warning: table {t}: metric {m} has {} samples; larger subset sizes skipped",
                        values.len()
                    );
                }
                for row in convergence_study(&values, &sizes, args.resamples, args.seed, bandwidth)? {
                    convergence.push((t, m, row));
                }
            }
            cumulatives.push(Curve {
                label: label(t, m),
                x: d.grid.clone(),
                y: cdf,
            });
            densities.push(Curve {
                label: label(t, m),
                x: d.grid,
                y: d.density,
            });
        }
    }

    let out = |name: &str| args.out.join(name);
    let p = out(DENSITY);
    write_file(&p, |w| write_curves(w, &densities).map_err(|e| CliError::io(&p, e)))?;
    let p = out(CUMULATIVE);
    write_file(&p, |w| write_curves(w, &cumulatives).map_err(|e| CliError::io(&p, e)))?;
    let p = out(THRESHOLDS);
    write_file(&p, |w| write_thresholds(w, &thresholds).map_err(|e| CliError::io(&p, e)))?;
    if !args.sizes.is_empty() {
        let p = out(CONVERGENCE);
        write_file(&p, |w| write_convergence(w, &convergence).map_err(|e| CliError::io(&p, e)))?;
    }
    if let Some(cfg) = &config {
        let inputs = cfg.load_inputs::<f64>()?;
        let recorded = inputs
            .recorded
            .ok_or_else(|| CliError::Validation("ground truth needs a recorded case".into()))?;
        let params = cfg.metric_params::<f64>();
        let vector = ground_truth_overlay(inputs.seed, recorded, cfg.sim_config(), &params)?;
        let p = out(GROUND_TRUTH);
        write_file(&p, |w| write_ground_truth(w, &params.metrics(), &vector).map_err(|e| CliError::io(&p, e)))?;
    }
    Ok(())
}
