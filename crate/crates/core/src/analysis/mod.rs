//! Distribution analysis over per-scenario metric values: kernel density
//! estimates, cumulative curves, threshold fractions and sample-size studies.

mod output;

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::behavior::Roster;
use crate::metrics::{aggregate_scenario, Direction, MetricId, MetricParams, MetricVector};
use crate::scalar::Real;
use crate::scene::{RecordedCase, SeedScene};
use crate::sim::{Assignment, SimConfig, SimError, Simulator};

pub use output::{write_convergence, write_curves, write_ground_truth, write_thresholds, Curve, ThresholdRow};

/// Gaussian kernel width applied to every metric by default.
pub const DEFAULT_BANDWIDTH: f64 = 0.1;
/// Points in an automatic evaluation grid.
pub const DEFAULT_GRID_POINTS: usize = 512;
/// The automatic grid extends this many bandwidths past the data.
pub const GRID_MARGIN_BANDWIDTHS: f64 = 5.0;
/// Largest uniform grid step, in bandwidths, before the automatic grid is refined.
pub const MAX_GRID_STEP_BANDWIDTHS: f64 = 0.5;
/// Step of the refinement lattice laid around each sample, in bandwidths.
const REFINE_STEP_BANDWIDTHS: f64 = 0.25;
/// Half-width of the refinement lattice around each sample, in bandwidths.
const REFINE_REACH_BANDWIDTHS: f64 = 8.0;
/// Kernel terms further than this many bandwidths away are below 1e-21 and skipped.
const KERNEL_CUTOFF_BANDWIDTHS: f64 = 10.0;
/// Subset sizes of the default convergence study.
pub const DEFAULT_SIZES: [usize; 4] = [10, 100, 385, 1000];
pub const DEFAULT_RESAMPLES: usize = 20;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no samples")]
    Empty,
    #[error("samples must be finite")]
    NonFinite,
    #[error("bandwidth must be > 0, got {0}")]
    Bandwidth(f64),
    #[error("grid needs at least 2 ascending points")]
    Grid,
    #[error("metric `{0}` has no registered threshold")]
    NoThreshold(MetricId),
    #[error("subset size {size} exceeds the population of {population}")]
    SizeTooLarge { size: usize, population: usize },
    #[error("recorded future has {available} frames, {needed} needed")]
    InsufficientFuture { needed: usize, available: usize },
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Evaluation points of a density estimate.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid<T> {
    /// Uniform points over `[min - 5h, max + 5h]`. When their spacing
    /// exceeds `h / 2` the grid also gets every point of an `h / 4` lattice
    /// within `8h` of a sample, so wide, sparse samples still integrate to 1.
    Auto { points: usize },
    Explicit(Vec<T>),
}

impl<T> Default for Grid<T> {
    fn default() -> Self {
        Self::Auto {
            points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DensityEstimate<T> {
    pub metric: Option<MetricId>,
    pub grid: Vec<T>,
    pub density: Vec<T>,
    pub bandwidth: T,
    pub n_samples: usize,
}

impl<T: Real> DensityEstimate<T> {
    pub fn for_metric(mut self, id: MetricId) -> Self {
        self.metric = Some(id);
        self
    }

    pub fn integral(&self) -> T {
        trapezoid(&self.grid, &self.density)
    }
}

/// Trapezoidal integral of `y` over `x`.
pub fn trapezoid<T: Real>(x: &[T], y: &[T]) -> T {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| (xs[1] - xs[0]) * (ys[0] + ys[1]) * T::lit(0.5))
        .sum()
}

fn uniform_grid<T: Real>(lo: T, hi: T, points: usize) -> Vec<T> {
    let step = (hi - lo) / T::from_usize_lossy(points - 1);
    (0..points).map(|i| lo + step * T::from_usize_lossy(i)).collect()
}

fn auto_grid<T: Real>(sorted: &[T], h: T, points: usize) -> Vec<T> {
    let margin = h * T::lit(GRID_MARGIN_BANDWIDTHS);
    let (lo, hi) = (sorted[0] - margin, sorted[sorted.len() - 1] + margin);
    let uniform = uniform_grid(lo, hi, points);
    if uniform[1] - uniform[0] <= h * T::lit(MAX_GRID_STEP_BANDWIDTHS) {
        return uniform;
    }
    let step = h * T::lit(REFINE_STEP_BANDWIDTHS);
    let reach = (REFINE_REACH_BANDWIDTHS / REFINE_STEP_BANDWIDTHS) as i64;
    let mut lattice = BTreeSet::new();
    for v in sorted {
        let centre = ((*v - lo) / step).round().to_i64().unwrap_or(0);
        lattice.extend((centre - reach).max(0)..=centre + reach);
    }
    let mut grid: Vec<T> = lattice
        .into_iter()
        .map(|j| lo + step * T::from_i64(j).unwrap_or_else(T::zero))
        .filter(|x| *x < hi)
        .chain(uniform)
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).expect("finite grid"));
    let tol = step * T::lit(1e-6);
    grid.dedup_by(|b, a| *b - *a <= tol);
    grid
}

/// Gaussian KDE: `f(x) = 1/(n h) * sum phi((x - v) / h)`.
pub fn kde<T: Real>(values: &[T], bandwidth: T, grid: &Grid<T>) -> Result<DensityEstimate<T>, AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
        return Err(AnalysisError::Bandwidth(bandwidth.as_f64()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let grid = match grid {
        Grid::Auto { points } if *points >= 2 => auto_grid(&sorted, bandwidth, *points),
        Grid::Explicit(g) if g.len() >= 2 && g.windows(2).all(|w| w[0] < w[1]) => g.clone(),
        _ => return Err(AnalysisError::Grid),
    };
    let norm = T::one() / (T::from_usize_lossy(values.len()) * bandwidth * (T::lit(2.0) * T::PI()).sqrt());
    let half = T::lit(0.5);
    let cutoff = bandwidth * T::lit(KERNEL_CUTOFF_BANDWIDTHS);
    let density = grid
        .iter()
        .map(|x| {
            let from = sorted.partition_point(|v| *v < *x - cutoff);
            let to = sorted.partition_point(|v| *v <= *x + cutoff);
            let s: T = sorted[from..to]
                .iter()
                .map(|v| {
                    let z = (*x - *v) / bandwidth;
                    (-half * z * z).exp()
                })
                .sum();
            s * norm
        })
        .collect();
    Ok(DensityEstimate {
        metric: None,
        grid,
        density,
        bandwidth,
        n_samples: values.len(),
    })
}

/// Running trapezoidal integral of the density, clamped to `[0, 1]`.
pub fn cumulative<T: Real>(d: &DensityEstimate<T>) -> Vec<T> {
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(d.grid.len());
    out.push(T::zero());
    for (xs, ys) in d.grid.windows(2).zip(d.density.windows(2)) {
        acc += (xs[1] - xs[0]) * (ys[0] + ys[1]) * T::lit(0.5);
        out.push(acc.max(T::zero()).min(T::one()));
    }
    out
}

/// Linear interpolation of the cumulative curve at `x`.
pub fn cdf_at<T: Real>(d: &DensityEstimate<T>, cdf: &[T], x: T) -> T {
    let g = &d.grid;
    if x <= g[0] {
        return T::zero();
    }
    if x >= g[g.len() - 1] {
        return cdf[cdf.len() - 1];
    }
    let i = g.partition_point(|v| *v <= x) - 1;
    let t = (x - g[i]) / (g[i + 1] - g[i]);
    cdf[i] + (cdf[i + 1] - cdf[i]) * t
}

/// Registered criticality threshold of a metric.
pub fn default_threshold<T: Real>(id: MetricId) -> Option<T> {
    match id {
        MetricId::Distance => Some(T::lit(5.0)),
        MetricId::Wttc => Some(T::lit(0.26)),
        // time to collision of 1.5 s
        MetricId::InvTtc => Some(T::one() / T::lit(1.5)),
        MetricId::Tq => Some(T::lit(1.2)),
        MetricId::GapTime | MetricId::Pttc => None,
    }
}

/// Fraction of samples strictly on the critical side of `threshold`
/// (below it for lower-is-critical metrics, above it otherwise).
pub fn threshold_fraction<T: Real>(values: &[T], id: MetricId, threshold: Option<T>) -> Result<T, AnalysisError> {
    let th = threshold
        .or_else(|| default_threshold(id))
        .ok_or(AnalysisError::NoThreshold(id))?;
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let critical = values
        .iter()
        .filter(|v| match id.direction() {
            Direction::LowerIsCritical => **v < th,
            Direction::HigherIsCritical => **v > th,
        })
        .count();
    Ok(T::from_usize_lossy(critical) / T::from_usize_lossy(values.len()))
}

/// Critical fraction read off the smoothed cumulative curve.
pub fn threshold_fraction_from_cdf<T: Real>(d: &DensityEstimate<T>, id: MetricId, threshold: T) -> T {
    let f = cdf_at(d, &cumulative(d), threshold);
    match id.direction() {
        Direction::LowerIsCritical => f,
        Direction::HigherIsCritical => T::one() - f,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow<T> {
    pub size: usize,
    pub resamples: usize,
    pub mean_l1: T,
    pub std_l1: T,
}

/// L1 distance between subset KDEs and the full-population KDE, evaluated
/// on the full population's grid.
///
/// Subsets are drawn without replacement from a ChaCha8 stream seeded with
/// `seed`; the table is a pure function of its inputs.
pub fn convergence_study<T: Real>(
    full: &[T],
    sizes: &[usize],
    resamples: usize,
    seed: u64,
    bandwidth: T,
) -> Result<Vec<ConvergenceRow<T>>, AnalysisError> {
    if let Some(&size) = sizes.iter().find(|s| **s > full.len() || **s == 0) {
        return Err(AnalysisError::SizeTooLarge {
            size,
            population: full.len(),
        });
    }
    let reference = kde(full, bandwidth, &Grid::default())?;
    let grid = Grid::Explicit(reference.grid.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let mut l1 = Vec::with_capacity(resamples);
        for _ in 0..resamples {
            let subset: Vec<T> = sample(&mut rng, full.len(), size).into_iter().map(|i| full[i]).collect();
            let est = kde(&subset, bandwidth, &grid)?;
            let diff: Vec<T> = est
                .density
                .iter()
                .zip(&reference.density)
                .map(|(a, b)| (*a - *b).abs())
                .collect();
            l1.push(trapezoid(&reference.grid, &diff));
        }
        let n = T::from_usize_lossy(l1.len().max(1));
        let mean = l1.iter().copied().sum::<T>() / n;
        let var = if l1.len() > 1 {
            l1.iter().map(|x| (*x - mean) * (*x - mean)).sum::<T>() / T::from_usize_lossy(l1.len() - 1)
        } else {
            T::zero()
        };
        rows.push(ConvergenceRow {
            size,
            resamples,
            mean_l1: mean,
            std_l1: var.sqrt(),
        });
    }
    Ok(rows)
}

/// Fingerprint of the recorded future, obtained by replaying every participant.
pub fn ground_truth_overlay<T: Real>(
    seed: Arc<SeedScene<T>>,
    recorded: Arc<RecordedCase<T>>,
    cfg: SimConfig,
    params: &MetricParams<T>,
) -> Result<MetricVector<T>, AnalysisError> {
    let available = recorded.future().len();
    if available < cfg.horizon_steps {
        return Err(AnalysisError::InsufficientFuture {
            needed: cfg.horizon_steps,
            available,
        });
    }
    let sim = Simulator::new(seed, Arc::new(Roster::ground_truth()), Some(recorded), cfg)?;
    let assignment = Assignment::uniform(sim.seed(), sim.roster().clone(), 0);
    let log = sim.run_child(&assignment, 0, cfg.rng_seed)?;
    Ok(aggregate_scenario(&log, params))
}
