//! Criticality metrics.
//!
//! Pairwise values are computed for every ordered pair of participants in a
//! frame, reduced to the most critical value per frame and then aggregated
//! over the scenario into a worst value and a mean of the frame extrema.

mod pairwise;
mod table;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::behavior::{leader_in_frame, DEFAULT_CLEARANCE};
use crate::map::{Path, PathCrossing};
use crate::scalar::Real;
use crate::scene::{ScenarioLog, SceneFrame, TrackId};

pub use pairwise::{
    inverse_ttc, metric_distance, metric_gap_time, metric_inverse_ttc, metric_pttc, metric_wttc, pttc,
    wttc, ConflictPoint, Following, PairContext, GAP_TIME_MIN_SPEED,
};
pub use table::{read_metric_table, write_metric_table, MetricRow, MetricTable, TableError};

/// Assumed leader deceleration for PTTC, m/s².
pub const DEFAULT_PTTC_DECELERATION: f64 = 3.0;
/// Acceleration bound of the WTTC reachable discs, m/s².
pub const DEFAULT_WTTC_ACCELERATION: f64 = 7.5;

/// How far behind a crossing the approach directions are compared, meters.
const APPROACH_PROBE: f64 = 1.0;
/// Paths closer than this (meters) at the probe share their approach.
const SHARED_APPROACH_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MetricId {
    Distance,
    GapTime,
    InvTtc,
    Pttc,
    Wttc,
    /// Traffic quality; only available through a plugin.
    Tq,
}

/// Which side of a metric's range is dangerous.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    LowerIsCritical,
    HigherIsCritical,
}

impl Direction {
    /// The more critical of two values.
    pub fn worse<T: Real>(self, a: T, b: T) -> T {
        match self {
            Self::LowerIsCritical => a.min(b),
            Self::HigherIsCritical => a.max(b),
        }
    }
}

impl MetricId {
    pub const ALL: [MetricId; 6] = [
        Self::Distance,
        Self::GapTime,
        Self::InvTtc,
        Self::Pttc,
        Self::Wttc,
        Self::Tq,
    ];
    pub const NATIVE: [MetricId; 5] = [Self::Distance, Self::GapTime, Self::InvTtc, Self::Pttc, Self::Wttc];

    pub fn name(self) -> &'static str {
        match self {
            Self::Distance => "distance",
            Self::GapTime => "gap_time",
            Self::InvTtc => "inv_ttc",
            Self::Pttc => "pttc",
            Self::Wttc => "wttc",
            Self::Tq => "tq",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == name)
    }

    pub fn direction(self) -> Direction {
        match self {
            Self::InvTtc | Self::Tq => Direction::HigherIsCritical,
            _ => Direction::LowerIsCritical,
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An externally supplied pairwise metric.
pub trait PairMetric<T>: Send + Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, ctx: &PairContext<T>) -> Option<T>;
}

#[derive(Clone)]
pub struct MetricParams<T> {
    pub pttc_deceleration: T,
    pub wttc_acceleration: T,
    /// Lateral clearance for the car-following relation, meters.
    pub clearance: T,
    /// Only pairs closer than this are evaluated; `None` evaluates all pairs.
    pub range: Option<T>,
    tq: Option<Arc<dyn PairMetric<T>>>,
}

impl<T: Real> Default for MetricParams<T> {
    fn default() -> Self {
        Self {
            pttc_deceleration: T::lit(DEFAULT_PTTC_DECELERATION),
            wttc_acceleration: T::lit(DEFAULT_WTTC_ACCELERATION),
            clearance: T::lit(DEFAULT_CLEARANCE),
            range: None,
            tq: None,
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for MetricParams<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricParams")
            .field("pttc_deceleration", &self.pttc_deceleration)
            .field("wttc_acceleration", &self.wttc_acceleration)
            .field("clearance", &self.clearance)
            .field("range", &self.range)
            .field("tq", &self.tq.as_ref().map(|p| p.name().to_owned()))
            .finish()
    }
}

impl<T: Real> MetricParams<T> {
    pub fn with_tq(mut self, provider: Arc<dyn PairMetric<T>>) -> Self {
        self.tq = Some(provider);
        self
    }

    /// Metrics this configuration evaluates, in table order.
    pub fn metrics(&self) -> Vec<MetricId> {
        let mut m = MetricId::NATIVE.to_vec();
        if self.tq.is_some() {
            m.push(MetricId::Tq);
        }
        m
    }
}

/// Value of `id` for one pair; `None` where the metric is undefined.
pub fn evaluate_pair<T: Real>(ctx: &PairContext<T>, id: MetricId, params: &MetricParams<T>) -> Option<T> {
    match id {
        MetricId::Distance => Some(metric_distance(&ctx.a, &ctx.b)),
        MetricId::GapTime => metric_gap_time(ctx),
        MetricId::InvTtc => metric_inverse_ttc(ctx),
        MetricId::Pttc => metric_pttc(ctx, params.pttc_deceleration),
        MetricId::Wttc => Some(metric_wttc(ctx, params.wttc_acceleration)),
        MetricId::Tq => params.tq.as_ref().and_then(|p| p.evaluate(ctx)),
    }
}

/// True when `a` reaches `station_a` along `b` rather than from another direction.
fn shares_approach<T: Real>(a: &Path<T>, station_a: T, b: &Path<T>) -> bool {
    let probe = a.point_at(station_a - T::lit(APPROACH_PROBE));
    b.project(probe).lateral_offset.abs() <= T::lit(SHARED_APPROACH_TOLERANCE)
}

/// Crossings of two reference paths where the participants come from
/// different directions. Points where one path runs along the other (same
/// lane, or a lane bend both paths share) are not conflicts.
pub fn conflict_crossings<T: Real>(a: &Path<T>, b: &Path<T>) -> Vec<PathCrossing<T>> {
    a.crossings(b)
        .into_iter()
        .filter(|c| !shares_approach(a, c.station_a, b) && !shares_approach(b, c.station_b, a))
        .collect()
}

/// First crossing still ahead of both participants.
fn conflict_ahead<T: Real>(crossings: &[PathCrossing<T>], own_a: T, own_b: T) -> Option<ConflictPoint<T>> {
    crossings.iter().find_map(|c| {
        let cp = ConflictPoint {
            d_a: c.station_a - own_a,
            d_b: c.station_b - own_b,
        };
        (cp.d_a >= T::zero() && cp.d_b >= T::zero()).then_some(cp)
    })
}

/// Context of the ordered pair `(a, b)` in `frame`, built from scratch.
///
/// Returns `None` if either participant is absent or the pair lies outside
/// `params.range`.
pub fn pair_context<T: Real>(
    frame: &SceneFrame<T>,
    a: TrackId,
    b: TrackId,
    paths: &BTreeMap<TrackId, Arc<Path<T>>>,
    params: &MetricParams<T>,
) -> Option<PairContext<T>> {
    let (sa, sb) = (frame.get(a)?, frame.get(b)?);
    if params.range.is_some_and(|r| metric_distance(sa, sb) > r) {
        return None;
    }
    let mut ctx = PairContext::new(sa.clone(), sb.clone());
    if let Some(pa) = paths.get(&a) {
        ctx.following = leader_in_frame(frame, a, pa, params.clearance)
            .filter(|l| l.id == b)
            .map(|l| Following {
                s_net: l.s_net,
                delta_v: l.delta_v,
                leader_speed: l.leader_speed,
                follower_speed: sa.speed(),
            });
        if let Some(pb) = paths.get(&b) {
            let crossings = conflict_crossings(pa, pb);
            ctx.conflict = conflict_ahead(&crossings, pa.project(sa.position).station, pb.project(sb.position).station);
        }
    }
    Some(ctx)
}

/// Contexts of all ordered pairs in a frame, reusing per-log crossings.
fn frame_contexts<T: Real>(
    frame: &SceneFrame<T>,
    paths: &BTreeMap<TrackId, Arc<Path<T>>>,
    crossings: &BTreeMap<(TrackId, TrackId), Vec<PathCrossing<T>>>,
    params: &MetricParams<T>,
) -> Vec<PairContext<T>> {
    let stations: BTreeMap<TrackId, T> = frame
        .states
        .iter()
        .filter_map(|s| Some((s.track_id, paths.get(&s.track_id)?.project(s.position).station)))
        .collect();
    let leaders: BTreeMap<TrackId, (TrackId, Following<T>)> = frame
        .states
        .iter()
        .filter_map(|s| {
            let l = leader_in_frame(frame, s.track_id, paths.get(&s.track_id)?, params.clearance)?;
            let f = Following {
                s_net: l.s_net,
                delta_v: l.delta_v,
                leader_speed: l.leader_speed,
                follower_speed: s.speed(),
            };
            Some((s.track_id, (l.id, f)))
        })
        .collect();

    let mut out = Vec::new();
    for a in &frame.states {
        for b in &frame.states {
            if a.track_id == b.track_id {
                continue;
            }
            if params.range.is_some_and(|r| metric_distance(a, b) > r) {
                continue;
            }
            let mut ctx = PairContext::new(a.clone(), b.clone());
            ctx.following = leaders
                .get(&a.track_id)
                .filter(|(id, _)| *id == b.track_id)
                .map(|(_, f)| *f);
            if let (Some(c), Some(oa), Some(ob)) = (
                crossings.get(&(a.track_id, b.track_id)),
                stations.get(&a.track_id),
                stations.get(&b.track_id),
            ) {
                ctx.conflict = conflict_ahead(c, *oa, *ob);
            }
            out.push(ctx);
        }
    }
    out
}

/// Most critical defined value of `id` over the given pairs.
pub fn aggregate_frame<T: Real>(contexts: &[PairContext<T>], id: MetricId, params: &MetricParams<T>) -> Option<T> {
    contexts
        .iter()
        .filter_map(|c| evaluate_pair(c, id, params))
        .reduce(|x, y| id.direction().worse(x, y))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregate<T> {
    /// Most critical frame value.
    pub worst: T,
    /// Mean of the frame values over the defined frames.
    pub mean_of_extrema: T,
    pub defined_frames: usize,
}

/// Per-scenario fingerprint. Metrics without any defined frame are absent.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct MetricVector<T> {
    pub values: BTreeMap<MetricId, Aggregate<T>>,
}

impl<T: Real> MetricVector<T> {
    pub fn get(&self, id: MetricId) -> Option<&Aggregate<T>> {
        self.values.get(&id)
    }

    /// Reduces per-frame extrema (`None` for undefined frames).
    pub fn push_series(&mut self, id: MetricId, frame_values: impl IntoIterator<Item = Option<T>>) {
        let mut worst: Option<T> = None;
        let mut sum = T::zero();
        let mut n = 0usize;
        for v in frame_values.into_iter().flatten() {
            worst = Some(worst.map_or(v, |w| id.direction().worse(w, v)));
            sum += v;
            n += 1;
        }
        if let Some(worst) = worst {
            self.values.insert(
                id,
                Aggregate {
                    worst,
                    mean_of_extrema: sum / T::from_usize_lossy(n),
                    defined_frames: n,
                },
            );
        }
    }
}

/// Fingerprint of a simulated child-scenario.
pub fn aggregate_scenario<T: Real>(log: &ScenarioLog<T>, params: &MetricParams<T>) -> MetricVector<T> {
    aggregate_frames(&log.frames, &log.paths, params)
}

/// Fingerprint of any frame sequence with known reference paths.
pub fn aggregate_frames<T: Real>(
    frames: &[SceneFrame<T>],
    paths: &BTreeMap<TrackId, Arc<Path<T>>>,
    params: &MetricParams<T>,
) -> MetricVector<T> {
    let mut crossings = BTreeMap::new();
    for (a, pa) in paths {
        for (b, pb) in paths {
            if a != b {
                crossings.insert((*a, *b), conflict_crossings(pa, pb));
            }
        }
    }
    let metrics = params.metrics();
    let mut series: Vec<Vec<Option<T>>> = vec![Vec::with_capacity(frames.len()); metrics.len()];
    for frame in frames {
        let contexts = frame_contexts(frame, paths, &crossings, params);
        for (k, id) in metrics.iter().enumerate() {
            series[k].push(aggregate_frame(&contexts, *id, params));
        }
    }
    let mut v = MetricVector::default();
    for (id, s) in metrics.into_iter().zip(series) {
        v.push_series(id, s);
    }
    v
}
