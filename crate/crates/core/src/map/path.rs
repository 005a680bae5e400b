//! Arc-length parametrized polylines: projection, sampling and crossing search.

use crate::geometry::{closest_param_on_segment, segment_intersection, Vec2};
use crate::map::LaneId;
use crate::scalar::Real;

/// Consecutive points closer than this are merged when building a path.
pub const DUPLICATE_POINT_TOLERANCE: f64 = 1e-9;

/// A polyline with cumulative arc length at every vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Path<T> {
    points: Vec<Vec2<T>>,
    stations: Vec<T>,
    source_route: Vec<LaneId>,
    exhausted: bool,
    end_heading: T,
}

/// Closest point on a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection<T> {
    /// Arc length of the closest point, in `[0, length]`.
    pub station: T,
    /// Signed distance to the closest point; left of travel direction is positive.
    pub lateral_offset: T,
    pub segment: usize,
}

/// First crossing of two paths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathCrossing<T> {
    pub point: Vec2<T>,
    pub station_a: T,
    pub station_b: T,
}

impl<T: Real> Path<T> {
    /// Builds a path, dropping consecutive duplicate points.
    ///
    /// A single remaining point yields a zero-length path that is always
    /// flagged exhausted; `end_heading` then supplies its direction.
    pub fn new(points: impl IntoIterator<Item = Vec2<T>>, end_heading: T) -> Self {
        let tol = T::lit(DUPLICATE_POINT_TOLERANCE);
        let mut pts: Vec<Vec2<T>> = Vec::new();
        for p in points {
            if pts.last().is_none_or(|q: &Vec2<T>| q.dist(p) > tol) {
                pts.push(p);
            }
        }
        let mut stations = Vec::with_capacity(pts.len());
        let mut acc = T::zero();
        for (i, p) in pts.iter().enumerate() {
            if i > 0 {
                acc += pts[i - 1].dist(*p);
            }
            stations.push(acc);
        }
        let end_heading = if pts.len() >= 2 {
            (pts[pts.len() - 1] - pts[pts.len() - 2]).heading()
        } else {
            end_heading
        };
        let exhausted = pts.len() < 2;
        Self {
            points: pts,
            stations,
            source_route: Vec::new(),
            exhausted,
            end_heading,
        }
    }

    /// Straight path from `start` along `heading` of the given length.
    pub fn ray(start: Vec2<T>, heading: T, length: T) -> Self {
        Self::new([start, start + Vec2::from_heading(heading) * length], heading)
    }

    pub fn with_route(mut self, route: Vec<LaneId>) -> Self {
        self.source_route = route;
        self
    }

    /// Marks the path as ending before the requested horizon.
    pub fn with_exhausted(mut self, exhausted: bool) -> Self {
        self.exhausted = self.exhausted || exhausted;
        self
    }

    pub fn points(&self) -> &[Vec2<T>] {
        &self.points
    }

    pub fn stations(&self) -> &[T] {
        &self.stations
    }

    pub fn source_route(&self) -> &[LaneId] {
        &self.source_route
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    pub fn length(&self) -> T {
        self.stations.last().copied().unwrap_or_else(T::zero)
    }

    pub fn start(&self) -> Vec2<T> {
        self.points[0]
    }

    fn segment_at(&self, station: T) -> usize {
        let n = self.points.len();
        if n < 2 {
            return 0;
        }
        // index of the last vertex with station <= s, capped to the last segment
        let idx = self.stations.partition_point(|s| *s <= station);
        idx.saturating_sub(1).min(n - 2)
    }

    /// Unit tangent of the segment containing `station`.
    pub fn tangent_at(&self, station: T) -> Vec2<T> {
        if self.points.len() < 2 {
            return Vec2::from_heading(self.end_heading);
        }
        let i = self.segment_at(station);
        (self.points[i + 1] - self.points[i])
            .normalized()
            .unwrap_or_else(|| Vec2::from_heading(self.end_heading))
    }

    pub fn heading_at(&self, station: T) -> T {
        self.tangent_at(station).heading()
    }

    /// Point at arc length `station`. Stations outside `[0, length]`
    /// continue along the first or last tangent.
    pub fn point_at(&self, station: T) -> Vec2<T> {
        if self.points.len() < 2 {
            return self.points[0] + Vec2::from_heading(self.end_heading) * station;
        }
        let len = self.length();
        if station >= len {
            let last = self.points[self.points.len() - 1];
            return last + self.tangent_at(len) * (station - len);
        }
        if station <= T::zero() {
            return self.points[0] + self.tangent_at(T::zero()) * station;
        }
        let i = self.segment_at(station);
        let seg_len = self.stations[i + 1] - self.stations[i];
        let t = (station - self.stations[i]) / seg_len;
        self.points[i].lerp(self.points[i + 1], t)
    }

    /// Closest point on the polyline; ties resolve to the smaller station.
    pub fn project(&self, p: Vec2<T>) -> Projection<T> {
        if self.points.len() < 2 {
            let d = p - self.points[0];
            let side = Vec2::from_heading(self.end_heading).cross(d);
            let mag = d.norm();
            return Projection {
                station: T::zero(),
                lateral_offset: if side < T::zero() { -mag } else { mag },
                segment: 0,
            };
        }
        let mut best_seg = 0;
        let mut best_t = T::zero();
        let mut best_d2 = T::infinity();
        for i in 0..self.points.len() - 1 {
            let (a, b) = (self.points[i], self.points[i + 1]);
            let t = closest_param_on_segment(p, a, b);
            let d2 = (p - a.lerp(b, t)).norm_sq();
            if d2 < best_d2 {
                best_d2 = d2;
                best_t = t;
                best_seg = i;
            }
        }
        let (a, b) = (self.points[best_seg], self.points[best_seg + 1]);
        let foot = a.lerp(b, best_t);
        let seg_len = self.stations[best_seg + 1] - self.stations[best_seg];
        let station = self.stations[best_seg] + best_t * seg_len;
        let mag = best_d2.sqrt();
        let side = (b - a).cross(p - foot);
        Projection {
            station,
            lateral_offset: if side < T::zero() { -mag } else { mag },
            segment: best_seg,
        }
    }

    /// First proper crossing with `other`, ordered by station on `self`.
    ///
    /// Collinear overlaps are not crossings.
    pub fn intersection(&self, other: &Path<T>) -> Option<PathCrossing<T>> {
        self.crossings(other).into_iter().next()
    }

    /// Every crossing with `other`, sorted by station on `self` then on
    /// `other`. A crossing at a shared vertex is reported once.
    pub fn crossings(&self, other: &Path<T>) -> Vec<PathCrossing<T>> {
        let mut out: Vec<PathCrossing<T>> = Vec::new();
        if self.points.len() < 2 || other.points.len() < 2 {
            return out;
        }
        for i in 0..self.points.len() - 1 {
            let (p0, p1) = (self.points[i], self.points[i + 1]);
            let (minx, maxx) = (p0.x.min(p1.x), p0.x.max(p1.x));
            let (miny, maxy) = (p0.y.min(p1.y), p0.y.max(p1.y));
            for j in 0..other.points.len() - 1 {
                let (q0, q1) = (other.points[j], other.points[j + 1]);
                if q0.x.max(q1.x) < minx
                    || q0.x.min(q1.x) > maxx
                    || q0.y.max(q1.y) < miny
                    || q0.y.min(q1.y) > maxy
                {
                    continue;
                }
                if let Some((t, u)) = segment_intersection(p0, p1, q0, q1) {
                    let seg_a = self.stations[i + 1] - self.stations[i];
                    let seg_b = other.stations[j + 1] - other.stations[j];
                    out.push(PathCrossing {
                        point: p0.lerp(p1, t),
                        station_a: self.stations[i] + t * seg_a,
                        station_b: other.stations[j] + u * seg_b,
                    });
                }
            }
        }
        out.sort_by(|a, b| {
            a.station_a
                .partial_cmp(&b.station_a)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.station_b.partial_cmp(&b.station_b).unwrap_or(std::cmp::Ordering::Equal))
        });
        let tol = T::lit(DUPLICATE_POINT_TOLERANCE);
        out.dedup_by(|b, a| (b.station_a - a.station_a).abs() <= tol && (b.station_b - a.station_b).abs() <= tol);
        out
    }
}

/// Station and signed lateral offset of `point` relative to `path`.
pub fn project_onto_path<T: Real>(path: &Path<T>, point: Vec2<T>) -> (T, T) {
    let p = path.project(point);
    (p.station, p.lateral_offset)
}

/// First crossing of two paths in increasing station order along `a`.
pub fn path_intersection<T: Real>(a: &Path<T>, b: &Path<T>) -> Option<PathCrossing<T>> {
    a.intersection(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn straight(x0: f64, y0: f64, x1: f64, y1: f64) -> Path<f64> {
        Path::new([Vec2::new(x0, y0), Vec2::new(x1, y1)], 0.0)
    }

    #[test]
    fn projection_of_start_is_origin() {
        let p = straight(0.0, 0.0, 100.0, 0.0);
        assert_eq!(project_onto_path(&p, Vec2::new(0.0, 0.0)), (0.0, 0.0));
    }

    #[test]
    fn projection_right_of_midpoint() {
        let p = straight(0.0, 0.0, 100.0, 0.0);
        let (s, l) = project_onto_path(&p, Vec2::new(50.0, -3.0));
        assert!((s - 50.0).abs() < 1e-12);
        assert!((l + 3.0).abs() < 1e-12);
    }

    #[test]
    fn projection_beyond_end_clamps() {
        let p = straight(0.0, 0.0, 100.0, 0.0);
        let (s, l) = project_onto_path(&p, Vec2::new(130.0, 0.0));
        assert_eq!(s, 100.0);
        assert!((l.abs() - 30.0).abs() < 1e-12);
    }

    #[test]
    fn perpendicular_crossing() {
        let a = straight(-20.0, 0.0, 20.0, 0.0);
        let b = straight(0.0, -20.0, 0.0, 20.0);
        let c = path_intersection(&a, &b).unwrap();
        assert!(c.point.norm() < 1e-12);
        assert!((c.station_a - 20.0).abs() < 1e-12);
        assert!((c.station_b - 20.0).abs() < 1e-12);
    }

    #[test]
    fn parallel_and_identical_paths_do_not_cross() {
        let a = straight(0.0, 0.0, 100.0, 0.0);
        let b = straight(0.0, 3.0, 100.0, 3.0);
        assert!(path_intersection(&a, &b).is_none());
        assert!(path_intersection(&a, &a.clone()).is_none());
    }

    #[test]
    fn first_crossing_by_station_a() {
        // zig-zag crossing the x-axis twice
        let a = Path::new(
            [
                Vec2::new(0.0, -5.0),
                Vec2::new(10.0, 5.0),
                Vec2::new(20.0, -5.0),
            ],
            0.0,
        );
        let b = straight(-10.0, 0.0, 30.0, 0.0);
        let c = path_intersection(&a, &b).unwrap();
        assert!((c.point.x - 5.0).abs() < 1e-12);
        assert!((c.station_b - 15.0).abs() < 1e-12);
        let all = a.crossings(&b);
        assert_eq!(all.len(), 2);
        assert!((all[1].point.x - 15.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_at_shared_vertex_reported_once() {
        let a = Path::new([Vec2::new(-5.0f64, 0.0), Vec2::new(0.0, 0.0), Vec2::new(5.0, 0.0)], 0.0);
        let b = Path::new([Vec2::new(0.0, -5.0), Vec2::new(0.0, 0.0), Vec2::new(0.0, 5.0)], 0.0);
        let all = a.crossings(&b);
        assert_eq!(all.len(), 1);
        assert!((all[0].station_a - 5.0).abs() < 1e-12 && (all[0].station_b - 5.0).abs() < 1e-12);
    }

    #[test]
    fn duplicate_points_removed_and_single_point_exhausted() {
        let p = Path::new([Vec2::new(1.0, 1.0), Vec2::new(1.0, 1.0)], 0.5);
        assert_eq!(p.points().len(), 1);
        assert!(p.is_exhausted());
        assert_eq!(p.length(), 0.0);
        let q = p.point_at(2.0);
        assert!((q.x - (1.0 + 2.0 * 0.5f64.cos())).abs() < 1e-12);
    }

    #[test]
    fn point_at_extrapolates_past_end() {
        let p = Path::new(
            [Vec2::new(0.0f64, 0.0), Vec2::new(10.0, 0.0), Vec2::new(10.0, 10.0)],
            0.0,
        );
        let q = p.point_at(25.0);
        assert!((q.x - 10.0).abs() < 1e-12 && (q.y - 15.0).abs() < 1e-12);
        let m = p.point_at(15.0);
        assert!((m.x - 10.0).abs() < 1e-12 && (m.y - 5.0).abs() < 1e-12);
        assert!((p.heading_at(12.0) - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn generic_over_f32() {
        let p: Path<f32> = Path::new([Vec2::new(0.0, 0.0), Vec2::new(4.0, 0.0)], 0.0);
        let (s, l) = project_onto_path(&p, Vec2::new(2.0, 1.0));
        assert_eq!((s, l), (2.0, 1.0));
    }

    fn polyline() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 2..8)
    }

    proptest! {
        #[test]
        fn vertices_project_with_zero_offset(pts in polyline()) {
            let path = Path::new(pts.iter().map(|&(x, y)| Vec2::new(x, y)), 0.0);
            for v in path.points() {
                let (_, l) = project_onto_path(&path, *v);
                prop_assert!(l.abs() < 1e-9);
            }
        }

        #[test]
        fn intersection_is_symmetric(
            a0 in (-50.0..50.0f64, -50.0..-10.0f64),
            a1 in (-50.0..50.0f64, 10.0..50.0f64),
            b0 in (-50.0..-10.0f64, -50.0..50.0f64),
            b1 in (10.0..50.0f64, -50.0..50.0f64),
        ) {
            // a runs bottom-to-top, b left-to-right: exactly one crossing
            let a = straight(a0.0, a0.1, a1.0, a1.1);
            let b = straight(b0.0, b0.1, b1.0, b1.1);
            let ab = path_intersection(&a, &b);
            let ba = path_intersection(&b, &a);
            prop_assert_eq!(ab.is_some(), ba.is_some());
            if let (Some(x), Some(y)) = (ab, ba) {
                prop_assert!(x.point.dist(y.point) < 1e-9);
                prop_assert!((x.station_a - y.station_b).abs() < 1e-9);
                prop_assert!((x.station_b - y.station_a).abs() < 1e-9);
            }
        }
    }
}
