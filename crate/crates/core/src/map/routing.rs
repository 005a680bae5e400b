//! Route enumeration through the lane graph and route-choice classification.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::geometry::{Pose, Vec2};
use crate::map::{LaneId, MapError, MapGraph, Path};
use crate::scalar::{wrap_angle, Real};

/// Look-ahead distance for route enumeration, meters.
pub const DEFAULT_ROUTE_HORIZON: f64 = 150.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Route<T> {
    pub lane_ids: Vec<LaneId>,
    /// Arc length on the first lane where the route starts.
    pub entry_station: T,
    /// Signed chord bearing (end point minus start point). Relative to the
    /// entry lane tangent after enumeration, relative to the seed pose after
    /// [`sort_routes`] / [`select_route`].
    pub exit_angle: T,
    pub start_point: Vec2<T>,
    /// Point reached after `min(horizon, route length)` meters.
    pub end_point: Vec2<T>,
    /// Route length from `entry_station` to the end of its last lane.
    pub length: T,
    /// The route ended at a dead end before covering the horizon.
    pub truncated: bool,
}

/// Route-choice parameter of a behavior model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RouteSelector {
    /// Minimal absolute exit angle.
    #[default]
    Straightest,
    /// Index into the routes sorted by ascending signed exit angle.
    Index(usize),
}

struct Search<'a, T> {
    map: &'a MapGraph<T>,
    start_station: T,
    horizon: T,
    stack: Vec<LaneId>,
    found: Vec<(Vec<LaneId>, bool)>,
}

impl<T: Real> Search<'_, T> {
    fn visit(&mut self, id: &LaneId, covered: T) {
        let lane = self.map.lane(id).expect("successors validated at map construction");
        let available = if self.stack.is_empty() {
            (lane.length() - self.start_station).max(T::zero())
        } else {
            lane.length()
        };
        self.stack.push(id.clone());
        let covered = covered + available;
        if covered >= self.horizon {
            self.found.push((self.stack.clone(), false));
        } else {
            let next: Vec<LaneId> = lane
                .successors
                .iter()
                .filter(|s| !self.stack.contains(s))
                .cloned()
                .collect();
            if next.is_empty() {
                self.found.push((self.stack.clone(), true));
            }
            for s in &next {
                self.visit(s, covered);
            }
        }
        self.stack.pop();
    }
}

/// Depth-limited forward traversal from `start`.
///
/// Every returned route either covers `horizon` meters from `start_station`
/// or ends at a lane without unvisited successors (`truncated`). A lane is
/// never revisited within one route, which bounds loops such as roundabouts.
/// Routes come out sorted lexicographically by lane id sequence.
pub fn enumerate_routes<T: Real>(
    map: &MapGraph<T>,
    start: &LaneId,
    start_station: T,
    horizon: T,
) -> Result<Vec<Route<T>>, MapError> {
    let first = map.lane(start).ok_or_else(|| MapError::UnknownLane(start.clone()))?;
    let start_station = start_station.max(T::zero()).min(first.length());
    let mut search = Search {
        map,
        start_station,
        horizon,
        stack: Vec::new(),
        found: Vec::new(),
    };
    search.visit(start, T::zero());
    let mut found = search.found;
    found.sort();
    found.dedup();

    let entry_heading = first.centerline().heading_at(start_station);
    let routes = found
        .into_iter()
        .map(|(lane_ids, truncated)| {
            let mut route = Route {
                lane_ids,
                entry_station: start_station,
                exit_angle: T::zero(),
                start_point: first.centerline().point_at(start_station),
                end_point: Vec2::zero(),
                length: T::zero(),
                truncated,
            };
            let path = route_centerline(map, &route, start_station);
            route.length = path.length();
            route.end_point = path.point_at(path.length().min(horizon));
            route.exit_angle = chord_angle(&route, entry_heading);
            route
        })
        .collect();
    Ok(routes)
}

fn chord_angle<T: Real>(route: &Route<T>, reference_heading: T) -> T {
    let chord = route.end_point - route.start_point;
    if chord.norm() <= T::epsilon() {
        return T::zero();
    }
    wrap_angle(chord.heading() - reference_heading)
}

fn lane_order<T>(a: &Route<T>, b: &Route<T>) -> Ordering {
    a.lane_ids.cmp(&b.lane_ids)
}

/// Expresses every route's exit angle in the frame of `seed_pose` and sorts
/// ascending by signed angle; equal angles keep lane-id order.
pub fn sort_routes<T: Real>(routes: &[Route<T>], seed_pose: &Pose<T>) -> Vec<Route<T>> {
    let mut sorted: Vec<Route<T>> = routes
        .iter()
        .cloned()
        .map(|mut r| {
            r.exit_angle = chord_angle(&r, seed_pose.yaw);
            r
        })
        .collect();
    sorted.sort_by(|a, b| {
        a.exit_angle
            .partial_cmp(&b.exit_angle)
            .unwrap_or(Ordering::Equal)
            .then_with(|| lane_order(a, b))
    });
    sorted
}

/// Deterministic route choice by exit angle in the seed vehicle frame.
pub fn select_route<T: Real>(
    routes: &[Route<T>],
    seed_pose: &Pose<T>,
    selector: RouteSelector,
) -> Result<Route<T>, MapError> {
    if routes.is_empty() {
        return Err(MapError::NoRoutes);
    }
    let sorted = sort_routes(routes, seed_pose);
    match selector {
        RouteSelector::Straightest => Ok(sorted
            .into_iter()
            .min_by(|a, b| {
                a.exit_angle
                    .abs()
                    .partial_cmp(&b.exit_angle.abs())
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| lane_order(a, b))
            })
            .expect("non-empty")),
        RouteSelector::Index(index) => {
            let count = sorted.len();
            sorted
                .into_iter()
                .nth(index)
                .ok_or(MapError::SelectorOutOfRange { index, count })
        }
    }
}

/// Concatenated centerlines of `route` from `entry_station` on the first lane.
pub fn route_centerline<T: Real>(map: &MapGraph<T>, route: &Route<T>, entry_station: T) -> Path<T> {
    let mut points: Vec<Vec2<T>> = Vec::new();
    let mut end_heading = T::zero();
    for (k, id) in route.lane_ids.iter().enumerate() {
        let Some(lane) = map.lane(id) else { break };
        let line = lane.centerline();
        end_heading = line.heading_at(line.length());
        if k == 0 {
            let s0 = entry_station.max(T::zero()).min(line.length());
            points.push(line.point_at(s0));
            end_heading = line.heading_at(s0);
            for (p, s) in line.points().iter().zip(line.stations()) {
                if *s > s0 {
                    points.push(*p);
                }
            }
        } else {
            // Path::new merges the shared junction point
            points.extend_from_slice(line.points());
        }
    }
    Path::new(points, end_heading)
        .with_route(route.lane_ids.clone())
        .with_exhausted(route.truncated)
}
