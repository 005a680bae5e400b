//! Lane-graph road map: topology, geometry and routing queries.

mod format;
mod matching;
mod path;
mod routing;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::geometry::Vec2;
use crate::scalar::Real;

pub use format::{load_map, parse_map, write_map, MapImporter, NativeMapImporter, MAP_FORMAT_HEADER};
pub use matching::{match_to_lane, LaneMatch, DEFAULT_MAX_MATCH_DISTANCE};
pub use path::{path_intersection, project_onto_path, Path, PathCrossing, Projection};
pub use routing::{
    enumerate_routes, route_centerline, select_route, sort_routes, Route, RouteSelector,
    DEFAULT_ROUTE_HORIZON,
};

/// Lane width applied when a map record leaves it unspecified.
pub const DEFAULT_LANE_WIDTH: f64 = 3.5;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LaneId(pub String);

impl LaneId {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for LaneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for LaneId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

#[derive(Debug, Error)]
pub enum MapError {
    #[error("line {line}: {field}: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
    #[error("duplicate lane id {0}")]
    DuplicateLane(LaneId),
    #[error("dangling successor: lane {lane} references missing lane {successor}")]
    DanglingSuccessor { lane: LaneId, successor: LaneId },
    #[error("degenerate centerline on lane {lane}: {reason}")]
    DegenerateCenterline { lane: LaneId, reason: String },
    #[error("lane {lane}: width must be > 0, got {width}")]
    InvalidWidth { lane: LaneId, width: f64 },
    #[error("unknown lane {0}")]
    UnknownLane(LaneId),
    #[error("off-map: no lane within {max_distance} m of ({x}, {y})")]
    OffMap { x: f64, y: f64, max_distance: f64 },
    #[error("map has no lanes")]
    EmptyMap,
    #[error("no routes to select from")]
    NoRoutes,
    #[error("route selector index {index} out of range for {count} routes")]
    SelectorOutOfRange { index: usize, count: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One lane: a directed centerline plus its successor lanes.
#[derive(Clone, Debug)]
pub struct Lane<T> {
    pub id: LaneId,
    pub width: T,
    pub speed_limit: Option<T>,
    pub successors: Vec<LaneId>,
    centerline: Path<T>,
}

impl<T: Real> Lane<T> {
    /// Validates the centerline: at least two points, no zero-length segment.
    pub fn new(
        id: LaneId,
        points: Vec<Vec2<T>>,
        width: Option<T>,
        successors: Vec<LaneId>,
    ) -> Result<Self, MapError> {
        if points.len() < 2 {
            return Err(MapError::DegenerateCenterline {
                lane: id,
                reason: format!("{} point(s), need at least 2", points.len()),
            });
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[0].dist(w[1]) > T::zero()) {
                return Err(MapError::DegenerateCenterline {
                    lane: id,
                    reason: format!("points {} and {} coincide", i, i + 1),
                });
            }
        }
        let width = width.unwrap_or_else(|| T::lit(DEFAULT_LANE_WIDTH));
        if !(width > T::zero()) {
            return Err(MapError::InvalidWidth {
                lane: id,
                width: width.as_f64(),
            });
        }
        let centerline = Path::new(points, T::zero()).with_route(vec![id.clone()]);
        Ok(Self {
            id,
            width,
            speed_limit: None,
            successors,
            centerline,
        })
    }

    pub fn with_speed_limit(mut self, limit: Option<T>) -> Self {
        self.speed_limit = limit;
        self
    }

    pub fn centerline(&self) -> &Path<T> {
        &self.centerline
    }

    pub fn length(&self) -> T {
        self.centerline.length()
    }
}

/// Immutable lane graph. Lanes are stored sorted by id, so every query is
/// independent of the order in which lanes were supplied.
#[derive(Clone, Debug)]
pub struct MapGraph<T> {
    lanes: Vec<Lane<T>>,
    index: BTreeMap<LaneId, usize>,
}

impl<T: Real> MapGraph<T> {
    pub fn new(mut lanes: Vec<Lane<T>>) -> Result<Self, MapError> {
        lanes.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = BTreeMap::new();
        for (i, lane) in lanes.iter().enumerate() {
            if index.insert(lane.id.clone(), i).is_some() {
                return Err(MapError::DuplicateLane(lane.id.clone()));
            }
        }
        for lane in &mut lanes {
            for s in &lane.successors {
                if !index.contains_key(s) {
                    return Err(MapError::DanglingSuccessor {
                        lane: lane.id.clone(),
                        successor: s.clone(),
                    });
                }
            }
            lane.successors.sort();
            lane.successors.dedup();
        }
        Ok(Self { lanes, index })
    }

    pub fn lanes(&self) -> &[Lane<T>] {
        &self.lanes
    }

    pub fn lane(&self, id: &LaneId) -> Option<&Lane<T>> {
        self.index.get(id).map(|&i| &self.lanes[i])
    }

    pub fn is_empty(&self) -> bool {
        self.lanes.is_empty()
    }

    /// Successor edges, in lane-id order.
    pub fn edges(&self) -> impl Iterator<Item = (&LaneId, &LaneId)> {
        self.lanes
            .iter()
            .flat_map(|l| l.successors.iter().map(move |s| (&l.id, s)))
    }

    pub fn out_degree(&self, id: &LaneId) -> Option<usize> {
        self.lane(id).map(|l| l.successors.len())
    }
}
