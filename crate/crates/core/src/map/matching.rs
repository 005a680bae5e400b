use crate::geometry::Vec2;
use crate::map::{LaneId, MapError, MapGraph};
use crate::scalar::{wrap_angle, Real};

/// Lanes farther away than this (meters) are not considered when matching.
pub const DEFAULT_MAX_MATCH_DISTANCE: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct LaneMatch<T> {
    pub lane: LaneId,
    pub station: T,
    pub lateral_offset: T,
}

/// Matches a pose to the closest lane whose direction agrees with `yaw`
/// (heading difference below 90 degrees). Equal distances resolve to the
/// smaller lane id.
pub fn match_to_lane<T: Real>(
    map: &MapGraph<T>,
    position: Vec2<T>,
    yaw: T,
    max_distance: T,
) -> Result<LaneMatch<T>, MapError> {
    if map.is_empty() {
        return Err(MapError::EmptyMap);
    }
    let mut best: Option<LaneMatch<T>> = None;
    for lane in map.lanes() {
        let proj = lane.centerline().project(position);
        let dist = proj.lateral_offset.abs();
        if dist > max_distance {
            continue;
        }
        let heading = lane.centerline().heading_at(proj.station);
        if wrap_angle(heading - yaw).abs() >= T::FRAC_PI_2() {
            continue;
        }
        if best
            .as_ref()
            .is_none_or(|b| dist < b.lateral_offset.abs())
        {
            best = Some(LaneMatch {
                lane: lane.id.clone(),
                station: proj.station,
                lateral_offset: proj.lateral_offset,
            });
        }
    }
    best.ok_or(MapError::OffMap {
        x: position.x.as_f64(),
        y: position.y.as_f64(),
        max_distance: max_distance.as_f64(),
    })
}
