use crate::geometry::{Pose, Vec2};
use crate::map::Path;
use crate::scalar::Real;
use crate::scene::{AgentType, ParticipantState, SceneFrame, TrackId};

use super::WorldView;

/// Default perception radius, meters.
pub const DEFAULT_PERCEPTION_RANGE: f64 = 50.0;
/// Lateral distance within which a vehicle counts as being on the path, meters.
pub const DEFAULT_CLEARANCE: f64 = 5.0;
/// Lower bound applied to net gaps, meters.
pub const MIN_NET_GAP: f64 = 0.01;

/// Another participant expressed in the observer's frame.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalParticipant<T> {
    pub track_id: TrackId,
    pub agent_type: AgentType,
    pub position: Vec2<T>,
    pub yaw: T,
    pub velocity: Vec2<T>,
    pub length: T,
    pub width: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocalView<T> {
    /// Observer pose in world coordinates.
    pub origin: Pose<T>,
    pub others: Vec<LocalParticipant<T>>,
}

/// Participants within `range` of the observer, in its vehicle frame
/// (x forward, y left) at the current step.
pub fn perceive<T: Real>(view: &WorldView<'_, T>, range: T) -> LocalView<T> {
    let me = view.me();
    let origin = me.pose();
    let others = view
        .current()
        .states
        .iter()
        .filter(|s| s.track_id != view.self_id && s.position.dist(me.position) <= range)
        .map(|s| LocalParticipant {
            track_id: s.track_id,
            agent_type: s.agent_type,
            position: origin.to_local(s.position),
            yaw: crate::scalar::wrap_angle(s.yaw - origin.yaw),
            velocity: origin.dir_to_local(s.velocity),
            length: s.length,
            width: s.width,
        })
        .collect();
    LocalView { origin, others }
}

/// The closest vehicle ahead on a path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Leader<T> {
    pub id: TrackId,
    /// Bumper-to-bumper gap, at least [`MIN_NET_GAP`].
    pub s_net: T,
    /// Own speed minus the leader's speed along the path; positive when closing.
    pub delta_v: T,
    /// Leader speed along the path tangent, never negative.
    pub leader_speed: T,
}

/// Minimal description of a potential leader.
#[derive(Clone, Copy, Debug)]
pub struct Obstacle<T> {
    pub id: TrackId,
    pub position: Vec2<T>,
    pub velocity: Vec2<T>,
    pub length: T,
}

impl<T: Real> From<&ParticipantState<T>> for Obstacle<T> {
    fn from(s: &ParticipantState<T>) -> Self {
        Self {
            id: s.track_id,
            position: s.position,
            velocity: s.velocity,
            length: s.length,
        }
    }
}

/// Leader search given the follower's station on `path`.
///
/// Candidates whose center lies within `clearance` of the path and whose
/// station exceeds `own_station` qualify; the smallest station gap wins,
/// with ties going to the smaller track id.
pub fn leader_on_path<T: Real>(
    path: &Path<T>,
    own_station: T,
    own_length: T,
    own_speed: T,
    candidates: impl IntoIterator<Item = Obstacle<T>>,
    clearance: T,
) -> Option<Leader<T>> {
    let mut best: Option<(T, Obstacle<T>)> = None;
    for c in candidates {
        let proj = path.project(c.position);
        if proj.lateral_offset.abs() > clearance || proj.station <= own_station {
            continue;
        }
        let gap = proj.station - own_station;
        let better = match &best {
            None => true,
            Some((g, b)) => gap < *g || (gap == *g && c.id < b.id),
        };
        if better {
            best = Some((gap, c));
        }
    }
    best.map(|(gap, c)| {
        let half = T::lit(0.5);
        let s_net = (gap - (own_length + c.length) * half).max(T::lit(MIN_NET_GAP));
        let tangent = path.tangent_at(path.project(c.position).station);
        let leader_speed = c.velocity.dot(tangent).max(T::zero());
        Leader {
            id: c.id,
            s_net,
            delta_v: own_speed - leader_speed,
            leader_speed,
        }
    })
}

/// Leader of the viewing participant in the current frame.
pub fn find_leader<T: Real>(view: &WorldView<'_, T>, path: &Path<T>, clearance: T) -> Option<Leader<T>> {
    leader_in_frame(view.current(), view.self_id, path, clearance)
}

/// Leader of `id` within `frame`, searching along `path`.
pub fn leader_in_frame<T: Real>(
    frame: &SceneFrame<T>,
    id: TrackId,
    path: &Path<T>,
    clearance: T,
) -> Option<Leader<T>> {
    let me = frame.get(id)?;
    let own_station = path.project(me.position).station;
    leader_on_path(
        path,
        own_station,
        me.length,
        me.speed(),
        frame
            .states
            .iter()
            .filter(|s| s.track_id != id)
            .map(Obstacle::from),
        clearance,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::MapGraph;
    use crate::scene::test_util::state;

    fn frame(states: Vec<ParticipantState<f64>>) -> Vec<SceneFrame<f64>> {
        vec![SceneFrame::new(1, 100, states)]
    }

    fn view<'a>(frames: &'a [SceneFrame<f64>], map: &'a MapGraph<f64>) -> WorldView<'a, f64> {
        WorldView::new(frames, map, TrackId(1), 30)
    }

    fn road() -> Path<f64> {
        Path::new([Vec2::new(0.0, 0.0), Vec2::new(200.0, 0.0)], 0.0)
    }

    #[test]
    fn range_cut_and_empty_scene() {
        let map = MapGraph::new(vec![]).unwrap();
        let f = frame(vec![state(1, 0.0, 0.0, 0.0, 0.0), state(2, 60.0, 0.0, 0.0, 0.0)]);
        assert!(perceive(&view(&f, &map), 50.0).others.is_empty());
        let f = frame(vec![state(1, 0.0, 0.0, 0.0, 0.0)]);
        assert!(perceive(&view(&f, &map), 50.0).others.is_empty());
    }

    #[test]
    fn dead_ahead_in_local_frame() {
        let map = MapGraph::new(vec![]).unwrap();
        let yaw = std::f64::consts::FRAC_PI_2;
        let f = frame(vec![state(1, 5.0, 5.0, yaw, 10.0), state(2, 5.0, 25.0, yaw, 8.0)]);
        let lv = perceive(&view(&f, &map), 50.0);
        let o = &lv.others[0];
        assert!((o.position.x - 20.0).abs() < 1e-12);
        assert!(o.position.y.abs() < 1e-12);
        assert!(o.yaw.abs() < 1e-12);
        assert!((o.velocity.x - 8.0).abs() < 1e-12);
    }

    #[test]
    fn leader_net_gap() {
        let map = MapGraph::new(vec![]).unwrap();
        let f = frame(vec![state(1, 10.0, 0.0, 0.0, 10.0), state(2, 30.0, 0.0, 0.0, 6.0)]);
        let l = find_leader(&view(&f, &map), &road(), 5.0).unwrap();
        assert_eq!(l.id, TrackId(2));
        assert!((l.s_net - 16.0).abs() < 1e-12);
        assert!((l.delta_v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn lateral_clearance_respected() {
        let map = MapGraph::new(vec![]).unwrap();
        let f = frame(vec![state(1, 10.0, 0.0, 0.0, 10.0), state(2, 30.0, 6.0, 0.0, 6.0)]);
        assert!(find_leader(&view(&f, &map), &road(), 5.0).is_none());
        let f = frame(vec![state(1, 10.0, 0.0, 0.0, 10.0), state(2, 30.0, 4.9, 0.0, 6.0)]);
        assert!(find_leader(&view(&f, &map), &road(), 5.0).is_some());
    }

    #[test]
    fn nearest_candidate_wins() {
        let map = MapGraph::new(vec![]).unwrap();
        let f = frame(vec![
            state(1, 0.0, 0.0, 0.0, 10.0),
            state(3, 30.0, 0.0, 0.0, 6.0),
            state(2, 15.0, 1.0, 0.0, 6.0),
            state(4, -10.0, 0.0, 0.0, 6.0),
        ]);
        let l = find_leader(&view(&f, &map), &road(), 5.0).unwrap();
        assert_eq!(l.id, TrackId(2));
        assert!((l.s_net - 11.0).abs() < 1e-12);
    }

    #[test]
    fn overlapping_leader_gap_floored() {
        let map = MapGraph::new(vec![]).unwrap();
        let f = frame(vec![state(1, 0.0, 0.0, 0.0, 10.0), state(2, 2.0, 0.0, 0.0, 6.0)]);
        let l = find_leader(&view(&f, &map), &road(), 5.0).unwrap();
        assert_eq!(l.s_net, MIN_NET_GAP);
    }
}
