use std::sync::Arc;

use crate::geometry::Vec2;
use crate::scalar::Real;
use crate::scene::{ParticipantState, RecordedCase, SceneFrame, FRAME_PERIOD_MS};

use super::{BehaviorModel, ModelError, Trajectory, WorldView, MIN_PLAN_STEPS};

/// Recorded future of `view.self_id` for the frames after `current_index`.
///
/// Once the recording (or the track) ends, the last recorded state is held
/// in place with zero velocity.
pub fn plan_replay<T: Real>(
    view: &WorldView<'_, T>,
    recorded: &[SceneFrame<T>],
    current_index: usize,
) -> Result<Trajectory<T>, ModelError> {
    let id = view.self_id;
    let steps = view.horizon_steps.max(MIN_PLAN_STEPS);
    let last_seen = recorded
        .iter()
        .take(current_index + 1)
        .rev()
        .find_map(|f| f.get(id))
        .ok_or(ModelError::NotRecorded(id))?;

    let mut held = last_seen.clone();
    let mut ended = current_index + 1 >= recorded.len();
    let mut states = Vec::with_capacity(steps);
    for k in 1..=steps {
        let next = if ended {
            None
        } else {
            recorded.get(current_index + k).and_then(|f| f.get(id))
        };
        match next {
            Some(s) => {
                held = s.clone();
                states.push(s.clone());
            }
            None => {
                ended = true;
                states.push(ParticipantState {
                    velocity: Vec2::zero(),
                    ..held.clone()
                });
            }
        }
    }
    Ok(Trajectory { owner: id, states })
}

/// Ground-truth model reading from a recorded case.
#[derive(Clone, Debug)]
pub struct ReplayModel<T> {
    pub recorded: Arc<RecordedCase<T>>,
}

impl<T: Real> ReplayModel<T> {
    pub fn new(recorded: Arc<RecordedCase<T>>) -> Self {
        Self { recorded }
    }
}

impl<T: Real> BehaviorModel<T> for ReplayModel<T> {
    fn plan(&self, view: &WorldView<'_, T>) -> Result<Trajectory<T>, ModelError> {
        let rec = &*self.recorded;
        let anchor = rec.frames.get(rec.current_index).ok_or(ModelError::NoRecording)?;
        // the simulated clock keeps running past the end of the recording
        let offset = (view.current().timestamp_ms - anchor.timestamp_ms).div_euclid(FRAME_PERIOD_MS);
        let index = usize::try_from(rec.current_index as i64 + offset).map_err(|_| ModelError::NoRecording)?;
        plan_replay(view, &rec.frames, index.min(rec.frames.len() - 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::MapGraph;
    use crate::scene::test_util::state;
    use crate::scene::TrackId;

    fn recording(n: usize, track_frames: usize) -> Vec<SceneFrame<f64>> {
        (0..n)
            .map(|i| {
                let mut states = vec![state(2, i as f64, 5.0, 0.0, 1.0)];
                if i < track_frames {
                    states.push(state(1, i as f64 * 10.0, 0.0, 0.0, 10.0));
                }
                SceneFrame::new(i as u32 + 1, (i as i64 + 1) * 100, states)
            })
            .collect()
    }

    fn view_at<'a>(rec: &'a [SceneFrame<f64>], map: &'a MapGraph<f64>, idx: usize) -> WorldView<'a, f64> {
        WorldView::new(&rec[idx - 9..=idx], map, TrackId(1), 30)
    }

    #[test]
    fn slices_recorded_future() {
        let map = MapGraph::new(vec![]).unwrap();
        let rec = recording(40, 40);
        let t = plan_replay(&view_at(&rec, &map, 9), &rec, 9).unwrap();
        assert_eq!(t.states.len(), 30);
        for (k, s) in t.states.iter().enumerate() {
            assert_eq!(s, rec[10 + k].get(TrackId(1)).unwrap());
        }
    }

    #[test]
    fn holds_last_state_after_recording_ends() {
        let map = MapGraph::new(vec![]).unwrap();
        let rec = recording(26, 26);
        let t = plan_replay(&view_at(&rec, &map, 9), &rec, 9).unwrap();
        assert_eq!(&t.states[15], rec[25].get(TrackId(1)).unwrap());
        for s in &t.states[16..] {
            assert_eq!(s.position, Vec2::new(250.0, 0.0));
            assert_eq!(s.speed(), 0.0);
        }
    }

    #[test]
    fn holds_when_track_ends_early() {
        let map = MapGraph::new(vec![]).unwrap();
        let rec = recording(40, 20);
        let t = plan_replay(&view_at(&rec, &map, 9), &rec, 9).unwrap();
        assert_eq!(t.states[9].position.x, 190.0);
        assert!(t.states[10..].iter().all(|s| s.position.x == 190.0 && s.speed() == 0.0));
    }

    #[test]
    fn absent_track_is_an_error() {
        let map = MapGraph::new(vec![]).unwrap();
        let rec = recording(40, 40);
        let frames = vec![SceneFrame::new(1, 100, vec![state(7, 0.0, 0.0, 0.0, 0.0)])];
        let view = WorldView::new(&frames, &map, TrackId(7), 30);
        assert!(matches!(plan_replay(&view, &rec, 9), Err(ModelError::NotRecorded(TrackId(7)))));
    }

    #[test]
    fn model_follows_the_simulated_clock() {
        let map = MapGraph::new(vec![]).unwrap();
        let rec = recording(60, 60);
        let model = ReplayModel::new(Arc::new(RecordedCase::new(rec.clone(), 9)));
        let t = model.plan(&view_at(&rec, &map, 14)).unwrap();
        assert_eq!(t.states[0], *rec[15].get(TrackId(1)).unwrap());
        let late = [SceneFrame::new(99, 9900, vec![state(1, 0.0, 0.0, 0.0, 0.0)])];
        let t = model.plan(&WorldView::new(&late, &map, TrackId(1), 30)).unwrap();
        assert!(t.states.iter().all(|s| s.position.x == 590.0 && s.speed() == 0.0));
    }
}
