use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::behavior::{BehaviorModel, ModelError, PathFollowingModel, ReplayModel, Roster, WorldView, MIN_PLAN_STEPS};
use crate::map::{
    enumerate_routes, match_to_lane, route_centerline, select_route, MapError, MapGraph, Path,
    RouteSelector, DEFAULT_MAX_MATCH_DISTANCE, DEFAULT_ROUTE_HORIZON,
};
use crate::scalar::Real;
use crate::scene::{ParticipantState, RecordedCase, ScenarioLog, SceneFrame, SeedScene, TrackId, FRAME_PERIOD_MS};

use super::{assign_models, enumeration_count, nth_assignment, Assignment, SimConfig, SimError};

/// A participant's model for one child-scenario.
pub struct Agent<'a, T> {
    pub track: TrackId,
    pub name: String,
    pub model: Box<dyn BehaviorModel<T> + 'a>,
}

#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ChildFailure {
    pub run_index: usize,
    pub run_seed: u64,
    pub message: String,
}

/// Successful logs in run order plus the failed children.
#[derive(Clone, Debug)]
pub struct BatchResult<T> {
    pub logs: Vec<ScenarioLog<T>>,
    pub failures: Vec<ChildFailure>,
}

/// Lane-following reference path starting at the lane match of `state`.
fn follow_path<T: Real>(map: &MapGraph<T>, state: &ParticipantState<T>, selector: RouteSelector) -> Result<Path<T>, MapError> {
    let m = match_to_lane(map, state.position, state.yaw, T::lit(DEFAULT_MAX_MATCH_DISTANCE))?;
    let routes = enumerate_routes(map, &m.lane, m.station, T::lit(DEFAULT_ROUTE_HORIZON))?;
    let route = select_route(&routes, &state.pose(), selector)?;
    Ok(route_centerline(map, &route, m.station))
}

/// Below this recorded travel distance (m) a replayed track falls back to a map path.
const MIN_RECORDED_PATH: f64 = 0.5;

/// Runs child-scenarios of one seed-scene.
///
/// Reference paths are computed once per (participant, route selector) and
/// shared by all children.
pub struct Simulator<T> {
    seed: Arc<SeedScene<T>>,
    roster: Arc<Roster<T>>,
    recorded: Option<Arc<RecordedCase<T>>>,
    cfg: SimConfig,
    follow_paths: BTreeMap<(TrackId, RouteSelector), Arc<Path<T>>>,
    replay_paths: BTreeMap<TrackId, Arc<Path<T>>>,
}

impl<T: Real> Simulator<T> {
    pub fn new(
        seed: Arc<SeedScene<T>>,
        roster: Arc<Roster<T>>,
        recorded: Option<Arc<RecordedCase<T>>>,
        cfg: SimConfig,
    ) -> Result<Self, SimError> {
        cfg.validate()?;
        if let Some(rec) = &recorded {
            let anchor = rec.frames.get(rec.current_index).map(|f| f.timestamp_ms);
            if anchor != Some(seed.current().timestamp_ms) {
                return Err(SimError::InvalidConfig(
                    "recorded case does not contain the seed's current frame at current_index".into(),
                ));
            }
        } else if roster.needs_recording() {
            return Err(SimError::MissingRecording);
        }

        let current = seed.current();
        let mut selectors: Vec<RouteSelector> = roster
            .models()
            .iter()
            .filter(|m| m.is_path_following())
            .map(|m| m.route_selector)
            .collect();
        // replay paths may fall back to the straightest route
        selectors.push(RouteSelector::Straightest);
        selectors.sort();
        selectors.dedup();
        let mut follow_paths = BTreeMap::new();
        for s in &current.states {
            for sel in &selectors {
                if let Ok(p) = follow_path(&seed.map, s, *sel) {
                    follow_paths.insert((s.track_id, *sel), Arc::new(p));
                }
            }
        }

        let mut replay_paths = BTreeMap::new();
        if let Some(rec) = &recorded {
            for s in &current.states {
                let points: Vec<_> = seed
                    .frames()
                    .iter()
                    .chain(rec.future())
                    .filter_map(|f| f.get(s.track_id))
                    .map(|p| p.position)
                    .collect();
                let last_yaw = rec
                    .future()
                    .iter()
                    .rev()
                    .find_map(|f| f.get(s.track_id))
                    .map_or(s.yaw, |p| p.yaw);
                let recorded_path = Path::new(points, last_yaw);
                let path = if recorded_path.length() >= T::lit(MIN_RECORDED_PATH) {
                    Arc::new(recorded_path)
                } else if let Some(p) = follow_paths.get(&(s.track_id, RouteSelector::Straightest)) {
                    p.clone()
                } else {
                    Arc::new(Path::ray(s.position, s.yaw, T::lit(DEFAULT_ROUTE_HORIZON)))
                };
                replay_paths.insert(s.track_id, path);
            }
        }

        Ok(Self {
            seed,
            roster,
            recorded,
            cfg,
            follow_paths,
            replay_paths,
        })
    }

    pub fn seed(&self) -> &Arc<SeedScene<T>> {
        &self.seed
    }

    pub fn roster(&self) -> &Arc<Roster<T>> {
        &self.roster
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Number of planned steps in every trajectory.
    pub fn plan_steps(&self) -> usize {
        self.cfg.replan_interval.max(MIN_PLAN_STEPS)
    }

    /// Runs one child with the roster models named by `assignment`.
    pub fn run_child(&self, assignment: &Assignment<T>, run_index: usize, run_seed: u64) -> Result<ScenarioLog<T>, SimError> {
        let current = self.seed.current();
        let mut agents = Vec::with_capacity(current.states.len());
        let mut paths = BTreeMap::new();
        for me in &current.states {
            let id = me.track_id;
            let spec = assignment.spec(id).ok_or(SimError::Unassigned { track: id })?;
            let fail = |source: ModelError| SimError::Model {
                track: id,
                step: 0,
                model: spec.name.clone(),
                source,
            };
            let (model, path): (Box<dyn BehaviorModel<T>>, Arc<Path<T>>) = if spec.is_path_following() {
                let path = match self.follow_paths.get(&(id, spec.route_selector)) {
                    Some(p) => p.clone(),
                    // not cached means the lookup failed; redo it for the diagnostic
                    None => {
                        let err = follow_path(&self.seed.map, me, spec.route_selector)
                            .err()
                            .unwrap_or(MapError::NoRoutes);
                        return Err(fail(ModelError::Map(err)));
                    }
                };
                let model = PathFollowingModel::from_spec(spec, path.clone(), &self.seed.map, me.speed()).map_err(fail)?;
                (Box::new(model), path)
            } else {
                let rec = self.recorded.as_ref().ok_or(SimError::MissingRecording)?;
                (Box::new(ReplayModel::new(rec.clone())), self.replay_paths[&id].clone())
            };
            agents.push(Agent {
                track: id,
                name: spec.name.clone(),
                model,
            });
            paths.insert(id, path);
        }
        let frames = self.run_with_agents(&agents)?;
        let log = ScenarioLog {
            seed: self.seed.clone(),
            assignment: assignment.clone(),
            frames,
            run_index,
            run_seed,
            paths,
        };
        log.validate()?;
        Ok(log)
    }

    /// Closed-loop rollout with caller-supplied models, one per participant.
    ///
    /// Returns the `horizon_steps` simulated frames.
    pub fn run_with_agents(&self, agents: &[Agent<'_, T>]) -> Result<Vec<SceneFrame<T>>, SimError> {
        let k = self.cfg.replan_interval;
        let plan_steps = self.plan_steps();
        let current = self.seed.current();
        for id in current.track_ids() {
            if !agents.iter().any(|a| a.track == id) {
                return Err(SimError::Unassigned { track: id });
            }
        }

        let mut history: Vec<SceneFrame<T>> = self.seed.frames().to_vec();
        let window = history.len();
        let mut out = Vec::with_capacity(self.cfg.horizon_steps);
        let mut plans: Vec<Vec<ParticipantState<T>>> = Vec::new();
        for step in 0..self.cfg.horizon_steps {
            if step % k == 0 {
                plans.clear();
                for a in agents {
                    let view = WorldView::new(&history, &self.seed.map, a.track, plan_steps);
                    let fail = |source| SimError::Model {
                        track: a.track,
                        step,
                        model: a.name.clone(),
                        source,
                    };
                    let t = a.model.plan(&view).map_err(fail)?;
                    if t.states.len() < k.min(self.cfg.horizon_steps - step) {
                        return Err(fail(ModelError::ShortTrajectory {
                            len: t.states.len(),
                            needed: k,
                        }));
                    }
                    plans.push(t.states);
                }
            }
            let last = history.last().expect("history is never empty");
            let states = agents
                .iter()
                .zip(&plans)
                .map(|(a, p)| ParticipantState {
                    track_id: a.track,
                    ..p[step % k].clone()
                })
                .collect();
            let frame = SceneFrame::new(last.frame_id + 1, last.timestamp_ms + FRAME_PERIOD_MS, states);
            history.push(frame.clone());
            if history.len() > window {
                history.remove(0);
            }
            out.push(frame);
        }
        Ok(out)
    }

    fn collect(&self, results: Vec<(usize, u64, Result<ScenarioLog<T>, SimError>)>) -> Result<BatchResult<T>, SimError> {
        let total = results.len();
        let mut logs = Vec::with_capacity(total);
        let mut failures = Vec::new();
        for (run_index, run_seed, r) in results {
            match r {
                Ok(log) => logs.push(log),
                Err(e) => failures.push(ChildFailure {
                    run_index,
                    run_seed,
                    message: e.to_string(),
                }),
            }
        }
        if logs.is_empty() {
            return Err(SimError::AllFailed {
                count: total,
                first: failures.first().map(|f| f.message.clone()).unwrap_or_default(),
            });
        }
        Ok(BatchResult { logs, failures })
    }

    /// `n_runs` children with randomly drawn assignments; child `i` uses
    /// seed `rng_seed ^ i`. Output order follows `i` whatever the thread count.
    pub fn run_batch(&self, n_runs: usize) -> Result<BatchResult<T>, SimError> {
        if n_runs == 0 {
            return Err(SimError::InvalidConfig("n_runs must be >= 1".into()));
        }
        let results = (0..n_runs)
            .into_par_iter()
            .map(|i| {
                let run_seed = self.cfg.child_seed(i);
                let a = assign_models(&self.seed, self.roster.clone(), run_seed);
                (i, run_seed, self.run_child(&a, i, run_seed))
            })
            .collect();
        self.collect(results)
    }

    /// Every combination of roster entries and participants.
    pub fn run_enumeration(&self, cap: u64) -> Result<BatchResult<T>, SimError> {
        let count = enumeration_count(self.seed.participants().len(), self.roster.len(), cap)?;
        let results = (0..count)
            .into_par_iter()
            .map(|i| {
                let index = i as usize;
                let run_seed = self.cfg.child_seed(index);
                let a = nth_assignment(&self.seed, self.roster.clone(), i);
                (index, run_seed, self.run_child(&a, index, run_seed))
            })
            .collect();
        self.collect(results)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{ModelSpec, Trajectory};
    use crate::scene::test_util::state;
    use crate::scene::{synth_scene, Stream, SynthOptions, SynthTemplate};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn following(speeds: Vec<f64>, gaps: Vec<f64>) -> crate::scene::SynthScene<f64> {
        let t = SynthTemplate::CarFollowing {
            stream: Stream::new(0.0, gaps, speeds),
        };
        synth_scene(&t, &SynthOptions::default()).unwrap()
    }

    fn sim(scene: &crate::scene::SynthScene<f64>, roster: Roster<f64>, cfg: SimConfig) -> Simulator<f64> {
        Simulator::new(
            Arc::new(scene.seed.clone()),
            Arc::new(roster),
            Some(Arc::new(scene.recorded.clone())),
            cfg,
        )
        .unwrap()
    }

    #[test]
    fn constant_velocity_moves_uniformly() {
        let scene = following(vec![10.0, 8.0], vec![30.0]);
        let s = sim(&scene, Roster::new(vec![ModelSpec::constant_velocity()]).unwrap(), SimConfig::default());
        let a = Assignment::uniform(s.seed(), s.roster().clone(), 0);
        let log = s.run_child(&a, 0, 0).unwrap();
        assert_eq!(log.frames.len(), 30);
        for st in &scene.seed.current().states {
            let end = log.frames[29].get(st.track_id).unwrap();
            let expected = st.position.x + st.speed() * 3.0;
            assert!((end.position.x - expected).abs() < 1e-9, "{} vs {expected}", end.position.x);
        }
        for w in log.frames.windows(2) {
            assert_eq!(w[1].timestamp_ms - w[0].timestamp_ms, 100);
        }
    }

    #[test]
    fn replay_only_reproduces_recording() {
        let scene = following(vec![10.0, 8.0, 9.0], vec![30.0, 25.0]);
        let s = sim(&scene, Roster::ground_truth(), SimConfig::default());
        let a = Assignment::uniform(s.seed(), s.roster().clone(), 0);
        let log = s.run_child(&a, 0, 0).unwrap();
        assert_eq!(log.frames.as_slice(), &scene.recorded.future()[..30]);
    }

    #[test]
    fn replay_without_recording_is_rejected() {
        let scene = following(vec![10.0], vec![]);
        let r = Simulator::new(
            Arc::new(scene.seed.clone()),
            Arc::new(Roster::ground_truth()),
            None,
            SimConfig::default(),
        );
        assert!(matches!(r, Err(SimError::MissingRecording)));
    }

    struct Counting<'a> {
        inner: PathFollowingModel<f64>,
        calls: &'a AtomicUsize,
    }

    impl BehaviorModel<f64> for Counting<'_> {
        fn plan(&self, view: &WorldView<'_, f64>) -> Result<Trajectory<f64>, ModelError> {
            self.calls.fetch_add(1, Ordering::Relaxed);
            self.inner.plan(view)
        }
    }

    #[test]
    fn planning_count_is_ceil_horizon_over_interval() {
        let scene = following(vec![10.0], vec![]);
        for (k, horizon) in [(1, 30), (5, 30), (7, 30), (30, 30), (4, 10)] {
            let cfg = SimConfig {
                horizon_steps: horizon,
                replan_interval: k,
                rng_seed: 0,
            };
            let s = sim(&scene, Roster::new(vec![ModelSpec::constant_velocity()]).unwrap(), cfg);
            let calls = AtomicUsize::new(0);
            let path = s.follow_paths[&(TrackId(1), RouteSelector::Straightest)].clone();
            let agents = [Agent {
                track: TrackId(1),
                name: "cv".into(),
                model: Box::new(Counting {
                    inner: PathFollowingModel::new(crate::behavior::Motion::Constant, path),
                    calls: &calls,
                }),
            }];
            let frames = s.run_with_agents(&agents).unwrap();
            assert_eq!(frames.len(), horizon);
            assert_eq!(calls.load(Ordering::Relaxed), horizon.div_ceil(k));
        }
    }

    /// Follower behind a leader that brakes hard from the first step.
    fn braking_pair(k: usize) -> Vec<SceneFrame<f64>> {
        let scene = following(vec![10.0, 10.0], vec![60.0]);
        let cfg = SimConfig {
            horizon_steps: 30,
            replan_interval: k,
            rng_seed: 0,
        };
        let roster = Roster::new(vec![ModelSpec::emergency_brake(), ModelSpec::standard()]).unwrap();
        let s = sim(&scene, roster, cfg);
        let mut a = Assignment::uniform(s.seed(), s.roster().clone(), 1);
        a.mapping.insert(TrackId(1), 0);
        s.run_child(&a, 0, 0).unwrap().frames
    }

    fn speed_series(frames: &[SceneFrame<f64>], id: u32) -> Vec<f64> {
        frames.iter().map(|f| f.get(TrackId(id)).unwrap().speed()).collect()
    }

    #[test]
    fn short_replan_interval_reacts_to_braking_leader() {
        let fast = speed_series(&braking_pair(5), 2);
        let slow = speed_series(&braking_pair(30), 2);
        let reference = speed_series(&braking_pair(30), 2);
        assert_eq!(slow, reference);
        // the interval-5 follower has re-planned by step 5 and sees the leader slowing
        let first_diff = fast.iter().zip(&slow).position(|(a, b)| (a - b).abs() > 1e-12);
        assert!(first_diff.is_some_and(|i| i <= 10), "{first_diff:?}");
        assert!(fast[29] < slow[29]);
    }

    #[test]
    fn batch_is_ordered_and_deterministic() {
        let scene = following(vec![10.0, 8.0, 9.0], vec![30.0, 25.0]);
        let cfg = SimConfig {
            rng_seed: 99,
            ..SimConfig::default()
        };
        let s = sim(&scene, Roster::default_six(), cfg);
        let a = s.run_batch(12).unwrap();
        let b = s.run_batch(12).unwrap();
        assert_eq!(a.logs.len() + a.failures.len(), 12);
        for (x, y) in a.logs.iter().zip(&b.logs) {
            assert_eq!(x.frames, y.frames);
            assert_eq!(x.assignment, y.assignment);
        }
        for (i, log) in a.logs.iter().enumerate() {
            assert_eq!(log.run_index, i);
            assert_eq!(log.run_seed, 99 ^ i as u64);
        }
        let single = s.run_batch(1).unwrap();
        let direct = s
            .run_child(&assign_models(s.seed(), s.roster().clone(), 99), 0, 99)
            .unwrap();
        assert_eq!(single.logs[0].frames, direct.frames);
    }

    #[test]
    fn off_map_participant_fails_only_path_following_children() {
        let scene = following(vec![10.0], vec![]);
        let mut frames = scene.seed.frames().to_vec();
        for f in &mut frames {
            f.states.push(state(9, f.states[0].position.x, 80.0, 0.0, 5.0));
        }
        let seed = SeedScene::new(scene.map.clone(), frames, 1).unwrap();
        let s = Simulator::new(
            Arc::new(seed),
            Arc::new(Roster::new(vec![ModelSpec::constant_velocity()]).unwrap()),
            None,
            SimConfig::default(),
        )
        .unwrap();
        let err = s.run_batch(3).unwrap_err();
        assert!(matches!(err, SimError::AllFailed { count: 3, .. }));
        let a = Assignment::uniform(s.seed(), s.roster().clone(), 0);
        let msg = s.run_child(&a, 0, 0).unwrap_err().to_string();
        assert!(msg.contains("track 9") && msg.contains("constant_velocity"), "{msg}");
    }
}
