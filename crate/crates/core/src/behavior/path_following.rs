use std::sync::Arc;

use crate::map::{MapGraph, Path};
use crate::scalar::Real;
use crate::scene::ParticipantState;

use super::{
    idm_accel, leader_on_path, BehaviorModel, IdmParams, ModelError, ModelParams, ModelSpec,
    Obstacle, Trajectory, WorldView, DEFAULT_CLEARANCE, HARD_BRAKING, MIN_PLAN_STEPS,
};

/// Lower bound for a target speed derived from a (nearly) stopped vehicle, m/s.
pub const MIN_TARGET_SPEED: f64 = 1.0;

/// Longitudinal control law of a path-following model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Motion<T> {
    Idm(IdmParams<T>),
    /// Holds the current speed.
    Constant,
    /// Brakes at the given deceleration until standstill.
    Brake(T),
}

/// Follows a fixed reference path, choosing only its speed.
#[derive(Clone, Debug)]
pub struct PathFollowingModel<T> {
    pub motion: Motion<T>,
    pub path: Arc<Path<T>>,
    pub clearance: T,
}

/// Target speed for an IDM driver without a fixed `v0`: the speed limit of the
/// first lane on the path, else the given speed (floored at [`MIN_TARGET_SPEED`]).
fn default_target_speed<T: Real>(map: &MapGraph<T>, path: &Path<T>, speed: T) -> T {
    path.source_route()
        .first()
        .and_then(|id| map.lane(id))
        .and_then(|l| l.speed_limit)
        .unwrap_or_else(|| speed.max(T::lit(MIN_TARGET_SPEED)))
}

impl<T: Real> PathFollowingModel<T> {
    pub fn new(motion: Motion<T>, path: Arc<Path<T>>) -> Self {
        Self {
            motion,
            path,
            clearance: T::lit(DEFAULT_CLEARANCE),
        }
    }

    /// Resolves `spec` for a participant whose seed speed is `initial_speed`.
    pub fn from_spec(
        spec: &ModelSpec<T>,
        path: Arc<Path<T>>,
        map: &MapGraph<T>,
        initial_speed: T,
    ) -> Result<Self, ModelError> {
        spec.validate()?;
        let motion = match &spec.params {
            ModelParams::Idm(settings) => {
                Motion::Idm(settings.resolve(default_target_speed(map, &path, initial_speed)))
            }
            ModelParams::ConstantVelocity => Motion::Constant,
            ModelParams::EmergencyBrake { deceleration } => Motion::Brake(*deceleration),
            ModelParams::Replay => {
                return Err(ModelError::InvalidParams {
                    kind: spec.kind,
                    reason: "replay is not a path-following model".into(),
                })
            }
        };
        Ok(Self::new(motion, path))
    }

    fn accel(&self, v: T, leader: impl FnOnce() -> Option<(T, T)>) -> T {
        match self.motion {
            Motion::Idm(p) => {
                let (s_net, dv) = leader().unwrap_or((T::infinity(), T::zero()));
                idm_accel(&p, v, s_net, dv).max(-T::lit(HARD_BRAKING)).min(p.a_max)
            }
            Motion::Constant => T::zero(),
            Motion::Brake(d) => -d,
        }
    }
}

impl<T: Real> BehaviorModel<T> for PathFollowingModel<T> {
    fn plan(&self, view: &WorldView<'_, T>) -> Result<Trajectory<T>, ModelError> {
        let me = view.try_me()?;
        let path = &*self.path;
        let dt = view.dt;
        let half = T::lit(0.5);
        let steps = view.horizon_steps.max(MIN_PLAN_STEPS);

        // other participants keep their current velocity during the horizon
        let others: Vec<Obstacle<T>> = view
            .current()
            .states
            .iter()
            .filter(|s| s.track_id != view.self_id)
            .map(Obstacle::from)
            .collect();

        let mut station = path.project(me.position).station;
        let mut v = me.speed();
        let mut states = Vec::with_capacity(steps);
        for k in 0..steps {
            let t = dt * T::from_usize_lossy(k);
            let a = self.accel(v, || {
                let moved = others.iter().map(|o| Obstacle {
                    position: o.position + o.velocity * t,
                    ..*o
                });
                leader_on_path(path, station, me.length, v, moved, self.clearance)
                    .map(|l| (l.s_net, l.delta_v))
            });
            let v_next = (v + a * dt).max(T::zero());
            station += (v + v_next) * half * dt;
            v = v_next;
            let tangent = path.tangent_at(station);
            states.push(ParticipantState {
                position: path.point_at(station),
                yaw: tangent.heading(),
                velocity: tangent * v,
                ..me.clone()
            });
        }
        Ok(Trajectory {
            owner: view.self_id,
            states,
        })
    }
}

/// Plans along `path` with the participant's current speed as the default target speed.
pub fn plan_path_follow<T: Real>(
    view: &WorldView<'_, T>,
    spec: &ModelSpec<T>,
    path: Arc<Path<T>>,
) -> Result<Trajectory<T>, ModelError> {
    let speed = view.try_me()?.speed();
    PathFollowingModel::from_spec(spec, path, view.map, speed)?.plan(view)
}
