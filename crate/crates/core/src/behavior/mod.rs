//! Behavior models: a frozen world view goes in, a planned trajectory comes out.
//!
//! Path-following models (standard and risky IDM drivers, constant velocity,
//! emergency brake) move along a fixed reference path and only choose their
//! speed. The replay model returns recorded ground truth. Learned predictors
//! plug in by implementing [`BehaviorModel`].

mod idm;
mod path_following;
mod perception;
mod replay;
mod roster;

use std::fmt;

use thiserror::Error;

use crate::map::{MapError, MapGraph, RouteSelector};
use crate::scalar::Real;
use crate::scene::{ParticipantState, SceneFrame, TrackId, DT};

pub use idm::{idm_accel, IdmParams, HARD_BRAKING};
pub use path_following::{plan_path_follow, Motion, PathFollowingModel};
pub use perception::{
    find_leader, leader_in_frame, leader_on_path, perceive, Leader, LocalParticipant, LocalView,
    Obstacle, DEFAULT_CLEARANCE, DEFAULT_PERCEPTION_RANGE, MIN_NET_GAP,
};
pub use replay::{plan_replay, ReplayModel};
pub use roster::{load_roster, parse_roster, Roster, RosterError};

/// Minimum number of planned steps in every trajectory.
pub const MIN_PLAN_STEPS: usize = 30;
/// Deceleration of the emergency-brake model, m/s².
pub const EMERGENCY_DECELERATION: f64 = 5.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("track {0} is not part of the world view")]
    SelfAbsent(TrackId),
    #[error("track {0} does not appear in the recording")]
    NotRecorded(TrackId),
    #[error("replay requires a recorded case")]
    NoRecording,
    #[error("no reference path: {0}")]
    Map(#[from] MapError),
    #[error("trajectory has {len} states, {needed} needed")]
    ShortTrajectory { len: usize, needed: usize },
    #[error("invalid parameters for {kind}: {reason}")]
    InvalidParams { kind: ModelKind, reason: String },
}

/// Read-only environment handed to every model at a planning step.
#[derive(Clone, Copy, Debug)]
pub struct WorldView<'a, T> {
    /// History window, oldest first; the last frame is the current one.
    pub frames: &'a [SceneFrame<T>],
    pub map: &'a MapGraph<T>,
    pub self_id: TrackId,
    pub horizon_steps: usize,
    pub dt: T,
}

impl<'a, T: Real> WorldView<'a, T> {
    pub fn new(frames: &'a [SceneFrame<T>], map: &'a MapGraph<T>, self_id: TrackId, horizon_steps: usize) -> Self {
        Self {
            frames,
            map,
            self_id,
            horizon_steps,
            dt: T::lit(DT),
        }
    }

    pub fn current(&self) -> &'a SceneFrame<T> {
        self.frames.last().expect("world view has at least one frame")
    }

    /// Own state in the current frame.
    ///
    /// # Panics
    /// If `self_id` is absent; use [`WorldView::try_me`] otherwise.
    pub fn me(&self) -> &'a ParticipantState<T> {
        self.try_me().expect("self present in world view")
    }

    pub fn try_me(&self) -> Result<&'a ParticipantState<T>, ModelError> {
        self.current()
            .get(self.self_id)
            .ok_or(ModelError::SelfAbsent(self.self_id))
    }
}

/// Planned future states for steps `t+1 ..= t+horizon`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub owner: TrackId,
    pub states: Vec<ParticipantState<T>>,
}

pub trait BehaviorModel<T: Real>: Send + Sync {
    fn plan(&self, view: &WorldView<'_, T>) -> Result<Trajectory<T>, ModelError>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Standard,
    Risky,
    ConstantVelocity,
    EmergencyBrake,
    Replay,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Standard => "standard",
            Self::Risky => "risky",
            Self::ConstantVelocity => "constant_velocity",
            Self::EmergencyBrake => "emergency_brake",
            Self::Replay => "replay",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// IDM parameters before the target speed is known.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdmSettings<T> {
    pub a_max: T,
    pub b: T,
    pub time_headway: T,
    pub s0: T,
    pub delta: T,
    /// Fixed target speed; when `None` the lane speed limit or the
    /// participant's seed speed is used.
    pub v0: Option<T>,
}

impl<T: Real> IdmSettings<T> {
    /// Standard driver: b = 3.0, T = 3.1, s0 = 9, delta = 4, a_max = 2.0.
    pub fn standard() -> Self {
        Self {
            a_max: T::lit(2.0),
            b: T::lit(3.0),
            time_headway: T::lit(3.1),
            s0: T::lit(9.0),
            delta: T::lit(4.0),
            v0: None,
        }
    }

    /// Risky driver: b = 8.0, T = 2.1, s0 = 5, delta = 4, a_max = 2.5.
    pub fn risky() -> Self {
        Self {
            a_max: T::lit(2.5),
            b: T::lit(8.0),
            time_headway: T::lit(2.1),
            s0: T::lit(5.0),
            delta: T::lit(4.0),
            v0: None,
        }
    }

    pub fn resolve(&self, v0: T) -> IdmParams<T> {
        IdmParams {
            a_max: self.a_max,
            b: self.b,
            time_headway: self.time_headway,
            s0: self.s0,
            delta: self.delta,
            v0: self.v0.unwrap_or(v0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelParams<T> {
    Idm(IdmSettings<T>),
    ConstantVelocity,
    EmergencyBrake { deceleration: T },
    Replay,
}

/// One roster entry: model kind, parameters, route choice and sampling weight.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec<T> {
    pub name: String,
    pub kind: ModelKind,
    pub params: ModelParams<T>,
    pub route_selector: RouteSelector,
    pub weight: T,
}

impl<T: Real> ModelSpec<T> {
    fn with(name: &str, kind: ModelKind, params: ModelParams<T>) -> Self {
        Self {
            name: name.to_owned(),
            kind,
            params,
            route_selector: RouteSelector::Straightest,
            weight: T::one(),
        }
    }

    pub fn standard() -> Self {
        Self::with("standard", ModelKind::Standard, ModelParams::Idm(IdmSettings::standard()))
    }

    pub fn risky() -> Self {
        Self::with("risky", ModelKind::Risky, ModelParams::Idm(IdmSettings::risky()))
    }

    pub fn constant_velocity() -> Self {
        Self::with("constant_velocity", ModelKind::ConstantVelocity, ModelParams::ConstantVelocity)
    }

    pub fn emergency_brake() -> Self {
        Self::with(
            "emergency_brake",
            ModelKind::EmergencyBrake,
            ModelParams::EmergencyBrake {
                deceleration: T::lit(EMERGENCY_DECELERATION),
            },
        )
    }

    pub fn replay(name: &str) -> Self {
        Self::with(name, ModelKind::Replay, ModelParams::Replay)
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_selector(mut self, selector: RouteSelector) -> Self {
        self.route_selector = selector;
        self
    }

    pub fn is_path_following(&self) -> bool {
        self.kind != ModelKind::Replay
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |reason: &str| ModelError::InvalidParams {
            kind: self.kind,
            reason: reason.to_owned(),
        };
        if !(self.weight > T::zero()) || !self.weight.is_finite() {
            return Err(bad("weight must be > 0"));
        }
        match (self.kind, &self.params) {
            (ModelKind::Standard | ModelKind::Risky, ModelParams::Idm(s)) => {
                let probe = s.resolve(T::one());
                if !probe.is_valid() {
                    return Err(bad("IDM parameters must be finite and > 0"));
                }
                Ok(())
            }
            (ModelKind::ConstantVelocity, ModelParams::ConstantVelocity) => Ok(()),
            (ModelKind::EmergencyBrake, ModelParams::EmergencyBrake { deceleration }) => {
                if *deceleration > T::zero() && deceleration.is_finite() {
                    Ok(())
                } else {
                    Err(bad("deceleration must be > 0"))
                }
            }
            (ModelKind::Replay, ModelParams::Replay) => Ok(()),
            _ => Err(bad("parameters do not match model kind")),
        }
    }
}
