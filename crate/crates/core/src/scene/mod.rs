//! Scene data: participant states, frames, seed-scenes and simulated logs.

mod synth;
mod tracks;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{Pose, Vec2};
use crate::map::{MapGraph, Path};
use crate::scalar::Real;
use crate::sim::Assignment;

pub use synth::{synth_scene, Stream, SynthOptions, SynthScene, SynthTemplate};
pub use tracks::{
    load_tracks, parse_tracks, write_frames, write_log, write_log_to, Case, LoadedTracks,
    TRACK_COLUMNS,
};

/// Sampling period of every frame sequence, milliseconds.
pub const FRAME_PERIOD_MS: i64 = 100;
/// Sampling period in seconds.
pub const DT: f64 = 0.1;
/// Total frames in a seed window: the current frame plus nine past frames.
pub const DEFAULT_HISTORY_LEN: usize = 10;
/// Applied when a dataset row leaves the vehicle length empty.
pub const DEFAULT_VEHICLE_LENGTH: f64 = 4.5;
/// Applied when a dataset row leaves the vehicle width empty.
pub const DEFAULT_VEHICLE_WIDTH: f64 = 1.8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrackId(pub u32);

impl fmt::Display for TrackId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AgentType {
    Car,
    Truck,
    Other,
}

impl AgentType {
    /// Vehicle class for a dataset label, `None` for pedestrians and cyclists.
    pub fn from_label(label: &str) -> Option<Self> {
        match label.trim().to_ascii_lowercase().as_str() {
            "car" => Some(Self::Car),
            "truck" | "bus" | "truck_bus" => Some(Self::Truck),
            "pedestrian" | "bicycle" | "pedestrian/bicycle" | "cyclist" | "bike" => None,
            _ => Some(Self::Other),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::Car => "car",
            Self::Truck => "truck",
            Self::Other => "other",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticipantState<T> {
    pub track_id: TrackId,
    pub agent_type: AgentType,
    pub position: Vec2<T>,
    pub yaw: T,
    pub velocity: Vec2<T>,
    pub length: T,
    pub width: T,
}

impl<T: Real> ParticipantState<T> {
    pub fn speed(&self) -> T {
        self.velocity.norm()
    }

    pub fn pose(&self) -> Pose<T> {
        Pose::new(self.position, self.yaw)
    }

    /// Radius of the circle circumscribing the bounding box.
    pub fn radius(&self) -> T {
        self.length.hypot(self.width) * T::lit(0.5)
    }

    fn check(&self) -> Result<(), SceneError> {
        let ok = self.length > T::zero()
            && self.width > T::zero()
            && self.position.x.is_finite()
            && self.position.y.is_finite()
            && self.yaw.is_finite()
            && self.speed().is_finite();
        if ok {
            Ok(())
        } else {
            Err(SceneError::InvalidState {
                track: self.track_id,
                reason: "non-positive dimensions or non-finite kinematics".into(),
            })
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneFrame<T> {
    pub frame_id: u32,
    pub timestamp_ms: i64,
    /// Sorted by track id.
    pub states: Vec<ParticipantState<T>>,
}

impl<T: Real> SceneFrame<T> {
    pub fn new(frame_id: u32, timestamp_ms: i64, mut states: Vec<ParticipantState<T>>) -> Self {
        states.sort_by_key(|s| s.track_id);
        Self {
            frame_id,
            timestamp_ms,
            states,
        }
    }

    pub fn get(&self, id: TrackId) -> Option<&ParticipantState<T>> {
        self.states
            .binary_search_by_key(&id, |s| s.track_id)
            .ok()
            .map(|i| &self.states[i])
    }

    pub fn track_ids(&self) -> impl Iterator<Item = TrackId> + '_ {
        self.states.iter().map(|s| s.track_id)
    }
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("line {line}: column `{column}`: {message}")]
    Field {
        line: u64,
        column: &'static str,
        message: String,
    },
    #[error("case {case}, track {track}: timestamps not strictly increasing at line {line}")]
    NonMonotonicTimestamps { case: u32, track: TrackId, line: u64 },
    #[error("case {case}: frame {frame} has inconsistent timestamps")]
    InconsistentFrameTimestamp { case: u32, frame: u32 },
    #[error("duplicate row for case {case}, track {track}, frame {frame} at line {line}")]
    DuplicateKey {
        case: u32,
        track: TrackId,
        frame: u32,
        line: u64,
    },
    #[error("insufficient history: need {needed} frames up to index {current_index}, case has {available}")]
    InsufficientHistory {
        needed: usize,
        current_index: usize,
        available: usize,
    },
    #[error("no participant is present in every frame of the window")]
    EmptyParticipants,
    #[error("frames must be spaced {FRAME_PERIOD_MS} ms apart, found {0} ms")]
    IrregularSpacing(i64),
    #[error("participant set changes between frames")]
    ParticipantSetChanged,
    #[error("duplicate track {0} within a frame")]
    DuplicateTrackInFrame(TrackId),
    #[error("track {track}: {reason}")]
    InvalidState { track: TrackId, reason: String },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },
    #[error("empty frame sequence")]
    NoFrames,
}

fn check_frames<T: Real>(frames: &[SceneFrame<T>], constant_participants: bool) -> Result<(), SceneError> {
    let first = frames.first().ok_or(SceneError::NoFrames)?;
    for f in frames {
        for w in f.states.windows(2) {
            if w[0].track_id == w[1].track_id {
                return Err(SceneError::DuplicateTrackInFrame(w[0].track_id));
            }
        }
        for s in &f.states {
            s.check()?;
        }
        if constant_participants && !f.track_ids().eq(first.track_ids()) {
            return Err(SceneError::ParticipantSetChanged);
        }
    }
    for w in frames.windows(2) {
        let dt = w[1].timestamp_ms - w[0].timestamp_ms;
        if dt != FRAME_PERIOD_MS {
            return Err(SceneError::IrregularSpacing(dt));
        }
    }
    Ok(())
}

/// Starting point of every child-scenario: a map plus a short frame history.
#[derive(Clone, Debug)]
pub struct SeedScene<T> {
    pub map: Arc<MapGraph<T>>,
    /// Oldest first; the last frame is the current one.
    frames: Vec<SceneFrame<T>>,
    pub case_id: u32,
}

impl<T: Real> SeedScene<T> {
    /// Checks 100 ms spacing and a constant, non-empty participant set.
    pub fn new(map: Arc<MapGraph<T>>, frames: Vec<SceneFrame<T>>, case_id: u32) -> Result<Self, SceneError> {
        check_frames(&frames, true)?;
        if frames[0].states.is_empty() {
            return Err(SceneError::EmptyParticipants);
        }
        Ok(Self {
            map,
            frames,
            case_id,
        })
    }

    pub fn frames(&self) -> &[SceneFrame<T>] {
        &self.frames
    }

    pub fn current(&self) -> &SceneFrame<T> {
        self.frames.last().expect("seed has frames")
    }

    /// Participants sorted by track id.
    pub fn participants(&self) -> Vec<TrackId> {
        self.current().track_ids().collect()
    }
}

/// Selects a history window ending at `current_index`, keeping only tracks
/// present in every selected frame.
pub fn extract_seed<T: Real>(
    map: Arc<MapGraph<T>>,
    case_id: u32,
    case: &[SceneFrame<T>],
    current_index: usize,
    history_len: usize,
) -> Result<SeedScene<T>, SceneError> {
    if history_len == 0 || current_index + 1 < history_len || current_index >= case.len() {
        return Err(SceneError::InsufficientHistory {
            needed: history_len,
            current_index,
            available: case.len(),
        });
    }
    let window = &case[current_index + 1 - history_len..=current_index];
    let mut common: BTreeSet<TrackId> = window[0].track_ids().collect();
    for f in &window[1..] {
        let ids: BTreeSet<TrackId> = f.track_ids().collect();
        common = common.intersection(&ids).copied().collect();
    }
    if common.is_empty() {
        return Err(SceneError::EmptyParticipants);
    }
    let frames = window
        .iter()
        .map(|f| SceneFrame {
            frame_id: f.frame_id,
            timestamp_ms: f.timestamp_ms,
            states: f
                .states
                .iter()
                .filter(|s| common.contains(&s.track_id))
                .cloned()
                .collect(),
        })
        .collect();
    SeedScene::new(map, frames, case_id)
}

/// A recorded case together with the index of the seed's current frame.
/// Replay models read their future from here.
#[derive(Clone, Debug)]
pub struct RecordedCase<T> {
    pub frames: Vec<SceneFrame<T>>,
    pub current_index: usize,
}

impl<T: Real> RecordedCase<T> {
    pub fn new(frames: Vec<SceneFrame<T>>, current_index: usize) -> Self {
        Self {
            frames,
            current_index,
        }
    }

    /// Frames strictly after the current one.
    pub fn future(&self) -> &[SceneFrame<T>] {
        self.frames.get(self.current_index + 1..).unwrap_or(&[])
    }

    pub fn index_of_timestamp(&self, timestamp_ms: i64) -> Option<usize> {
        self.frames
            .binary_search_by_key(&timestamp_ms, |f| f.timestamp_ms)
            .ok()
    }
}

/// One simulated child-scenario.
#[derive(Clone, Debug)]
pub struct ScenarioLog<T> {
    pub seed: Arc<SeedScene<T>>,
    pub assignment: Assignment<T>,
    pub frames: Vec<SceneFrame<T>>,
    pub run_index: usize,
    pub run_seed: u64,
    /// Reference path followed by each participant, used for leader and
    /// conflict-point detection in the metrics.
    pub paths: BTreeMap<TrackId, Arc<Path<T>>>,
}

impl<T: Real> ScenarioLog<T> {
    /// Verifies 100 ms spacing and participant constancy against the seed.
    pub fn validate(&self) -> Result<(), SceneError> {
        check_frames(&self.frames, true)?;
        let seed_ids = self.seed.participants();
        if !self.frames[0].track_ids().eq(seed_ids.iter().copied()) {
            return Err(SceneError::ParticipantSetChanged);
        }
        let dt = self.frames[0].timestamp_ms - self.seed.current().timestamp_ms;
        if dt != FRAME_PERIOD_MS {
            return Err(SceneError::IrregularSpacing(dt));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;

    pub fn state(id: u32, x: f64, y: f64, yaw: f64, speed: f64) -> ParticipantState<f64> {
        ParticipantState {
            track_id: TrackId(id),
            agent_type: AgentType::Car,
            position: Vec2::new(x, y),
            yaw,
            velocity: Vec2::from_heading(yaw) * speed,
            length: 4.0,
            width: 1.8,
        }
    }

    pub fn empty_map() -> Arc<MapGraph<f64>> {
        Arc::new(MapGraph::new(vec![]).unwrap())
    }
}
