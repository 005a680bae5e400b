//! Synthetic seed-scenes on small hand-built maps.
//!
//! Every template places vehicles "before" the origin: for merges and
//! crossings the origin is the conflict point, for car following it is just
//! the reference position of the leading vehicle's stream.

use std::sync::Arc;

use crate::geometry::Vec2;
use crate::map::{Lane, LaneId, MapGraph, Path};
use crate::scalar::Real;
use crate::scene::{
    AgentType, ParticipantState, RecordedCase, SceneError, SceneFrame, SeedScene, TrackId, DT,
    DEFAULT_HISTORY_LEN, DEFAULT_VEHICLE_LENGTH, DEFAULT_VEHICLE_WIDTH, FRAME_PERIOD_MS,
};

/// A queue of vehicles approaching the origin on one lane.
#[derive(Clone, Debug, PartialEq)]
pub struct Stream<T> {
    /// Distance of the first vehicle before the origin, meters.
    pub lead_distance: T,
    /// Center-to-center gaps between consecutive vehicles, meters.
    pub gaps: Vec<T>,
    /// Speed of each vehicle, front to back, m/s.
    pub speeds: Vec<T>,
}

impl<T: Real> Stream<T> {
    pub fn new(lead_distance: T, gaps: Vec<T>, speeds: Vec<T>) -> Self {
        Self {
            lead_distance,
            gaps,
            speeds,
        }
    }

    fn distances(&self) -> Vec<T> {
        let mut d = vec![self.lead_distance];
        for g in &self.gaps {
            let last = *d.last().expect("non-empty");
            d.push(last + *g);
        }
        d
    }

    fn validate(&self, name: &str, approach: T) -> Result<(), SceneError> {
        let bad = |reason: String| SceneError::InvalidParam {
            name: name.to_owned(),
            reason,
        };
        if self.speeds.is_empty() {
            return Err(bad("at least one vehicle required".into()));
        }
        if self.gaps.len() + 1 != self.speeds.len() {
            return Err(bad(format!(
                "{} speeds need {} gaps, got {}",
                self.speeds.len(),
                self.speeds.len() - 1,
                self.gaps.len()
            )));
        }
        if !(self.lead_distance >= T::zero()) || !self.lead_distance.is_finite() {
            return Err(bad("lead_distance must be finite and >= 0".into()));
        }
        if let Some(g) = self.gaps.iter().find(|g| !(**g > T::zero()) || !g.is_finite()) {
            return Err(bad(format!("gaps must be > 0, got {g}")));
        }
        if let Some(v) = self.speeds.iter().find(|v| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(bad(format!("speeds must be >= 0, got {v}")));
        }
        let far = *self.distances().last().expect("non-empty");
        if far >= approach {
            return Err(bad(format!(
                "rearmost vehicle at {far} m exceeds approach length {approach} m"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SynthTemplate<T> {
    /// One straight lane.
    CarFollowing { stream: Stream<T> },
    /// A ramp joining a main lane at the origin.
    Merge {
        main: Stream<T>,
        ramp: Stream<T>,
        /// Angle between ramp and main lane, radians.
        ramp_angle: T,
    },
    /// Two perpendicular lanes through the origin.
    Crossing { a: Stream<T>, b: Stream<T> },
}

/// Template-independent options.
#[derive(Clone, Debug, PartialEq)]
pub struct SynthOptions<T> {
    pub history_len: usize,
    /// Recorded frames after the current one (constant speed along the lane).
    pub future_len: usize,
    /// Lane length before the origin, meters.
    pub approach: T,
    /// Lane length after the origin, meters.
    pub exit: T,
    pub vehicle_length: T,
    pub vehicle_width: T,
    pub speed_limit: Option<T>,
}

impl<T: Real> Default for SynthOptions<T> {
    fn default() -> Self {
        Self {
            history_len: DEFAULT_HISTORY_LEN,
            future_len: 30,
            approach: T::lit(300.0),
            exit: T::lit(400.0),
            vehicle_length: T::lit(DEFAULT_VEHICLE_LENGTH),
            vehicle_width: T::lit(DEFAULT_VEHICLE_WIDTH),
            speed_limit: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SynthScene<T> {
    pub map: Arc<MapGraph<T>>,
    pub seed: SeedScene<T>,
    /// History plus constant-speed future; the seed's current frame sits at
    /// `recorded.current_index`.
    pub recorded: RecordedCase<T>,
}

struct Placed<T> {
    path: Path<T>,
    /// Station of the vehicle on `path` at the current frame.
    station: T,
    speed: T,
}

fn lane<T: Real>(id: &str, a: Vec2<T>, b: Vec2<T>, succ: &[&str], limit: Option<T>) -> Lane<T> {
    Lane::new(
        LaneId::from(id),
        vec![a, b],
        None,
        succ.iter().map(|s| LaneId::from(*s)).collect(),
    )
    .expect("template lanes are non-degenerate")
    .with_speed_limit(limit)
}

fn place<T: Real>(stream: &Stream<T>, path: &Path<T>, approach: T, out: &mut Vec<Placed<T>>) {
    for (d, v) in stream.distances().into_iter().zip(&stream.speeds) {
        out.push(Placed {
            path: path.clone(),
            station: approach - d,
            speed: *v,
        });
    }
}

/// Builds a map and a seed-scene for one of the templates.
pub fn synth_scene<T: Real>(
    template: &SynthTemplate<T>,
    opts: &SynthOptions<T>,
) -> Result<SynthScene<T>, SceneError> {
    if opts.history_len == 0 {
        return Err(SceneError::InvalidParam {
            name: "history_len".into(),
            reason: "must be >= 1".into(),
        });
    }
    if !(opts.vehicle_length > T::zero() && opts.vehicle_width > T::zero()) {
        return Err(SceneError::InvalidParam {
            name: "vehicle dimensions".into(),
            reason: "must be > 0".into(),
        });
    }
    let (ap, ex) = (opts.approach, opts.exit);
    let o = Vec2::zero();
    let lim = opts.speed_limit;
    let mut placed = Vec::new();
    let lanes = match template {
        SynthTemplate::CarFollowing { stream } => {
            stream.validate("stream", ap)?;
            let l = lane("main", Vec2::new(-ap, T::zero()), Vec2::new(ex, T::zero()), &[], lim);
            place(stream, l.centerline(), ap, &mut placed);
            vec![l]
        }
        SynthTemplate::Merge {
            main,
            ramp,
            ramp_angle,
        } => {
            main.validate("main", ap)?;
            ramp.validate("ramp", ap)?;
            if !(*ramp_angle > T::zero() && *ramp_angle < T::FRAC_PI_2()) {
                return Err(SceneError::InvalidParam {
                    name: "ramp_angle".into(),
                    reason: "must lie in (0, pi/2)".into(),
                });
            }
            let ramp_start = -Vec2::from_heading(*ramp_angle) * ap;
            let main_in = lane("main_in", Vec2::new(-ap, T::zero()), o, &["main_out"], lim);
            let main_out = lane("main_out", o, Vec2::new(ex, T::zero()), &[], lim);
            let ramp_lane = lane("ramp", ramp_start, o, &["main_out"], lim);
            let main_path = Path::new([Vec2::new(-ap, T::zero()), o, Vec2::new(ex, T::zero())], T::zero());
            let ramp_path = Path::new([ramp_start, o, Vec2::new(ex, T::zero())], T::zero());
            place(main, &main_path, ap, &mut placed);
            place(ramp, &ramp_path, ap, &mut placed);
            vec![main_in, main_out, ramp_lane]
        }
        SynthTemplate::Crossing { a, b } => {
            a.validate("a", ap)?;
            b.validate("b", ap)?;
            let la = lane("a", Vec2::new(-ap, T::zero()), Vec2::new(ex, T::zero()), &[], lim);
            let lb = lane("b", Vec2::new(T::zero(), -ap), Vec2::new(T::zero(), ex), &[], lim);
            place(a, la.centerline(), ap, &mut placed);
            place(b, lb.centerline(), ap, &mut placed);
            vec![la, lb]
        }
    };
    let map = Arc::new(MapGraph::new(lanes).map_err(|e| SceneError::InvalidParam {
        name: "template".into(),
        reason: e.to_string(),
    })?);

    let dt = T::lit(DT);
    let n_hist = opts.history_len;
    let total = n_hist + opts.future_len;
    let frames: Vec<SceneFrame<T>> = (0..total)
        .map(|k| {
            // steps relative to the current frame (index n_hist - 1)
            let rel = k as i64 - (n_hist as i64 - 1);
            let states = placed
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let tangent = p.path.tangent_at(p.station);
                    let velocity = tangent * p.speed;
                    let position = if rel <= 0 {
                        // straight back-extrapolation at constant velocity
                        let mut pos = p.path.point_at(p.station);
                        for _ in 0..(-rel) {
                            pos = pos - velocity * dt;
                        }
                        pos
                    } else {
                        p.path.point_at(p.station + p.speed * dt * T::from_usize_lossy(rel as usize))
                    };
                    let (yaw, velocity) = if rel <= 0 {
                        (tangent.heading(), velocity)
                    } else {
                        let s = p.station + p.speed * dt * T::from_usize_lossy(rel as usize);
                        let t = p.path.tangent_at(s);
                        (t.heading(), t * p.speed)
                    };
                    ParticipantState {
                        track_id: TrackId(i as u32 + 1),
                        agent_type: AgentType::Car,
                        position,
                        yaw,
                        velocity,
                        length: opts.vehicle_length,
                        width: opts.vehicle_width,
                    }
                })
                .collect();
            SceneFrame::new(k as u32 + 1, (k as i64 + 1) * FRAME_PERIOD_MS, states)
        })
        .collect();
    let seed = SeedScene::new(map.clone(), frames[..n_hist].to_vec(), 1)?;
    Ok(SynthScene {
        map,
        seed,
        recorded: RecordedCase::new(frames, n_hist - 1),
    })
}
