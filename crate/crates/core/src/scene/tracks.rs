//! Track CSV in the INTERACTION dataset layout.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path as FsPath;

use crate::geometry::Vec2;
use crate::scalar::Real;
use crate::scene::{
    AgentType, ParticipantState, ScenarioLog, SceneError, SceneFrame, TrackId,
    DEFAULT_VEHICLE_LENGTH, DEFAULT_VEHICLE_WIDTH,
};

/// Column names, in the order they are written.
pub const TRACK_COLUMNS: [&str; 12] = [
    "case_id",
    "track_id",
    "frame_id",
    "timestamp_ms",
    "agent_type",
    "x",
    "y",
    "vx",
    "vy",
    "psi_rad",
    "length",
    "width",
];

#[derive(Clone, Debug)]
pub struct Case<T> {
    pub id: u32,
    /// Ordered by timestamp.
    pub frames: Vec<SceneFrame<T>>,
}

#[derive(Clone, Debug)]
pub struct LoadedTracks<T> {
    pub cases: Vec<Case<T>>,
    /// Rows skipped because their agent type is not a vehicle.
    pub dropped_non_vehicle: usize,
}

impl<T> LoadedTracks<T> {
    pub fn case(&self, id: u32) -> Option<&Case<T>> {
        self.cases.iter().find(|c| c.id == id)
    }
}

pub fn load_tracks<T: Real>(path: &FsPath) -> Result<LoadedTracks<T>, SceneError> {
    let file = std::fs::File::open(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_tracks(std::io::BufReader::new(file))
}

struct Row<'r> {
    record: &'r csv::StringRecord,
    cols: &'r [usize; 12],
    line: u64,
}

impl Row<'_> {
    fn raw(&self, k: usize) -> &str {
        self.record.get(self.cols[k]).unwrap_or("").trim()
    }

    fn err(&self, k: usize, message: impl Into<String>) -> SceneError {
        SceneError::Field {
            line: self.line,
            column: TRACK_COLUMNS[k],
            message: message.into(),
        }
    }

    fn float(&self, k: usize) -> Result<f64, SceneError> {
        let s = self.raw(k);
        let v: f64 = s
            .parse()
            .map_err(|_| self.err(k, format!("not a number: `{s}`")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.err(k, "value must be finite"))
        }
    }

    fn float_or(&self, k: usize, default: f64) -> Result<f64, SceneError> {
        if self.raw(k).is_empty() {
            Ok(default)
        } else {
            self.float(k)
        }
    }

    /// Integer ids; the dataset sometimes writes them as `1.0`.
    fn id(&self, k: usize) -> Result<u32, SceneError> {
        let s = self.raw(k);
        if let Ok(v) = s.parse::<u32>() {
            return Ok(v);
        }
        let v = self.float(k)?;
        if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
            Ok(v as u32)
        } else {
            Err(self.err(k, format!("expected a non-negative integer, got `{s}`")))
        }
    }

    fn timestamp(&self, k: usize) -> Result<i64, SceneError> {
        let s = self.raw(k);
        if let Ok(v) = s.parse::<i64>() {
            return Ok(v);
        }
        let v = self.float(k)?;
        if v.fract() == 0.0 {
            Ok(v as i64)
        } else {
            Err(self.err(k, format!("expected integer milliseconds, got `{s}`")))
        }
    }
}

type FrameBuckets<T> = BTreeMap<u32, (i64, Vec<ParticipantState<T>>)>;

/// Parses track rows, grouping them by case and frame.
pub fn parse_tracks<T: Real, R: Read>(reader: R) -> Result<LoadedTracks<T>, SceneError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 12];
    for (k, name) in TRACK_COLUMNS.iter().enumerate() {
        cols[k] = headers
            .iter()
            .position(|h| h == *name)
            .ok_or(SceneError::MissingColumn(name))?;
    }

    let mut cases: BTreeMap<u32, FrameBuckets<T>> = BTreeMap::new();
    let mut seen: HashSet<(u32, TrackId, u32)> = HashSet::new();
    let mut last_ts: HashMap<(u32, TrackId), i64> = HashMap::new();
    let mut dropped = 0usize;
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record)? {
        let line = record.position().map_or(0, |p| p.line());
        let row = Row {
            record: &record,
            cols: &cols,
            line,
        };
        let Some(agent_type) = AgentType::from_label(row.raw(4)) else {
            dropped += 1;
            continue;
        };
        let case = row.id(0)?;
        let track = TrackId(row.id(1)?);
        let frame = row.id(2)?;
        let ts = row.timestamp(3)?;
        if !seen.insert((case, track, frame)) {
            return Err(SceneError::DuplicateKey {
                case,
                track,
                frame,
                line,
            });
        }
        if let Some(prev) = last_ts.insert((case, track), ts) {
            if ts <= prev {
                return Err(SceneError::NonMonotonicTimestamps { case, track, line });
            }
        }
        let length = row.float_or(10, DEFAULT_VEHICLE_LENGTH)?;
        let width = row.float_or(11, DEFAULT_VEHICLE_WIDTH)?;
        if !(length > 0.0) {
            return Err(row.err(10, "must be > 0"));
        }
        if !(width > 0.0) {
            return Err(row.err(11, "must be > 0"));
        }
        let state = ParticipantState {
            track_id: track,
            agent_type,
            position: Vec2::new(T::lit(row.float(5)?), T::lit(row.float(6)?)),
            yaw: T::lit(row.float(9)?),
            velocity: Vec2::new(T::lit(row.float(7)?), T::lit(row.float(8)?)),
            length: T::lit(length),
            width: T::lit(width),
        };
        let bucket = cases
            .entry(case)
            .or_default()
            .entry(frame)
            .or_insert_with(|| (ts, Vec::new()));
        if bucket.0 != ts {
            return Err(SceneError::InconsistentFrameTimestamp { case, frame });
        }
        bucket.1.push(state);
    }

    let mut out = Vec::with_capacity(cases.len());
    for (id, frames) in cases {
        let frames: Vec<SceneFrame<T>> = frames
            .into_iter()
            .map(|(frame_id, (ts, states))| SceneFrame::new(frame_id, ts, states))
            .collect();
        if let Some(w) = frames.windows(2).find(|w| w[1].timestamp_ms <= w[0].timestamp_ms) {
            return Err(SceneError::InconsistentFrameTimestamp {
                case: id,
                frame: w[1].frame_id,
            });
        }
        out.push(Case { id, frames });
    }
    Ok(LoadedTracks {
        cases: out,
        dropped_non_vehicle: dropped,
    })
}

/// Writes frames of one case, rows ordered by track then frame.
pub fn write_frames<T: Real, W: Write>(
    writer: W,
    case_id: u32,
    frames: &[SceneFrame<T>],
) -> Result<(), SceneError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACK_COLUMNS)?;
    let mut tracks: Vec<TrackId> = frames.iter().flat_map(|f| f.track_ids()).collect();
    tracks.sort();
    tracks.dedup();
    let num = |v: T| v.as_f64().to_string();
    for track in tracks {
        for f in frames {
            let Some(s) = f.get(track) else { continue };
            w.write_record([
                case_id.to_string(),
                track.0.to_string(),
                f.frame_id.to_string(),
                f.timestamp_ms.to_string(),
                s.agent_type.label().to_string(),
                num(s.position.x),
                num(s.position.y),
                num(s.velocity.x),
                num(s.velocity.y),
                num(s.yaw),
                num(s.length),
                num(s.width),
            ])?;
        }
    }
    w.flush().map_err(|source| SceneError::Io {
        path: "<writer>".into(),
        source,
    })?;
    Ok(())
}

pub fn write_log_to<T: Real, W: Write>(log: &ScenarioLog<T>, writer: W) -> Result<(), SceneError> {
    write_frames(writer, log.seed.case_id, &log.frames)
}

/// Writes the simulated frames of a log in the track CSV layout.
pub fn write_log<T: Real>(log: &ScenarioLog<T>, path: &FsPath) -> Result<(), SceneError> {
    log.validate()?;
    let file = std::fs::File::create(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_log_to(log, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::test_util::state;

    fn fixture(tracks: &[(u32, std::ops::Range<u32>)]) -> String {
        let mut s = TRACK_COLUMNS.join(",") + "\n";
        for (track, frames) in tracks {
            for f in frames.clone() {
                s += &format!(
                    "1.0,{track},{f},{},car,{},{},10.0,0.0,0.0,4.5,1.8\n",
                    f * 100,
                    f as f64,
                    *track as f64 * 3.5
                );
            }
        }
        s
    }

    #[test]
    fn one_case_two_tracks() {
        let t: LoadedTracks<f64> = parse_tracks(fixture(&[(1, 1..41), (2, 1..41)]).as_bytes()).unwrap();
        assert_eq!(t.cases.len(), 1);
        assert_eq!(t.cases[0].frames.len(), 40);
        assert!(t.cases[0].frames.iter().all(|f| f.states.len() == 2));
    }

    #[test]
    fn late_track_not_forced_constant() {
        let t: LoadedTracks<f64> = parse_tracks(fixture(&[(1, 1..41), (2, 20..41)]).as_bytes()).unwrap();
        let frames = &t.cases[0].frames;
        assert!(frames[..19].iter().all(|f| f.states.len() == 1));
        assert!(frames[19..].iter().all(|f| f.states.len() == 2));
    }

    #[test]
    fn missing_column_named() {
        let text = fixture(&[(1, 1..3)]).replace("psi_rad", "heading");
        let err = parse_tracks::<f64, _>(text.as_bytes()).unwrap_err();
        assert!(matches!(err, SceneError::MissingColumn("psi_rad")));
        assert!(err.to_string().contains("psi_rad"));
    }

    #[test]
    fn duplicate_and_non_monotonic_rows() {
        let mut text = fixture(&[(1, 1..3)]);
        text += "1,1,2,200,car,0,0,0,0,0,4.5,1.8\n";
        assert!(matches!(
            parse_tracks::<f64, _>(text.as_bytes()),
            Err(SceneError::DuplicateKey { frame: 2, .. })
        ));
        let mut text = fixture(&[(1, 1..3)]);
        text += "1,1,3,150,car,0,0,0,0,0,4.5,1.8\n";
        assert!(matches!(
            parse_tracks::<f64, _>(text.as_bytes()),
            Err(SceneError::NonMonotonicTimestamps { .. })
        ));
    }

    #[test]
    fn pedestrians_dropped_and_counted() {
        let mut text = fixture(&[(1, 1..3)]);
        text += "1,P1,1,100,pedestrian/bicycle,0,0,0,0,,,\n";
        text += "1,P1,2,200,pedestrian/bicycle,0,0,0,0,,,\n";
        let t: LoadedTracks<f64> = parse_tracks(text.as_bytes()).unwrap();
        assert_eq!(t.dropped_non_vehicle, 2);
        assert_eq!(t.cases[0].frames[0].states.len(), 1);
    }

    #[test]
    fn default_dimensions_and_field_errors() {
        let mut text = TRACK_COLUMNS.join(",") + "\n";
        text += "1,1,1,100,car,0,0,0,0,0,,\n";
        let t: LoadedTracks<f64> = parse_tracks(text.as_bytes()).unwrap();
        let s = &t.cases[0].frames[0].states[0];
        assert_eq!((s.length, s.width), (DEFAULT_VEHICLE_LENGTH, DEFAULT_VEHICLE_WIDTH));

        let mut text = TRACK_COLUMNS.join(",") + "\n";
        text += "1,1,1,100,car,abc,0,0,0,0,4,2\n";
        match parse_tracks::<f64, _>(text.as_bytes()).unwrap_err() {
            SceneError::Field { line, column, .. } => assert_eq!((line, column), (2, "x")),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn rows_ordered_by_track_then_frame() {
        let frames: Vec<SceneFrame<f64>> = (0..3)
            .map(|k| {
                SceneFrame::new(
                    k + 1,
                    100 * (k as i64 + 1),
                    vec![state(7, 0.0, 0.0, 0.0, 1.0), state(3, 0.1, 0.2, 0.3, 1.25)],
                )
            })
            .collect();
        let mut buf = Vec::new();
        write_frames(&mut buf, 4, &frames).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], TRACK_COLUMNS.join(","));
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("4,3,1,100,car,0.1,0.2,"));
        assert!(lines[4].starts_with("4,7,1,100,"));
        let back: LoadedTracks<f64> = parse_tracks(text.as_bytes()).unwrap();
        assert_eq!(back.cases[0].frames, frames);
    }
}
