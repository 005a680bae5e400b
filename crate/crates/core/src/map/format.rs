//! Native text map format.
//!
//! ```text
//! extrap-map v1
//! # comment
//! lane: A, 3.5, points[(0, 0), (100, 0)], successors[B, C]
//! lane: B, -, points[(100, 0), (200, 0)], successors[], speed_limit: 13.9
//! ```
//!
//! Fields per `lane:` record, in order: lane id, width in meters (`-` for the
//! default), centerline `points[(x, y), ...]` in meters, `successors[id, ...]`,
//! and an optional `speed_limit: <m/s>`. Ids may not contain `,`, `[`, `]`,
//! `(`, `)` or whitespace.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use crate::geometry::Vec2;
use crate::map::{Lane, LaneId, MapError, MapGraph};
use crate::scalar::Real;

pub const MAP_FORMAT_HEADER: &str = "extrap-map v1";

/// Attachment point for third-party HD-map importers (Lanelet2, OpenDRIVE, ...).
///
/// An importer converts its source into lanes with centerlines and successor
/// topology; everything downstream consumes only [`MapGraph`].
pub trait MapImporter<T: Real> {
    fn import(&self, source: &FsPath) -> Result<MapGraph<T>, MapError>;
}

/// Reads the native text format.
#[derive(Clone, Copy, Debug, Default)]
pub struct NativeMapImporter;

impl<T: Real> MapImporter<T> for NativeMapImporter {
    fn import(&self, source: &FsPath) -> Result<MapGraph<T>, MapError> {
        load_map(source)
    }
}

pub fn load_map<T: Real>(path: &FsPath) -> Result<MapGraph<T>, MapError> {
    let text = std::fs::read_to_string(path).map_err(|source| MapError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_map(&text)
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> MapError {
    MapError::Parse {
        line,
        field: field.to_owned(),
        message: message.into(),
    }
}

/// Splits on commas at bracket depth zero.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(s[start..].trim());
    out
}

fn bracket_body<'a>(field: &'a str, key: &str, line: usize) -> Result<&'a str, MapError> {
    let rest = field
        .strip_prefix(key)
        .ok_or_else(|| parse_err(line, key, format!("expected `{key}[...]`, got `{field}`")))?
        .trim_start();
    rest.strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| parse_err(line, key, "unbalanced brackets"))
}

fn parse_number<T: Real>(s: &str, line: usize, field: &str) -> Result<T, MapError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| parse_err(line, field, format!("not a number: `{}`", s.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, field, "value must be finite"));
    }
    Ok(T::lit(v))
}

fn parse_points<T: Real>(body: &str, line: usize) -> Result<Vec<Vec2<T>>, MapError> {
    let mut pts = Vec::new();
    if body.trim().is_empty() {
        return Ok(pts);
    }
    for (k, item) in split_top_level(body).into_iter().enumerate() {
        let field = format!("points[{k}]");
        let inner = item
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| parse_err(line, &field, format!("expected `(x, y)`, got `{item}`")))?;
        let xy: Vec<&str> = inner.split(',').collect();
        if xy.len() != 2 {
            return Err(parse_err(line, &field, "expected exactly two coordinates"));
        }
        pts.push(Vec2::new(
            parse_number(xy[0], line, &field)?,
            parse_number(xy[1], line, &field)?,
        ));
    }
    Ok(pts)
}

fn valid_id(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, ',' | '[' | ']' | '(' | ')'))
}

fn parse_lane<T: Real>(record: &str, line: usize) -> Result<Lane<T>, MapError> {
    let fields = split_top_level(record);
    if fields.len() < 4 || fields.len() > 5 {
        return Err(parse_err(
            line,
            "lane",
            format!("expected 4 or 5 fields, found {}", fields.len()),
        ));
    }
    let id = fields[0];
    if !valid_id(id) {
        return Err(parse_err(line, "id", format!("invalid lane id `{id}`")));
    }
    let width = match fields[1] {
        "-" | "" => None,
        w => Some(parse_number::<T>(w, line, "width")?),
    };
    let points = parse_points(bracket_body(fields[2], "points", line)?, line)?;
    let succ_body = bracket_body(fields[3], "successors", line)?;
    let mut successors = Vec::new();
    for s in succ_body.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if !valid_id(s) {
            return Err(parse_err(line, "successors", format!("invalid lane id `{s}`")));
        }
        successors.push(LaneId::from(s));
    }
    let speed_limit = match fields.get(4) {
        None => None,
        Some(f) => {
            let v = f
                .strip_prefix("speed_limit")
                .and_then(|r| r.trim_start().strip_prefix(':'))
                .ok_or_else(|| parse_err(line, "speed_limit", format!("unexpected field `{f}`")))?;
            let v: T = parse_number(v, line, "speed_limit")?;
            if !(v > T::zero()) {
                return Err(parse_err(line, "speed_limit", "must be > 0"));
            }
            Some(v)
        }
    };
    let lane = Lane::new(LaneId::from(id), points, width, successors).map_err(|e| match e {
        MapError::InvalidWidth { width, .. } => {
            parse_err(line, "width", format!("must be > 0, got {width}"))
        }
        MapError::DegenerateCenterline { reason, .. } => parse_err(line, "points", reason),
        other => other,
    })?;
    Ok(lane.with_speed_limit(speed_limit))
}

pub fn parse_map<T: Real>(text: &str) -> Result<MapGraph<T>, MapError> {
    let mut header_seen = false;
    let mut lanes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != MAP_FORMAT_HEADER {
                return Err(parse_err(
                    line_no,
                    "header",
                    format!("expected `{MAP_FORMAT_HEADER}`, got `{line}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        let record = line
            .strip_prefix("lane:")
            .ok_or_else(|| parse_err(line_no, "record", format!("expected `lane:`, got `{line}`")))?;
        lanes.push(parse_lane(record.trim(), line_no)?);
    }
    if !header_seen {
        return Err(parse_err(1, "header", "empty map file"));
    }
    MapGraph::new(lanes)
}

/// Serializes a map in the native format; `parse_map` reads it back exactly.
pub fn write_map<T: Real>(map: &MapGraph<T>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAP_FORMAT_HEADER}");
    for lane in map.lanes() {
        let pts: Vec<String> = lane
            .centerline()
            .points()
            .iter()
            .map(|p| format!("({}, {})", p.x.as_f64(), p.y.as_f64()))
            .collect();
        let succ: Vec<&str> = lane.successors.iter().map(LaneId::as_str).collect();
        let _ = write!(
            out,
            "lane: {}, {}, points[{}], successors[{}]",
            lane.id,
            lane.width.as_f64(),
            pts.join(", "),
            succ.join(", ")
        );
        if let Some(v) = lane.speed_limit {
            let _ = write!(out, ", speed_limit: {}", v.as_f64());
        }
        out.push('\n');
    }
    out
}
