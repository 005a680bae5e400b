//! Run configuration files.
//!
//! ```toml
//! schema_version = 1
//! output_dir = "out"
//! n_runs = 385
//! rng_seed = 7
//!
//! # either a recorded case ...
//! map = "maps/roundabout.map"
//! tracks = "tracks/vehicle_tracks_000.csv"
//! case_id = 12
//! current_index = 40
//!
//! # ... or a synthetic scene
//! [synth]
//! template = "merge"
//! ramp_angle_deg = 20.0
//! main = { lead_distance = 20.0, gaps = [25.0], speeds = [10.0, 10.0] }
//! ramp = { lead_distance = 25.0, gaps = [], speeds = [9.0] }
//! ```
//!
//! Relative paths are resolved against the directory of the config file.

use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::DEFAULT_BANDWIDTH;
use crate::behavior::{load_roster, Roster, RosterError};
use crate::map::{load_map, MapError, MapGraph};
use crate::metrics::{MetricParams, DEFAULT_PTTC_DECELERATION, DEFAULT_WTTC_ACCELERATION};
use crate::scalar::Real;
use crate::scene::{
    extract_seed, load_tracks, synth_scene, RecordedCase, SceneError, SeedScene, Stream, SynthOptions, SynthTemplate,
    DEFAULT_HISTORY_LEN,
};
use crate::sim::{SimConfig, DEFAULT_ENUMERATION_CAP, DEFAULT_N_RUNS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Parse(String),
    #[error("config field `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Roster(#[from] RosterError),
}

impl ConfigError {
    /// True for failures reading files rather than invalid content.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Self::Io { .. } | Self::Map(MapError::Io { .. }) | Self::Scene(SceneError::Io { .. }) | Self::Roster(RosterError::Io(_))
        )
    }
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_owned(),
        message: message.into(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamConfig {
    #[serde(default)]
    pub lead_distance: f64,
    #[serde(default)]
    pub gaps: Vec<f64>,
    pub speeds: Vec<f64>,
}

impl StreamConfig {
    fn to_stream<T: Real>(&self) -> Stream<T> {
        Stream::new(
            T::lit(self.lead_distance),
            self.gaps.iter().copied().map(T::lit).collect(),
            self.speeds.iter().copied().map(T::lit).collect(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    CarFollowing,
    Merge,
    Crossing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub template: TemplateKind,
    /// Car following.
    pub stream: Option<StreamConfig>,
    /// Merge.
    pub main: Option<StreamConfig>,
    pub ramp: Option<StreamConfig>,
    pub ramp_angle_deg: Option<f64>,
    /// Crossing.
    pub a: Option<StreamConfig>,
    pub b: Option<StreamConfig>,
    pub future_len: Option<usize>,
    pub speed_limit: Option<f64>,
    pub approach: Option<f64>,
    pub exit: Option<f64>,
}

impl SynthConfig {
    fn stream<'a>(&self, field: &'a str, s: &'a Option<StreamConfig>) -> Result<&'a StreamConfig, ConfigError> {
        s.as_ref()
            .ok_or_else(|| invalid(&format!("synth.{field}"), format!("required by template {:?}", self.template)))
    }

    pub fn template<T: Real>(&self) -> Result<SynthTemplate<T>, ConfigError> {
        let unused = |field: &str, present: bool| {
            if present {
                Err(invalid(&format!("synth.{field}"), format!("not used by template {:?}", self.template)))
            } else {
                Ok(())
            }
        };
        Ok(match self.template {
            TemplateKind::CarFollowing => {
                unused("main", self.main.is_some())?;
                unused("ramp", self.ramp.is_some())?;
                unused("ramp_angle_deg", self.ramp_angle_deg.is_some())?;
                unused("a", self.a.is_some())?;
                unused("b", self.b.is_some())?;
                SynthTemplate::CarFollowing {
                    stream: self.stream("stream", &self.stream)?.to_stream(),
                }
            }
            TemplateKind::Merge => {
                unused("stream", self.stream.is_some())?;
                unused("a", self.a.is_some())?;
                unused("b", self.b.is_some())?;
                let deg = self.ramp_angle_deg.unwrap_or(20.0);
                if !(deg > 0.0 && deg < 90.0) {
                    return Err(invalid("synth.ramp_angle_deg", format!("must lie in (0, 90), got {deg}")));
                }
                SynthTemplate::Merge {
                    main: self.stream("main", &self.main)?.to_stream(),
                    ramp: self.stream("ramp", &self.ramp)?.to_stream(),
                    ramp_angle: T::lit(deg.to_radians()),
                }
            }
            TemplateKind::Crossing => {
                unused("stream", self.stream.is_some())?;
                unused("main", self.main.is_some())?;
                unused("ramp", self.ramp.is_some())?;
                unused("ramp_angle_deg", self.ramp_angle_deg.is_some())?;
                SynthTemplate::Crossing {
                    a: self.stream("a", &self.a)?.to_stream(),
                    b: self.stream("b", &self.b)?.to_stream(),
                }
            }
        })
    }

    pub fn options<T: Real>(&self, history_len: usize) -> SynthOptions<T> {
        let d = SynthOptions::<T>::default();
        SynthOptions {
            history_len,
            future_len: self.future_len.unwrap_or(d.future_len),
            approach: self.approach.map_or(d.approach, T::lit),
            exit: self.exit.map_or(d.exit, T::lit),
            speed_limit: self.speed_limit.map(T::lit),
            ..d
        }
    }
}

fn default_history_len() -> usize {
    DEFAULT_HISTORY_LEN
}
fn default_n_runs() -> usize {
    DEFAULT_N_RUNS
}
fn default_replan_interval() -> usize {
    SimConfig::default().replan_interval
}
fn default_horizon_steps() -> usize {
    SimConfig::default().horizon_steps
}
fn default_pttc_b() -> f64 {
    DEFAULT_PTTC_DECELERATION
}
fn default_wttc_a() -> f64 {
    DEFAULT_WTTC_ACCELERATION
}
fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH
}
fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub output_dir: PathBuf,
    pub map: Option<PathBuf>,
    pub tracks: Option<PathBuf>,
    pub case_id: Option<u32>,
    pub current_index: Option<usize>,
    #[serde(default = "default_history_len")]
    pub history_len: usize,
    pub synth: Option<SynthConfig>,
    /// Roster file; the built-in six-model roster when absent.
    pub roster: Option<PathBuf>,
    #[serde(default = "default_n_runs")]
    pub n_runs: usize,
    #[serde(default = "default_replan_interval")]
    pub replan_interval: usize,
    #[serde(default = "default_horizon_steps")]
    pub horizon_steps: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_pttc_b")]
    pub pttc_b: f64,
    #[serde(default = "default_wttc_a")]
    pub wttc_a: f64,
    #[serde(default = "default_bandwidth")]
    pub kde_bandwidth: f64,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Everything a run needs, loaded from disk or synthesized.
#[derive(Clone, Debug)]
pub struct Inputs<T> {
    pub map: Arc<MapGraph<T>>,
    pub seed: Arc<SeedScene<T>>,
    pub recorded: Option<Arc<RecordedCase<T>>>,
    pub roster: Arc<Roster<T>>,
}

impl RunConfig {
    pub fn parse(text: &str, base_dir: &FsPath) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &FsPath) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path.parent().unwrap_or(FsPath::new(".")))
    }

    pub fn resolve(&self, p: &FsPath) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        match (&self.tracks, &self.synth) {
            (Some(_), Some(_)) => return Err(invalid("tracks", "exactly one of `tracks` and `[synth]` may be given")),
            (None, None) => return Err(invalid("tracks", "one of `tracks` and `[synth]` is required")),
            (Some(_), None) => {
                if self.map.is_none() {
                    return Err(invalid("map", "required with `tracks`"));
                }
                if self.case_id.is_none() {
                    return Err(invalid("case_id", "required with `tracks`"));
                }
                if self.current_index.is_none() {
                    return Err(invalid("current_index", "required with `tracks`"));
                }
            }
            (None, Some(s)) => {
                for (field, present) in [
                    ("map", self.map.is_some()),
                    ("case_id", self.case_id.is_some()),
                    ("current_index", self.current_index.is_some()),
                ] {
                    if present {
                        return Err(invalid(field, "only valid with `tracks`; synthetic scenes build their own"));
                    }
                }
                s.template::<f64>()?;
            }
        }
        if self.history_len == 0 {
            return Err(invalid("history_len", "must be >= 1"));
        }
        if self.n_runs == 0 {
            return Err(invalid("n_runs", "must be >= 1"));
        }
        if self.horizon_steps == 0 {
            return Err(invalid("horizon_steps", "must be >= 1"));
        }
        if self.replan_interval == 0 || self.replan_interval > self.horizon_steps {
            return Err(invalid(
                "replan_interval",
                format!("must lie in 1..={}, got {}", self.horizon_steps, self.replan_interval),
            ));
        }
        for (field, v) in [("pttc_b", self.pttc_b), ("wttc_a", self.wttc_a), ("kde_bandwidth", self.kde_bandwidth)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be finite and > 0, got {v}")));
            }
        }
        if self.enumeration_cap == 0 {
            return Err(invalid("enumeration_cap", "must be >= 1"));
        }
        Ok(())
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            horizon_steps: self.horizon_steps,
            replan_interval: self.replan_interval,
            rng_seed: self.rng_seed,
        }
    }

    pub fn metric_params<T: Real>(&self) -> MetricParams<T> {
        let mut p = MetricParams::default();
        p.pttc_deceleration = T::lit(self.pttc_b);
        p.wttc_acceleration = T::lit(self.wttc_a);
        p
    }

    pub fn load_roster<T: Real>(&self) -> Result<Arc<Roster<T>>, ConfigError> {
        Ok(Arc::new(match &self.roster {
            Some(p) => load_roster(&self.resolve(p))?,
            None => Roster::default_six(),
        }))
    }

    pub fn load_inputs<T: Real>(&self) -> Result<Inputs<T>, ConfigError> {
        let roster = self.load_roster()?;
        if let Some(s) = &self.synth {
            let scene = synth_scene(&s.template()?, &s.options(self.history_len))?;
            return Ok(Inputs {
                map: scene.map,
                seed: Arc::new(scene.seed),
                recorded: Some(Arc::new(scene.recorded)),
                roster,
            });
        }
        let (Some(map_path), Some(tracks), Some(case_id), Some(current_index)) =
            (&self.map, &self.tracks, self.case_id, self.current_index)
        else {
            return Err(invalid("tracks", "incomplete recorded-case selection"));
        };
        let map = Arc::new(load_map(&self.resolve(map_path))?);
        let loaded = load_tracks(&self.resolve(tracks))?;
        let case = loaded
            .case(case_id)
            .ok_or_else(|| invalid("case_id", format!("case {case_id} not found in tracks file")))?;
        let seed = extract_seed(map.clone(), case_id, &case.frames, current_index, self.history_len)?;
        Ok(Inputs {
            map,
            seed: Arc::new(seed),
            recorded: Some(Arc::new(RecordedCase::new(case.frames.clone(), current_index))),
            roster,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SYNTH: &str = r#"
        schema_version = 1
        output_dir = "out"
        n_runs = 10
        [synth]
        template = "car_following"
        stream = { gaps = [30.0], speeds = [10.0, 9.0] }
    "#;

    fn field_of(text: &str) -> String {
        match RunConfig::parse(text, FsPath::new(".")) {
            Err(ConfigError::Invalid { field, .. }) => field,
            other => panic!("expected a field error, got {other:?}"),
        }
    }

    #[test]
    fn synth_config_loads() {
        let cfg = RunConfig::parse(SYNTH, FsPath::new("/tmp/x")).unwrap();
        assert_eq!(cfg.replan_interval, 5);
        assert_eq!(cfg.output_path(), PathBuf::from("/tmp/x/out"));
        let inputs = cfg.load_inputs::<f64>().unwrap();
        assert_eq!(inputs.seed.participants().len(), 2);
        assert_eq!(inputs.roster.len(), 6);
    }

    #[test]
    fn both_sources_rejected() {
        let text = format!("tracks = \"t.csv\"\n{SYNTH}");
        assert_eq!(field_of(&text), "tracks");
    }

    #[test]
    fn field_specific_errors() {
        let cases = [
            ("schema_version = 1", "schema_version = 2", "schema_version"),
            ("n_runs = 10", "n_runs = 0", "n_runs"),
            ("n_runs = 10", "n_runs = 10\nreplan_interval = 40", "replan_interval"),
            ("n_runs = 10", "n_runs = 10\nkde_bandwidth = 0.0", "kde_bandwidth"),
            ("n_runs = 10", "n_runs = 10\npttc_b = -1.0", "pttc_b"),
            ("n_runs = 10", "n_runs = 10\nmap = \"m.map\"", "map"),
            ("template = \"car_following\"", "template = \"merge\"", "synth.stream"),
        ];
        for (from, to, field) in cases {
            assert_eq!(field_of(&SYNTH.replace(from, to)), field, "{to}");
        }
        let no_source = "schema_version = 1\noutput_dir = \"o\"\n";
        assert_eq!(field_of(no_source), "tracks");
        let tracks = "schema_version = 1\noutput_dir = \"o\"\ntracks = \"t.csv\"\nmap = \"m\"\ncase_id = 1\n";
        assert_eq!(field_of(tracks), "current_index");
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            RunConfig::parse(&format!("{SYNTH}\nbogus = 1"), FsPath::new(".")),
            Err(ConfigError::Parse(_))
        ));
    }
}
