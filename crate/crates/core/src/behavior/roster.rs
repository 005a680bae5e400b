//! Roster files: the list of behavior models a run samples from.
//!
//! ```toml
//! [[model]]
//! name = "standard"
//! kind = "standard"
//! weight = 1.0
//! route = "straightest"      # or { index = 2 }
//! v0 = 13.9                  # optional IDM overrides: a_max, b, time_headway, s0, delta, v0
//!
//! [[model]]
//! name = "brake"
//! kind = "emergency_brake"
//! deceleration = 5.0
//! ```

use std::collections::BTreeSet;
use std::path::Path as FsPath;

use serde::Deserialize;
use thiserror::Error;

use crate::map::RouteSelector;
use crate::scalar::Real;

use super::{IdmSettings, ModelKind, ModelParams, ModelSpec};

#[derive(Debug, Error)]
pub enum RosterError {
    #[error("cannot read roster: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed roster: {0}")]
    Parse(String),
    #[error("roster is empty")]
    Empty,
    #[error("duplicate model name `{0}`")]
    DuplicateName(String),
    #[error("model `{name}`: {reason}")]
    Invalid { name: String, reason: String },
}

/// Non-empty list of models with unique names.
#[derive(Clone, Debug, PartialEq)]
pub struct Roster<T> {
    models: Vec<ModelSpec<T>>,
}

impl<T: Real> Roster<T> {
    pub fn new(models: Vec<ModelSpec<T>>) -> Result<Self, RosterError> {
        if models.is_empty() {
            return Err(RosterError::Empty);
        }
        let mut names = BTreeSet::new();
        for m in &models {
            if !names.insert(m.name.as_str()) {
                return Err(RosterError::DuplicateName(m.name.clone()));
            }
            m.validate().map_err(|e| RosterError::Invalid {
                name: m.name.clone(),
                reason: e.to_string(),
            })?;
        }
        Ok(Self { models })
    }

    /// The four rule-based models plus two replay entries standing in for
    /// the learned predictors, all with equal weight.
    pub fn default_six() -> Self {
        Self::new(vec![
            ModelSpec::standard(),
            ModelSpec::risky(),
            ModelSpec::constant_velocity(),
            ModelSpec::emergency_brake(),
            ModelSpec::replay("graph_predictor"),
            ModelSpec::replay("graph_image_predictor"),
        ])
        .expect("built-in roster is valid")
    }

    /// A single replay model, used for ground-truth runs.
    pub fn ground_truth() -> Self {
        Self::new(vec![ModelSpec::replay("ground_truth")]).expect("built-in roster is valid")
    }

    pub fn models(&self) -> &[ModelSpec<T>] {
        &self.models
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<&ModelSpec<T>> {
        self.models.get(index)
    }

    pub fn weights(&self) -> Vec<T> {
        self.models.iter().map(|m| m.weight).collect()
    }

    pub fn needs_recording(&self) -> bool {
        self.models.iter().any(|m| !m.is_path_following())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RosterFile {
    model: Vec<ModelEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelEntry {
    name: Option<String>,
    kind: ModelKind,
    #[serde(default = "one")]
    weight: f64,
    #[serde(default)]
    route: RouteSelector,
    a_max: Option<f64>,
    b: Option<f64>,
    time_headway: Option<f64>,
    s0: Option<f64>,
    delta: Option<f64>,
    v0: Option<f64>,
    deceleration: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl ModelEntry {
    fn has_idm_fields(&self) -> bool {
        [self.a_max, self.b, self.time_headway, self.s0, self.delta, self.v0]
            .iter()
            .any(Option::is_some)
    }

    fn into_spec<T: Real>(self) -> Result<ModelSpec<T>, RosterError> {
        let name = self.name.clone().unwrap_or_else(|| self.kind.as_str().to_owned());
        let invalid = |reason: &str| RosterError::Invalid {
            name: name.clone(),
            reason: reason.to_owned(),
        };
        let lit = |x: Option<f64>, d: T| x.map(T::lit).unwrap_or(d);
        let params = match self.kind {
            ModelKind::Standard | ModelKind::Risky => {
                if self.deceleration.is_some() {
                    return Err(invalid("`deceleration` only applies to emergency_brake"));
                }
                let base = if self.kind == ModelKind::Standard {
                    IdmSettings::standard()
                } else {
                    IdmSettings::risky()
                };
                ModelParams::Idm(IdmSettings {
                    a_max: lit(self.a_max, base.a_max),
                    b: lit(self.b, base.b),
                    time_headway: lit(self.time_headway, base.time_headway),
                    s0: lit(self.s0, base.s0),
                    delta: lit(self.delta, base.delta),
                    v0: self.v0.map(T::lit),
                })
            }
            other => {
                if self.has_idm_fields() {
                    return Err(invalid("IDM parameters only apply to standard and risky"));
                }
                match other {
                    ModelKind::EmergencyBrake => ModelParams::EmergencyBrake {
                        deceleration: lit(self.deceleration, T::lit(super::EMERGENCY_DECELERATION)),
                    },
                    _ if self.deceleration.is_some() => {
                        return Err(invalid("`deceleration` only applies to emergency_brake"))
                    }
                    ModelKind::ConstantVelocity => ModelParams::ConstantVelocity,
                    _ => ModelParams::Replay,
                }
            }
        };
        Ok(ModelSpec {
            name,
            kind: self.kind,
            params,
            route_selector: self.route,
            weight: T::lit(self.weight),
        })
    }
}

pub fn parse_roster<T: Real>(text: &str) -> Result<Roster<T>, RosterError> {
    let file: RosterFile = toml::from_str(text).map_err(|e| RosterError::Parse(e.to_string()))?;
    let models = file
        .model
        .into_iter()
        .map(ModelEntry::into_spec)
        .collect::<Result<Vec<_>, _>>()?;
    Roster::new(models)
}

pub fn load_roster<T: Real>(path: &FsPath) -> Result<Roster<T>, RosterError> {
    parse_roster(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roster_has_six_unit_weights() {
        let r = Roster::<f64>::default_six();
        assert_eq!(r.len(), 6);
        assert!(r.weights().iter().all(|w| *w == 1.0));
        assert!(r.needs_recording());
    }

    #[test]
    fn parses_overrides_and_selectors() {
        let r: Roster<f64> = parse_roster(
            r#"
            [[model]]
            kind = "standard"
            v0 = 12.5
            route = { index = 1 }

            [[model]]
            name = "soft_brake"
            kind = "emergency_brake"
            deceleration = 3.0
            weight = 2.0
            "#,
        )
        .unwrap();
        let m = &r.models()[0];
        assert_eq!(m.name, "standard");
        assert_eq!(m.route_selector, RouteSelector::Index(1));
        match m.params {
            ModelParams::Idm(s) => {
                assert_eq!(s.v0, Some(12.5));
                assert_eq!(s.b, 3.0);
            }
            _ => panic!("expected IDM params"),
        }
        let m = &r.models()[1];
        assert_eq!(m.params, ModelParams::EmergencyBrake { deceleration: 3.0 });
        assert_eq!(m.weight, 2.0);
    }

    #[test]
    fn rejects_bad_rosters() {
        assert!(matches!(parse_roster::<f64>("model = []"), Err(RosterError::Empty)));
        let dup = "[[model]]\nkind = \"risky\"\n[[model]]\nkind = \"risky\"\n";
        assert!(matches!(parse_roster::<f64>(dup), Err(RosterError::DuplicateName(_))));
        let mixed = "[[model]]\nkind = \"constant_velocity\"\ns0 = 3.0\n";
        assert!(matches!(parse_roster::<f64>(mixed), Err(RosterError::Invalid { .. })));
        let neg = "[[model]]\nkind = \"standard\"\nweight = -1.0\n";
        assert!(matches!(parse_roster::<f64>(neg), Err(RosterError::Invalid { .. })));
        let unknown = "[[model]]\nkind = \"teleport\"\n";
        assert!(matches!(parse_roster::<f64>(unknown), Err(RosterError::Parse(_))));
    }
}
