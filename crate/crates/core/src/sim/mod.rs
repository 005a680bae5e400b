//! Closed-loop child-scenario simulation.
//!
//! A child-scenario starts from a seed-scene, gives every participant a
//! behavior model and then alternates between planning (all models see the
//! same frozen world) and execution (each participant follows its cached
//! trajectory for `replan_interval` steps).

mod runner;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::behavior::{ModelError, ModelSpec, Roster};
use crate::scalar::Real;
use crate::scene::{SceneError, SeedScene, TrackId};

pub use runner::{Agent, BatchResult, ChildFailure, Simulator};

/// Children per batch when the caller does not choose.
pub const DEFAULT_N_RUNS: usize = 385;
/// Upper bound on exhaustive enumerations.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SimConfig {
    /// Frames produced per child.
    pub horizon_steps: usize,
    /// Steps between replanning rounds.
    pub replan_interval: usize,
    pub rng_seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            horizon_steps: 30,
            replan_interval: 5,
            rng_seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.horizon_steps == 0 {
            return Err(SimError::InvalidConfig("horizon_steps must be >= 1".into()));
        }
        if self.replan_interval == 0 || self.replan_interval > self.horizon_steps {
            return Err(SimError::InvalidConfig(format!(
                "replan_interval must lie in 1..={}, got {}",
                self.horizon_steps, self.replan_interval
            )));
        }
        Ok(())
    }

    /// Seed of child `index` in a batch.
    pub fn child_seed(&self, index: usize) -> u64 {
        self.rng_seed ^ index as u64
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("track {track} has no model assigned")]
    Unassigned { track: TrackId },
    #[error("model `{model}` failed for track {track} at step {step}: {source}")]
    Model {
        track: TrackId,
        step: usize,
        model: String,
        #[source]
        source: ModelError,
    },
    #[error("replay models need a recorded case")]
    MissingRecording,
    #[error(
        "enumerating {participants} participants x {models} models needs {} runs, above the cap of {cap}; \
         use `simulate` to sample assignments instead",
        .count.map_or_else(|| "more than 2^64".to_owned(), |c| c.to_string())
    )]
    EnumerationCap {
        participants: usize,
        models: usize,
        /// `None` when the count does not fit in 64 bits.
        count: Option<u64>,
        cap: u64,
    },
    #[error("invalid scenario log: {0}")]
    Log(#[from] SceneError),
    #[error("all {count} child-scenarios failed; first failure: {first}")]
    AllFailed { count: usize, first: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AssignmentOrigin {
    Sampled { run_seed: u64 },
    Enumerated { index: u64 },
}

/// Model choice for every participant, as indices into a roster.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment<T> {
    pub mapping: BTreeMap<TrackId, usize>,
    pub roster: Arc<Roster<T>>,
    pub origin: AssignmentOrigin,
}

impl<T: Real> Assignment<T> {
    /// Assigns roster entry `index` to every participant.
    pub fn uniform(seed: &SeedScene<T>, roster: Arc<Roster<T>>, index: usize) -> Self {
        Self {
            mapping: seed.participants().into_iter().map(|id| (id, index)).collect(),
            roster,
            origin: AssignmentOrigin::Enumerated { index: 0 },
        }
    }

    pub fn spec(&self, id: TrackId) -> Option<&ModelSpec<T>> {
        self.mapping.get(&id).and_then(|i| self.roster.get(*i))
    }

    /// `(track, model name)` pairs in track order.
    pub fn model_names(&self) -> Vec<(TrackId, &str)> {
        self.mapping
            .iter()
            .map(|(id, i)| (*id, self.roster.get(*i).map_or("?", |m| m.name.as_str())))
            .collect()
    }
}

/// Random stream of one participant: ChaCha8 keyed by the run seed, with the
/// track id selecting the stream, so draws do not depend on iteration order.
fn participant_rng(run_seed: u64, track: TrackId) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(u64::from(track.0));
    rng
}

/// Draws a model for every participant according to the roster weights.
pub fn assign_models<T: Real>(seed: &SeedScene<T>, roster: Arc<Roster<T>>, run_seed: u64) -> Assignment<T> {
    let weights: Vec<f64> = roster.weights().iter().map(|w| w.as_f64()).collect();
    let dist = WeightedIndex::new(&weights).expect("roster weights validated > 0");
    let mapping = seed
        .participants()
        .into_iter()
        .map(|id| (id, dist.sample(&mut participant_rng(run_seed, id))))
        .collect();
    Assignment {
        mapping,
        roster,
        origin: AssignmentOrigin::Sampled { run_seed },
    }
}

/// Number of exhaustive assignments, or the cap error.
pub fn enumeration_count(participants: usize, models: usize, cap: u64) -> Result<u64, SimError> {
    let count = u32::try_from(participants)
        .ok()
        .and_then(|n| (models as u64).checked_pow(n));
    match count {
        Some(c) if c <= cap => Ok(c),
        _ => Err(SimError::EnumerationCap {
            participants,
            models,
            count,
            cap,
        }),
    }
}

/// Assignment number `index` of the mixed-radix enumeration: participants
/// sorted by track id, the first one being the most significant digit.
pub fn nth_assignment<T: Real>(seed: &SeedScene<T>, roster: Arc<Roster<T>>, index: u64) -> Assignment<T> {
    let ids = seed.participants();
    let m = roster.len() as u64;
    let mut rest = index;
    let mut digits = vec![0usize; ids.len()];
    for d in digits.iter_mut().rev() {
        *d = (rest % m) as usize;
        rest /= m;
    }
    Assignment {
        mapping: ids.into_iter().zip(digits).collect(),
        roster,
        origin: AssignmentOrigin::Enumerated { index },
    }
}

/// All `|roster|^n` assignments in lexicographic order.
pub fn enumerate_assignments<T: Real>(
    seed: &SeedScene<T>,
    roster: Arc<Roster<T>>,
    cap: u64,
) -> Result<impl Iterator<Item = Assignment<T>> + '_, SimError> {
    let count = enumeration_count(seed.participants().len(), roster.len(), cap)?;
    Ok((0..count).map(move |i| nth_assignment(seed, roster.clone(), i)))
}
