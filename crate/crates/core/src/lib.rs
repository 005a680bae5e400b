//! Seed-scene extrapolation.
//!
//! A recorded seed-scene is rolled forward by closed-loop multi-agent
//! simulation under many assignments of behavior models. Each child scenario
//! is scored with pairwise criticality metrics, and the resulting metric
//! tables are summarized by kernel density estimates.
//!
//! The core is generic over the scalar type; the aliases below fix it to
//! `f64` (the default) or `f32`.

// `!(x > 0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod behavior;
pub mod config;
pub mod geometry;
pub mod map;
pub mod metrics;
pub mod scalar;
pub mod scene;
pub mod sim;

pub use scalar::Real;

pub type MapGraphF64 = map::MapGraph<f64>;
pub type PathF64 = map::Path<f64>;
pub type SeedSceneF64 = scene::SeedScene<f64>;
pub type ScenarioLogF64 = scene::ScenarioLog<f64>;
pub type RecordedCaseF64 = scene::RecordedCase<f64>;
pub type RosterF64 = behavior::Roster<f64>;
pub type SimulatorF64 = sim::Simulator<f64>;
pub type MetricVectorF64 = metrics::MetricVector<f64>;
pub type MetricTableF64 = metrics::MetricTable<f64>;
pub type DensityEstimateF64 = analysis::DensityEstimate<f64>;

pub type MapGraphF32 = map::MapGraph<f32>;
pub type PathF32 = map::Path<f32>;
pub type SeedSceneF32 = scene::SeedScene<f32>;
pub type ScenarioLogF32 = scene::ScenarioLog<f32>;
pub type RecordedCaseF32 = scene::RecordedCase<f32>;
pub type RosterF32 = behavior::Roster<f32>;
pub type SimulatorF32 = sim::Simulator<f32>;
pub type MetricVectorF32 = metrics::MetricVector<f32>;
pub type MetricTableF32 = metrics::MetricTable<f32>;
pub type DensityEstimateF32 = analysis::DensityEstimate<f32>;
