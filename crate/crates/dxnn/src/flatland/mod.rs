//! Flatland: a 2D artificial-life environment where evolving robot brains
//! forage, avoid poison, and hunt each other.

pub mod scenario;
pub mod world;

pub use scenario::{
    run_scenario, FlatlandConfig, FlatlandError, Scenario, ScenarioResult, SpeciesSummary,
    TraceRow, ALIFE_AF_TAGS,
};
pub use world::{Body, Item, ItemKind, Species};
