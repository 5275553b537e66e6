//! Deterministic synthetic city: restaurants with hidden safety states,
//! diners, meals, infections, search queries, complaints, inspections and
//! simulated relevance raters.
//!
//! Latent states and the [`GroundTruth`] never enter a [`Dataset`]; only the
//! simulator and the evaluator read them.
//!
//! [`Dataset`]: crate::logdata::Dataset

mod config;
mod inspect;
mod raters;
mod simulate;
mod vocab;
mod world;

use thiserror::Error;

pub use config::{CitySpec, SimConfig};
pub use inspect::simulate_inspection;
pub use raters::simulate_raters;
pub use simulate::{simulate, GroundTruth, Infection, MealTally, EPOCH_START};
pub use vocab::{background_results, confuser_results, symptom_results, PageFamily, Vocab};
pub use world::{generate_world, LatentState, SimRestaurant, SimUser, World};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("days ≥ 1 required, got {0}")]
    NoDays(u32),
    #[error("unknown restaurant {0:?}")]
    UnknownRestaurant(String),
}
