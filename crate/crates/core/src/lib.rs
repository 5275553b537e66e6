//! Foodborne-illness surveillance from search and location logs.
//!
//! The pipeline classifies search queries with a hashed log-linear model
//! trained from weak labels ([`wsm`]), joins positive queries to restaurant
//! visits inside an incubation window ([`locmodel`]), releases per-restaurant
//! counts under differential privacy ([`privacy`]) and ranks restaurants for
//! inspection. [`citysim`] generates a synthetic city with hidden ground truth
//! and [`stats`] holds the evaluation machinery (IRLS logistic regression,
//! adjusted means, chi-square). [`pipeline`] wires the stages together.

pub mod citysim;
pub mod locmodel;
pub mod logdata;
pub mod pipeline;
pub mod privacy;
pub mod seeding;
pub mod stats;
pub mod wsm;
