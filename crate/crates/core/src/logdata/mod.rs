//! Data model and file ingestion for query logs, visit logs, the restaurant
//! registry and inspection records.
//!
//! All timestamps are integer UTC seconds. Streams are sorted at load time
//! (queries by `ts`, visits by `exit_ts`, inspections by `date`) with a
//! stable sort, so downstream joins may assume order.

mod io;
mod types;
mod validate;

use thiserror::Error;

pub use io::{
    check_references, load_dataset, read_csv, read_queries, write_csv, write_dataset, write_queries, DatasetPaths,
    INSPECTION_FILE, INSPECTION_HEADER, QUERY_FILE, REGISTRY_FILE, REGISTRY_HEADER, VISIT_FILE, VISIT_HEADER,
};
pub use types::{
    date_of, day_start, City, Dataset, InspectionRecord, Outcome, QueryEvent, RestaurantRecord, ResultPage, RiskLevel,
    Timestamp, Trigger, UserId, VisitEvent, MAX_RESULTS_PER_QUERY, SECONDS_PER_DAY,
};
pub use validate::{validate_dataset, Stream, ValidationReport, Violation, ViolationKind};

#[derive(Debug, Error)]
pub enum LogDataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("visits or inspections reference unknown restaurants: {}", .0.join(", "))]
    DanglingRestaurants(Vec<String>),
    #[error("duplicate restaurant_id {0:?} in registry")]
    DuplicateRestaurant(String),
    #[error("dataset has {} invariant violation(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

/// Validates and refuses to proceed on any violation.
pub fn ensure_valid(d: &Dataset) -> Result<ValidationReport, LogDataError> {
    let report = validate_dataset(d);
    if report.is_clean() {
        Ok(report)
    } else {
        Err(LogDataError::Invalid(report.violations))
    }
}
