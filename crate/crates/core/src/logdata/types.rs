use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Opaque 128-bit user identifier, rendered as 32 lowercase hex digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u128);

impl UserId {
    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }

    pub fn to_bytes(self) -> [u8; 16] {
        self.0.to_be_bytes()
    }
}

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl FromStr for UserId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() || s.len() > 32 {
            return Err(format!("user_id {s:?} is not 1-32 hex digits"));
        }
        u128::from_str_radix(s, 16).map(UserId).map_err(|_| format!("user_id {s:?} is not hexadecimal"))
    }
}

impl Serialize for UserId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for UserId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Timestamps are integer UTC seconds.
pub type Timestamp = i64;

pub const SECONDS_PER_DAY: i64 = 86_400;

/// Calendar date of a UTC timestamp.
pub fn date_of(ts: Timestamp) -> NaiveDate {
    chrono::DateTime::from_timestamp(ts.div_euclid(SECONDS_PER_DAY) * SECONDS_PER_DAY, 0)
        .expect("timestamp in chrono range")
        .date_naive()
}

/// UTC midnight at the start of `date`.
pub fn day_start(date: NaiveDate) -> Timestamp {
    date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc().timestamp()
}

/// One search-result page shown for a query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultPage {
    pub url: String,
    pub title: String,
    pub snippet: String,
    pub concept_tags: BTreeSet<String>,
    pub clicked: bool,
    pub dwell_s: f64,
}

impl ResultPage {
    pub fn has_tag(&self, tag: &str) -> bool {
        self.concept_tags.contains(tag)
    }
}

/// One anonymized search event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryEvent {
    pub user_id: UserId,
    pub ts: Timestamp,
    pub text: String,
    pub results: Vec<ResultPage>,
}

pub const MAX_RESULTS_PER_QUERY: usize = 10;

/// One restaurant visit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisitEvent {
    pub user_id: UserId,
    pub restaurant_id: String,
    pub entry_ts: Timestamp,
    pub exit_ts: Timestamp,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct City(pub String);

impl fmt::Display for City {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A-priori establishment risk classification. Ordered High, Medium, Low.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RiskLevel {
    High,
    Medium,
    Low,
}

impl RiskLevel {
    pub const ALL: [RiskLevel; 3] = [RiskLevel::High, RiskLevel::Medium, RiskLevel::Low];

    pub fn as_str(self) -> &'static str {
        match self {
            RiskLevel::High => "high",
            RiskLevel::Medium => "medium",
            RiskLevel::Low => "low",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for RiskLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RiskLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "high" => Ok(RiskLevel::High),
            "medium" => Ok(RiskLevel::Medium),
            "low" => Ok(RiskLevel::Low),
            other => Err(format!("unknown risk_level {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestaurantRecord {
    pub restaurant_id: String,
    pub city: City,
    pub risk_level: RiskLevel,
}

/// What prompted an inspection.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Trigger {
    Finder,
    Routine,
    Complaint,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::Finder => "FINDER",
            Trigger::Routine => "ROUTINE",
            Trigger::Complaint => "COMPLAINT",
        }
    }
}

impl fmt::Display for Trigger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Trigger {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FINDER" => Ok(Trigger::Finder),
            "ROUTINE" => Ok(Trigger::Routine),
            "COMPLAINT" => Ok(Trigger::Complaint),
            other => Err(format!("unknown trigger {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Outcome {
    Safe,
    Unsafe,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Safe => "Safe",
            Outcome::Unsafe => "Unsafe",
        }
    }

    pub fn is_unsafe(self) -> bool {
        self == Outcome::Unsafe
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "safe" => Ok(Outcome::Safe),
            "unsafe" => Ok(Outcome::Unsafe),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

macro_rules! string_serde {
    ($ty:ty) => {
        impl Serialize for $ty {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $ty {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(RiskLevel);
string_serde!(Trigger);
string_serde!(Outcome);

/// Counts are signed so that corrupt inputs can be reported by validation
/// rather than rejected by the parser.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InspectionRecord {
    pub restaurant_id: String,
    pub date: NaiveDate,
    pub trigger: Trigger,
    pub outcome: Outcome,
    pub critical_count: i64,
    pub major_count: i64,
}

/// The four input streams, each sorted ascending by time.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub queries: Vec<QueryEvent>,
    pub visits: Vec<VisitEvent>,
    pub restaurants: Vec<RestaurantRecord>,
    pub inspections: Vec<InspectionRecord>,
}

impl Dataset {
    /// Restores the load-time ordering contract after in-memory edits.
    pub fn sort_streams(&mut self) {
        self.queries.sort_by_key(|q| q.ts);
        self.visits.sort_by_key(|v| v.exit_ts);
        self.inspections.sort_by_key(|i| i.date);
    }

    pub fn restaurant(&self, id: &str) -> Option<&RestaurantRecord> {
        self.restaurants.iter().find(|r| r.restaurant_id == id)
    }

    pub fn registry(&self) -> std::collections::HashMap<&str, &RestaurantRecord> {
        self.restaurants.iter().map(|r| (r.restaurant_id.as_str(), r)).collect()
    }
}
