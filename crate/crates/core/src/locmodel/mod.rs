//! Location model: joins positive queries to earlier restaurant visits,
//! aggregates affected-visitor proportions per restaurant, ranks the
//! restaurants and attributes each affected user to a likely source.

mod aggregate;
mod attribution;
mod link;
mod rank;

use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::logdata::{read_csv, write_csv, City, LogDataError, RiskLevel};

pub use aggregate::{
    aggregate_restaurants, wilson_lower_bound, Period, RestaurantAggregate, RestaurantSets, Z_ONE_SIDED_95,
};
pub use attribution::{attribute_sources, AttributionHistogram, SourceAttribution, HISTOGRAM_LABELS};
pub use link::{
    first_positive_queries, link_exposures, ExposureLink, LinkConfig, ScoredQuery, DEFAULT_P_STAR, DEFAULT_WINDOW_S,
};
pub use rank::{rank_order, rank_restaurants, RankEntry, DEFAULT_MIN_VISITORS};

pub const DAILY_LIST_HEADER: [&str; 8] =
    ["date", "restaurant_id", "city", "risk_level", "visitors", "affected", "proportion", "signal"];
pub const HISTOGRAM_HEADER: [&str; 2] = ["rank", "fraction"];

/// One line of a daily inspection list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyListRow {
    pub date: NaiveDate,
    pub restaurant_id: String,
    pub city: City,
    pub risk_level: RiskLevel,
    pub visitors: f64,
    pub affected: f64,
    pub proportion: f64,
    pub signal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub rank: String,
    pub fraction: f64,
}

pub fn write_daily_list(path: &Path, rows: &[DailyListRow]) -> Result<(), LogDataError> {
    write_csv(path, &DAILY_LIST_HEADER, rows)
}

pub fn read_daily_list(path: &Path) -> Result<Vec<DailyListRow>, LogDataError> {
    read_csv(path, &DAILY_LIST_HEADER)
}

pub fn histogram_rows(h: &AttributionHistogram) -> Vec<HistogramRow> {
    HISTOGRAM_LABELS
        .iter()
        .zip(h.fractions())
        .map(|(l, f)| HistogramRow { rank: (*l).to_string(), fraction: f })
        .collect()
}

pub fn write_histogram(path: &Path, h: &AttributionHistogram) -> Result<(), LogDataError> {
    write_csv(path, &HISTOGRAM_HEADER, &histogram_rows(h))
}

pub fn read_histogram(path: &Path) -> Result<Vec<HistogramRow>, LogDataError> {
    read_csv(path, &HISTOGRAM_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn daily_list_and_histogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![DailyListRow {
            date: NaiveDate::from_ymd_opt(2016, 6, 2).unwrap(),
            restaurant_id: "r7".into(),
            city: City("springfield".into()),
            risk_level: RiskLevel::Medium,
            visitors: 41.25,
            affected: 3.5,
            proportion: 3.5 / 41.25,
            signal: 0.031,
        }];
        let p = dir.path().join("list.csv");
        write_daily_list(&p, &rows).unwrap();
        assert_eq!(read_daily_list(&p).unwrap(), rows);
        let body = std::fs::read_to_string(&p).unwrap();
        assert!(body.starts_with("date,restaurant_id,city,risk_level,visitors,affected,proportion,signal\n"));

        let mut h = AttributionHistogram::default();
        for r in [1, 1, 2, 7] {
            h.add(r);
        }
        let p = dir.path().join("hist.csv");
        write_histogram(&p, &h).unwrap();
        let back = read_histogram(&p).unwrap();
        assert_eq!(back.iter().map(|r| r.rank.as_str()).collect::<Vec<_>>(), vec!["1", "2", "3", "4+"]);
        assert_eq!(back.iter().map(|r| r.fraction).collect::<Vec<_>>(), vec![0.5, 0.25, 0.0, 0.25]);
    }
}
