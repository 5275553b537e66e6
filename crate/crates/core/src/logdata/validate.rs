use std::fmt;

use super::types::{Dataset, Timestamp, MAX_RESULTS_PER_QUERY};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Queries,
    Visits,
    Restaurants,
    Inspections,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    NegativeTimestamp(Timestamp),
    TooManyResults(usize),
    DwellWithoutClick { result: usize, dwell_s: f64 },
    NegativeDwell { result: usize, dwell_s: f64 },
    EntryAfterExit { entry_ts: Timestamp, exit_ts: Timestamp },
    NegativeCount { field: &'static str, value: i64 },
}

/// One invariant violation, located by stream and record index.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub stream: Stream,
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}[{}]: {:?}", self.stream, self.index, self.kind)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub query_count: usize,
    pub visit_count: usize,
    pub restaurant_count: usize,
    pub inspection_count: usize,
    pub query_ts_range: Option<(Timestamp, Timestamp)>,
    pub visit_ts_range: Option<(Timestamp, Timestamp)>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn range(it: impl Iterator<Item = Timestamp>) -> Option<(Timestamp, Timestamp)> {
    it.fold(None, |acc, t| match acc {
        None => Some((t, t)),
        Some((lo, hi)) => Some((lo.min(t), hi.max(t))),
    })
}

/// Enumerates every record-level invariant violation. Never fails.
pub fn validate_dataset(d: &Dataset) -> ValidationReport {
    let mut violations = Vec::new();
    let mut push = |stream, index, kind| violations.push(Violation { stream, index, kind });

    for (i, q) in d.queries.iter().enumerate() {
        if q.ts < 0 {
            push(Stream::Queries, i, ViolationKind::NegativeTimestamp(q.ts));
        }
        if q.results.len() > MAX_RESULTS_PER_QUERY {
            push(Stream::Queries, i, ViolationKind::TooManyResults(q.results.len()));
        }
        for (r, page) in q.results.iter().enumerate() {
            if page.dwell_s < 0.0 || page.dwell_s.is_nan() {
                push(Stream::Queries, i, ViolationKind::NegativeDwell { result: r, dwell_s: page.dwell_s });
            } else if !page.clicked && page.dwell_s != 0.0 {
                push(Stream::Queries, i, ViolationKind::DwellWithoutClick { result: r, dwell_s: page.dwell_s });
            }
        }
    }
    for (i, v) in d.visits.iter().enumerate() {
        if v.entry_ts < 0 {
            push(Stream::Visits, i, ViolationKind::NegativeTimestamp(v.entry_ts));
        }
        if v.entry_ts > v.exit_ts {
            push(Stream::Visits, i, ViolationKind::EntryAfterExit { entry_ts: v.entry_ts, exit_ts: v.exit_ts });
        }
    }
    for (i, ins) in d.inspections.iter().enumerate() {
        if ins.critical_count < 0 {
            push(
                Stream::Inspections,
                i,
                ViolationKind::NegativeCount { field: "critical_count", value: ins.critical_count },
            );
        }
        if ins.major_count < 0 {
            push(Stream::Inspections, i, ViolationKind::NegativeCount { field: "major_count", value: ins.major_count });
        }
    }

    ValidationReport {
        query_count: d.queries.len(),
        visit_count: d.visits.len(),
        restaurant_count: d.restaurants.len(),
        inspection_count: d.inspections.len(),
        query_ts_range: range(d.queries.iter().map(|q| q.ts)),
        visit_ts_range: range(d.visits.iter().flat_map(|v| [v.entry_ts, v.exit_ts])),
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logdata::{InspectionRecord, Outcome, QueryEvent, ResultPage, Trigger, UserId, VisitEvent};
    use rand::{Rng, SeedableRng};

    fn visit(entry: i64, exit: i64) -> VisitEvent {
        VisitEvent { user_id: UserId(1), restaurant_id: "r".into(), entry_ts: entry, exit_ts: exit }
    }

    fn page(clicked: bool, dwell_s: f64) -> ResultPage {
        ResultPage {
            url: "u".into(),
            title: "t".into(),
            snippet: "s".into(),
            concept_tags: Default::default(),
            clicked,
            dwell_s,
        }
    }

    #[test]
    fn clean_dataset_has_no_violations() {
        let d = Dataset {
            visits: vec![visit(5, 10), visit(10, 10)],
            queries: vec![QueryEvent {
                user_id: UserId(1),
                ts: 3,
                text: String::new(),
                results: vec![page(true, 12.0), page(false, 0.0)],
            }],
            ..Default::default()
        };
        let report = validate_dataset(&d);
        assert!(report.is_clean());
        assert_eq!(report.visit_ts_range, Some((5, 10)));
        assert_eq!(report.query_ts_range, Some((3, 3)));
    }

    #[test]
    fn entry_one_second_after_exit_is_one_violation() {
        let d = Dataset { visits: vec![visit(11, 10)], ..Default::default() };
        let report = validate_dataset(&d);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::EntryAfterExit { entry_ts: 11, exit_ts: 10 });
    }

    #[test]
    fn seeded_violations_are_all_reported() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let mut d = Dataset::default();
            let mut planted = 0;
            for i in 0..200 {
                match rng.random_range(0..6) {
                    0 => {
                        d.visits.push(visit(i + 1, i));
                        planted += 1;
                    }
                    1 => {
                        d.queries.push(QueryEvent {
                            user_id: UserId(2),
                            ts: i,
                            text: "x".into(),
                            results: vec![page(false, 3.0)],
                        });
                        planted += 1;
                    }
                    2 => {
                        d.inspections.push(InspectionRecord {
                            restaurant_id: "r".into(),
                            date: chrono::NaiveDate::from_ymd_opt(2016, 1, 1).unwrap(),
                            trigger: Trigger::Routine,
                            outcome: Outcome::Safe,
                            critical_count: -1,
                            major_count: 0,
                        });
                        planted += 1;
                    }
                    _ => d.visits.push(visit(i, i + 5)),
                }
            }
            assert_eq!(validate_dataset(&d).violations.len(), planted);
        }
    }
}
