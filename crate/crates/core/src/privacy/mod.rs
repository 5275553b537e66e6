//! Pseudonymous user ids, per-user contribution capping, Laplace release of
//! per-restaurant counts and small-count suppression.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use chrono::NaiveDate;
use hmac::{Hmac, Mac};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::locmodel::{wilson_lower_bound, ExposureLink, RankEntry, RestaurantAggregate};
use crate::logdata::{read_csv, write_csv, City, Dataset, LogDataError, RiskLevel, UserId};

/// Each user changes any released count by at most this much after capping.
pub const SENSITIVITY: f64 = 1.0;
pub const DEFAULT_EPSILON: f64 = 1.0;
pub const DEFAULT_SUPPRESS_BELOW: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrivacyError {
    #[error("hash key must be non-zero")]
    ZeroKey,
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyPolicy {
    /// Budget per released count.
    pub epsilon: f64,
    pub suppress_below: f64,
    pub hash_key: [u8; 16],
}

impl PrivacyPolicy {
    pub fn new(epsilon: f64, suppress_below: f64, hash_key: [u8; 16]) -> Result<Self, PrivacyError> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(PrivacyError::BadEpsilon(epsilon));
        }
        if hash_key == [0; 16] {
            return Err(PrivacyError::ZeroKey);
        }
        Ok(PrivacyPolicy { epsilon, suppress_below, hash_key })
    }

    pub fn scale(&self) -> f64 {
        SENSITIVITY / self.epsilon
    }
}

/// HMAC-SHA256 of the id's 16 big-endian bytes, truncated to 128 bits.
pub fn pseudonym(key: &[u8; 16], user: UserId) -> UserId {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(&user.to_bytes());
    let tag = mac.finalize().into_bytes();
    let mut out = [0u8; 16];
    out.copy_from_slice(&tag[..16]);
    UserId(u128::from_be_bytes(out))
}

/// Replaces every user id in the query and visit streams with its keyed
/// pseudonym.
pub fn anonymize_ids(dataset: &Dataset, key: &[u8; 16]) -> Result<Dataset, PrivacyError> {
    if *key == [0; 16] {
        return Err(PrivacyError::ZeroKey);
    }
    let mut cache: HashMap<UserId, UserId> = HashMap::new();
    let mut map = |u: UserId| *cache.entry(u).or_insert_with(|| pseudonym(key, u));
    let mut out = dataset.clone();
    for q in &mut out.queries {
        q.user_id = map(q.user_id);
    }
    for v in &mut out.visits {
        v.user_id = map(v.user_id);
    }
    Ok(out)
}

/// Keeps one link per (user, restaurant): the one with the earliest visit
/// (first in input order on equal exit times). Input order is otherwise
/// preserved.
pub fn cap_contributions(links: &[ExposureLink]) -> Vec<ExposureLink> {
    let mut earliest: HashMap<(UserId, &str), usize> = HashMap::new();
    for (i, l) in links.iter().enumerate() {
        earliest
            .entry((l.user_id, l.restaurant_id.as_str()))
            .and_modify(|j| {
                if l.visit_exit_ts < links[*j].visit_exit_ts {
                    *j = i;
                }
            })
            .or_insert(i);
    }
    let keep: HashSet<usize> = earliest.into_values().collect();
    links.iter().enumerate().filter(|(i, _)| keep.contains(i)).map(|(_, l)| l.clone()).collect()
}

/// Laplace(0, scale) by inverse CDF.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    // u in (-1/2, 1/2); the open lower end keeps the logarithm finite.
    let u: f64 = loop {
        let u = rng.random::<f64>() - 0.5;
        if u > -0.5 {
            break u;
        }
    };
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// Generator for one restaurant's noise, keyed by (seed, restaurant id) so
/// any processing order yields the same draws.
pub fn restaurant_rng(seed: u64, restaurant_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(restaurant_id.as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReleasedAggregate {
    pub restaurant_id: String,
    /// `None` when suppressed.
    pub noised_visitors: Option<f64>,
    pub noised_affected: Option<f64>,
    pub released_proportion: Option<f64>,
}

impl ReleasedAggregate {
    pub fn suppressed(&self) -> bool {
        self.noised_visitors.is_none()
    }

    /// Ranking input computed from released values only.
    pub fn rank_entry(&self) -> Option<RankEntry> {
        let (v, a, p) = (self.noised_visitors?, self.noised_affected?, self.released_proportion?);
        Some(RankEntry {
            restaurant_id: self.restaurant_id.clone(),
            visitors: v,
            affected: a,
            proportion: p,
            signal: wilson_lower_bound(a.clamp(0.0, v.max(0.0)), v),
        })
    }
}

/// Adds independent Laplace(Δ/ε) noise to each restaurant's visitor and
/// affected counts, suppresses records whose noised visitor count falls
/// below the threshold and derives the clamped proportion otherwise.
pub fn release(
    aggregates: &BTreeMap<String, RestaurantAggregate>,
    policy: &PrivacyPolicy,
    seed: u64,
) -> Vec<ReleasedAggregate> {
    let scale = policy.scale();
    aggregates
        .values()
        .map(|a| {
            let mut rng = restaurant_rng(seed, &a.restaurant_id);
            let visitors = a.visitors as f64 + sample_laplace(&mut rng, scale);
            let affected = a.affected as f64 + sample_laplace(&mut rng, scale);
            if visitors < policy.suppress_below {
                ReleasedAggregate {
                    restaurant_id: a.restaurant_id.clone(),
                    noised_visitors: None,
                    noised_affected: None,
                    released_proportion: None,
                }
            } else {
                ReleasedAggregate {
                    restaurant_id: a.restaurant_id.clone(),
                    noised_visitors: Some(visitors),
                    noised_affected: Some(affected),
                    released_proportion: Some((affected / visitors.max(1.0)).clamp(0.0, 1.0)),
                }
            }
        })
        .collect()
}

pub const RELEASED_HEADER: [&str; 9] =
    ["date", "restaurant_id", "city", "risk_level", "visitors", "affected", "proportion", "signal", "suppressed"];

/// A released record in daily-list layout; count columns are empty when
/// suppressed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReleasedRow {
    pub date: NaiveDate,
    pub restaurant_id: String,
    pub city: City,
    pub risk_level: RiskLevel,
    pub visitors: Option<f64>,
    pub affected: Option<f64>,
    pub proportion: Option<f64>,
    pub signal: Option<f64>,
    pub suppressed: bool,
}

impl ReleasedRow {
    pub fn new(date: NaiveDate, city: City, risk_level: RiskLevel, r: &ReleasedAggregate) -> Self {
        let entry = r.rank_entry();
        ReleasedRow {
            date,
            restaurant_id: r.restaurant_id.clone(),
            city,
            risk_level,
            visitors: r.noised_visitors,
            affected: r.noised_affected,
            proportion: r.released_proportion,
            signal: entry.map(|e| e.signal),
            suppressed: r.suppressed(),
        }
    }
}

pub fn write_released(path: &Path, rows: &[ReleasedRow]) -> Result<(), LogDataError> {
    write_csv(path, &RELEASED_HEADER, rows)
}

pub fn read_released(path: &Path) -> Result<Vec<ReleasedRow>, LogDataError> {
    read_csv(path, &RELEASED_HEADER)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locmodel::aggregate_restaurants;
    use crate::locmodel::Period;
    use crate::logdata::{QueryEvent, VisitEvent};
    use proptest::prelude::*;

    const KEY: [u8; 16] = *b"0123456789abcdef";

    fn policy(epsilon: f64) -> PrivacyPolicy {
        PrivacyPolicy::new(epsilon, DEFAULT_SUPPRESS_BELOW, KEY).unwrap()
    }

    fn agg_map(counts: &[(&str, u64, u64)]) -> BTreeMap<String, RestaurantAggregate> {
        counts
            .iter()
            .map(|(id, v, a)| (id.to_string(), RestaurantAggregate::from_counts(id.to_string(), *v, *a)))
            .collect()
    }

    #[test]
    fn zero_key_and_bad_epsilon_rejected() {
        assert_eq!(anonymize_ids(&Dataset::default(), &[0; 16]).unwrap_err(), PrivacyError::ZeroKey);
        assert!(PrivacyPolicy::new(0.0, 30.0, KEY).is_err());
        assert!(PrivacyPolicy::new(1.0, 30.0, [0; 16]).is_err());
    }

    #[test]
    fn pseudonyms_consistent_across_streams() {
        let user = UserId(0xdead_beef);
        let d = Dataset {
            queries: vec![QueryEvent { user_id: user, ts: 10, text: "x".into(), results: vec![] }],
            visits: vec![VisitEvent { user_id: user, restaurant_id: "r".into(), entry_ts: 1, exit_ts: 2 }],
            ..Dataset::default()
        };
        let a = anonymize_ids(&d, &KEY).unwrap();
        assert_eq!(a.queries[0].user_id, a.visits[0].user_id);
        assert_ne!(a.queries[0].user_id, user);
        assert_eq!(a.queries[0].user_id, pseudonym(&KEY, user));
    }

    #[test]
    fn million_users_no_collisions() {
        let mut seen = HashSet::with_capacity(1_000_000);
        for u in 0..1_000_000u128 {
            assert!(seen.insert(pseudonym(&KEY, UserId(u * 7919 + 3))));
        }
    }

    #[test]
    fn different_keys_disjoint() {
        let other = *b"fedcba9876543210";
        let a: HashSet<UserId> = (0..20_000u128).map(|u| pseudonym(&KEY, UserId(u))).collect();
        let b: HashSet<UserId> = (0..20_000u128).map(|u| pseudonym(&other, UserId(u))).collect();
        assert_eq!(a.intersection(&b).count(), 0);
    }

    fn link(user: u128, rid: &str, exit: i64) -> ExposureLink {
        ExposureLink {
            user_id: UserId(user),
            restaurant_id: rid.into(),
            visit_exit_ts: exit,
            first_positive_query_ts: 1_000_000,
            recency_rank: 1,
        }
    }

    #[test]
    fn capping_examples() {
        let links = vec![link(1, "a", 30), link(1, "a", 10), link(1, "a", 20), link(2, "a", 5)];
        let capped = cap_contributions(&links);
        assert_eq!(capped, vec![link(1, "a", 10), link(2, "a", 5)]);
        assert_eq!(cap_contributions(&capped), capped);
    }

    proptest! {
        #[test]
        fn capping_matches_dedup_oracle(raw in proptest::collection::vec((0u128..8, 0u8..5, 0i64..50), 0..80)) {
            let links: Vec<ExposureLink> = raw.iter().map(|(u, r, t)| link(*u, &format!("r{r}"), *t)).collect();
            let capped = cap_contributions(&links);
            // Oracle: for each pair, the minimum exit time, first occurrence on ties.
            let mut expected: Vec<ExposureLink> = Vec::new();
            for l in &links {
                let pair_min = links
                    .iter()
                    .filter(|o| o.user_id == l.user_id && o.restaurant_id == l.restaurant_id)
                    .map(|o| o.visit_exit_ts)
                    .min()
                    .unwrap();
                let already = expected.iter().any(|e| e.user_id == l.user_id && e.restaurant_id == l.restaurant_id);
                if l.visit_exit_ts == pair_min && !already {
                    expected.push(l.clone());
                }
            }
            let mut a = capped.clone();
            let mut b = expected;
            let key = |l: &ExposureLink| (l.user_id, l.restaurant_id.clone(), l.visit_exit_ts);
            a.sort_by_key(key);
            b.sort_by_key(key);
            prop_assert_eq!(a, b);
            prop_assert_eq!(cap_contributions(&capped), capped.clone());

            // Sensitivity: dropping any one user moves every affected count by at most 1.
            let full = aggregate_restaurants(&[], &capped, Period::ALL);
            for drop in 0u128..8 {
                let rest: Vec<ExposureLink> = capped.iter().filter(|l| l.user_id.0 != drop).cloned().collect();
                let reduced = aggregate_restaurants(&[], &rest, Period::ALL);
                for (rid, f) in &full {
                    let r = reduced.get(rid).map_or(0, |a| a.affected);
                    prop_assert!(f.affected - r <= 1);
                }
                let per_restaurant = capped.iter().filter(|l| l.user_id.0 == drop).fold(HashMap::new(), |mut m, l| {
                    *m.entry(l.restaurant_id.clone()).or_insert(0) += 1;
                    m
                });
                prop_assert!(per_restaurant.values().all(|&c| c == 1));
            }
        }
    }

    #[test]
    fn huge_epsilon_is_exact() {
        let aggs = agg_map(&[("a", 100, 7), ("b", 45, 0)]);
        let out = release(&aggs, &policy(1e6), 3);
        assert!((out[0].noised_visitors.unwrap() - 100.0).abs() < 1e-3);
        assert!((out[0].noised_affected.unwrap() - 7.0).abs() < 1e-3);
        assert!((out[1].released_proportion.unwrap()).abs() < 1e-3);
    }

    #[test]
    fn laplace_moments() {
        let n = 20_000;
        let p = policy(1.0);
        let draws: Vec<f64> = (0..n)
            .map(|i| {
                let aggs = agg_map(&[("r", 100, 0)]);
                release(&aggs, &p, i as u64)[0].noised_visitors.unwrap()
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sigma = 2f64.sqrt() / p.epsilon;
        assert!((mean - 100.0).abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
        assert!((mean - 100.0).abs() < 0.1);
        assert!((var - 2.0).abs() < 0.05 * 2.0, "variance {var}");
    }

    #[test]
    fn suppression_rule() {
        // Find a seed whose noised visitor count lands at 29.4 ± 0.1 for a
        // true count of 30, then check the record is withheld.
        let p = policy(1.0);
        let aggs = agg_map(&[("r", 30, 3)]);
        let seed = (0..10_000u64)
            .find(|&s| {
                let mut rng = restaurant_rng(s, "r");
                (30.0 + sample_laplace(&mut rng, 1.0) - 29.4).abs() < 0.1
            })
            .unwrap();
        let out = release(&aggs, &p, seed);
        assert!(out[0].suppressed());
        assert_eq!((out[0].noised_affected, out[0].released_proportion), (None, None));
        assert!(out[0].rank_entry().is_none());
    }

    #[test]
    fn release_is_order_independent_and_seeded() {
        let aggs = agg_map(&[("a", 100, 7), ("b", 60, 3), ("c", 90, 30)]);
        let all = release(&aggs, &policy(1.0), 11);
        assert_eq!(all, release(&aggs, &policy(1.0), 11));
        let only_b = release(&agg_map(&[("b", 60, 3)]), &policy(1.0), 11);
        assert_eq!(only_b[0], all[1]);
        assert_ne!(release(&aggs, &policy(1.0), 12), all);
        for r in &all {
            let p = r.released_proportion.unwrap();
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn released_csv_round_trip_hides_suppressed_counts() {
        let dir = tempfile::tempdir().unwrap();
        let date = NaiveDate::from_ymd_opt(2016, 6, 1).unwrap();
        let rows = vec![
            ReleasedRow::new(
                date,
                City("c".into()),
                RiskLevel::High,
                &ReleasedAggregate {
                    restaurant_id: "a".into(),
                    noised_visitors: Some(52.5),
                    noised_affected: Some(2.25),
                    released_proportion: Some(2.25 / 52.5),
                },
            ),
            ReleasedRow::new(
                date,
                City("c".into()),
                RiskLevel::Low,
                &ReleasedAggregate {
                    restaurant_id: "b".into(),
                    noised_visitors: None,
                    noised_affected: None,
                    released_proportion: None,
                },
            ),
        ];
        let path = dir.path().join("released.csv");
        write_released(&path, &rows).unwrap();
        assert_eq!(read_released(&path).unwrap(), rows);
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.lines().nth(2).unwrap().ends_with(",b,c,low,,,,,true"));
    }
}
