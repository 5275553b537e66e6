use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::link::ExposureLink;
use crate::logdata::{Timestamp, UserId, VisitEvent};

/// One-sided 95% normal quantile.
pub const Z_ONE_SIDED_95: f64 = 1.644_853_626_951_472_2;

/// Half-open interval `[start, end)` on visit exit times.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Period {
    pub start: Timestamp,
    pub end: Timestamp,
}

impl Period {
    pub const ALL: Period = Period { start: i64::MIN, end: i64::MAX };

    pub fn contains(&self, ts: Timestamp) -> bool {
        ts >= self.start && ts < self.end
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestaurantAggregate {
    pub restaurant_id: String,
    pub visitors: u64,
    pub affected: u64,
    pub proportion: f64,
    pub signal: f64,
}

impl RestaurantAggregate {
    pub fn from_counts(restaurant_id: String, visitors: u64, affected: u64) -> Self {
        let proportion = if visitors == 0 { 0.0 } else { affected as f64 / visitors as f64 };
        RestaurantAggregate {
            restaurant_id,
            visitors,
            affected,
            proportion,
            signal: wilson_lower_bound(affected as f64, visitors as f64),
        }
    }
}

/// One-sided 95% Wilson score lower bound for `affected / visitors`,
/// clamped to `[0, affected / visitors]` against rounding. Counts may be
/// real-valued (noised).
pub fn wilson_lower_bound(affected: f64, visitors: f64) -> f64 {
    if visitors <= 0.0 {
        return 0.0;
    }
    let z = Z_ONE_SIDED_95;
    let n = visitors;
    let p = (affected / n).clamp(0.0, 1.0);
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - spread) / (1.0 + z2 / n)).clamp(0.0, p)
}

/// Distinct visitor and affected-user sets per restaurant. Shards over
/// disjoint or overlapping user sets merge by set union.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RestaurantSets {
    pub sets: BTreeMap<String, (BTreeSet<UserId>, BTreeSet<UserId>)>,
}

impl RestaurantSets {
    pub fn from_streams(visits: &[VisitEvent], links: &[ExposureLink], period: Period) -> Self {
        let mut sets: BTreeMap<&str, (BTreeSet<UserId>, BTreeSet<UserId>)> = BTreeMap::new();
        for v in visits.iter().filter(|v| period.contains(v.exit_ts)) {
            sets.entry(v.restaurant_id.as_str()).or_default().0.insert(v.user_id);
        }
        for l in links.iter().filter(|l| period.contains(l.visit_exit_ts)) {
            sets.entry(l.restaurant_id.as_str()).or_default().1.insert(l.user_id);
        }
        RestaurantSets { sets: sets.into_iter().map(|(rid, s)| (rid.to_owned(), s)).collect() }
    }

    pub fn merge(&mut self, other: RestaurantSets) {
        for (rid, (v, a)) in other.sets {
            let e = self.sets.entry(rid).or_default();
            e.0.extend(v);
            e.1.extend(a);
        }
    }

    pub fn into_aggregates(self) -> BTreeMap<String, RestaurantAggregate> {
        self.sets
            .into_iter()
            .map(|(rid, (v, a))| {
                let agg = RestaurantAggregate::from_counts(rid.clone(), v.len() as u64, a.len() as u64);
                (rid, agg)
            })
            .collect()
    }
}

/// Per-restaurant distinct visitors in `period` and distinct users linked
/// to the restaurant through a visit in `period`.
pub fn aggregate_restaurants(
    visits: &[VisitEvent],
    links: &[ExposureLink],
    period: Period,
) -> BTreeMap<String, RestaurantAggregate> {
    RestaurantSets::from_streams(visits, links, period).into_aggregates()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::locmodel::link::{link_exposures, LinkConfig, ScoredQuery};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashSet;

    fn visit(user: u128, rid: &str, exit: i64) -> VisitEvent {
        VisitEvent { user_id: UserId(user), restaurant_id: rid.into(), entry_ts: exit - 60, exit_ts: exit }
    }

    /// Wilson lower bound from the quadratic (p - phat)² = z² p(1-p)/n,
    /// solved with the quadratic formula.
    fn wilson_quadratic(k: f64, n: f64) -> f64 {
        let z2 = Z_ONE_SIDED_95 * Z_ONE_SIDED_95;
        let phat = k / n;
        let a = 1.0 + z2 / n;
        let b = -(2.0 * phat + z2 / n);
        let c = phat * phat;
        ((-b - (b * b - 4.0 * a * c).sqrt()) / (2.0 * a)).max(0.0)
    }

    #[test]
    fn wilson_examples() {
        let zero = RestaurantAggregate::from_counts("r".into(), 100, 0);
        assert_eq!((zero.proportion, zero.signal), (0.0, 0.0));
        let agg = RestaurantAggregate::from_counts("r".into(), 50, 5);
        assert!((agg.proportion - 0.1).abs() < 1e-15);
        assert!((agg.signal - wilson_quadratic(5.0, 50.0)).abs() < 1e-12);
        assert!(agg.signal > 0.0 && agg.signal < 0.1);
        for (k, n) in [(1.0, 3.0), (30.0, 30.0), (7.0, 1000.0), (0.5, 20.0)] {
            assert!((wilson_lower_bound(k, n) - wilson_quadratic(k, n)).abs() < 1e-12);
        }
        assert_eq!(wilson_lower_bound(0.0, 0.0), 0.0);
    }

    fn random_world(seed: u64, users: u128) -> (Vec<VisitEvent>, Vec<ExposureLink>) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut visits: Vec<VisitEvent> = (0..(users as usize * 3))
            .map(|_| {
                visit(
                    rng.random_range(0..users),
                    &format!("r{}", rng.random_range(0..25)),
                    rng.random_range(0..20 * 86_400),
                )
            })
            .collect();
        visits.sort_by_key(|v| v.exit_ts);
        let mut queries: Vec<ScoredQuery> = (0..users as usize / 2)
            .map(|_| ScoredQuery {
                user_id: UserId(rng.random_range(0..users)),
                ts: rng.random_range(0..20 * 86_400),
                score: rng.random(),
            })
            .collect();
        queries.sort_by_key(|q| q.ts);
        let links = link_exposures(&visits, &queries, LinkConfig::default());
        (visits, links)
    }

    #[test]
    fn counts_match_set_arithmetic() {
        let (visits, links) = random_world(8, 1000);
        let period = Period { start: 5 * 86_400, end: 15 * 86_400 };
        let aggs = aggregate_restaurants(&visits, &links, period);
        let rids: HashSet<&str> = visits.iter().map(|v| v.restaurant_id.as_str()).collect();
        for rid in rids {
            let visitors: HashSet<UserId> = visits
                .iter()
                .filter(|v| v.restaurant_id == rid && v.exit_ts >= period.start && v.exit_ts < period.end)
                .map(|v| v.user_id)
                .collect();
            let affected: HashSet<UserId> = links
                .iter()
                .filter(|l| l.restaurant_id == rid && l.visit_exit_ts >= period.start && l.visit_exit_ts < period.end)
                .map(|l| l.user_id)
                .collect();
            match aggs.get(rid) {
                Some(a) => {
                    assert_eq!(a.visitors as usize, visitors.len());
                    assert_eq!(a.affected as usize, affected.len());
                    assert!(affected.is_subset(&visitors));
                    assert!(a.signal <= a.proportion);
                }
                None => assert!(visitors.is_empty()),
            }
        }
    }

    #[test]
    fn sharded_aggregation_merges_to_whole() {
        let (visits, links) = random_world(21, 300);
        let whole = aggregate_restaurants(&visits, &links, Period::ALL);
        let mut merged = RestaurantSets::default();
        for shard in 0..4u128 {
            let v: Vec<VisitEvent> = visits.iter().filter(|v| v.user_id.0 % 4 == shard).cloned().collect();
            let l: Vec<ExposureLink> = links.iter().filter(|l| l.user_id.0 % 4 == shard).cloned().collect();
            merged.merge(RestaurantSets::from_streams(&v, &l, Period::ALL));
        }
        assert_eq!(merged.into_aggregates(), whole);
    }

    proptest! {
        #[test]
        fn removing_a_user_never_increases_counts(seed in 0u64..500, drop in 0u128..60) {
            let (visits, links) = random_world(seed, 60);
            let full = aggregate_restaurants(&visits, &links, Period::ALL);
            let v: Vec<VisitEvent> = visits.iter().filter(|v| v.user_id.0 != drop).cloned().collect();
            let l: Vec<ExposureLink> = links.iter().filter(|l| l.user_id.0 != drop).cloned().collect();
            let reduced = aggregate_restaurants(&v, &l, Period::ALL);
            for (rid, a) in &reduced {
                let f = &full[rid];
                prop_assert!(a.visitors <= f.visitors && a.affected <= f.affected);
                prop_assert!(f.visitors - a.visitors <= 1 && f.affected - a.affected <= 1);
            }
            for a in full.values() {
                prop_assert!(a.affected <= a.visitors);
                prop_assert!((0.0..=1.0).contains(&a.proportion));
            }
        }
    }
}
