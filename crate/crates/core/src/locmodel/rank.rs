use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::aggregate::RestaurantAggregate;

pub const DEFAULT_MIN_VISITORS: f64 = 20.0;

/// A restaurant competing for a place on the inspection list. Counts are
/// real so that privacy-noised releases rank the same way as raw counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub restaurant_id: String,
    pub visitors: f64,
    pub affected: f64,
    pub proportion: f64,
    pub signal: f64,
}

impl From<&RestaurantAggregate> for RankEntry {
    fn from(a: &RestaurantAggregate) -> Self {
        RankEntry {
            restaurant_id: a.restaurant_id.clone(),
            visitors: a.visitors as f64,
            affected: a.affected as f64,
            proportion: a.proportion,
            signal: a.signal,
        }
    }
}

/// Signal descending, then visitors descending, then id ascending.
pub fn rank_order(a: &RankEntry, b: &RankEntry) -> Ordering {
    b.signal
        .total_cmp(&a.signal)
        .then_with(|| b.visitors.total_cmp(&a.visitors))
        .then_with(|| a.restaurant_id.cmp(&b.restaurant_id))
}

/// Drops entries with fewer than `min_visitors` visitors or a signal below
/// `cutoff`, and sorts the rest by [`rank_order`].
pub fn rank_restaurants(
    entries: impl IntoIterator<Item = RankEntry>,
    min_visitors: f64,
    cutoff: f64,
) -> Vec<RankEntry> {
    assert!((0.0..=1.0).contains(&cutoff), "cutoff must lie in [0, 1]");
    let mut kept: Vec<RankEntry> =
        entries.into_iter().filter(|e| e.visitors >= min_visitors && e.signal >= cutoff).collect();
    kept.sort_by(rank_order);
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn entry(id: &str, visitors: f64, signal: f64) -> RankEntry {
        RankEntry { restaurant_id: id.into(), visitors, affected: 0.0, proportion: signal, signal }
    }

    #[test]
    fn below_cutoff_is_empty() {
        let list = rank_restaurants(vec![entry("a", 100.0, 0.01), entry("b", 100.0, 0.02)], 20.0, 0.05);
        assert!(list.is_empty());
    }

    #[test]
    fn ties_break_on_visitors_then_id() {
        let list = rank_restaurants(
            vec![entry("c", 40.0, 0.1), entry("b", 50.0, 0.1), entry("a", 40.0, 0.1), entry("d", 10.0, 0.9)],
            20.0,
            0.0,
        );
        let ids: Vec<&str> = list.iter().map(|e| e.restaurant_id.as_str()).collect();
        assert_eq!(ids, vec!["b", "a", "c"]);
    }

    #[test]
    fn matches_filter_and_sort_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(500);
        let entries: Vec<RankEntry> = (0..500)
            .map(|i| {
                entry(
                    &format!("r{:03}", i),
                    f64::from(rng.random_range(0..60u32)),
                    f64::from(rng.random_range(0..20u32)) / 100.0,
                )
            })
            .collect();
        let list = rank_restaurants(entries.clone(), 20.0, 0.05);
        // Oracle: keyed sort on (-signal, -visitors, id) over the filtered set.
        let mut expected: Vec<(i64, i64, String)> = entries
            .iter()
            .filter(|e| e.visitors >= 20.0 && e.signal >= 0.05)
            .map(|e| (-(e.signal * 100.0).round() as i64, -(e.visitors as i64), e.restaurant_id.clone()))
            .collect();
        expected.sort();
        let got: Vec<String> = list.iter().map(|e| e.restaurant_id.clone()).collect();
        let want: Vec<String> = expected.into_iter().map(|e| e.2).collect();
        assert_eq!(got, want);
    }
}
