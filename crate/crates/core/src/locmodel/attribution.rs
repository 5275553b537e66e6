use std::collections::{BTreeMap, HashMap};

use super::link::ExposureLink;
use crate::logdata::UserId;

pub const HISTOGRAM_LABELS: [&str; 4] = ["1", "2", "3", "4+"];

/// Counts of chosen source ranks, binned {1, 2, 3, 4+}.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AttributionHistogram {
    pub counts: [u64; 4],
}

impl AttributionHistogram {
    pub fn add(&mut self, rank: u32) {
        let bin = (rank.max(1) as usize - 1).min(3);
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Fractions per bin; all zero when no user was attributed.
    pub fn fractions(&self) -> [f64; 4] {
        let total = self.total();
        if total == 0 {
            return [0.0; 4];
        }
        self.counts.map(|c| c as f64 / total as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceAttribution {
    pub user_id: UserId,
    pub restaurant_id: String,
    pub recency_rank: u32,
}

/// For each affected user, the linked restaurant with the largest signal;
/// equal signals go to the most recent visit. Restaurants missing from
/// `signals` rank below every known one.
pub fn attribute_sources(
    links: &[ExposureLink],
    signals: &HashMap<String, f64>,
) -> (Vec<SourceAttribution>, AttributionHistogram) {
    let mut best: BTreeMap<UserId, (&ExposureLink, f64)> = BTreeMap::new();
    for l in links {
        let s = signals.get(&l.restaurant_id).copied().unwrap_or(f64::NEG_INFINITY);
        best.entry(l.user_id)
            .and_modify(|(cur, cs)| {
                if s > *cs || (s == *cs && l.recency_rank < cur.recency_rank) {
                    *cur = l;
                    *cs = s;
                }
            })
            .or_insert((l, s));
    }
    let mut hist = AttributionHistogram::default();
    let sources = best
        .into_values()
        .map(|(l, _)| {
            hist.add(l.recency_rank);
            SourceAttribution {
                user_id: l.user_id,
                restaurant_id: l.restaurant_id.clone(),
                recency_rank: l.recency_rank,
            }
        })
        .collect();
    (sources, hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn link(user: u128, rid: &str, rank: u32) -> ExposureLink {
        ExposureLink {
            user_id: UserId(user),
            restaurant_id: rid.into(),
            visit_exit_ts: 1000 - i64::from(rank),
            first_positive_query_ts: 2000,
            recency_rank: rank,
        }
    }

    fn signals(pairs: &[(&str, f64)]) -> HashMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn single_links_give_rank_one() {
        let links: Vec<ExposureLink> = (0..10).map(|u| link(u, &format!("r{u}"), 1)).collect();
        let (src, hist) = attribute_sources(&links, &signals(&[]));
        assert_eq!(src.len(), 10);
        assert_eq!(hist.fractions(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn argmax_beats_recency() {
        let links = vec![link(1, "A", 2), link(1, "B", 1)];
        let (src, _) = attribute_sources(&links, &signals(&[("A", 0.30), ("B", 0.05)]));
        assert_eq!((src[0].restaurant_id.as_str(), src[0].recency_rank), ("A", 2));
        let (src, _) = attribute_sources(&links, &signals(&[("A", 0.1), ("B", 0.1)]));
        assert_eq!(src[0].restaurant_id, "B");
    }

    #[test]
    fn deep_ranks_share_last_bin() {
        let mut h = AttributionHistogram::default();
        for r in [1, 4, 5, 9, 2] {
            h.add(r);
        }
        assert_eq!(h.counts, [1, 1, 0, 3]);
        assert!((h.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(AttributionHistogram::default().fractions(), [0.0; 4]);
    }

    proptest! {
        #[test]
        fn invariant_under_monotone_rescaling(
            raw in proptest::collection::vec((0u128..30, 0usize..12, 1u32..6), 1..120),
            sig in proptest::collection::vec(0u32..20, 12),
        ) {
            let mut links = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for (u, r, rank) in raw {
                if seen.insert((u, r)) && seen.insert((u, 1000 + rank as usize)) {
                    links.push(link(u, &format!("r{r}"), rank));
                }
            }
            let base: HashMap<String, f64> = (0..12).map(|r| (format!("r{r}"), f64::from(sig[r]) / 100.0)).collect();
            let scaled: HashMap<String, f64> = base.iter().map(|(k, v)| (k.clone(), (3.0 * v).exp() - 7.0)).collect();
            let (a, ha) = attribute_sources(&links, &base);
            let (b, hb) = attribute_sources(&links, &scaled);
            prop_assert_eq!(a, b);
            prop_assert_eq!(ha.clone(), hb);
            prop_assert!((ha.fractions().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
