use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::logdata::{Timestamp, UserId, VisitEvent};

/// Incubation window after leaving a restaurant, in seconds (72 h).
pub const DEFAULT_WINDOW_S: i64 = 259_200;
/// Query score at or above which a user counts as affected.
pub const DEFAULT_P_STAR: f64 = 0.7;

/// A classified query, reduced to what the join needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredQuery {
    pub user_id: UserId,
    pub ts: Timestamp,
    pub score: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkConfig {
    pub window_s: i64,
    pub p_star: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig { window_s: DEFAULT_WINDOW_S, p_star: DEFAULT_P_STAR }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExposureLink {
    pub user_id: UserId,
    pub restaurant_id: String,
    pub visit_exit_ts: Timestamp,
    pub first_positive_query_ts: Timestamp,
    /// 1 = most recent linked visit before the query.
    pub recency_rank: u32,
}

impl ExposureLink {
    pub fn within_window(&self, window_s: i64) -> bool {
        let lag = self.first_positive_query_ts - self.visit_exit_ts;
        lag > 0 && lag <= window_s
    }
}

/// First query at or above `p_star` per user.
pub fn first_positive_queries(queries: &[ScoredQuery], p_star: f64) -> BTreeMap<UserId, Timestamp> {
    let mut first: BTreeMap<UserId, Timestamp> = BTreeMap::new();
    for q in queries.iter().filter(|q| q.score >= p_star) {
        first.entry(q.user_id).and_modify(|t| *t = (*t).min(q.ts)).or_insert(q.ts);
    }
    first
}

/// Joins each affected user's first positive query to the visits that ended
/// within the window before it. Each (user, restaurant) pair keeps only its
/// earliest qualifying visit; the surviving links of a user are ranked by
/// descending exit time (ties by restaurant id) starting at 1.
///
/// Output is ordered by user, then recency rank.
pub fn link_exposures(visits: &[VisitEvent], queries: &[ScoredQuery], cfg: LinkConfig) -> Vec<ExposureLink> {
    let anchors = first_positive_queries(queries, cfg.p_star);
    let mut by_user: HashMap<UserId, Vec<&VisitEvent>> = HashMap::new();
    for v in visits {
        if anchors.contains_key(&v.user_id) {
            by_user.entry(v.user_id).or_default().push(v);
        }
    }
    let mut out = Vec::new();
    for (user, &tq) in &anchors {
        let Some(user_visits) = by_user.get(user) else { continue };
        let mut earliest: HashMap<&str, Timestamp> = HashMap::new();
        for v in user_visits {
            let lag = tq - v.exit_ts;
            if lag > 0 && lag <= cfg.window_s {
                earliest.entry(v.restaurant_id.as_str()).and_modify(|t| *t = (*t).min(v.exit_ts)).or_insert(v.exit_ts);
            }
        }
        let mut kept: Vec<(&str, Timestamp)> = earliest.into_iter().collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        out.extend(kept.into_iter().enumerate().map(|(i, (rid, exit))| ExposureLink {
            user_id: *user,
            restaurant_id: rid.to_string(),
            visit_exit_ts: exit,
            first_positive_query_ts: tq,
            recency_rank: i as u32 + 1,
        }));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    const H: i64 = 3600;

    fn visit(user: u128, rid: &str, exit: i64) -> VisitEvent {
        VisitEvent { user_id: UserId(user), restaurant_id: rid.into(), entry_ts: exit - H, exit_ts: exit }
    }

    fn q(user: u128, ts: i64, score: f64) -> ScoredQuery {
        ScoredQuery { user_id: UserId(user), ts, score }
    }

    #[test]
    fn window_bounds() {
        let t = 1_000_000;
        let visits = vec![visit(1, "a", t)];
        let at_bound = link_exposures(&visits, &[q(1, t + 72 * H, 0.9)], LinkConfig::default());
        assert_eq!(at_bound.len(), 1);
        let past = link_exposures(&visits, &[q(1, t + 72 * H + 1, 0.9)], LinkConfig::default());
        assert!(past.is_empty());
        let same_instant = link_exposures(&visits, &[q(1, t, 0.9)], LinkConfig::default());
        assert!(same_instant.is_empty());
    }

    #[test]
    fn recency_ranks_and_anchor() {
        let t = 1_000_000;
        let visits = vec![visit(1, "A", t), visit(1, "B", t + 2 * H)];
        let queries = vec![q(1, t - H, 0.99), q(1, t + 50 * H, 0.8), q(1, t + 60 * H, 0.95)];
        // The first positive query precedes both visits, so nothing links.
        assert!(link_exposures(&visits, &queries, LinkConfig::default()).is_empty());
        let links = link_exposures(&visits, &queries[1..], LinkConfig::default());
        assert_eq!(links.len(), 2);
        assert_eq!((links[0].restaurant_id.as_str(), links[0].recency_rank), ("B", 1));
        assert_eq!((links[1].restaurant_id.as_str(), links[1].recency_rank), ("A", 2));
        assert!(links.iter().all(|l| l.first_positive_query_ts == t + 50 * H));
    }

    #[test]
    fn below_threshold_is_not_affected() {
        let visits = vec![visit(1, "A", 100)];
        assert!(link_exposures(&visits, &[q(1, 200, 0.69)], LinkConfig::default()).is_empty());
    }

    #[test]
    fn repeat_visits_keep_earliest() {
        let t = 1_000_000;
        let visits = vec![visit(1, "A", t), visit(1, "B", t + H), visit(1, "A", t + 2 * H)];
        let links = link_exposures(&visits, &[q(1, t + 10 * H, 0.9)], LinkConfig::default());
        assert_eq!(links.len(), 2);
        assert_eq!(links[0].restaurant_id, "B");
        assert_eq!((links[1].restaurant_id.as_str(), links[1].visit_exit_ts, links[1].recency_rank), ("A", t, 2));
    }

    /// Brute force over every (visit, query) pair.
    #[test]
    fn random_streams_match_brute_force() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut visits: Vec<VisitEvent> = (0..600)
            .map(|_| {
                visit(
                    rng.random_range(0..40),
                    &format!("r{}", rng.random_range(0..15)),
                    rng.random_range(0..30 * 86_400),
                )
            })
            .collect();
        visits.sort_by_key(|v| v.exit_ts);
        let mut queries: Vec<ScoredQuery> =
            (0..300).map(|_| q(rng.random_range(0..40), rng.random_range(0..30 * 86_400), rng.random())).collect();
        queries.sort_by_key(|q| q.ts);
        let cfg = LinkConfig::default();
        let links = link_exposures(&visits, &queries, cfg);
        for user in 0..40u128 {
            let anchor = queries.iter().filter(|x| x.user_id.0 == user && x.score >= cfg.p_star).map(|x| x.ts).min();
            let mine: Vec<&ExposureLink> = links.iter().filter(|l| l.user_id.0 == user).collect();
            let Some(tq) = anchor else {
                assert!(mine.is_empty());
                continue;
            };
            let mut expected: Vec<(String, i64)> = Vec::new();
            for v in visits.iter().filter(|v| v.user_id.0 == user) {
                let lag = tq - v.exit_ts;
                if lag > 0 && lag <= cfg.window_s {
                    match expected.iter_mut().find(|e| e.0 == v.restaurant_id) {
                        Some(e) => e.1 = e.1.min(v.exit_ts),
                        None => expected.push((v.restaurant_id.clone(), v.exit_ts)),
                    }
                }
            }
            assert_eq!(mine.len(), expected.len());
            for l in &mine {
                assert!(l.within_window(cfg.window_s));
                let e = expected.iter().find(|e| e.0 == l.restaurant_id).unwrap();
                assert_eq!(l.visit_exit_ts, e.1);
                let newer = expected.iter().filter(|o| o.1 > e.1 || (o.1 == e.1 && o.0 < e.0)).count();
                assert_eq!(l.recency_rank as usize, newer + 1);
            }
        }
    }
}
