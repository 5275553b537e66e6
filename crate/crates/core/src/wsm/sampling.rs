//! Weak labeling of training queries and the two-stratum evaluation sample.

use std::collections::{HashMap, HashSet};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{LabeledExample, LabeledSet, Provenance, WsmError};
use crate::logdata::QueryEvent;

/// Concept tag marking a page about foodborne illness.
pub const FOODBORNE_TAG: &str = "foodborne_illness";

#[derive(Clone, Debug, PartialEq)]
pub struct WeakLabelConfig {
    pub dwell_threshold_s: f64,
    pub neg_ratio: usize,
}

impl Default for WeakLabelConfig {
    fn default() -> Self {
        WeakLabelConfig { dwell_threshold_s: 30.0, neg_ratio: 10 }
    }
}

/// A click on a foodborne-tagged page with dwell at least `dwell_threshold_s`.
pub fn is_weak_positive(e: &QueryEvent, dwell_threshold_s: f64) -> bool {
    e.results.iter().any(|p| p.clicked && p.has_tag(FOODBORNE_TAG) && p.dwell_s >= dwell_threshold_s)
}

/// A click on a foodborne-tagged page, regardless of dwell.
pub fn has_foodborne_click(e: &QueryEvent) -> bool {
    e.results.iter().any(|p| p.clicked && p.has_tag(FOODBORNE_TAG))
}

/// Positives are all weak-positive events; negatives are a seeded uniform
/// sample of `neg_ratio × |positives|` of the other events. The result is
/// deduplicated by text, first occurrence (positives first) winning.
pub fn weak_label(queries: &[QueryEvent], cfg: &WeakLabelConfig, seed: u64) -> Result<LabeledSet, WsmError> {
    if queries.is_empty() {
        return Err(WsmError::InvalidArgument("no queries to label".into()));
    }
    if cfg.neg_ratio < 1 {
        return Err(WsmError::InvalidArgument("neg_ratio must be ≥ 1".into()));
    }
    let (pos, rest): (Vec<&QueryEvent>, Vec<&QueryEvent>) =
        queries.iter().partition(|e| is_weak_positive(e, cfg.dwell_threshold_s));
    if pos.is_empty() {
        return Err(WsmError::NoWeakPositives);
    }
    let wanted = pos.len() * cfg.neg_ratio;
    if rest.len() < wanted {
        return Err(WsmError::NotEnoughNegatives { wanted, available: rest.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, rest.len(), wanted).into_vec();
    picked.sort_unstable();

    let mut seen = HashSet::new();
    let mut examples = Vec::with_capacity(pos.len() + wanted);
    let labeled = pos.iter().map(|e| (*e, true)).chain(picked.iter().map(|&i| (rest[i], false)));
    for (e, label) in labeled {
        if seen.insert(e.text.as_str()) {
            examples.push(LabeledExample { event: e.clone(), label });
        }
    }
    Ok(LabeledSet { examples, provenance: Provenance::WeakAuto })
}

/// Evaluation sample: half from the high-recall stratum (events with a
/// clicked foodborne page), half traffic-weighted from the whole stream.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalSample {
    pub high_recall: Vec<QueryEvent>,
    pub traffic: Vec<QueryEvent>,
}

impl EvalSample {
    pub fn events(&self) -> impl Iterator<Item = &QueryEvent> {
        self.high_recall.iter().chain(self.traffic.iter())
    }

    pub fn into_events(self) -> Vec<QueryEvent> {
        let mut v = self.high_recall;
        v.extend(self.traffic);
        v
    }

    pub fn len(&self) -> usize {
        self.high_recall.len() + self.traffic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Distinct texts in first-occurrence order with their frequency.
fn text_frequencies<'a>(events: impl Iterator<Item = &'a QueryEvent>) -> Vec<(&'a QueryEvent, usize)> {
    let mut slot: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<(&QueryEvent, usize)> = Vec::new();
    for e in events {
        match slot.get(e.text.as_str()) {
            Some(&i) => out[i].1 += 1,
            None => {
                slot.insert(&e.text, out.len());
                out.push((e, 1));
            }
        }
    }
    out
}

/// Weighted sampling without replacement (Efraimidis–Spirakis keys).
fn weighted_distinct<'a>(
    candidates: &[(&'a QueryEvent, usize)],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a QueryEvent> {
    let mut keyed: Vec<(f64, usize)> = candidates
        .iter()
        .enumerate()
        .map(|(i, (_, w))| {
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            (u.ln() / *w as f64, i)
        })
        .collect();
    keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    keyed.truncate(k);
    keyed.sort_by_key(|&(_, i)| i);
    keyed.into_iter().map(|(_, i)| candidates[i].0).collect()
}

/// Draws `n` distinct-text evaluation events. Texts in `exclude` (the
/// training set) are never drawn.
pub fn build_eval_sample(
    stream: &[QueryEvent],
    n: usize,
    exclude: &HashSet<String>,
    seed: u64,
) -> Result<EvalSample, WsmError> {
    if !n.is_multiple_of(2) {
        return Err(WsmError::InvalidArgument(format!("eval sample size {n} must be even")));
    }
    if stream.len() < n {
        return Err(WsmError::InvalidArgument(format!(
            "stream has {} events, fewer than the requested {n}",
            stream.len()
        )));
    }
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let eligible = || stream.iter().filter(|e| !exclude.contains(&e.text));
    let stratum = text_frequencies(eligible().filter(|e| has_foodborne_click(e)));
    if stratum.len() < half {
        return Err(WsmError::StratumTooSmall { stratum: "high-recall", needed: half, available: stratum.len() });
    }
    let high_recall = weighted_distinct(&stratum, half, &mut rng);
    let taken: HashSet<&str> = high_recall.iter().map(|e| e.text.as_str()).collect();

    let traffic_pool = text_frequencies(eligible().filter(|e| !taken.contains(e.text.as_str())));
    if traffic_pool.len() < half {
        return Err(WsmError::StratumTooSmall { stratum: "traffic", needed: half, available: traffic_pool.len() });
    }
    let traffic = weighted_distinct(&traffic_pool, half, &mut rng);
    Ok(EvalSample {
        high_recall: high_recall.into_iter().cloned().collect(),
        traffic: traffic.into_iter().cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logdata::{ResultPage, UserId};

    fn page(tag: Option<&str>, clicked: bool, dwell_s: f64) -> ResultPage {
        ResultPage {
            url: "https://example.org/p".into(),
            title: "title".into(),
            snippet: "snippet".into(),
            concept_tags: tag.into_iter().map(str::to_owned).collect(),
            clicked,
            dwell_s,
        }
    }

    fn ev(text: &str, results: Vec<ResultPage>) -> QueryEvent {
        QueryEvent { user_id: UserId(1), ts: 0, text: text.into(), results }
    }

    #[test]
    fn positive_rule() {
        let cfg = WeakLabelConfig::default();
        assert!(is_weak_positive(&ev("a", vec![page(Some(FOODBORNE_TAG), true, 45.0)]), cfg.dwell_threshold_s));
        assert!(!is_weak_positive(&ev("a", vec![page(Some(FOODBORNE_TAG), false, 0.0)]), 30.0));
        assert!(!is_weak_positive(&ev("a", vec![page(Some(FOODBORNE_TAG), true, 29.9)]), 30.0));
        assert!(!is_weak_positive(&ev("a", vec![page(Some("weather"), true, 300.0)]), 30.0));
    }

    #[test]
    fn ten_positives_give_exactly_one_hundred_negatives() {
        let mut stream = Vec::new();
        for i in 0..500 {
            let results = if i % 50 == 7 {
                vec![page(Some(FOODBORNE_TAG), true, 60.0)]
            } else if i % 3 == 0 {
                // Shown but not clicked: never positive.
                vec![page(Some(FOODBORNE_TAG), false, 0.0)]
            } else {
                vec![page(Some("sports"), true, 80.0)]
            };
            stream.push(ev(&format!("query {i}"), results));
        }
        let set = weak_label(&stream, &WeakLabelConfig::default(), 4).unwrap();

        let brute_pos: HashSet<&str> = stream
            .iter()
            .filter(|e| {
                e.results.iter().any(|p| p.clicked && p.concept_tags.contains(FOODBORNE_TAG) && p.dwell_s >= 30.0)
            })
            .map(|e| e.text.as_str())
            .collect();
        assert_eq!(brute_pos.len(), 10);
        let got_pos: HashSet<&str> = set.examples.iter().filter(|e| e.label).map(|e| e.event.text.as_str()).collect();
        assert_eq!(got_pos, brute_pos);
        let negs: Vec<&LabeledExample> = set.examples.iter().filter(|e| !e.label).collect();
        assert_eq!(negs.len(), 100);
        assert!(negs.iter().all(|e| !brute_pos.contains(e.event.text.as_str())));
        assert_eq!(set.provenance, Provenance::WeakAuto);
    }

    #[test]
    fn no_positives_is_an_error() {
        let stream = vec![ev("a", vec![]), ev("b", vec![])];
        assert!(matches!(weak_label(&stream, &WeakLabelConfig::default(), 0), Err(WsmError::NoWeakPositives)));
    }

    #[test]
    fn dedup_keeps_positive_over_negative() {
        let mut stream = vec![ev("food poisoning", vec![page(Some(FOODBORNE_TAG), true, 40.0)])];
        stream.push(ev("food poisoning", vec![]));
        for i in 0..20 {
            stream.push(ev(&format!("n{i}"), vec![]));
        }
        let set = weak_label(&stream, &WeakLabelConfig { neg_ratio: 21, ..Default::default() }, 1).unwrap();
        let fp: Vec<_> = set.examples.iter().filter(|e| e.event.text == "food poisoning").collect();
        assert_eq!(fp.len(), 1);
        assert!(fp[0].label);
    }

    #[test]
    fn two_event_stream_takes_both() {
        let stream = vec![ev("stomach cramps", vec![page(Some(FOODBORNE_TAG), true, 5.0)]), ev("weather", vec![])];
        let s = build_eval_sample(&stream, 2, &HashSet::new(), 0).unwrap();
        assert_eq!(s.high_recall[0].text, "stomach cramps");
        assert_eq!(s.traffic[0].text, "weather");
    }

    fn mixed_stream() -> Vec<QueryEvent> {
        let mut stream = Vec::new();
        for i in 0..4000 {
            let text = format!("q{}", i % 1700);
            let results = if i % 1700 % 4 == 0 {
                vec![page(Some(FOODBORNE_TAG), true, (i % 90) as f64)]
            } else {
                vec![page(None, i % 2 == 0, if i % 2 == 0 { 10.0 } else { 0.0 })]
            };
            stream.push(ev(&text, results));
        }
        stream
    }

    #[test]
    fn eval_sample_is_deterministic_and_stratified() {
        let stream = mixed_stream();
        let exclude: HashSet<String> = (0..100).map(|i| format!("q{i}")).collect();
        let a = build_eval_sample(&stream, 600, &exclude, 8).unwrap();
        let b = build_eval_sample(&stream, 600, &exclude, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.high_recall.len(), 300);
        assert_eq!(a.traffic.len(), 300);
        // Brute-force re-filter of stratum membership.
        for e in &a.high_recall {
            assert!(e.results.iter().any(|p| p.clicked && p.concept_tags.contains(FOODBORNE_TAG)));
        }
        let texts: HashSet<&str> = a.events().map(|e| e.text.as_str()).collect();
        assert_eq!(texts.len(), 600, "texts must be distinct");
        assert!(texts.iter().all(|t| !exclude.contains(*t)));
    }

    #[test]
    fn stratum_too_small_reports_available() {
        let stream = mixed_stream();
        match build_eval_sample(&stream, 1000, &HashSet::new(), 0) {
            Err(WsmError::StratumTooSmall { available, needed, .. }) => {
                assert_eq!(needed, 500);
                assert_eq!(available, 425);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(build_eval_sample(&stream, 3, &HashSet::new(), 0), Err(WsmError::InvalidArgument(_))));
    }
}
