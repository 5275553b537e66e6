//! Pipeline stages as functions over in-memory values.

use std::collections::{BTreeMap, HashMap, HashSet};

use chrono::{Duration, NaiveDate};

use super::artifacts::{self, ArtifactPaths};
use super::{at, PipelineError, RunConfig};
use crate::citysim::{generate_world, simulate, simulate_inspection, simulate_raters, GroundTruth, World, EPOCH_START};
use crate::locmodel::{
    aggregate_restaurants, attribute_sources, link_exposures, rank_restaurants, AttributionHistogram, DailyListRow,
    ExposureLink, Period, RankEntry, RestaurantAggregate, ScoredQuery,
};
use crate::logdata::{
    date_of, ensure_valid, Dataset, InspectionRecord, QueryEvent, RestaurantRecord, Trigger, SECONDS_PER_DAY,
};
use crate::privacy::{anonymize_ids, cap_contributions, release, PrivacyPolicy, ReleasedAggregate, ReleasedRow};
use crate::seeding::sub_seed;
use crate::stats::{
    adjusted_means_table, precision_table, risk_distribution_table, AdjustedMeansTable, PrecisionTable, RiskTable,
};
use crate::wsm::{
    build_eval_sample, evaluate_wsm, fnv1a64, score_query, train_wsm, weak_label, LabeledExample, LabeledSet,
    Provenance, TrainingReport, WsmError, WsmMetrics, WsmModel,
};

/// Seed for the simulator (world and events).
pub fn sim_seed(cfg: &RunConfig) -> u64 {
    sub_seed(cfg.seed, "citysim")
}

/// The synthetic world for `cfg`; regenerating it is cheap and exact.
pub fn world(cfg: &RunConfig) -> Result<World, PipelineError> {
    generate_world(&cfg.sim, sim_seed(cfg)).map_err(at("simulate"))
}

/// Simulates the city and pseudonymizes user ids. Returns the world, the
/// pseudonymized dataset and the ground truth (which keeps raw ids and is
/// never written out).
pub fn simulate_stage(cfg: &RunConfig) -> Result<(World, Dataset, GroundTruth), PipelineError> {
    let world = world(cfg)?;
    let (raw, truth) = simulate(&world, cfg.sim.days, sim_seed(cfg)).map_err(at("simulate"))?;
    let dataset = anonymize_ids(&raw, &cfg.hash_key()).map_err(at("simulate"))?;
    ensure_valid(&dataset).map_err(at("simulate"))?;
    Ok((world, dataset, truth))
}

/// Distinct query texts reserved for evaluation, chosen by a keyed hash so
/// the split does not depend on event order.
pub fn holdout_texts(queries: &[QueryEvent], cfg: &RunConfig) -> HashSet<String> {
    let key = sub_seed(cfg.seed, "wsm/holdout").to_le_bytes();
    let scale = 1_000_000u64;
    let limit = (cfg.eval.holdout_share * scale as f64) as u64;
    queries
        .iter()
        .map(|q| q.text.as_str())
        .collect::<HashSet<_>>()
        .into_iter()
        .filter(|t| {
            let bytes: Vec<u8> = key.iter().copied().chain(t.bytes()).collect();
            fnv1a64(&bytes) % scale < limit
        })
        .map(str::to_owned)
        .collect()
}

/// Weak labels over the training pool, or `None` when the log holds no
/// weak positives.
pub fn weak_labels(cfg: &RunConfig, queries: &[QueryEvent]) -> Result<Option<LabeledSet>, PipelineError> {
    let holdout = holdout_texts(queries, cfg);
    let pool: Vec<QueryEvent> = queries.iter().filter(|q| !holdout.contains(&q.text)).cloned().collect();
    match weak_label(&pool, &cfg.weak, sub_seed(cfg.seed, "wsm/weak_label")) {
        Ok(set) => Ok(Some(set)),
        Err(WsmError::NoWeakPositives) => Ok(None),
        Err(e) => Err(at("train-wsm")(e)),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutput {
    pub model: WsmModel,
    pub report: TrainingReport,
    pub examples: usize,
    pub positives: usize,
    /// Texts seen in training; excluded from evaluation.
    pub texts: HashSet<String>,
}

/// Trains the query classifier. Without weak positives the model stays at
/// zero weights (every score 0.5) and nothing is linked downstream.
pub fn train_stage(cfg: &RunConfig, queries: &[QueryEvent]) -> Result<TrainOutput, PipelineError> {
    let train_seed = sub_seed(cfg.seed, "wsm/train");
    let Some(set) = weak_labels(cfg, queries)? else {
        return Ok(TrainOutput {
            model: WsmModel::zero(cfg.train.clone(), train_seed),
            report: TrainingReport { epoch_losses: Vec::new(), final_loss: f64::NAN },
            examples: 0,
            positives: 0,
            texts: HashSet::new(),
        });
    };
    let (model, report) = train_wsm(&set, &cfg.train, train_seed).map_err(at("train-wsm"))?;
    Ok(TrainOutput { model, report, examples: set.examples.len(), positives: set.positives(), texts: set.texts() })
}

/// Rater-based evaluation on held-out texts. `metrics` carries the reason
/// when the sample cannot be drawn or has a single class.
#[derive(Clone, Debug, PartialEq)]
pub struct WsmEvaluation {
    pub metrics: Result<WsmMetrics, String>,
    pub alpha: Option<f64>,
    pub sample_size: usize,
    pub rater_positives: usize,
    /// Share of units where the aggregated rater label equals the truth.
    pub rater_accuracy: Option<f64>,
}

impl WsmEvaluation {
    fn unavailable(reason: String) -> Self {
        WsmEvaluation { metrics: Err(reason), alpha: None, sample_size: 0, rater_positives: 0, rater_accuracy: None }
    }
}

pub fn eval_stage(
    cfg: &RunConfig,
    queries: &[QueryEvent],
    model: &WsmModel,
    labels: &BTreeMap<String, bool>,
    train_texts: &HashSet<String>,
) -> Result<WsmEvaluation, PipelineError> {
    let holdout = holdout_texts(queries, cfg);
    let pool: Vec<QueryEvent> = queries.iter().filter(|q| holdout.contains(&q.text)).cloned().collect();
    let sample =
        match build_eval_sample(&pool, cfg.eval.sample_size, train_texts, sub_seed(cfg.seed, "wsm/eval_sample")) {
            Ok(s) => s,
            Err(e @ (WsmError::StratumTooSmall { .. } | WsmError::InvalidArgument(_))) => {
                return Ok(WsmEvaluation::unavailable(e.to_string()))
            }
            Err(e) => return Err(at("eval-wsm")(e)),
        };
    let events = sample.into_events();
    let truth: Vec<bool> = events.iter().map(|e| labels.get(&e.text).copied().unwrap_or(false)).collect();
    let judgments = simulate_raters(&truth, &cfg.sim, sub_seed(cfg.seed, "wsm/raters"));
    let rated = judgments.aggregate().map_err(at("eval-wsm"))?;
    let accuracy = rated.iter().zip(&truth).filter(|(a, b)| a == b).count() as f64 / truth.len() as f64;
    let set = LabeledSet {
        examples: events.into_iter().zip(&rated).map(|(event, &label)| LabeledExample { event, label }).collect(),
        provenance: Provenance::Rater,
    };
    let metrics = match evaluate_wsm(model, &set, cfg.eval.threshold) {
        Ok(m) => Ok(m),
        Err(WsmError::SingleClass) => Err(WsmError::SingleClass.to_string()),
        Err(e) => return Err(at("eval-wsm")(e)),
    };
    Ok(WsmEvaluation {
        metrics,
        alpha: judgments.alpha().ok(),
        sample_size: set.examples.len(),
        rater_positives: set.positives(),
        rater_accuracy: Some(accuracy),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankOutput {
    /// Capped exposure links over the whole log.
    pub links: Vec<ExposureLink>,
    /// Ranked lists, ordered by date, city, then rank.
    pub daily: Vec<DailyListRow>,
    /// Every released record per day (empty when privacy is off).
    pub released: Vec<ReleasedRow>,
    pub histogram: AttributionHistogram,
}

fn first_day() -> NaiveDate {
    date_of(EPOCH_START)
}

/// Scores queries, links positive users to visits, and for every simulated
/// day after the first builds per-city ranked lists from the visits of the
/// preceding `lookback_days` and the positive queries issued before that
/// day. With privacy on, ranking sees only released counts. Visits must be
/// sorted by exit time, as `Dataset::sort_streams` leaves them.
pub fn rank_stage(cfg: &RunConfig, dataset: &Dataset, model: &WsmModel) -> Result<RankOutput, PipelineError> {
    let scored: Vec<ScoredQuery> = dataset
        .queries
        .iter()
        .map(|q| ScoredQuery { user_id: q.user_id, ts: q.ts, score: score_query(model, q) })
        .collect();
    let links = cap_contributions(&link_exposures(&dataset.visits, &scored, cfg.link));
    let registry: HashMap<&str, &RestaurantRecord> = dataset.registry();
    let policy =
        PrivacyPolicy::new(cfg.privacy.epsilon, cfg.privacy.suppress_below, cfg.hash_key()).map_err(at("rank"))?;
    let released_entries = |aggs: &BTreeMap<String, RestaurantAggregate>, label: &str| -> Vec<ReleasedAggregate> {
        release(aggs, &policy, sub_seed(cfg.seed, &format!("privacy/release/{label}")))
    };

    let mut daily = Vec::new();
    let mut released_rows = Vec::new();
    for d in 1..i64::from(cfg.sim.days) {
        let date = first_day() + Duration::days(d);
        let ds = EPOCH_START + d * SECONDS_PER_DAY;
        let period = Period { start: ds - i64::from(cfg.rank.lookback_days) * SECONDS_PER_DAY, end: ds };
        let known: Vec<ExposureLink> = links
            .iter()
            .filter(|l| l.first_positive_query_ts < ds && period.contains(l.visit_exit_ts))
            .cloned()
            .collect();
        let from = dataset.visits.partition_point(|v| v.exit_ts < period.start);
        let to = dataset.visits.partition_point(|v| v.exit_ts < period.end);
        let aggs = aggregate_restaurants(&dataset.visits[from..to], &known, period);
        let entries: Vec<RankEntry> = if cfg.privacy.enabled {
            let released = released_entries(&aggs, &date.to_string());
            for r in &released {
                let rec = registry[r.restaurant_id.as_str()];
                released_rows.push(ReleasedRow::new(date, rec.city.clone(), rec.risk_level, r));
            }
            released.iter().filter_map(ReleasedAggregate::rank_entry).collect()
        } else {
            aggs.values().map(RankEntry::from).collect()
        };
        let mut by_city: BTreeMap<&crate::logdata::City, Vec<RankEntry>> = BTreeMap::new();
        for e in entries {
            by_city.entry(&registry[e.restaurant_id.as_str()].city).or_default().push(e);
        }
        for (city, entries) in by_city {
            for e in rank_restaurants(entries, cfg.rank.min_visitors, cfg.rank.cutoff) {
                daily.push(DailyListRow {
                    date,
                    risk_level: registry[e.restaurant_id.as_str()].risk_level,
                    restaurant_id: e.restaurant_id,
                    city: city.clone(),
                    visitors: e.visitors,
                    affected: e.affected,
                    proportion: e.proportion,
                    signal: e.signal,
                });
            }
        }
    }

    let whole = aggregate_restaurants(&dataset.visits, &links, Period::ALL);
    let signals: HashMap<String, f64> = if cfg.privacy.enabled {
        released_entries(&whole, "all")
            .iter()
            .filter_map(ReleasedAggregate::rank_entry)
            .map(|e| (e.restaurant_id, e.signal))
            .collect()
    } else {
        whole.into_values().map(|a| (a.restaurant_id, a.signal)).collect()
    };
    let (_, histogram) = attribute_sources(&links, &signals);
    Ok(RankOutput { links, daily, released: released_rows, histogram })
}

/// FINDER picks: walking each day's per-city list in rank order, the first
/// `daily_capacity` restaurants not already FINDER-inspected.
pub fn dispatch_finder(cfg: &RunConfig, daily: &[DailyListRow]) -> Vec<(NaiveDate, String)> {
    let mut inspected: HashSet<&str> = HashSet::new();
    let mut used: HashMap<(NaiveDate, &str), usize> = HashMap::new();
    let mut picks = Vec::new();
    for row in daily {
        let slot = used.entry((row.date, row.city.0.as_str())).or_default();
        if *slot < cfg.rank.daily_capacity && inspected.insert(&row.restaurant_id) {
            *slot += 1;
            picks.push((row.date, row.restaurant_id.clone()));
        }
    }
    picks
}

/// Inspects the FINDER picks and merges them into the inspection log,
/// sorted by date.
pub fn inspect_stage(
    cfg: &RunConfig,
    world: &World,
    existing: &[InspectionRecord],
    daily: &[DailyListRow],
) -> Result<Vec<InspectionRecord>, PipelineError> {
    let seed = sub_seed(cfg.seed, "inspections/finder");
    let mut all = existing.to_vec();
    for (date, rid) in dispatch_finder(cfg, daily) {
        all.push(simulate_inspection(world, &rid, date, Trigger::Finder, seed).map_err(at("inspect"))?);
    }
    all.sort_by_key(|i| i.date);
    Ok(all)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tables {
    pub risk: RiskTable,
    pub precision: PrecisionTable,
    pub adjusted: AdjustedMeansTable,
}

pub fn evaluate_stage(
    inspections: &[InspectionRecord],
    registry: &[RestaurantRecord],
) -> Result<Tables, PipelineError> {
    Ok(Tables {
        risk: risk_distribution_table(inspections, registry).map_err(at("evaluate"))?,
        precision: precision_table(inspections, registry).map_err(at("evaluate"))?,
        adjusted: adjusted_means_table(inspections, registry).map_err(at("evaluate"))?,
    })
}

/// Everything one run produces, in memory.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub world: World,
    /// Pseudonymized dataset with the simulated (non-FINDER) inspections.
    pub dataset: Dataset,
    pub truth: GroundTruth,
    pub train: TrainOutput,
    pub eval: WsmEvaluation,
    pub rank: RankOutput,
    /// All inspections including FINDER, sorted by date.
    pub inspections: Vec<InspectionRecord>,
    pub tables: Tables,
}

pub fn execute(cfg: &RunConfig) -> Result<RunOutput, PipelineError> {
    cfg.validate()?;
    let (world, dataset, truth) = simulate_stage(cfg)?;
    let train = train_stage(cfg, &dataset.queries)?;
    let eval = eval_stage(cfg, &dataset.queries, &train.model, &truth.text_truth, &train.texts)?;
    let rank = rank_stage(cfg, &dataset, &train.model)?;
    let inspections = inspect_stage(cfg, &world, &dataset.inspections, &rank.daily)?;
    let tables = evaluate_stage(&inspections, &dataset.restaurants)?;
    Ok(RunOutput { world, dataset, truth, train, eval, rank, inspections, tables })
}

/// Runs every stage and writes the artifact directory: dataset, model,
/// metrics, daily lists, inspections, tables, report and manifest.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunOutput, PipelineError> {
    let out = execute(cfg)?;
    let paths = ArtifactPaths::new(&cfg.output_dir);
    paths.prepare().map_err(at("write"))?;
    artifacts::write_config(&paths, cfg)?;
    artifacts::write_simulation(&paths, &out.world, &out.dataset, &out.truth)?;
    artifacts::write_training(&paths, &out.train)?;
    artifacts::write_evaluation(&paths, &out.eval)?;
    artifacts::write_rank(&paths, &out.rank, cfg.privacy.enabled)?;
    artifacts::write_inspections(&paths, &out.inspections)?;
    artifacts::write_tables(&paths, &out.tables)?;
    let text = super::report(&paths.root)?;
    std::fs::write(paths.report(), text).map_err(at("report"))?;
    artifacts::write_manifest(&paths, cfg)?;
    Ok(out)
}
