use std::collections::{BTreeMap, HashMap};

use chrono::{Duration, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use super::inspect::poisson;
use super::vocab::{background_results, confuser_results, symptom_results};
use super::world::pick_restaurant;
use super::{simulate_inspection, LatentState, SimError, World};
use crate::logdata::{
    date_of, Dataset, InspectionRecord, QueryEvent, Timestamp, Trigger, UserId, VisitEvent, SECONDS_PER_DAY,
};
use crate::seeding::{stream_rng, sub_seed};

/// First simulated day starts at 2016-05-01T00:00:00Z.
pub const EPOCH_START: Timestamp = 1_462_060_800;

const HOUR: i64 = 3600;
/// A user is not re-infected within this long after symptom onset.
const RECOVERY_S: i64 = 5 * SECONDS_PER_DAY;
/// Incubation truncation bounds in hours.
const INCUBATION_MIN_H: f64 = 6.0;
const INCUBATION_MAX_H: f64 = 72.0;
/// Meal slots: (earliest entry, latest entry) seconds after midnight.
const LUNCH: (i64, i64) = (11 * HOUR, 14 * HOUR);
const DINNER: (i64, i64) = (17 * HOUR + 1800, 21 * HOUR);

/// One illness episode.
#[derive(Clone, Debug, PartialEq)]
pub struct Infection {
    pub user_id: UserId,
    /// Restaurant whose meal caused the illness; `None` for illness
    /// unrelated to a restaurant meal.
    pub source: Option<String>,
    pub meal_exit_ts: Option<Timestamp>,
    pub onset_ts: Timestamp,
    /// Whether the user issued symptom queries.
    pub searched: bool,
    /// Restaurant the user complained about, if any.
    pub complained_about: Option<String>,
}

/// Meals eaten while susceptible, by the restaurant's latent state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MealTally {
    pub safe: u64,
    pub unsafe_: u64,
}

/// Hidden simulation outcomes. Never serialized into a dataset.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    pub infections: Vec<Infection>,
    /// Every emitted query text mapped to whether it was issued by an ill
    /// user describing symptoms.
    pub text_truth: BTreeMap<String, bool>,
    pub susceptible_meals: MealTally,
}

impl GroundTruth {
    pub fn is_symptom_text(&self, text: &str) -> bool {
        self.text_truth.get(text).copied().unwrap_or(false)
    }

    /// Infections caused by a restaurant meal.
    pub fn meal_infections(&self) -> impl Iterator<Item = &Infection> {
        self.infections.iter().filter(|i| i.source.is_some())
    }
}

/// Incubation in hours: log-normal around the configured median, redrawn
/// until it lands in (6, 72] and clamped there after 100 failed draws.
fn incubation_hours<R: Rng + ?Sized>(rng: &mut R, dist: &LogNormal<f64>) -> f64 {
    for _ in 0..100 {
        let h = dist.sample(rng);
        if h > INCUBATION_MIN_H && h <= INCUBATION_MAX_H {
            return h;
        }
    }
    dist.sample(rng).clamp(INCUBATION_MIN_H + 1.0 / 3600.0, INCUBATION_MAX_H)
}

/// Per-user output, merged in user order.
#[derive(Default)]
struct UserLog {
    visits: Vec<VisitEvent>,
    queries: Vec<QueryEvent>,
    infections: Vec<Infection>,
    complaints: Vec<(NaiveDate, usize)>,
    texts: Vec<(String, bool)>,
    meals: MealTally,
}

struct Keys {
    meals: u64,
    queries: u64,
    illness: u64,
    routine: u64,
    inspections: u64,
}

/// Runs `days` days of the city. Each user's randomness is keyed by
/// (seed, user index, day), so users may be simulated in any order.
pub fn simulate(world: &World, days: u32, seed: u64) -> Result<(Dataset, GroundTruth), SimError> {
    if days < 1 {
        return Err(SimError::NoDays(days));
    }
    world.cfg.validate()?;
    let keys = Keys {
        meals: sub_seed(seed, "citysim/meals"),
        queries: sub_seed(seed, "citysim/queries"),
        illness: sub_seed(seed, "citysim/illness"),
        routine: sub_seed(seed, "citysim/routine"),
        inspections: sub_seed(seed, "citysim/inspections"),
    };
    let end = EPOCH_START + i64::from(days) * SECONDS_PER_DAY;
    let end_date = date_of(end);

    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(16);
    let chunk = world.users.len().div_ceil(workers).max(1);
    let logs: Vec<UserLog> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..world.users.len())
            .step_by(chunk)
            .map(|lo| {
                let keys = &keys;
                s.spawn(move || {
                    (lo..(lo + chunk).min(world.users.len()))
                        .map(|u| simulate_user(world, u, days, end, keys))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("user simulation panicked")).collect()
    });

    let mut dataset = Dataset { restaurants: world.registry(), ..Default::default() };
    let mut truth = GroundTruth::default();
    let mut complaints = Vec::new();
    for (u, log) in logs.into_iter().enumerate() {
        dataset.visits.extend(log.visits);
        dataset.queries.extend(log.queries);
        truth.infections.extend(log.infections);
        truth.susceptible_meals.safe += log.meals.safe;
        truth.susceptible_meals.unsafe_ += log.meals.unsafe_;
        for (text, label) in log.texts {
            let previous = truth.text_truth.insert(text, label);
            debug_assert!(previous.is_none_or(|p| p == label));
        }
        complaints.extend(log.complaints.into_iter().map(|(d, r)| (d, r, u)));
    }

    // Complaint inspections, at most one per restaurant per cooldown period.
    complaints.sort();
    let cooldown = Duration::days(i64::from(world.cfg.complaint_cooldown_days));
    let mut last: HashMap<usize, NaiveDate> = HashMap::new();
    for (date, r, _) in complaints {
        if date >= end_date || last.get(&r).is_some_and(|&prev| date < prev + cooldown) {
            continue;
        }
        last.insert(r, date);
        let rid = &world.restaurants[r].record.restaurant_id;
        dataset.inspections.push(simulate_inspection(world, rid, date, Trigger::Complaint, keys.inspections)?);
    }
    dataset.inspections.extend(routine_inspections(world, days, &keys)?);
    dataset.sort_streams();
    Ok((dataset, truth))
}

fn routine_inspections(world: &World, days: u32, keys: &Keys) -> Result<Vec<InspectionRecord>, SimError> {
    let first = date_of(EPOCH_START);
    let mut out = Vec::new();
    for (r, rest) in world.restaurants.iter().enumerate() {
        for d in 0..days {
            let mut rng = stream_rng(keys.routine, r as u64, u64::from(d));
            if rng.random_bool(world.cfg.routine_rate) {
                let date = first + Duration::days(i64::from(d));
                out.push(simulate_inspection(
                    world,
                    &rest.record.restaurant_id,
                    date,
                    Trigger::Routine,
                    keys.inspections,
                )?);
            }
        }
    }
    Ok(out)
}

fn simulate_user(world: &World, u: usize, days: u32, end: Timestamp, keys: &Keys) -> UserLog {
    let cfg = &world.cfg;
    let user = &world.users[u];
    let picker = world.city_picker(user.city);
    let incubation = LogNormal::new(cfg.incubation_median_h.ln(), cfg.incubation_sigma).expect("validated incubation");
    let mut log = UserLog::default();
    let mut susceptible_from = i64::MIN;

    for d in 0..days {
        let day0 = EPOCH_START + i64::from(d) * SECONDS_PER_DAY;
        let mut rng = stream_rng(keys.meals, u as u64, u64::from(d));
        let meals = poisson(&mut rng, cfg.meals_per_day).min(2);
        let slots: &[(i64, i64)] = match meals {
            0 => &[],
            1 if rng.random_bool(0.5) => &[LUNCH],
            1 => &[DINNER],
            _ => &[LUNCH, DINNER],
        };
        if let Some(picker) = &picker {
            for &(lo, hi) in slots {
                let entry = day0 + rng.random_range(lo..hi);
                let exit = entry + rng.random_range(1800..=5400);
                let r = pick_restaurant(world, user, picker, &mut rng);
                let rest = &world.restaurants[r];
                log.visits.push(VisitEvent {
                    user_id: user.id,
                    restaurant_id: rest.record.restaurant_id.clone(),
                    entry_ts: entry,
                    exit_ts: exit,
                });
                if exit < susceptible_from {
                    continue;
                }
                let p = match rest.latent {
                    LatentState::Unsafe => {
                        log.meals.unsafe_ += 1;
                        cfg.p_infect_unsafe
                    }
                    LatentState::Safe => {
                        log.meals.safe += 1;
                        cfg.p_infect_safe
                    }
                };
                if rng.random_bool(p) {
                    let onset = exit + (incubation_hours(&mut rng, &incubation) * HOUR as f64).round() as i64;
                    susceptible_from = onset + RECOVERY_S;
                    log.infections.push(Infection {
                        user_id: user.id,
                        source: Some(rest.record.restaurant_id.clone()),
                        meal_exit_ts: Some(exit),
                        onset_ts: onset,
                        searched: false,
                        complained_about: None,
                    });
                }
            }
        }
        if day0 >= susceptible_from && rng.random_bool(cfg.p_background_illness) {
            let onset = day0 + rng.random_range(0..SECONDS_PER_DAY);
            susceptible_from = onset + RECOVERY_S;
            log.infections.push(Infection {
                user_id: user.id,
                source: None,
                meal_exit_ts: None,
                onset_ts: onset,
                searched: false,
                complained_about: None,
            });
        }

        let mut rng = stream_rng(keys.queries, u as u64, u64::from(d));
        for _ in 0..poisson(&mut rng, cfg.background_queries_per_day) {
            let ts = day0 + rng.random_range(7 * HOUR..23 * HOUR);
            let (text, results) = if rng.random_bool(cfg.health_confuser_share) {
                let (text, family) = cfg.vocab.confuser_text(&mut rng);
                let results = confuser_results(
                    &mut rng,
                    &text,
                    family,
                    cfg.p_click_foodborne_confuser,
                    cfg.dwell_median_confuser_s,
                );
                (text, results)
            } else {
                let text = cfg.vocab.background_text(&mut rng);
                let results = background_results(&mut rng, &text);
                (text, results)
            };
            log.texts.push((text.clone(), false));
            log.queries.push(QueryEvent { user_id: user.id, ts, text, results });
        }
    }

    for k in 0..log.infections.len() {
        let mut rng = stream_rng(keys.illness, u as u64, k as u64);
        let onset = log.infections[k].onset_ts;
        let searched = rng.random_bool(cfg.p_search_given_ill);
        if searched {
            let followups = poisson(&mut rng, cfg.followup_queries);
            let times = std::iter::once(onset)
                .chain((0..followups).map(|_| onset + rng.random_range(1800..=36 * HOUR)))
                .collect::<Vec<_>>();
            for ts in times {
                let text = cfg.vocab.symptom_text(&mut rng);
                let results = symptom_results(&mut rng, cfg.p_click_foodborne_ill, cfg.dwell_median_ill_s);
                if ts < end {
                    log.texts.push((text.clone(), true));
                    log.queries.push(QueryEvent { user_id: user.id, ts, text, results });
                }
            }
        }
        log.infections[k].searched = searched;

        if rng.random_bool(cfg.p_complaint_given_ill) {
            let last_before = log
                .visits
                .iter()
                .filter(|v| v.exit_ts < onset)
                .max_by_key(|v| v.exit_ts)
                .filter(|v| onset - v.exit_ts <= INCUBATION_MAX_H as i64 * HOUR)
                .map(|v| v.restaurant_id.clone());
            let blamed = match &log.infections[k].source {
                Some(source) if !rng.random_bool(cfg.p_blame_last) => Some(source.clone()),
                Some(source) => last_before.or_else(|| Some(source.clone())),
                None => last_before,
            };
            if let Some(rid) = blamed {
                let r = world.index_of(&rid).expect("visited restaurant exists");
                log.complaints.push((date_of(onset) + Duration::days(1), r));
                log.infections[k].complained_about = Some(rid);
            }
        }
    }
    log
}
