//! Run configuration as a flat `key = value` file with dotted keys.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{ErrorKind, PipelineError};
use crate::citysim::{CitySpec, SimConfig};
use crate::locmodel::{LinkConfig, DEFAULT_MIN_VISITORS};
use crate::privacy::{DEFAULT_EPSILON, DEFAULT_SUPPRESS_BELOW};
use crate::seeding::sub_seed;
use crate::wsm::{TrainConfig, WeakLabelConfig};

/// Held-out evaluation of the query classifier.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    /// Rater-judged queries; half from the high-recall stratum.
    pub sample_size: usize,
    /// Share of distinct query texts held out of training for evaluation.
    pub holdout_share: f64,
    /// Score threshold for precision, recall and F1.
    pub threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { sample_size: 1000, holdout_share: 0.3, threshold: 0.5 }
    }
}

/// Daily ranking and inspection dispatch.
#[derive(Clone, Debug, PartialEq)]
pub struct RankConfig {
    pub min_visitors: f64,
    /// Minimum signal for a restaurant to enter a daily list.
    pub cutoff: f64,
    /// Visits ending within this many days before the list date count.
    pub lookback_days: u32,
    /// FINDER inspections dispatched per city per day.
    pub daily_capacity: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        RankConfig { min_visitors: DEFAULT_MIN_VISITORS, cutoff: 0.01, lookback_days: 28, daily_capacity: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrivacyConfig {
    pub enabled: bool,
    pub epsilon: f64,
    pub suppress_below: f64,
    /// Keyed-hash key for user pseudonyms; derived from the seed when unset.
    pub hash_key: Option<[u8; 16]>,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        PrivacyConfig {
            enabled: true,
            epsilon: DEFAULT_EPSILON,
            suppress_below: DEFAULT_SUPPRESS_BELOW,
            hash_key: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub sim: SimConfig,
    pub weak: WeakLabelConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub link: LinkConfig,
    pub rank: RankConfig,
    pub privacy: PrivacyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20160501,
            output_dir: PathBuf::from("finder-out"),
            sim: SimConfig::default(),
            weak: WeakLabelConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            link: LinkConfig::default(),
            rank: RankConfig::default(),
            privacy: PrivacyConfig::default(),
        }
    }
}

fn usage(message: String) -> PipelineError {
    PipelineError::new("config", ErrorKind::Usage, message)
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| usage(format!("{key} = {value:?}: {e}")))
}

fn parse_triple(key: &str, value: &str) -> Result<[f64; 3], PipelineError> {
    let parts: Vec<f64> = value.split(',').map(|p| parse(key, p.trim())).collect::<Result<_, _>>()?;
    parts.try_into().map_err(|_| usage(format!("{key} = {value:?}: expected three comma-separated numbers")))
}

fn parse_cities(value: &str) -> Result<Vec<CitySpec>, PipelineError> {
    value
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (name, count) =
                p.split_once(':').ok_or_else(|| usage(format!("sim.cities entry {p:?} is not name:count")))?;
            Ok(CitySpec { name: name.trim().into(), restaurants: parse("sim.cities", count.trim())? })
        })
        .collect()
}

fn parse_key(value: &str) -> Result<Option<[u8; 16]>, PipelineError> {
    if value.is_empty() {
        return Ok(None);
    }
    let bytes = hex::decode(value).map_err(|e| usage(format!("privacy.hash_key: {e}")))?;
    let key: [u8; 16] = bytes.try_into().map_err(|_| usage("privacy.hash_key must be 32 hex digits".into()))?;
    Ok(Some(key))
}

fn triple(v: &[f64; 3]) -> String {
    format!("{},{},{}", v[0], v[1], v[2])
}

impl RunConfig {
    /// Every key with its current value, in canonical order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let s = &self.sim;
        vec![
            ("seed", self.seed.to_string()),
            ("paths.output", self.output_dir.display().to_string()),
            (
                "sim.cities",
                s.cities.iter().map(|c| format!("{}:{}", c.name, c.restaurants)).collect::<Vec<_>>().join(","),
            ),
            ("sim.users", s.users.to_string()),
            ("sim.days", s.days.to_string()),
            ("sim.risk_mix", triple(&s.risk_mix)),
            ("sim.unsafe_prob", triple(&s.unsafe_prob)),
            ("sim.popularity_sigma", s.popularity_sigma.to_string()),
            ("sim.favorites", s.favorites.to_string()),
            ("sim.p_favorite", s.p_favorite.to_string()),
            ("sim.meals_per_day", s.meals_per_day.to_string()),
            ("sim.p_infect_unsafe", s.p_infect_unsafe.to_string()),
            ("sim.p_infect_safe", s.p_infect_safe.to_string()),
            ("sim.incubation_median_h", s.incubation_median_h.to_string()),
            ("sim.incubation_sigma", s.incubation_sigma.to_string()),
            ("sim.p_background_illness", s.p_background_illness.to_string()),
            ("sim.p_search_given_ill", s.p_search_given_ill.to_string()),
            ("sim.followup_queries", s.followup_queries.to_string()),
            ("sim.p_complaint_given_ill", s.p_complaint_given_ill.to_string()),
            ("sim.p_blame_last", s.p_blame_last.to_string()),
            ("sim.complaint_cooldown_days", s.complaint_cooldown_days.to_string()),
            ("sim.routine_rate", s.routine_rate.to_string()),
            ("sim.inspector_sensitivity", s.inspector_sensitivity.to_string()),
            ("sim.inspector_false_positive", s.inspector_false_positive.to_string()),
            ("sim.critical_mean_unsafe", s.critical_mean_unsafe.to_string()),
            ("sim.major_mean_unsafe", s.major_mean_unsafe.to_string()),
            ("sim.critical_mean_safe", s.critical_mean_safe.to_string()),
            ("sim.major_mean_safe", s.major_mean_safe.to_string()),
            ("sim.rater_flip_md", s.rater_flip_md.to_string()),
            ("sim.rater_flip_non_md", s.rater_flip_non_md.to_string()),
            ("sim.background_queries_per_day", s.background_queries_per_day.to_string()),
            ("sim.health_confuser_share", s.health_confuser_share.to_string()),
            ("sim.p_click_foodborne_ill", s.p_click_foodborne_ill.to_string()),
            ("sim.p_click_foodborne_confuser", s.p_click_foodborne_confuser.to_string()),
            ("sim.dwell_median_ill_s", s.dwell_median_ill_s.to_string()),
            ("sim.dwell_median_confuser_s", s.dwell_median_confuser_s.to_string()),
            ("wsm.dwell_threshold_s", self.weak.dwell_threshold_s.to_string()),
            ("wsm.neg_ratio", self.weak.neg_ratio.to_string()),
            ("wsm.lambda", self.train.lambda.to_string()),
            ("wsm.batch_size", self.train.batch_size.to_string()),
            ("wsm.epochs", self.train.epochs.to_string()),
            ("wsm.base_step", self.train.base_step.to_string()),
            ("wsm.eval_size", self.eval.sample_size.to_string()),
            ("wsm.eval_holdout", self.eval.holdout_share.to_string()),
            ("wsm.threshold", self.eval.threshold.to_string()),
            ("locmodel.window_s", self.link.window_s.to_string()),
            ("locmodel.p_star", self.link.p_star.to_string()),
            ("locmodel.min_visitors", self.rank.min_visitors.to_string()),
            ("locmodel.cutoff", self.rank.cutoff.to_string()),
            ("locmodel.lookback_days", self.rank.lookback_days.to_string()),
            ("locmodel.daily_capacity", self.rank.daily_capacity.to_string()),
            ("privacy.enabled", self.privacy.enabled.to_string()),
            ("privacy.epsilon", self.privacy.epsilon.to_string()),
            ("privacy.suppress_below", self.privacy.suppress_below.to_string()),
            ("privacy.hash_key", self.privacy.hash_key.map(hex::encode).unwrap_or_default()),
        ]
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let v = value.trim();
        let s = &mut self.sim;
        match key {
            "seed" => self.seed = parse(key, v)?,
            "paths.output" => self.output_dir = PathBuf::from(v),
            "sim.cities" => s.cities = parse_cities(v)?,
            "sim.users" => s.users = parse(key, v)?,
            "sim.days" => s.days = parse(key, v)?,
            "sim.risk_mix" => s.risk_mix = parse_triple(key, v)?,
            "sim.unsafe_prob" => s.unsafe_prob = parse_triple(key, v)?,
            "sim.popularity_sigma" => s.popularity_sigma = parse(key, v)?,
            "sim.favorites" => s.favorites = parse(key, v)?,
            "sim.p_favorite" => s.p_favorite = parse(key, v)?,
            "sim.meals_per_day" => s.meals_per_day = parse(key, v)?,
            "sim.p_infect_unsafe" => s.p_infect_unsafe = parse(key, v)?,
            "sim.p_infect_safe" => s.p_infect_safe = parse(key, v)?,
            "sim.incubation_median_h" => s.incubation_median_h = parse(key, v)?,
            "sim.incubation_sigma" => s.incubation_sigma = parse(key, v)?,
            "sim.p_background_illness" => s.p_background_illness = parse(key, v)?,
            "sim.p_search_given_ill" => s.p_search_given_ill = parse(key, v)?,
            "sim.followup_queries" => s.followup_queries = parse(key, v)?,
            "sim.p_complaint_given_ill" => s.p_complaint_given_ill = parse(key, v)?,
            "sim.p_blame_last" => s.p_blame_last = parse(key, v)?,
            "sim.complaint_cooldown_days" => s.complaint_cooldown_days = parse(key, v)?,
            "sim.routine_rate" => s.routine_rate = parse(key, v)?,
            "sim.inspector_sensitivity" => s.inspector_sensitivity = parse(key, v)?,
            "sim.inspector_false_positive" => s.inspector_false_positive = parse(key, v)?,
            "sim.critical_mean_unsafe" => s.critical_mean_unsafe = parse(key, v)?,
            "sim.major_mean_unsafe" => s.major_mean_unsafe = parse(key, v)?,
            "sim.critical_mean_safe" => s.critical_mean_safe = parse(key, v)?,
            "sim.major_mean_safe" => s.major_mean_safe = parse(key, v)?,
            "sim.rater_flip_md" => s.rater_flip_md = parse(key, v)?,
            "sim.rater_flip_non_md" => s.rater_flip_non_md = parse(key, v)?,
            "sim.background_queries_per_day" => s.background_queries_per_day = parse(key, v)?,
            "sim.health_confuser_share" => s.health_confuser_share = parse(key, v)?,
            "sim.p_click_foodborne_ill" => s.p_click_foodborne_ill = parse(key, v)?,
            "sim.p_click_foodborne_confuser" => s.p_click_foodborne_confuser = parse(key, v)?,
            "sim.dwell_median_ill_s" => s.dwell_median_ill_s = parse(key, v)?,
            "sim.dwell_median_confuser_s" => s.dwell_median_confuser_s = parse(key, v)?,
            "wsm.dwell_threshold_s" => self.weak.dwell_threshold_s = parse(key, v)?,
            "wsm.neg_ratio" => self.weak.neg_ratio = parse(key, v)?,
            "wsm.lambda" => self.train.lambda = parse(key, v)?,
            "wsm.batch_size" => self.train.batch_size = parse(key, v)?,
            "wsm.epochs" => self.train.epochs = parse(key, v)?,
            "wsm.base_step" => self.train.base_step = parse(key, v)?,
            "wsm.eval_size" => self.eval.sample_size = parse(key, v)?,
            "wsm.eval_holdout" => self.eval.holdout_share = parse(key, v)?,
            "wsm.threshold" => self.eval.threshold = parse(key, v)?,
            "locmodel.window_s" => self.link.window_s = parse(key, v)?,
            "locmodel.p_star" => self.link.p_star = parse(key, v)?,
            "locmodel.min_visitors" => self.rank.min_visitors = parse(key, v)?,
            "locmodel.cutoff" => self.rank.cutoff = parse(key, v)?,
            "locmodel.lookback_days" => self.rank.lookback_days = parse(key, v)?,
            "locmodel.daily_capacity" => self.rank.daily_capacity = parse(key, v)?,
            "privacy.enabled" => self.privacy.enabled = parse(key, v)?,
            "privacy.epsilon" => self.privacy.epsilon = parse(key, v)?,
            "privacy.suppress_below" => self.privacy.suppress_below = parse(key, v)?,
            "privacy.hash_key" => self.privacy.hash_key = parse_key(v)?,
            other => return Err(usage(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are
    /// skipped; unknown or repeated keys are errors.
    pub fn apply_text(&mut self, text: &str) -> Result<(), PipelineError> {
        let mut seen = std::collections::HashSet::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(usage(format!("line {}: key {key:?} repeated", n + 1)));
            }
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }

    /// Canonical `key = value` text covering every key.
    pub fn to_text(&self) -> String {
        self.entries().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the canonical text, excluding the output directory.
    pub fn hash(&self) -> String {
        let body: String = self
            .entries()
            .into_iter()
            .filter(|(k, _)| *k != "paths.output")
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect();
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    pub fn hash_key(&self) -> [u8; 16] {
        self.privacy.hash_key.unwrap_or_else(|| {
            let mut key = [0u8; 16];
            key[..8].copy_from_slice(&sub_seed(self.seed, "privacy/hash_key/0").to_le_bytes());
            key[8..].copy_from_slice(&sub_seed(self.seed, "privacy/hash_key/1").to_le_bytes());
            key
        })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        // The day count is checked by the simulator so its error surfaces
        // from that stage.
        let mut sim = self.sim.clone();
        sim.days = sim.days.max(1);
        sim.validate().map_err(|e| usage(e.to_string()))?;
        let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(usage(what.to_string())) };
        check(self.weak.dwell_threshold_s >= 0.0, "wsm.dwell_threshold_s must be non-negative")?;
        check(self.weak.neg_ratio >= 1, "wsm.neg_ratio must be at least 1")?;
        check(self.train.lambda >= 0.0, "wsm.lambda must be non-negative")?;
        check(self.train.batch_size >= 1 && self.train.epochs >= 1, "wsm.batch_size and wsm.epochs must be positive")?;
        check(self.train.base_step > 0.0, "wsm.base_step must be positive")?;
        check(
            self.eval.sample_size >= 2 && self.eval.sample_size.is_multiple_of(2),
            "wsm.eval_size must be even and at least 2",
        )?;
        check(self.eval.holdout_share > 0.0 && self.eval.holdout_share < 1.0, "wsm.eval_holdout must lie in (0, 1)")?;
        check(self.eval.threshold > 0.0 && self.eval.threshold < 1.0, "wsm.threshold must lie in (0, 1)")?;
        check(self.link.window_s > 0, "locmodel.window_s must be positive")?;
        check(self.link.p_star > 0.0 && self.link.p_star < 1.0, "locmodel.p_star must lie in (0, 1)")?;
        check(self.rank.min_visitors >= 0.0, "locmodel.min_visitors must be non-negative")?;
        check((0.0..=1.0).contains(&self.rank.cutoff), "locmodel.cutoff must lie in [0, 1]")?;
        check(self.rank.lookback_days >= 1, "locmodel.lookback_days must be at least 1")?;
        check(self.privacy.epsilon > 0.0 && self.privacy.epsilon.is_finite(), "privacy.epsilon must be positive")?;
        check(self.privacy.hash_key != Some([0; 16]), "privacy.hash_key must not be all zero")?;
        Ok(())
    }
}
