use super::vocab::Vocab;
use super::SimError;

#[derive(Clone, Debug, PartialEq)]
pub struct CitySpec {
    pub name: String,
    pub restaurants: usize,
}

/// Simulator knobs. Probabilities are per event as named; rates are
/// Poisson means per user-day or restaurant-day.
#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub cities: Vec<CitySpec>,
    pub users: usize,
    pub days: u32,
    /// Probabilities over High, Medium, Low.
    pub risk_mix: [f64; 3],
    /// Chance a restaurant is latently unsafe, by risk level.
    pub unsafe_prob: [f64; 3],
    /// Sigma of the log-normal restaurant popularity.
    pub popularity_sigma: f64,
    pub favorites: usize,
    pub p_favorite: f64,
    pub meals_per_day: f64,
    pub p_infect_unsafe: f64,
    pub p_infect_safe: f64,
    pub incubation_median_h: f64,
    pub incubation_sigma: f64,
    /// Gastrointestinal illness not caused by a restaurant meal.
    pub p_background_illness: f64,
    pub p_search_given_ill: f64,
    /// Mean count of further symptom queries after the first.
    pub followup_queries: f64,
    pub p_complaint_given_ill: f64,
    pub p_blame_last: f64,
    /// A restaurant is not complaint-inspected twice within this many days.
    pub complaint_cooldown_days: u32,
    pub routine_rate: f64,
    pub inspector_sensitivity: f64,
    pub inspector_false_positive: f64,
    pub critical_mean_unsafe: f64,
    pub major_mean_unsafe: f64,
    pub critical_mean_safe: f64,
    pub major_mean_safe: f64,
    pub rater_flip_md: f64,
    pub rater_flip_non_md: f64,
    pub background_queries_per_day: f64,
    /// Share of background queries that are health-adjacent but not about
    /// being ill (recalls, pets, prevention).
    pub health_confuser_share: f64,
    pub p_click_foodborne_ill: f64,
    pub p_click_foodborne_confuser: f64,
    pub dwell_median_ill_s: f64,
    pub dwell_median_confuser_s: f64,
    pub vocab: Vocab,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            cities: vec![
                CitySpec { name: "lakeside".into(), restaurants: 200 },
                CitySpec { name: "rivertown".into(), restaurants: 200 },
            ],
            users: 30_000,
            days: 60,
            risk_mix: [0.53, 0.22, 0.25],
            unsafe_prob: [0.31, 0.19, 0.03],
            popularity_sigma: 0.6,
            favorites: 3,
            p_favorite: 0.35,
            meals_per_day: 0.12,
            p_infect_unsafe: 0.04,
            p_infect_safe: 0.006,
            incubation_median_h: 24.0,
            incubation_sigma: 0.5,
            p_background_illness: 0.002,
            p_search_given_ill: 0.7,
            followup_queries: 1.0,
            p_complaint_given_ill: 0.08,
            p_blame_last: 0.75,
            complaint_cooldown_days: 30,
            routine_rate: 1.0 / 120.0,
            inspector_sensitivity: 0.9,
            inspector_false_positive: 0.05,
            critical_mean_unsafe: 0.55,
            major_mean_unsafe: 1.1,
            critical_mean_safe: 0.1,
            major_mean_safe: 0.4,
            rater_flip_md: 0.03,
            rater_flip_non_md: 0.07,
            background_queries_per_day: 0.08,
            health_confuser_share: 0.03,
            p_click_foodborne_ill: 0.7,
            p_click_foodborne_confuser: 0.3,
            dwell_median_ill_s: 80.0,
            dwell_median_confuser_s: 25.0,
            vocab: Vocab::default(),
        }
    }
}

fn check_prob(name: &str, p: f64) -> Result<(), SimError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SimError::InvalidConfig(format!("{name} = {p} is not a probability")))
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<(), SimError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(SimError::InvalidConfig(format!("{name} = {v} must be finite and non-negative")))
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        for (i, p) in self.risk_mix.iter().enumerate() {
            check_prob(&format!("risk_mix[{i}]"), *p)?;
        }
        let total: f64 = self.risk_mix.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidConfig(format!("risk_mix sums to {total}, not 1")));
        }
        for (i, p) in self.unsafe_prob.iter().enumerate() {
            check_prob(&format!("unsafe_prob[{i}]"), *p)?;
        }
        for (name, p) in [
            ("p_favorite", self.p_favorite),
            ("p_infect_unsafe", self.p_infect_unsafe),
            ("p_infect_safe", self.p_infect_safe),
            ("p_background_illness", self.p_background_illness),
            ("p_search_given_ill", self.p_search_given_ill),
            ("p_complaint_given_ill", self.p_complaint_given_ill),
            ("p_blame_last", self.p_blame_last),
            ("routine_rate", self.routine_rate),
            ("inspector_sensitivity", self.inspector_sensitivity),
            ("inspector_false_positive", self.inspector_false_positive),
            ("rater_flip_md", self.rater_flip_md),
            ("rater_flip_non_md", self.rater_flip_non_md),
            ("health_confuser_share", self.health_confuser_share),
            ("p_click_foodborne_ill", self.p_click_foodborne_ill),
            ("p_click_foodborne_confuser", self.p_click_foodborne_confuser),
        ] {
            check_prob(name, p)?;
        }
        for (name, v) in [
            ("popularity_sigma", self.popularity_sigma),
            ("meals_per_day", self.meals_per_day),
            ("incubation_sigma", self.incubation_sigma),
            ("followup_queries", self.followup_queries),
            ("critical_mean_unsafe", self.critical_mean_unsafe),
            ("major_mean_unsafe", self.major_mean_unsafe),
            ("critical_mean_safe", self.critical_mean_safe),
            ("major_mean_safe", self.major_mean_safe),
            ("background_queries_per_day", self.background_queries_per_day),
        ] {
            check_nonneg(name, v)?;
        }
        for (name, v) in [
            ("incubation_median_h", self.incubation_median_h),
            ("dwell_median_ill_s", self.dwell_median_ill_s),
            ("dwell_median_confuser_s", self.dwell_median_confuser_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(SimError::InvalidConfig(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.incubation_median_h > 6.0 && self.incubation_median_h <= 72.0) {
            return Err(SimError::InvalidConfig(format!(
                "incubation_median_h = {} must lie in (6, 72]",
                self.incubation_median_h
            )));
        }
        let mut names = std::collections::HashSet::new();
        for c in &self.cities {
            if c.name.is_empty() || c.name.contains([',', ':']) || !names.insert(c.name.as_str()) {
                return Err(SimError::InvalidConfig(format!("bad or duplicate city name {:?}", c.name)));
            }
        }
        let total_restaurants: usize = self.cities.iter().map(|c| c.restaurants).sum();
        if self.users > 0 && total_restaurants == 0 {
            return Err(SimError::InvalidConfig("users need at least one restaurant".into()));
        }
        if self.favorites > 0 && self.cities.iter().any(|c| c.restaurants == 0) && self.users > 0 {
            return Err(SimError::InvalidConfig("every city needs restaurants when users exist".into()));
        }
        Ok(())
    }
}
