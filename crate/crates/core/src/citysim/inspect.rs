use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{LatentState, SimError, World};
use crate::logdata::{InspectionRecord, Outcome, Trigger};
use crate::seeding::sub_seed;

pub(super) fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive finite mean").sample(rng) as u64
}

/// One inspection of `restaurant_id` on `date`. The inspector detects a
/// latent Unsafe state with the configured sensitivity and flags a Safe
/// restaurant with the false-positive rate; violation counts are Poisson
/// with means set by the latent state. Randomness is keyed by
/// (seed, restaurant, date, trigger).
pub fn simulate_inspection(
    world: &World,
    restaurant_id: &str,
    date: NaiveDate,
    trigger: Trigger,
    seed: u64,
) -> Result<InspectionRecord, SimError> {
    let latent = world.latent(restaurant_id).ok_or_else(|| SimError::UnknownRestaurant(restaurant_id.into()))?;
    let cfg = &world.cfg;
    let key = sub_seed(seed, &format!("citysim/inspection/{restaurant_id}/{date}/{trigger}"));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    let (p_unsafe, critical, major) = match latent {
        LatentState::Unsafe => (cfg.inspector_sensitivity, cfg.critical_mean_unsafe, cfg.major_mean_unsafe),
        LatentState::Safe => (cfg.inspector_false_positive, cfg.critical_mean_safe, cfg.major_mean_safe),
    };
    let outcome = if rng.random_bool(p_unsafe) { Outcome::Unsafe } else { Outcome::Safe };
    Ok(InspectionRecord {
        restaurant_id: restaurant_id.into(),
        date,
        trigger,
        outcome,
        critical_count: poisson(&mut rng, critical) as i64,
        major_count: poisson(&mut rng, major) as i64,
    })
}
