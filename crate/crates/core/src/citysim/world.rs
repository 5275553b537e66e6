use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::LogNormal;

use super::{SimConfig, SimError};
use crate::logdata::{City, RestaurantRecord, RiskLevel, UserId};
use crate::seeding::{stream_rng, sub_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LatentState {
    Safe,
    Unsafe,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimRestaurant {
    pub record: RestaurantRecord,
    pub latent: LatentState,
    pub popularity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimUser {
    pub id: UserId,
    pub city: usize,
    /// Indices into [`World::restaurants`].
    pub favorites: Vec<usize>,
}

/// A generated city population. Restaurant ids are `<city>-<nnnn>`.
#[derive(Clone, Debug, PartialEq)]
pub struct World {
    pub cfg: SimConfig,
    pub restaurants: Vec<SimRestaurant>,
    pub users: Vec<SimUser>,
    /// Restaurant indices per city, in id order.
    pub city_restaurants: Vec<Vec<usize>>,
}

impl World {
    pub fn index_of(&self, restaurant_id: &str) -> Option<usize> {
        self.restaurants.binary_search_by(|r| r.record.restaurant_id.as_str().cmp(restaurant_id)).ok()
    }

    pub fn registry(&self) -> Vec<RestaurantRecord> {
        self.restaurants.iter().map(|r| r.record.clone()).collect()
    }

    pub fn latent(&self, restaurant_id: &str) -> Option<LatentState> {
        self.index_of(restaurant_id).map(|i| self.restaurants[i].latent)
    }

    /// Popularity-weighted restaurant picker for city `c`, or `None` when the
    /// city has no restaurants.
    pub fn city_picker(&self, c: usize) -> Option<WeightedIndex<f64>> {
        let weights: Vec<f64> = self.city_restaurants[c].iter().map(|&i| self.restaurants[i].popularity).collect();
        WeightedIndex::new(weights).ok()
    }
}

/// Draws restaurants (risk level, latent state, popularity) and users (home
/// city, favorite restaurants).
pub fn generate_world(cfg: &SimConfig, seed: u64) -> Result<World, SimError> {
    cfg.validate()?;
    let restaurant_key = sub_seed(seed, "citysim/restaurants");
    let user_key = sub_seed(seed, "citysim/users");
    let risk = WeightedIndex::new(cfg.risk_mix).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let popularity = LogNormal::new(0.0, cfg.popularity_sigma).map_err(|e| SimError::InvalidConfig(e.to_string()))?;

    // City names are validated unique, so sorting (city, number) keeps ids sorted.
    let mut order: Vec<usize> = (0..cfg.cities.len()).collect();
    order.sort_by(|&a, &b| cfg.cities[a].name.cmp(&cfg.cities[b].name));
    let mut restaurants = Vec::new();
    let mut city_restaurants = vec![Vec::new(); cfg.cities.len()];
    let mut counter = 0u64;
    for &c in &order {
        let spec = &cfg.cities[c];
        for n in 0..spec.restaurants {
            let mut rng = stream_rng(restaurant_key, counter, 0);
            counter += 1;
            let level = RiskLevel::ALL[risk.sample(&mut rng)];
            let latent =
                if rng.random_bool(cfg.unsafe_prob[level.index()]) { LatentState::Unsafe } else { LatentState::Safe };
            city_restaurants[c].push(restaurants.len());
            restaurants.push(SimRestaurant {
                record: RestaurantRecord {
                    restaurant_id: format!("{}-{n:04}", spec.name),
                    city: City(spec.name.clone()),
                    risk_level: level,
                },
                latent,
                popularity: popularity.sample(&mut rng),
            });
        }
    }
    let mut world = World { cfg: cfg.clone(), restaurants, users: Vec::new(), city_restaurants };

    let city_weights: Vec<f64> = cfg.cities.iter().map(|c| c.restaurants as f64).collect();
    let city_pick = WeightedIndex::new(&city_weights).ok();
    let pickers: Vec<Option<WeightedIndex<f64>>> = (0..cfg.cities.len()).map(|c| world.city_picker(c)).collect();
    for u in 0..cfg.users {
        let mut rng = stream_rng(user_key, u as u64, 0);
        let id = UserId(rng.random());
        let city = city_pick.as_ref().map_or(0, |p| p.sample(&mut rng));
        let mut favorites = Vec::new();
        if let Some(p) = &pickers[city] {
            let wanted = cfg.favorites.min(world.city_restaurants[city].len());
            while favorites.len() < wanted {
                let i = world.city_restaurants[city][p.sample(&mut rng)];
                if !favorites.contains(&i) {
                    favorites.push(i);
                }
            }
        }
        world.users.push(SimUser { id, city, favorites });
    }
    Ok(world)
}

/// Picks a restaurant for one meal: a favorite with `p_favorite`, otherwise
/// popularity-weighted within the home city.
pub(super) fn pick_restaurant<R: Rng + ?Sized>(
    world: &World,
    user: &SimUser,
    picker: &WeightedIndex<f64>,
    rng: &mut R,
) -> usize {
    if !user.favorites.is_empty() && rng.random_bool(world.cfg.p_favorite) {
        *user.favorites.choose(rng).expect("non-empty")
    } else {
        world.city_restaurants[user.city][picker.sample(rng)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::citysim::CitySpec;

    #[test]
    fn empty_world() {
        let cfg =
            SimConfig { cities: vec![CitySpec { name: "x".into(), restaurants: 0 }], users: 0, ..Default::default() };
        let w = generate_world(&cfg, 1).unwrap();
        assert!(w.restaurants.is_empty() && w.users.is_empty());
    }

    #[test]
    fn risk_mix_within_two_points() {
        let cfg = SimConfig {
            cities: vec![CitySpec { name: "big".into(), restaurants: 10_000 }],
            users: 0,
            ..Default::default()
        };
        let w = generate_world(&cfg, 17).unwrap();
        let mut counts = [0usize; 3];
        let mut unsafe_by_level = [0usize; 3];
        for r in &w.restaurants {
            counts[r.record.risk_level.index()] += 1;
            if r.latent == LatentState::Unsafe {
                unsafe_by_level[r.record.risk_level.index()] += 1;
            }
        }
        for l in 0..3 {
            assert!((counts[l] as f64 / 10_000.0 - cfg.risk_mix[l]).abs() < 0.02, "{counts:?}");
            let rate = unsafe_by_level[l] as f64 / counts[l] as f64;
            assert!((rate - cfg.unsafe_prob[l]).abs() < 0.04, "{l}: {rate}");
        }
    }

    #[test]
    fn same_seed_same_world() {
        let cfg = SimConfig { users: 500, ..Default::default() };
        assert_eq!(generate_world(&cfg, 3).unwrap(), generate_world(&cfg, 3).unwrap());
        assert_ne!(generate_world(&cfg, 3).unwrap(), generate_world(&cfg, 4).unwrap());
    }

    #[test]
    fn ids_sorted_and_favorites_local() {
        let w = generate_world(&SimConfig { users: 300, ..Default::default() }, 9).unwrap();
        assert!(w.restaurants.windows(2).all(|p| p[0].record.restaurant_id < p[1].record.restaurant_id));
        for u in &w.users {
            assert_eq!(u.favorites.len(), 3);
            assert!(u.favorites.iter().all(|&i| w.city_restaurants[u.city].contains(&i)));
        }
        assert_eq!(
            w.index_of("rivertown-0007").map(|i| w.restaurants[i].record.restaurant_id.as_str()),
            Some("rivertown-0007")
        );
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SimConfig { p_blame_last: 2.0, ..Default::default() };
        assert!(matches!(generate_world(&cfg, 1), Err(SimError::InvalidConfig(_))));
    }
}
