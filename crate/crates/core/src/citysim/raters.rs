use rand::Rng;

use super::SimConfig;
use crate::seeding::{stream_rng, sub_seed};
use crate::wsm::{JudgmentMatrix, JudgmentRow};

/// Three medical and three non-medical raters judge every unit. Each vote is
/// the true label flipped independently with the rater class's flip rate.
pub fn simulate_raters(truth: &[bool], cfg: &SimConfig, seed: u64) -> JudgmentMatrix {
    let key = sub_seed(seed, "citysim/raters");
    let rows = truth
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut rng = stream_rng(key, i as u64, 0);
            let md = std::array::from_fn(|_| t ^ rng.random_bool(cfg.rater_flip_md));
            let non_md = std::array::from_fn(|_| t ^ rng.random_bool(cfg.rater_flip_non_md));
            JudgmentRow::complete(md, non_md)
        })
        .collect();
    JudgmentMatrix { rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn truth(n: usize, seed: u64) -> Vec<bool> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_bool(0.5)).collect()
    }

    #[test]
    fn perfect_raters_agree() {
        let cfg = SimConfig { rater_flip_md: 0.0, rater_flip_non_md: 0.0, ..Default::default() };
        let t = truth(200, 1);
        let m = simulate_raters(&t, &cfg, 4);
        assert_eq!(m.aggregate().unwrap(), t);
        assert!((m.alpha().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn majority_beats_individual_raters() {
        let cfg = SimConfig { rater_flip_md: 0.05, rater_flip_non_md: 0.12, ..Default::default() };
        let t = truth(15_000, 2);
        let m = simulate_raters(&t, &cfg, 5);
        let agg = m.aggregate().unwrap();
        let err = agg.iter().zip(&t).filter(|(a, b)| a != b).count() as f64 / t.len() as f64;
        assert!(err < 0.05, "{err}");
    }

    #[test]
    fn defaults_reproduce_truth() {
        let cfg = SimConfig::default();
        for seed in 0..5 {
            let t = truth(3000, seed);
            let agg = simulate_raters(&t, &cfg, seed).aggregate().unwrap();
            let agree = agg.iter().zip(&t).filter(|(a, b)| a == b).count() as f64 / t.len() as f64;
            assert!(agree >= 0.97, "seed {seed}: {agree}");
        }
    }

    #[test]
    fn deterministic() {
        let t = truth(100, 3);
        assert_eq!(simulate_raters(&t, &SimConfig::default(), 9), simulate_raters(&t, &SimConfig::default(), 9));
    }
}
