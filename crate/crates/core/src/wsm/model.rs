//! Log-linear (maximum-entropy) binary classifier over hashed features,
//! trained by mini-batch gradient descent on L2-regularized logistic loss.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, SparseVector, FEATURE_DIM};
use super::{LabeledSet, WsmError};
use crate::logdata::QueryEvent;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// L2 penalty on the hashed weights (the intercept is unpenalized).
    pub lambda: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Step size at mini-batch step `t` is `base_step / sqrt(t)`.
    pub base_step: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { lambda: 1e-4, batch_size: 256, epochs: 5, base_step: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WsmModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub hyper: TrainConfig,
    pub train_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingReport {
    /// Regularized full-data loss after each epoch.
    pub epoch_losses: Vec<f64>,
    pub final_loss: f64,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ln(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl WsmModel {
    pub fn zero(hyper: TrainConfig, train_seed: u64) -> Self {
        WsmModel { weights: vec![0.0; FEATURE_DIM], intercept: 0.0, hyper, train_seed }
    }

    pub fn margin(&self, x: &SparseVector) -> f64 {
        self.intercept + x.indices().iter().map(|&i| self.weights[i as usize]).sum::<f64>()
    }

    pub fn score_features(&self, x: &SparseVector) -> f64 {
        sigmoid(self.margin(x))
    }

    pub fn is_finite(&self) -> bool {
        self.intercept.is_finite() && self.weights.iter().all(|w| w.is_finite())
    }

    pub fn save(&self, path: &Path) -> Result<(), WsmError> {
        let file = ModelFile {
            dim: FEATURE_DIM,
            weights: self.weights.clone(),
            intercept: self.intercept,
            hyper: self.hyper.clone(),
            train_seed: self.train_seed,
        };
        let body = serde_json::to_string(&file).map_err(|e| WsmError::ModelFile(e.to_string()))?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| WsmError::ModelFile(e.to_string()))?;
        }
        std::fs::write(path, body).map_err(|e| WsmError::ModelFile(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, WsmError> {
        let body =
            std::fs::read_to_string(path).map_err(|e| WsmError::ModelFile(format!("{}: {e}", path.display())))?;
        Self::from_json(&body)
    }

    pub fn from_json(body: &str) -> Result<Self, WsmError> {
        let file: ModelFile = serde_json::from_str(body).map_err(|e| WsmError::ModelFile(e.to_string()))?;
        if file.dim != FEATURE_DIM || file.weights.len() != FEATURE_DIM {
            return Err(WsmError::ModelDim { dim: file.dim, weights: file.weights.len() });
        }
        Ok(WsmModel {
            weights: file.weights,
            intercept: file.intercept,
            hyper: file.hyper,
            train_seed: file.train_seed,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    dim: usize,
    weights: Vec<f64>,
    intercept: f64,
    hyper: TrainConfig,
    train_seed: u64,
}

/// Probability that the query is about foodborne illness.
pub fn score_query(m: &WsmModel, e: &QueryEvent) -> f64 {
    m.score_features(&featurize(e))
}

/// Regularized mean logistic loss over `examples`, with its gradient with
/// respect to every weight and the intercept.
pub fn loss_and_gradient(
    weights: &[f64],
    intercept: f64,
    examples: &[(&SparseVector, bool)],
    lambda: f64,
) -> (f64, Vec<f64>, f64) {
    let n = examples.len() as f64;
    let mut grad: Vec<f64> = weights.iter().map(|w| lambda * w).collect();
    let mut grad_b = 0.0;
    let mut loss = 0.0;
    for (x, y) in examples {
        let z = intercept + x.indices().iter().map(|&i| weights[i as usize]).sum::<f64>();
        loss += if *y { softplus(-z) } else { softplus(z) };
        let residual = (sigmoid(z) - if *y { 1.0 } else { 0.0 }) / n;
        grad_b += residual;
        for &i in x.indices() {
            grad[i as usize] += residual;
        }
    }
    let l2: f64 = weights.iter().map(|w| w * w).sum();
    (loss / n + 0.5 * lambda * l2, grad, grad_b)
}

fn regularized_loss(weights: &[f64], intercept: f64, data: &[(SparseVector, bool)], lambda: f64) -> f64 {
    let n = data.len() as f64;
    let data_loss: f64 = data
        .iter()
        .map(|(x, y)| {
            let z = intercept + x.indices().iter().map(|&i| weights[i as usize]).sum::<f64>();
            if *y {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum();
    data_loss / n + 0.5 * lambda * weights.iter().map(|w| w * w).sum::<f64>()
}

/// Trains on weak or rater labels. Deterministic given `seed`.
pub fn train_wsm(labeled: &LabeledSet, hyper: &TrainConfig, seed: u64) -> Result<(WsmModel, TrainingReport), WsmError> {
    let positives = labeled.examples.iter().filter(|e| e.label).count();
    if positives == 0 || positives == labeled.examples.len() {
        return Err(WsmError::SingleClass);
    }
    if hyper.batch_size == 0 {
        return Err(WsmError::InvalidArgument("batch_size must be ≥ 1".into()));
    }
    let data: Vec<(SparseVector, bool)> = labeled.examples.iter().map(|e| (featurize(&e.event), e.label)).collect();

    let mut model = WsmModel::zero(hyper.clone(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_losses = Vec::with_capacity(hyper.epochs);
    let mut step = 0u64;
    let n_dim = model.weights.len();
    let mut grad = vec![0.0; n_dim];

    for epoch in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(hyper.batch_size) {
            step += 1;
            let eta = hyper.base_step / (step as f64).sqrt();
            let inv_n = 1.0 / batch.len() as f64;
            let mut grad_b = 0.0;
            // Sparse data term first, then the dense L2 term folded into the update.
            let mut touched: Vec<u32> = Vec::new();
            for &k in batch {
                let (x, y) = &data[k];
                let residual = (model.score_features(x) - if *y { 1.0 } else { 0.0 }) * inv_n;
                grad_b += residual;
                for &i in x.indices() {
                    if grad[i as usize] == 0.0 {
                        touched.push(i);
                    }
                    grad[i as usize] += residual;
                }
            }
            let shrink = 1.0 - eta * hyper.lambda;
            for w in model.weights.iter_mut() {
                *w *= shrink;
            }
            for &i in &touched {
                model.weights[i as usize] -= eta * grad[i as usize];
                grad[i as usize] = 0.0;
            }
            model.intercept -= eta * grad_b;
        }
        let loss = regularized_loss(&model.weights, model.intercept, &data, hyper.lambda);
        if !loss.is_finite() || !model.is_finite() {
            return Err(WsmError::Diverged { epoch });
        }
        epoch_losses.push(loss);
    }
    let final_loss = match epoch_losses.last() {
        Some(&l) => l,
        None => regularized_loss(&model.weights, model.intercept, &data, hyper.lambda),
    };
    Ok((model, TrainingReport { epoch_losses, final_loss }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logdata::UserId;
    use crate::wsm::{feature_index, LabeledExample, Provenance};
    use rand::Rng;

    fn event(text: &str) -> QueryEvent {
        QueryEvent { user_id: UserId(1), ts: 0, text: text.into(), results: vec![] }
    }

    fn toy_separable() -> LabeledSet {
        let pos = ["alpha", "bravo", "charlie", "delta", "echo"];
        let neg = ["kilo", "lima", "mike", "november", "oscar"];
        let mut examples = Vec::new();
        for i in 0..10 {
            examples
                .push(LabeledExample { event: event(&format!("{} {}", pos[i % 5], pos[(i + 2) % 5])), label: true });
            examples
                .push(LabeledExample { event: event(&format!("{} {}", neg[i % 5], neg[(i + 3) % 5])), label: false });
        }
        LabeledSet { examples, provenance: Provenance::WeakAuto }
    }

    #[test]
    fn zero_epochs_gives_zero_model() {
        let hyper = TrainConfig { epochs: 0, ..Default::default() };
        let (m, _) = train_wsm(&toy_separable(), &hyper, 3).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert_eq!(m.intercept, 0.0);
        assert_eq!(score_query(&m, &event("alpha bravo")), 0.5);
        assert_eq!(score_query(&m, &event("")), 0.5);
    }

    #[test]
    fn separable_toy_set_is_fit_perfectly() {
        let hyper = TrainConfig { epochs: 40, base_step: 1.0, batch_size: 4, ..Default::default() };
        let set = toy_separable();
        let (m, report) = train_wsm(&set, &hyper, 11).unwrap();
        for ex in &set.examples {
            assert_eq!(score_query(&m, &ex.event) >= 0.5, ex.label, "{}", ex.event.text);
        }
        for pair in report.epoch_losses.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12, "loss increased: {pair:?}");
        }
    }

    #[test]
    fn default_schedule_loss_is_non_increasing() {
        let (_, report) = train_wsm(&toy_separable(), &TrainConfig { epochs: 30, ..Default::default() }, 5).unwrap();
        assert_eq!(report.epoch_losses.len(), 30);
        for pair in report.epoch_losses.windows(2) {
            assert!(pair[1] <= pair[0], "loss increased: {pair:?}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let hyper = TrainConfig { epochs: 3, batch_size: 3, ..Default::default() };
        let a = train_wsm(&toy_separable(), &hyper, 9).unwrap().0;
        let b = train_wsm(&toy_separable(), &hyper, 9).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn single_class_is_rejected() {
        let mut set = toy_separable();
        set.examples.retain(|e| e.label);
        assert!(matches!(train_wsm(&set, &TrainConfig::default(), 0), Err(WsmError::SingleClass)));
    }

    #[test]
    fn huge_step_diverges() {
        let hyper = TrainConfig { base_step: f64::MAX, lambda: 1.0, epochs: 2, batch_size: 1 };
        assert!(matches!(train_wsm(&toy_separable(), &hyper, 0), Err(WsmError::Diverged { .. })));
    }

    #[test]
    fn ln3_weight_scores_three_quarters() {
        let mut m = WsmModel::zero(TrainConfig::default(), 0);
        m.weights[feature_index("q:nausea") as usize] = 3f64.ln();
        let p = score_query(&m, &event("nausea"));
        assert!((p - 0.75).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let set = toy_separable();
        let feats: Vec<(SparseVector, bool)> = set.examples.iter().map(|e| (featurize(&e.event), e.label)).collect();
        let refs: Vec<(&SparseVector, bool)> = feats.iter().map(|(x, y)| (x, *y)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut weights = vec![0.0; FEATURE_DIM];
        for (x, _) in &feats {
            for &i in x.indices() {
                weights[i as usize] = rng.random_range(-1.0..1.0);
            }
        }
        let intercept = 0.3;
        let lambda = 1e-2;
        let (_, grad, grad_b) = loss_and_gradient(&weights, intercept, &refs, lambda);
        let active: Vec<usize> = feats.iter().flat_map(|(x, _)| x.indices().iter().map(|&i| i as usize)).collect();
        let h = 1e-5;
        for _ in 0..5 {
            let i = active[rng.random_range(0..active.len())];
            let mut plus = weights.clone();
            plus[i] += h;
            let mut minus = weights.clone();
            minus[i] -= h;
            let fd = (loss_and_gradient(&plus, intercept, &refs, lambda).0
                - loss_and_gradient(&minus, intercept, &refs, lambda).0)
                / (2.0 * h);
            let rel = (fd - grad[i]).abs() / grad[i].abs().max(fd.abs()).max(1e-12);
            assert!(rel < 1e-5, "coordinate {i}: analytic {} fd {fd} rel {rel}", grad[i]);
        }
        let fd_b = (loss_and_gradient(&weights, intercept + h, &refs, lambda).0
            - loss_and_gradient(&weights, intercept - h, &refs, lambda).0)
            / (2.0 * h);
        assert!((fd_b - grad_b).abs() / grad_b.abs().max(1e-12) < 1e-5);
    }

    #[test]
    fn model_file_round_trip_and_dim_check() {
        let (m, _) = train_wsm(&toy_separable(), &TrainConfig { epochs: 1, ..Default::default() }, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.save(&path).unwrap();
        assert_eq!(WsmModel::load(&path).unwrap(), m);

        let bad = r#"{"dim":10,"weights":[0,0,0,0,0,0,0,0,0,0],"intercept":0,"hyper":{"lambda":0.0001,"batch_size":256,"epochs":5,"base_step":0.1},"train_seed":0}"#;
        assert!(matches!(WsmModel::from_json(bad), Err(WsmError::ModelDim { dim: 10, .. })));
    }
}
